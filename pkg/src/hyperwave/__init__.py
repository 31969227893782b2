"""Wave kernels, spherical analysis and Poincare series on real hyperbolic space and its quotients."""

__version__ = "0.1.0"
