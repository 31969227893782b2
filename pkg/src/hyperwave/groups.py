"""Discrete free groups of isometries of H^n: cyclic and Schottky.

Every generator is a conjugated boost g = C boost(l, axis) C^-1. For each
letter x (a generator or an inverse) we keep a unit spacelike normal u_x
of the half-space D_x = {p : <p, u_x> >= 0} into which x pushes everything
outside D_{x^-1}. These half-spaces give both the ping-pong certificate and
a guaranteed word-length cutoff for orbit enumeration.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from hyperwave import geometry as geo

PING_PONG_MARGIN = 0.05
RESULT_CAP = 10_000_000
MIN_DELTA_SAMPLES = 200
PRESET_DIR = Path(__file__).with_name("presets")


class GroupError(ValueError):
    pass


class OrbitCapError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Generator:
    """Boost of the given rapidity along ``axis``, conjugated by ``conjugator``."""

    label: str
    rapidity: float
    axis: int
    conjugator: geo.Isometry

    @property
    def n(self):
        return self.conjugator.n

    @property
    def isometry(self):
        c = self.conjugator
        return geo.compose(geo.compose(c, geo.boost(self.rapidity, self.axis, self.n)),
                           geo.inverse(c))


def _inverse_label(label):
    return label.swapcase()


def _axis_normal(n, axis, offset):
    u = np.zeros(n + 1)
    u[0] = math.sinh(offset)
    u[axis] = math.cosh(offset)
    return u


@dataclass(frozen=True, eq=False)
class PingPongCertificate:
    normals: dict
    separation: float
    push_margin: float
    nesting: float
    basepoint_depth: float
    sampled_margin: float

    @property
    def margin(self):
        return min(self.separation, self.push_margin, self.sampled_margin)


@dataclass(frozen=True, eq=False)
class GroupPresentation:
    kind: str
    n: int
    generators: tuple = ()
    certificate: PingPongCertificate = field(default=None, repr=False)
    delta_radius: float = None

    @property
    def labels(self):
        return tuple(g.label for g in self.generators)

    @property
    def letters(self):
        return self.labels + tuple(_inverse_label(lb) for lb in self.labels)

    def letter_matrices(self):
        mats = {}
        for g in self.generators:
            m = g.isometry
            mats[g.label] = m.matrix
            mats[_inverse_label(g.label)] = geo.inverse(m).matrix
        return mats

    def element(self, word):
        """Isometry for a word such as 'aB' (upper case = inverse)."""
        mats = self.letter_matrices()
        m = np.eye(self.n + 1)
        for k, ch in enumerate(word, start=1):
            if ch not in mats:
                raise GroupError(f"unknown letter {ch!r}")
            m = m @ mats[ch]
            if k % geo.RENORM_EVERY == 0:
                m = geo.renormalize_if_safe(m)
        return geo.Isometry(m)


def _push_offset(rapidity):
    # half-spaces at distance l/2 - c from the axis midpoint leave a gap 2c
    c = min(0.25 * rapidity, 0.5)
    return 0.5 * rapidity - c, 2.0 * c


def _certify(n, generators, rng_seed=0, samples=1000):
    normals = {}
    push = math.inf
    for g in generators:
        a, gap = _push_offset(g.rapidity)
        cm = g.conjugator.matrix
        normals[g.label] = cm @ _axis_normal(n, g.axis, a)
        normals[_inverse_label(g.label)] = cm @ _axis_normal(n, g.axis, -a) * -1.0
        push = min(push, gap)
    letters = list(normals)
    sep = math.inf
    for i, x in enumerate(letters):
        for z in letters[i + 1:]:
            ip = float(geo.minkowski(normals[x], normals[z]))
            if ip >= -1.0:
                raise GroupError(f"ping-pong half-spaces for {x!r} and {z!r} intersect")
            sep = min(sep, math.acosh(-ip))
    mats = {}
    for g in generators:
        m = g.isometry.matrix
        mats[g.label] = m
        mats[_inverse_label(g.label)] = geo.inverse(g.isometry).matrix
    nesting = math.inf
    for x in letters:
        for z in letters:
            if z == _inverse_label(x):
                continue
            ip = float(geo.minkowski(normals[x], mats[x] @ normals[z]))
            if ip <= 1.0:
                raise GroupError(f"{x!r} does not nest D_{z} strictly inside D_{x}")
            nesting = min(nesting, math.acosh(ip))
    depth = math.inf
    o = geo.origin(n).coords
    for x in letters:
        side = float(geo.minkowski(o, normals[x]))
        if side >= 0:
            raise GroupError("the origin must lie outside every ping-pong half-space")
        depth = min(depth, math.asinh(-side))
    sampled = _sampled_margin(n, normals, mats, rng_seed, samples)
    if min(sep, push, sampled) < PING_PONG_MARGIN:
        raise GroupError(f"ping-pong margin {min(sep, push, sampled):.3g} below "
                         f"{PING_PONG_MARGIN}")
    return PingPongCertificate(normals, sep, push, nesting, depth, sampled)


def _sampled_margin(n, normals, mats, seed, samples):
    """Push sampled points of each boundary hyperplane through the letter.

    Points on the boundary of D_{x^-1} (out to distance 12 along it) must land
    inside D_x at positive signed distance.
    """
    rng = np.random.default_rng(seed)
    letters = list(normals)
    per = max(1, samples // len(letters))
    worst = math.inf
    for x in letters:
        u = normals[_inverse_label(x)]
        # foot of the perpendicular from the origin to the hyperplane <p, u> = 0
        foot = _foot(u)
        basis = _tangent_basis(foot, u)
        for _ in range(per):
            v = basis @ rng.standard_normal(basis.shape[1])
            v /= math.sqrt(geo.minkowski(v, v))
            s = rng.uniform(0.0, 12.0)
            p = math.cosh(s) * foot + math.sinh(s) * v
            q = mats[x] @ p
            worst = min(worst, math.asinh(float(geo.minkowski(q, normals[x]))))
    return worst


def _foot(u):
    # point of {<p,u>=0} closest to the origin: p = (u_s/|u_s|) direction
    u0, us = u[0], u[1:]
    norm = np.linalg.norm(us)
    # p = cosh(d) e0 + sinh(d) us/|us| with tanh(d) = u0/|us|
    d = math.atanh(u0 / norm)
    p = np.empty_like(u)
    p[0] = math.cosh(d)
    p[1:] = math.sinh(d) * us / norm
    return p


def _tangent_basis(p, u):
    """Orthonormal spacelike vectors tangent to the hyperplane <., u> = 0 at p."""
    dim = p.size
    u = u / math.sqrt(geo.minkowski(u, u))
    vecs = []
    for k in range(1, dim):
        e = np.zeros(dim)
        e[k] = 1.0
        e = e + geo.minkowski(e, p) * p
        for w in [u] + vecs:
            e = e - geo.minkowski(e, w) * w
        nrm = geo.minkowski(e, e)
        if nrm > 1e-10:
            vecs.append(e / math.sqrt(nrm))
    return np.array(vecs[:dim - 2]).T


def trivial_group(n):
    geo.origin(n)
    return GroupPresentation("trivial", n)


def cyclic_group(rapidity, n, axis=1, conjugator=None, label="a", delta_radius=None):
    if rapidity <= 0:
        raise GroupError("a cyclic generator must be hyperbolic (rapidity > 0)")
    conj = geo.identity(n) if conjugator is None else conjugator
    gens = (Generator(label, float(rapidity), axis, conj),)
    if delta_radius is None:
        # enough room for MIN_DELTA_SAMPLES orbit points
        delta_radius = rapidity * (MIN_DELTA_SAMPLES // 2 + 0.625)
    return GroupPresentation("cyclic", n, gens, _certify(n, gens), float(delta_radius))


def schottky_group(generators, n, delta_radius=50.5):
    """Free group on conjugated boosts, certified by ping-pong."""
    gens = tuple(generators)
    if len(gens) < 2:
        raise GroupError("a Schottky presentation needs at least two generators")
    labels = [g.label for g in gens]
    if len(set(labels)) != len(labels) or not all(lb.islower() and len(lb) == 1
                                                    for lb in labels):
        raise GroupError("labels must be distinct single lower-case letters")
    if any(g.rapidity <= 0 for g in gens):
        raise GroupError("generators must be hyperbolic")
    return GroupPresentation("schottky", n, gens, _certify(n, gens), float(delta_radius))


@dataclass(frozen=True, eq=False)
class OrbitSample:
    word: str
    element: geo.Isometry
    distance: float


def is_reduced(word):
    return all(word[i + 1] != _inverse_label(word[i]) for i in range(len(word) - 1))


def max_word_length(group, x, y, radius):
    """Length beyond which every reduced word w has d(x, w y) > radius."""
    cert = group.certificate
    o = geo.origin(group.n)
    slack = radius + float(geo.dist(o, x)) + float(geo.dist(o, y)) - cert.basepoint_depth
    return max(0, int(math.floor(slack / cert.nesting)) + 1)


def _as_point(p):
    return p.coords if isinstance(p, geo.HPoint) else np.asarray(p, dtype=float)


def _level_search(group, x, y, radius, max_length, prune, cap):
    xc, yc = _as_point(x), _as_point(y)
    dim = group.n + 1
    found = [("", np.eye(dim), float(geo.dist(xc, yc)))]
    if not group.generators:
        return found if found[0][2] <= radius else []
    mats = group.letter_matrices()
    letters = group.letters
    l_max = max(float(geo.dist(yc, mats[a] @ yc)) for a in letters)
    k_max = max_word_length(group, x, y, radius)
    if not prune:
        limit = max_length
    elif max_length is None:
        limit = k_max
    else:
        limit = min(k_max, max_length)
    words, stack = [""], np.eye(dim)[None, :, :]
    if found[0][2] > radius:
        found = []
    for length in range(1, limit + 1):
        new_words, blocks = [], []
        for a in letters:
            inv = _inverse_label(a)
            keep = [i for i, w in enumerate(words) if not w or w[-1] != inv]
            if not keep:
                continue
            blocks.append(stack[keep] @ mats[a])
            new_words.extend(words[i] + a for i in keep)
        if not blocks:
            break
        stack = np.concatenate(blocks)
        if length % geo.RENORM_EVERY == 0:
            stack = np.array([geo.renormalize_if_safe(m) for m in stack])
        pts = stack @ yc
        d = geo.dist(xc, pts)
        hit = np.nonzero(d <= radius)[0]
        for i in hit:
            found.append((new_words[i], stack[i], float(d[i])))
        if len(found) > cap:
            raise OrbitCapError(f"orbit enumeration exceeded {cap} samples; use a smaller radius")
        if prune:
            alive = d - l_max * (k_max - length) <= radius
            stack = stack[alive]
            new_words = [w for w, ok in zip(new_words, alive) if ok]
        words = new_words
        if not words:
            break
    return found


def enumerate_orbit(group, x, y, radius, max_length=None, cap=RESULT_CAP):
    """All reduced words w with d(x, w y) <= radius, by pruned breadth-first search.

    ``max_length`` optionally restricts the word length.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    raw = _level_search(group, x, y, radius, max_length, True, cap)
    return [OrbitSample(w, geo.Isometry(m), d) for w, m, d in raw]


def enumerate_orbit_exhaustive(group, x, y, radius, max_length):
    """Unpruned enumeration of every reduced word up to ``max_length``."""
    raw = _level_search(group, x, y, radius, max_length, False, RESULT_CAP)
    return [OrbitSample(w, geo.Isometry(m), d) for w, m, d in raw]


def orbit_distances(group, x, y, radius):
    raw = _level_search(group, x, y, radius, None, True, RESULT_CAP)
    return np.sort(np.array([d for _, _, d in raw]))


@dataclass(frozen=True)
class GrowthFit:
    intercept: float
    slope: float
    r2: float


def fit_growth(distances, radius):
    """Least-squares fit of log N(r) = a + delta r on unit shells over [radius/2, radius]."""
    distances = np.sort(np.asarray(distances, dtype=float))
    grid = np.arange(math.ceil(0.5 * radius), math.floor(radius) + 1, 1.0)
    if grid.size < 2:
        raise GroupError("radius too small for a growth fit")
    counts = np.searchsorted(distances, grid, side="right")
    if np.any(counts == 0):
        raise GroupError("empty shells in the fitting window")
    y = np.log(counts)
    slope, intercept = np.polyfit(grid, y, 1)
    resid = y - (intercept + slope * grid)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss if ss > 0 else 1.0
    return GrowthFit(float(intercept), float(slope), r2)


def _cyclic_tail(group, x, y, s, radius):
    """Upper bound for the terms with d(x, g^k y) > radius.

    With f a point on the axis, d(x, g^k y) >= |k| l - d(x, f) - d(y, f); the
    finitely many k below the resulting cutoff are summed directly.
    """
    g = group.generators[0]
    ell = g.rapidity
    xc, yc = _as_point(x), _as_point(y)
    foot = g.conjugator.matrix @ geo.origin(group.n).coords
    offset = float(geo.dist(xc, foot) + geo.dist(yc, foot))
    k0 = int(math.floor((radius + offset) / ell)) + 1
    mats = group.letter_matrices()
    near = 0.0
    for m in (mats[g.label], mats[_inverse_label(g.label)]):
        acc = np.eye(group.n + 1)
        for _ in range(1, k0):
            acc = acc @ m
            d = float(geo.dist(xc, acc @ yc))
            if d > radius:
                near += math.exp(-s * d)
    q = math.exp(-s * ell)
    return near + 2.0 * math.exp(s * offset) * q ** k0 / (1.0 - q)


def poincare_partial(group, s, x, y, radius, samples=None):
    """Partial Poincare sum over d(x, w y) <= radius and an estimate of the rest.

    Returns (partial_sum, tail_bound). The tail is exact for the cyclic group
    (a geometric bound) and comes from the fitted orbit growth otherwise;
    it is infinite when s does not exceed the fitted growth rate.
    """
    if s <= 0:
        raise ValueError("s must be positive")
    if samples is None:
        d = orbit_distances(group, x, y, radius)
    else:
        d = np.array([smp.distance for smp in samples])
    # smallest terms first
    partial = float(np.sum(np.exp(-s * np.sort(d)[::-1])))
    if group.kind == "trivial":
        return partial, 0.0
    if group.kind == "cyclic":
        return partial, _cyclic_tail(group, x, y, s, radius)
    fit = fit_growth(d, radius)
    return partial, growth_tail(fit, s, radius)


def growth_tail(fit, s, radius):
    """sum over unit shells k >= floor(R) of N_shell(k) e^{-s k} under the fit."""
    delta = fit.slope
    if s <= delta:
        return math.inf
    k0 = math.floor(radius)
    shell = math.exp(fit.intercept) * math.expm1(delta)
    return shell * math.exp((delta - s) * k0) / -math.expm1(delta - s)


@dataclass(frozen=True)
class DeltaEstimate:
    counting: float
    abscissa: float
    r2: float
    samples: int
    radius: float

    @property
    def degenerate(self):
        return self.r2 < 0.9

    @property
    def value(self):
        return max(self.counting, self.abscissa)


def _band_ratio(d, s, radius):
    lo = d[(d > 0.5 * radius) & (d <= 0.75 * radius)]
    hi = d[(d > 0.75 * radius) & (d <= radius)]
    if lo.size == 0 or hi.size == 0:
        raise GroupError("empty band in the abscissa estimate")
    shift = 0.5 * radius
    return float(np.sum(np.exp(-s * (hi - shift))) / np.sum(np.exp(-s * (lo - shift))))


def critical_exponent(group):
    """Critical exponent estimate at the group's default radius (0 for the trivial group)."""
    if group.kind == "trivial":
        return DeltaEstimate(0.0, 0.0, 1.0, 1, 0.0)
    return estimate_delta(group, group.delta_radius)


def estimate_delta(group, radius):
    """Two estimates of the critical exponent from the orbit of the origin.

    counting: slope of log N(r) over [R/2, R]; abscissa: the s at which the
    orbit weight in (3R/4, R] equals that in (R/2, 3R/4].
    """
    o = geo.origin(group.n)
    d = orbit_distances(group, o, o, radius)
    if d.size < MIN_DELTA_SAMPLES:
        raise GroupError(f"only {d.size} orbit points within R = {radius}; "
                         f"need {MIN_DELTA_SAMPLES}")
    fit = fit_growth(d, radius)
    lo, hi = 0.0, 1.0
    if _band_ratio(d, 0.0, radius) <= 1.0:
        abscissa = 0.0
    else:
        while _band_ratio(d, hi, radius) > 1.0:
            hi *= 2.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if _band_ratio(d, mid, radius) > 1.0:
                lo = mid
            else:
                hi = mid
        abscissa = 0.5 * (lo + hi)
    return DeltaEstimate(max(fit.slope, 0.0), abscissa, fit.r2, int(d.size), float(radius))


@dataclass(frozen=True)
class UniformPoincareReport:
    max_ratio: float
    ratios: tuple
    reference: float


def check_uniform_poincare(group, s, pairs, radius, delta=None):
    """max over pairs of P_R(s; x, y) / P_R(s; o, o)."""
    if delta is not None and s <= delta:
        raise ValueError(f"s = {s} does not exceed the critical exponent estimate {delta}")
    o = geo.origin(group.n)
    ref, _ = poincare_partial(group, s, o, o, radius)
    ratios = []
    for x, y in pairs:
        p, _ = poincare_partial(group, s, x, y, radius)
        ratios.append(p / ref)
    return UniformPoincareReport(max(ratios), tuple(ratios), ref)


def _conjugator_from_steps(steps, n):
    m = geo.identity(n)
    for step in steps or []:
        if "rotation" in step:
            i, j, angle = step["rotation"]
            op = geo.rotation(int(i), int(j), float(angle), n)
        elif "boost" in step:
            rap, axis = step["boost"]
            op = geo.boost(float(rap), int(axis), n)
        else:
            raise GroupError(f"unknown conjugator step {step!r}")
        m = geo.compose(m, op)
    return m


def group_from_dict(doc):
    """Build a presentation from a preset document (see presets/*.json)."""
    try:
        kind = doc["kind"]
        n = int(doc["n"])
        gens = doc.get("generators", [])
    except (KeyError, TypeError, ValueError) as exc:
        raise GroupError(f"malformed group preset: {exc}") from exc
    if kind == "trivial":
        return trivial_group(n)
    built = []
    for k, gd in enumerate(gens):
        try:
            built.append(Generator(gd.get("label", "abcdefgh"[k]), float(gd["rapidity"]),
                                   int(gd.get("axis", 1)),
                                   _conjugator_from_steps(gd.get("conjugator"), n)))
        except (KeyError, TypeError, ValueError, geo.GeometryError) as exc:
            raise GroupError(f"malformed generator {k}: {exc}") from exc
    radius = doc.get("delta_radius")
    if kind == "cyclic":
        if len(built) != 1:
            raise GroupError("a cyclic preset needs exactly one generator")
        g = built[0]
        return cyclic_group(g.rapidity, n, g.axis, g.conjugator, g.label, radius)
    if kind == "schottky":
        return schottky_group(built, n, 50.5 if radius is None else radius)
    raise GroupError(f"unknown group kind {kind!r}")


def load_preset(name_or_path):
    """Load a shipped preset by name ('cyclic', 'schottky', ...) or from a file."""
    path = Path(name_or_path)
    if not path.suffix:
        path = PRESET_DIR / f"{name_or_path}.json"
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise GroupError(f"cannot read group preset {str(path)!r}: {exc}") from exc
    return group_from_dict(doc)
