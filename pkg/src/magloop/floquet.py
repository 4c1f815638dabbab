"""One-period (Floquet) analysis: stability classes, amplitude-plane maps,
loop curves, separatrix tracing with Jordan-kind extraction, squeezing.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from magloop import kernels
from magloop.engine import DEFAULT_STEPS, evolution_matrix, harmonic_samples, integrate_cell
from magloop.profiles import Biharmonic, Constant, FieldProfile, Harmonic, gamma_integral

FAMILIES = ("harmonic", "biharmonic")
CLASSES = ("Stable", "ThresholdPlus", "ThresholdMinus", "ResonantPlus", "ResonantMinus")
DEFAULT_RANGES = {"harmonic": ((-6.0, 6.0), (-6.0, 6.0)),
                  "biharmonic": ((-12.0, 12.0), (-12.0, 12.0))}
THRESHOLD_TOL = 1e-6
ZERO_TOL = 1e-4
# cells per scan task; fixed so results never depend on the worker count
CHUNK = 4096


class DomainError(ValueError):
    pass


class LoopRefinementError(RuntimeError):
    pass


def family_profile(family: str, p1: float, p2: float) -> FieldProfile:
    if family == "harmonic":
        return Harmonic(p1, p2)
    if family == "biharmonic":
        return Biharmonic(p1, p2)
    raise ValueError(f"family must be one of {FAMILIES}, got {family!r}")


def family_params(profile: FieldProfile) -> tuple:
    if isinstance(profile, Harmonic):
        return "harmonic", profile.beta0, profile.beta1
    if isinstance(profile, Biharmonic):
        return "biharmonic", profile.beta1, profile.beta2
    if isinstance(profile, Constant):
        return "harmonic", profile.beta, 0.0
    raise TypeError("piecewise profiles do not belong to a scan family")


def classify(tr: float, tol: float = THRESHOLD_TOL) -> str:
    if abs(tr - 2.0) < tol:
        return "ThresholdPlus"
    if abs(tr + 2.0) < tol:
        return "ThresholdMinus"
    if tr > 2.0:
        return "ResonantPlus"
    if tr < -2.0:
        return "ResonantMinus"
    return "Stable"


def classify_array(tr, tol: float = THRESHOLD_TOL) -> np.ndarray:
    """Integer class codes (indices into CLASSES)."""
    tr = np.asarray(tr, dtype=float)
    out = np.zeros(tr.shape, dtype=np.int8)
    out[tr > 2.0] = 3
    out[tr < -2.0] = 4
    out[np.abs(tr - 2.0) < tol] = 1
    out[np.abs(tr + 2.0) < tol] = 2
    return out


def floquet_eigenvalues(tr: float) -> tuple:
    """Roots of lambda^2 - tr lambda + 1 = 0, |lambda_plus| >= 1."""
    disc = 0.25 * tr * tr - 1.0
    if disc >= 0.0:
        lp = 0.5 * tr + math.copysign(math.sqrt(disc), tr if tr != 0 else 1.0)
        return complex(lp), complex(1.0 / lp)
    im = math.sqrt(-disc)
    return complex(0.5 * tr, im), complex(0.5 * tr, -im)


# -- single-point reports ---------------------------------------------------

@dataclass
class FloquetReport:
    tr: float
    eigenvalues: tuple
    stability_class: str
    gamma1: float
    b1: np.ndarray

    @property
    def diagonalizable(self) -> bool:
        """False for the Jordan (threshold, b1 != +-I) case."""
        if self.stability_class.startswith("Threshold"):
            s = 1.0 if self.stability_class.endswith("Plus") else -1.0
            return bool(np.linalg.norm(self.b1 - s * np.eye(2)) < 1e-6)
        return True


def floquet_report(profile: FieldProfile, threshold_tol: float = THRESHOLD_TOL,
                   steps_per_unit: int = DEFAULT_STEPS, period: float | None = None) -> FloquetReport:
    """Cell over one period (explicit ``period`` or the profile's own)."""
    T = float(profile.period if period is None else period)
    b1 = integrate_cell(profile, 0.0, T, steps_per_unit)
    tr = float(b1[0, 0] + b1[1, 1])
    return FloquetReport(tr, floquet_eigenvalues(tr), classify(tr, threshold_tol),
                         float(gamma_integral(profile, T)), b1)


@dataclass
class SqueezeReport:
    lam_plus: float
    lam_minus: float
    axes: np.ndarray  # rows: left eigenvectors for lam_plus, lam_minus
    kind: str  # "+" squeezing, "-" squeezing composed with parity


def squeezing_axes(b1) -> SqueezeReport:
    b1 = np.asarray(b1, dtype=float)
    tr = float(np.trace(b1))
    if abs(tr) <= 2.0:
        raise DomainError(f"|Tr| = {abs(tr)} <= 2: no real squeezing")
    lp, lm = (v.real for v in floquet_eigenvalues(tr))
    axes = []
    for lam in (lp, lm):
        # row eigenvector v b = lam v, i.e. null vector of (b - lam)^T
        m = (b1 - lam * np.eye(2)).T
        v = np.array([-m[0, 1], m[0, 0]]) if np.hypot(*m[0]) >= np.hypot(*m[1]) \
            else np.array([-m[1, 1], m[1, 0]])
        v = v / np.linalg.norm(v)
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        axes.append(v)
    return SqueezeReport(lp, lm, np.array(axes), "+" if tr > 0 else "-")


# -- maps -------------------------------------------------------------------

@dataclass
class StabilityMap:
    family: str
    p1: np.ndarray
    p2: np.ndarray
    tr: np.ndarray  # (len(p1), len(p2)), indexed [i1, i2]
    b: np.ndarray  # (4, len(p1), len(p2)): b11, b12, b21, b22
    steps_per_unit: int
    threshold_tol: float = THRESHOLD_TOL
    classes: np.ndarray = field(init=False)

    def __post_init__(self):
        self.classes = classify_array(self.tr, self.threshold_tol)

    @property
    def gamma1(self) -> np.ndarray:
        if self.family == "harmonic":
            return np.broadcast_to(self.p1[:, None], self.tr.shape)
        return np.zeros(self.tr.shape)

    def class_name(self, i1: int, i2: int) -> str:
        return CLASSES[self.classes[i1, i2]]

    def cell_of(self, p1: float, p2: float) -> tuple:
        i1 = int(np.argmin(np.abs(self.p1 - p1)))
        i2 = int(np.argmin(np.abs(self.p2 - p2)))
        return i1, i2


def _period_midpoints(steps_per_unit: int):
    t = np.arange(steps_per_unit + 1, dtype=float) / steps_per_unit
    return harmonic_samples(0.5 * (t[:-1] + t[1:]))


def family_cells(family: str, p1, p2, steps_per_unit: int = DEFAULT_STEPS):
    """One-period cells for arrays of family parameters (same shape)."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    s1, s2 = _period_midpoints(steps_per_unit)
    h = 1.0 / steps_per_unit
    zero = np.zeros_like(p1)
    if family == "harmonic":
        return kernels.cell_grid(p1, p2, zero, s1, s2, h)
    if family == "biharmonic":
        return kernels.cell_grid(zero, p1, p2, s1, s2, h)
    raise ValueError(f"family must be one of {FAMILIES}, got {family!r}")


def family_trace(family: str, p1: float, p2: float, steps_per_unit: int = DEFAULT_STEPS) -> float:
    b11, _, _, b22 = family_cells(family, np.array([p1]), np.array([p2]), steps_per_unit)
    return float(b11[0] + b22[0])


def _resolution(resolution) -> tuple:
    if np.ndim(resolution) == 0:
        resolution = (int(resolution), int(resolution))
    n1, n2 = (int(r) for r in resolution)
    if n1 < 2 or n2 < 2:
        raise ValueError("resolution must be >= 2 per axis")
    return n1, n2


def scan_map(family: str, ranges=None, resolution=512, steps_per_unit: int = DEFAULT_STEPS,
             workers: int = 1, threshold_tol: float = THRESHOLD_TOL) -> StabilityMap:
    """Tr b(1) on a rectangular (p1, p2) grid including the range endpoints.

    Work is cut into fixed blocks of cells, so the result is bit-identical
    for any ``workers``.
    """
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {FAMILIES}, got {family!r}")
    (a1, b1), (a2, b2) = ranges if ranges is not None else DEFAULT_RANGES[family]
    n1, n2 = _resolution(resolution)
    p1 = np.linspace(a1, b1, n1)
    p2 = np.linspace(a2, b2, n2)
    g1, g2 = np.meshgrid(p1, p2, indexing="ij")
    flat1, flat2 = g1.ravel(), g2.ravel()
    out = np.empty((4, flat1.size))
    starts = range(0, flat1.size, CHUNK)

    def task(start):
        sl = slice(start, start + CHUNK)
        out[:, sl] = np.array(family_cells(family, flat1[sl], flat2[sl], steps_per_unit))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(task, starts))
    else:
        for s in starts:
            task(s)
    b = out.reshape(4, n1, n2)
    return StabilityMap(family, p1, p2, b[0] + b[3], b, steps_per_unit, threshold_tol)


def ray_zone_sequence(smap: StabilityMap, angle: float, center=(0.0, 0.0),
                      min_run: int = 2, max_radius: float = math.inf) -> list:
    """Resonance-zone signs met walking outward along a ray.

    Samples every half grid spacing by nearest cell; runs shorter than
    ``min_run`` samples are ignored as grid noise.
    """
    d1 = (smap.p1[-1] - smap.p1[0]) / (len(smap.p1) - 1)
    d2 = (smap.p2[-1] - smap.p2[0]) / (len(smap.p2) - 1)
    step = 0.5 * min(d1, d2)
    c, s = math.cos(angle), math.sin(angle)
    seq, run_sign, run_len, r = [], None, 0, 0.0
    while True:
        x, y = center[0] + r * c, center[1] + r * s
        if r > max_radius or not (smap.p1[0] <= x <= smap.p1[-1] and smap.p2[0] <= y <= smap.p2[-1]):
            break
        i1 = int(round((x - smap.p1[0]) / d1))
        i2 = int(round((y - smap.p2[0]) / d2))
        tr = smap.tr[i1, i2]
        sign = "+" if tr > 2 else "-" if tr < -2 else None
        if sign == run_sign:
            run_len += 1
        else:
            run_sign, run_len = sign, 1
        if sign is not None and run_len == min_run and (not seq or seq[-1] != sign):
            seq.append(sign)
        r += step
    return seq


def branch_typing(smap: StabilityMap, angles=None) -> dict:
    """Zone sequences along several rays.  Default rays avoid the axes,
    where neighbouring zones pinch together."""
    if angles is None:
        angles = [math.radians(q * 90 + a) for q in range(4) for a in (20, 35, 55, 70)]
    return {a: ray_zone_sequence(smap, a) for a in angles}


def innermost_branch(points, smap: StabilityMap) -> list:
    """Separatrix points bordering the first resonance zone met from the
    origin, i.e. with no zone of the other sign closer in along their ray."""
    out = []
    for p in points:
        r = math.hypot(p.p1, p.p2)
        seq = ray_zone_sequence(smap, math.atan2(p.p2, p.p1), max_radius=r)
        if all(z == p.branch for z in seq):
            out.append(p)
    return out


def is_alternating(seq, first: str = "-") -> bool:
    return bool(seq) and seq[0] == first and all(a != b for a, b in zip(seq, seq[1:]))


# -- separatrix -------------------------------------------------------------

@dataclass
class SeparatrixPoint:
    p1: float
    p2: float
    branch: str  # "+" or "-"
    kind: str  # kick, free_evolution, mixed
    value: float  # a for kicks, tau for free evolution, nan if mixed
    b1: np.ndarray
    tr: float
    window: str = "period"  # "centered" for harmonic (window [-1/4, 3/4])


def jordan_kind(b, branch_sign: float, zero_tol: float = ZERO_TOL) -> tuple:
    """(kind, value) of a threshold cell, parity stripped for type (-)."""
    b12, b21 = abs(b[0, 1]), abs(b[1, 0])
    if min(b12, b21) > zero_tol:
        return "mixed", float("nan")
    if b12 < b21:
        return "kick", float(-b[1, 0] * branch_sign)
    return "free_evolution", float(b[0, 1] * branch_sign)


def symmetric_window_cell(family: str, p1: float, p2: float,
                          steps_per_unit: int = DEFAULT_STEPS) -> tuple:
    """Cell over the window where beta^2 is symmetric, plus its label.

    Biharmonic fields are odd about t = 1/2, so [0, 1] works.  Harmonic
    fields with the sine convention are even about t = 1/4: window [-1/4, 3/4].
    """
    prof = family_profile(family, p1, p2)
    if family == "harmonic":
        return integrate_cell(prof, -0.25, 0.75, steps_per_unit), "centered"
    return integrate_cell(prof, 0.0, 1.0, steps_per_unit), "period"


def _edge_roots(smap: StabilityMap, f: np.ndarray):
    """Grid edges whose endpoints straddle a root of f."""
    edges = []
    sgn = np.sign(f)
    i, j = np.nonzero(sgn[:-1, :] * sgn[1:, :] < 0)
    edges += [((smap.p1[a], smap.p2[b]), (smap.p1[a + 1], smap.p2[b])) for a, b in zip(i, j)]
    i, j = np.nonzero(sgn[:, :-1] * sgn[:, 1:] < 0)
    edges += [((smap.p1[a], smap.p2[b]), (smap.p1[a], smap.p2[b + 1])) for a, b in zip(i, j)]
    return edges


def trace_separatrix(family: str, branch_sign: int, seed_box=None, refinement_tol: float = 1e-9,
                     resolution=128, steps_per_unit: int = DEFAULT_STEPS, workers: int = 1,
                     zero_tol: float = ZERO_TOL, smap: StabilityMap | None = None) -> list:
    """Points with Tr b(1) = 2*branch_sign, found by root bracketing on grid edges.

    Points are returned sorted by polar angle, then radius.  An empty list
    means no crossing inside ``seed_box``.
    """
    sign = 1.0 if branch_sign > 0 else -1.0
    if smap is None:
        smap = scan_map(family, seed_box, resolution, steps_per_unit, workers)
    f = smap.tr - 2.0 * sign
    pts = []
    for (x0, y0), (x1, y1) in _edge_roots(smap, f):
        def g(lam):
            return family_trace(family, x0 + lam * (x1 - x0), y0 + lam * (y1 - y0),
                                steps_per_unit) - 2.0 * sign
        try:
            lam = brentq(g, 0.0, 1.0, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200)
        except ValueError:
            continue
        q1, q2 = x0 + lam * (x1 - x0), y0 + lam * (y1 - y0)
        tr = family_trace(family, q1, q2, steps_per_unit)
        if abs(tr - 2.0 * sign) >= refinement_tol:
            continue
        b, window = symmetric_window_cell(family, q1, q2, steps_per_unit)
        kind, value = jordan_kind(b, sign, zero_tol)
        pts.append(SeparatrixPoint(float(q1), float(q2), "+" if sign > 0 else "-",
                                   kind, value, b, tr, window))
    pts.sort(key=lambda p: (math.atan2(p.p2, p.p1), math.hypot(p.p1, p.p2)))
    return pts


# -- loops ------------------------------------------------------------------

def find_loop_curve(family: str, l: int, n: int, scan_segment, tol: float = 1e-10,
                    samples: int = 64, steps_per_unit: int = DEFAULT_STEPS) -> list:
    """Points on the segment where Tr b(1) = 2 cos(2 pi l / n)."""
    if not 0 < l < n:
        raise ValueError("need 0 < l < n")
    (a1, a2), (c1, c2) = scan_segment
    target = 2.0 * math.cos(2.0 * math.pi * l / n)

    def g(lam):
        return family_trace(family, a1 + lam * (c1 - a1), a2 + lam * (c2 - a2), steps_per_unit) - target

    lams = np.linspace(0.0, 1.0, samples + 1)
    vals = np.array([g(x) for x in lams])
    out = []
    for k in range(samples):
        if vals[k] == 0.0:
            root = lams[k]
        elif vals[k] * vals[k + 1] < 0:
            root = brentq(g, lams[k], lams[k + 1], xtol=1e-16, rtol=4 * np.finfo(float).eps)
        else:
            continue
        if abs(g(root)) < tol:
            out.append((float(a1 + root * (c1 - a1)), float(a2 + root * (c2 - a2))))
    return out


@dataclass
class LoopResult:
    n: int
    residual: float


def loop_residuals(profile: FieldProfile, n_max: int, geometry: str = "cylindrical",
                   steps_per_unit: int = DEFAULT_STEPS) -> np.ndarray:
    """||u(n) - I||_F for n = 1..n_max (powers of the one-period matrix)."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    u1 = evolution_matrix(profile, geometry, profile.period, steps_per_unit)
    res, u = np.empty(n_max), np.eye(4)
    for k in range(n_max):
        u = u1 @ u
        res[k] = np.linalg.norm(u - np.eye(4))
    return res


def detect_loop(profile: FieldProfile, n_max: int = 64, tol: float = 1e-6,
                geometry: str = "cylindrical", steps_per_unit: int = DEFAULT_STEPS):
    """Smallest n <= n_max with ||u(n) - I||_F < tol, or None."""
    res = loop_residuals(profile, n_max, geometry, steps_per_unit)
    hits = np.nonzero(res < tol)[0]
    if len(hits) == 0:
        return None
    return LoopResult(int(hits[0]) + 1, float(res[hits[0]]))


@dataclass
class RefinedLoop:
    profile: FieldProfile
    n: int
    k: int  # cell phase n*phi = k*pi
    target_tr: float
    param: str
    shift: float
    residual: float


_PARAMS = {Harmonic: ("beta1",), Biharmonic: ("beta2", "beta1"), Constant: ("beta",)}


def _with_param(profile, name, value):
    kw = {f: getattr(profile, f) for f in profile.__dataclass_fields__}
    kw[name] = value
    return type(profile)(**kw)


def loop_target(profile: FieldProfile, n: int, steps_per_unit: int = DEFAULT_STEPS) -> tuple:
    """Nearest cell trace (k, 2 cos(pi k / n)) compatible with closing at n.

    The rotation closes only if n*gamma(1) is a multiple of pi; its sign fixes
    the parity of k.
    """
    g1 = float(gamma_integral(profile, profile.period))
    if abs(math.sin(n * g1)) > 1e-9:
        raise LoopRefinementError(f"rotation n*gamma(1) = {n * g1} is not a multiple of pi")
    parity = 0 if math.cos(n * g1) > 0 else 1
    tr = floquet_report(profile, steps_per_unit=steps_per_unit).tr
    phase = n * math.acos(max(-1.0, min(1.0, 0.5 * tr))) / math.pi
    ks = [k for k in range(1, n) if k % 2 == parity]
    if not ks:
        raise LoopRefinementError(f"no cell phase closes at n = {n}")
    k = min(ks, key=lambda j: abs(j - phase))
    return k, 2.0 * math.cos(math.pi * k / n)


def refine_loop(profile: FieldProfile, n: int, param: str | None = None, window: float = 0.005,
                steps_per_unit: int = DEFAULT_STEPS, samples: int = 16) -> RefinedLoop:
    """Move one amplitude within +-window until u(n) = I.

    Raises LoopRefinementError when the trace target is not bracketed.
    """
    names = _PARAMS.get(type(profile))
    if names is None:
        raise TypeError("only constant, harmonic and biharmonic profiles can be refined")
    param = param or names[0]
    if param not in names:
        raise ValueError(f"cannot refine {param!r} of {type(profile).__name__}")
    k, target = loop_target(profile, n, steps_per_unit)
    p0 = getattr(profile, param)

    def g(v):
        return floquet_report(_with_param(profile, param, v), steps_per_unit=steps_per_unit).tr - target

    # scan outward from the start so the nearest root wins
    offsets = np.linspace(0.0, window, samples + 1)
    root = None
    for a, b in zip(offsets[:-1], offsets[1:]):
        for lo, hi in ((p0 + a, p0 + b), (p0 - b, p0 - a)):
            glo, ghi = g(lo), g(hi)
            if glo == 0.0:
                root = lo
            elif glo * ghi < 0:
                root = brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
            if root is not None:
                break
        if root is not None:
            break
    if root is None:
        raise LoopRefinementError(
            f"Tr b(1) = {target:.6g} (n={n}, k={k}) not reached within {param} = {p0} +- {window}")
    refined = _with_param(profile, param, float(root))
    res = loop_residuals(refined, n, steps_per_unit=steps_per_unit)[-1]
    return RefinedLoop(refined, n, k, target, param, float(root - p0), float(res))


def refine_separatrix(family: str, p1: float, p2: float, branch_sign: int, param: str = "p2",
                      window: float = 0.05, steps_per_unit: int = DEFAULT_STEPS) -> tuple:
    """Move one family parameter to the nearest point with Tr b(1) = 2*branch_sign."""
    sign = 1.0 if branch_sign > 0 else -1.0
    if param not in ("p1", "p2"):
        raise ValueError("param must be 'p1' or 'p2'")

    def point(v):
        return (v, p2) if param == "p1" else (p1, v)

    def g(v):
        return family_trace(family, *point(v), steps_per_unit) - 2.0 * sign

    v0 = p1 if param == "p1" else p2
    offsets = np.linspace(0.0, window, 33)
    for a, b in zip(offsets[:-1], offsets[1:]):
        for lo, hi in ((v0 + a, v0 + b), (v0 - b, v0 - a)):
            if g(lo) * g(hi) <= 0:
                root = brentq(g, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps)
                return point(float(root))
    raise LoopRefinementError(f"no Tr = {2 * sign:+g} crossing within {param} +- {window}")
