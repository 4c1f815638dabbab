"""Evolution matrices for the cylindrical and Landau Hamiltonians.

Canonical ordering is q = (x, y, px, py) everywhere.  The cylindrical
Hamiltonian H = (p^2 + beta^2 x^2)/2 - beta Mz splits into two identical 2x2
oscillator cells b(t) acting on (x, px) and (y, py), times a rotation by
gamma(t) = int beta.  The Landau Hamiltonian H = ((px + 2 beta y)^2 + py^2)/2
does not split and is integrated as a 4x4 system.

Both are integrated with the midpoint-frozen exponential: on each step beta
is frozen at the step midpoint and the exact flow of the frozen system is
applied.  Every step is exactly symplectic; piecewise-constant programs are
integrated without discretization error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from magloop import kernels
from magloop.profiles import (Biharmonic, Constant, FieldProfile, Harmonic,
                              PiecewiseConstant, breakpoints, gamma_integral)

DEFAULT_STEPS = 2048
SMALL_BETA = 1e-12
GEOMETRIES = ("cylindrical", "landau")

J = np.array([[0.0, 0.0, 1.0, 0.0],
              [0.0, 0.0, 0.0, 1.0],
              [-1.0, 0.0, 0.0, 0.0],
              [0.0, -1.0, 0.0, 0.0]])

_GL_X, _GL_W = np.polynomial.legendre.leggauss(6)


class IntervalError(ValueError):
    pass


def _check_geometry(geometry: str) -> None:
    if geometry not in GEOMETRIES:
        raise ValueError(f"geometry must be one of {GEOMETRIES}, got {geometry!r}")


# -- step plans -------------------------------------------------------------

@dataclass(frozen=True)
class StepPlan:
    """Integration grid: nodes ``t``, step lengths ``h``, midpoint fields
    ``beta`` and exact rotation increments ``dgamma`` per step."""

    t: np.ndarray
    h: np.ndarray
    beta: np.ndarray
    dgamma: np.ndarray

    def __len__(self):
        return len(self.h)


def step_plan(profile: FieldProfile, t0: float, t1: float,
              steps_per_unit: int = DEFAULT_STEPS, extra_nodes=()) -> StepPlan:
    """Grid anchored at the absolute multiples of 1/steps_per_unit.

    Field jumps of piecewise programs and ``extra_nodes`` are inserted as
    nodes, so every step sees a smooth (or constant) field.  Anchoring makes
    products over [t0, tau] and [tau, t1] reproduce [t0, t1] exactly whenever
    tau is a node.
    """
    if not t1 >= t0:
        raise IntervalError(f"need t1 >= t0, got [{t0}, {t1}]")
    if steps_per_unit < 1:
        raise ValueError("steps_per_unit must be >= 1")
    if isinstance(profile, PiecewiseConstant):
        # triggers the domain error early
        profile.beta_at(np.array([t0, t1]))
    if t1 == t0:
        empty = np.empty(0)
        return StepPlan(np.array([float(t0)]), empty, empty, empty)
    k0 = math.floor(t0 * steps_per_unit) + 1
    k1 = math.ceil(t1 * steps_per_unit) - 1
    grid = np.arange(k0, k1 + 1, dtype=float) / steps_per_unit
    extra = np.asarray([x for x in extra_nodes if t0 < x < t1], dtype=float)
    nodes = np.concatenate([[t0], grid[(grid > t0) & (grid < t1)],
                            breakpoints(profile, t0, t1), extra, [t1]])
    nodes = np.unique(nodes)
    # drop slivers produced by floating coincidences
    keep = np.concatenate([[True], np.diff(nodes) > 1e-13 * max(1.0, abs(t1))])
    keep[-1] = True
    nodes = nodes[keep]
    if len(nodes) > 2 and nodes[-1] - nodes[-2] <= 1e-13 * max(1.0, abs(t1)):
        nodes = np.delete(nodes, -2)
    h = np.diff(nodes)
    mid = 0.5 * (nodes[:-1] + nodes[1:])
    beta = np.asarray(profile.beta_at(mid), dtype=float)
    g = np.asarray(gamma_integral(profile, nodes), dtype=float)
    return StepPlan(nodes, h, beta, np.diff(g))


def harmonic_samples(t):
    """sin(2 pi t), sin(4 pi t) exactly as the profiles evaluate them."""
    t = np.asarray(t, dtype=float)
    return np.sin(2 * math.pi * t), np.sin(2 * (2 * math.pi) * t)


# -- one-degree-of-freedom cell ---------------------------------------------

def cell_components(beta, h):
    """(cos(beta h), sin(beta h)/beta, -beta sin(beta h)) elementwise."""
    beta = np.asarray(beta, dtype=float)
    h = np.asarray(h, dtype=float)
    x = beta * h
    s = np.sin(x)
    small = np.abs(beta) < SMALL_BETA
    sb = np.where(small, h * (1.0 - x * x / 6.0), s / np.where(small, 1.0, beta))
    return np.cos(x), sb, -beta * s


def cell_step(beta_mid: float, h: float) -> np.ndarray:
    """Exact flow of db/dt = [[0, 1], [-beta^2, 0]] b over time h."""
    if not h > 0:
        raise ValueError("step must be positive")
    c, sb, mbs = cell_components(beta_mid, h)
    return np.array([[float(c), float(sb)], [float(mbs), float(c)]])


def integrate_cell(profile: FieldProfile, t0: float, t1: float,
                   steps_per_unit: int = DEFAULT_STEPS) -> np.ndarray:
    """The 2x2 cell b(t1, t0)."""
    plan = step_plan(profile, t0, t1, steps_per_unit)
    return kernels.cell_chain(*cell_components(plan.beta, plan.h))


def cell_trajectory(profile: FieldProfile, t0: float, t1: float,
                    steps_per_unit: int = DEFAULT_STEPS):
    """Nodes ``t`` and cells b(t_k, t0) at every node, shape (n + 1, 2, 2)."""
    plan = step_plan(profile, t0, t1, steps_per_unit)
    return plan.t, kernels.cell_chain(*cell_components(plan.beta, plan.h), keep_nodes=True)


def cell_error_estimate(profile: FieldProfile, t0: float, t1: float,
                        steps_per_unit: int = DEFAULT_STEPS) -> float:
    """Richardson estimate of the Frobenius error of integrate_cell (order 2)."""
    coarse = integrate_cell(profile, t0, t1, steps_per_unit)
    fine = integrate_cell(profile, t0, t1, 2 * steps_per_unit)
    return float(np.linalg.norm(coarse - fine)) * 4.0 / 3.0


def centered_cell(profile: FieldProfile, center: float, half_width: float,
                  steps_per_unit: int = DEFAULT_STEPS) -> np.ndarray:
    """b(center + s, center - s) for s = half_width."""
    return integrate_cell(profile, center - half_width, center + half_width, steps_per_unit)


# -- 4x4 assembly -----------------------------------------------------------

def rotation4(angle) -> np.ndarray:
    """Flow of -angle*Mz: rotates (x, y) and (px, py) by the same angle.

    Accepts a scalar or an array of angles (result shape (..., 4, 4)).
    """
    a = np.asarray(angle, dtype=float)
    c, s = np.cos(a), np.sin(a)
    out = np.zeros(a.shape + (4, 4))
    for i in (0, 2):
        out[..., i, i] = c
        out[..., i, i + 1] = s
        out[..., i + 1, i] = -s
        out[..., i + 1, i + 1] = c
    return out


def twin_cells(b) -> np.ndarray:
    """diag(b, b) on the (x, px) and (y, py) pairs, in q ordering."""
    b = np.asarray(b, dtype=float)
    out = np.zeros(b.shape[:-2] + (4, 4))
    for i in (0, 1):
        out[..., i, i] = b[..., 0, 0]
        out[..., i, i + 2] = b[..., 0, 1]
        out[..., i + 2, i] = b[..., 1, 0]
        out[..., i + 2, i + 2] = b[..., 1, 1]
    return out


def assemble_u(profile: FieldProfile, t: float, steps_per_unit: int = DEFAULT_STEPS,
               t0: float = 0.0) -> np.ndarray:
    """Cylindrical evolution matrix u(t, t0) = r(gamma) diag(b, b)."""
    b = integrate_cell(profile, t0, t, steps_per_unit)
    angle = gamma_integral(profile, t) - gamma_integral(profile, t0)
    return rotation4(angle) @ twin_cells(b)


def _cyl_nodes(plan: StepPlan, profile: FieldProfile) -> np.ndarray:
    b = kernels.cell_chain(*cell_components(plan.beta, plan.h), keep_nodes=True)
    angle = np.asarray(gamma_integral(profile, plan.t), dtype=float) - gamma_integral(profile, plan.t[0])
    return np.einsum("nij,njk->nik", rotation4(angle), twin_cells(b))


# -- frozen-step flows ------------------------------------------------------

def _sinc_terms(w, s):
    """sin(w s)/w and (1 - cos(w s))/w, stable as w -> 0."""
    ws = w * s
    return s * np.sinc(ws / np.pi), 0.5 * w * s * s * np.sinc(ws / (2 * np.pi)) ** 2


def cylindrical_flow(beta, rate, s) -> np.ndarray:
    """Frozen cylindrical flow over elapsed time ``s``.

    The oscillator cell runs at frequency ``beta``, the rotation at ``rate``
    (rate = beta for the genuinely frozen system).  Broadcasts over arrays.
    """
    beta, rate, s = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (beta, rate, s)))
    c = np.cos(beta * s)
    sb, _ = _sinc_terms(beta, s)
    b = np.empty(beta.shape + (2, 2))
    b[..., 0, 0] = c
    b[..., 0, 1] = sb
    b[..., 1, 0] = -beta * np.sin(beta * s)
    b[..., 1, 1] = c
    return np.einsum("...ij,...jk->...ik", rotation4(rate * s), twin_cells(b))


def landau_flow(beta, s) -> np.ndarray:
    """Exact flow of the Landau equations for constant beta over time s."""
    beta, s = np.broadcast_arrays(np.asarray(beta, dtype=float), np.asarray(s, dtype=float))
    w = 2.0 * beta
    sn, cs = np.sin(w * s), np.cos(w * s)
    so, co = _sinc_terms(w, s)
    out = np.zeros(beta.shape + (4, 4))
    out[..., 0, 0] = 1.0
    out[..., 0, 1] = sn
    out[..., 0, 2] = so
    out[..., 0, 3] = co
    out[..., 1, 1] = cs
    out[..., 1, 2] = -co
    out[..., 1, 3] = so
    out[..., 2, 2] = 1.0
    out[..., 3, 1] = -w * sn
    out[..., 3, 2] = -sn
    out[..., 3, 3] = cs
    return out


def generator(geometry: str, beta: float) -> np.ndarray:
    """Hamiltonian matrix A with dq/dt = A q for a constant field."""
    _check_geometry(geometry)
    b = float(beta)
    if geometry == "cylindrical":
        return np.array([[0.0, b, 1.0, 0.0],
                         [-b, 0.0, 0.0, 1.0],
                         [-b * b, 0.0, 0.0, b],
                         [0.0, -b * b, -b, 0.0]])
    return np.array([[0.0, 2 * b, 1.0, 0.0],
                     [0.0, 0.0, 0.0, 1.0],
                     [0.0, 0.0, 0.0, 0.0],
                     [0.0, -4 * b * b, -2 * b, 0.0]])


def _flow(geometry, plan: StepPlan, s):
    if geometry == "cylindrical":
        rate = np.where(plan.h > 0, plan.dgamma / plan.h, plan.beta)
        return cylindrical_flow(plan.beta[..., None], rate[..., None], s)
    return landau_flow(plan.beta[..., None], s)


def step_matrices(profile: FieldProfile, geometry: str, t0: float, t1: float,
                  steps_per_unit: int = DEFAULT_STEPS, extra_nodes=()):
    """Per-step propagators E_k and their time integrals I_k = int_0^h E.

    I_k gives exact time averages of the piecewise-frozen trajectory and the
    response to a constant inhomogeneity: q_{k+1} = E_k q_k + I_k f.
    """
    _check_geometry(geometry)
    plan = step_plan(profile, t0, t1, steps_per_unit, extra_nodes)
    if len(plan) == 0:
        return plan, np.empty((0, 4, 4)), np.empty((0, 4, 4))
    E = _flow(geometry, plan, plan.h[:, None])[:, 0]
    s = 0.5 * plan.h[:, None] * (_GL_X[None, :] + 1.0)
    vals = _flow(geometry, plan, s)
    integ = np.einsum("g,ngij->nij", _GL_W, vals) * (0.5 * plan.h)[:, None, None]
    return plan, E, integ


def step_second_integrals(plan: StepPlan, geometry: str) -> np.ndarray:
    """K_k = int_0^h (h - s) E(s) ds: the step-integrated response to a
    constant inhomogeneity, int_0^h q = I_k q_k + K_k f."""
    _check_geometry(geometry)
    if len(plan) == 0:
        return np.empty((0, 4, 4))
    s = 0.5 * plan.h[:, None] * (_GL_X[None, :] + 1.0)
    vals = _flow(geometry, plan, s) * (plan.h[:, None] - s)[..., None, None]
    return np.einsum("g,ngij->nij", _GL_W, vals) * (0.5 * plan.h)[:, None, None]


def landau_integrate(profile: FieldProfile, t: float, steps_per_unit: int = DEFAULT_STEPS,
                     t0: float = 0.0) -> np.ndarray:
    """Landau-gauge evolution matrix u(t, t0)."""
    plan = step_plan(profile, t0, t, steps_per_unit)
    if len(plan) == 0:
        return np.eye(4)
    E = landau_flow(plan.beta, plan.h)
    return kernels.chain4(E)


def evolution_matrix(profile: FieldProfile, geometry: str, t: float,
                     steps_per_unit: int = DEFAULT_STEPS, t0: float = 0.0) -> np.ndarray:
    _check_geometry(geometry)
    if geometry == "cylindrical":
        return assemble_u(profile, t, steps_per_unit, t0)
    return landau_integrate(profile, t, steps_per_unit, t0)


def evolution_trajectory(profile: FieldProfile, geometry: str, t0: float, t1: float,
                         steps_per_unit: int = DEFAULT_STEPS):
    """Nodes and u(t_k, t0) at every node, shape (n + 1, 4, 4)."""
    _check_geometry(geometry)
    plan = step_plan(profile, t0, t1, steps_per_unit)
    if geometry == "cylindrical":
        return plan.t, _cyl_nodes(plan, profile)
    return plan.t, kernels.chain4(landau_flow(plan.beta, plan.h), keep_nodes=True)


# -- trajectories with a constant force -------------------------------------

@dataclass
class Trajectory:
    t: np.ndarray
    q: np.ndarray  # (n + 1, 4)

    def at_end(self) -> np.ndarray:
        return self.q[-1]


def force_vector(force) -> np.ndarray:
    f = np.asarray(force, dtype=float).reshape(-1)
    if f.shape != (2,):
        raise ValueError("force must be a 2-vector")
    return np.array([0.0, 0.0, f[0], f[1]])


def evolve_affine(profile: FieldProfile, geometry: str, force, q0, t: float,
                  steps_per_unit: int = DEFAULT_STEPS, t0: float = 0.0,
                  extra_nodes=()) -> Trajectory:
    """Solve dq/dt = A(t) q + (0, 0, Fx, Fy) from q(t0) = q0.

    With zero force the samples equal u(t_k, t0) q0.
    """
    plan, E, integ = step_matrices(profile, geometry, t0, t, steps_per_unit, extra_nodes)
    q = kernels.affine_chain(E, integ, force_vector(force), np.asarray(q0, dtype=float))
    return Trajectory(plan.t, q)


# -- diagnostics ------------------------------------------------------------

def symplectic_defect(u) -> float:
    u = np.asarray(u, dtype=float)
    return float(np.linalg.norm(u @ J @ np.swapaxes(u, -1, -2) - J))


def symplectic_defects(us) -> np.ndarray:
    us = np.asarray(us, dtype=float)
    d = us @ J @ np.swapaxes(us, -1, -2) - J
    return np.sqrt(np.sum(d * d, axis=(-2, -1)))


def symplectic_inverse(u) -> np.ndarray:
    """u^{-1} = -J u^T J for symplectic u."""
    return -J @ np.swapaxes(np.asarray(u, dtype=float), -1, -2) @ J


def cylindrical_energy(q, beta: float):
    """H = ((px + beta y)^2 + (py - beta x)^2)/2 for a constant field."""
    q = np.asarray(q, dtype=float)
    x, y, px, py = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    return 0.5 * ((px + beta * y) ** 2 + (py - beta * x) ** 2)


def orbit_surface(q, beta: float):
    """pi rho^2 with rho the distance to the conserved cyclotron center."""
    q = np.asarray(q, dtype=float)
    x, y, px, py = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    cx = 0.5 * x + py / (2 * beta)
    cy = 0.5 * y - px / (2 * beta)
    return math.pi * ((x - cx) ** 2 + (y - cy) ** 2)


def period_of(profile: FieldProfile) -> float:
    return float(profile.period)


__all__ = [
    "DEFAULT_STEPS", "J", "StepPlan", "Trajectory", "assemble_u", "cell_step",
    "cell_trajectory", "evolution_matrix", "evolution_trajectory", "evolve_affine",
    "integrate_cell", "landau_integrate", "step_matrices", "step_plan",
    "symplectic_defect", "Constant", "Harmonic", "Biharmonic", "PiecewiseConstant",
]
