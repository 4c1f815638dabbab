"""Loop centers and Floquet points as linear observables.

A center coordinate X = c . q is stored by its coefficient vector c over
q = (x, y, px, py).  Commutators follow [a.q, b.q] = i a J b^T.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from magloop import kernels
from magloop.engine import DEFAULT_STEPS, J, evolution_matrix, step_matrices
from magloop.floquet import loop_residuals
from magloop.profiles import FieldProfile

VANISH_TOL = 1e-6
LOOP_TOL = 1e-6


class NotALoopError(ValueError):
    """The process does not close; use :func:`floquet_point` instead."""


@dataclass(frozen=True)
class LinearObservable:
    c: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in np.asarray(self.c, dtype=float).reshape(-1))
        if len(c) != 4 or not np.all(np.isfinite(c)):
            raise ValueError("a linear observable needs 4 finite coefficients")
        object.__setattr__(self, "c", c)

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.c)

    def norm(self) -> float:
        return float(np.linalg.norm(self.c))

    def __call__(self, q) -> float:
        return float(np.dot(self.c, q))


def commutator(a, b) -> float:
    """kappa with [a.q, b.q] = i kappa."""
    av = a.vector if isinstance(a, LinearObservable) else np.asarray(a, dtype=float)
    bv = b.vector if isinstance(b, LinearObservable) else np.asarray(b, dtype=float)
    # explicit form keeps the antisymmetry exact
    return float((av[0] * bv[2] + av[1] * bv[3]) - (av[2] * bv[0] + av[3] * bv[1]))


@dataclass
class CenterReport:
    cX: LinearObservable
    cY: LinearObservable
    kappa: float
    vanishing: bool


def make_report(avg, tol: float = VANISH_TOL) -> CenterReport:
    cX, cY = LinearObservable(avg[0]), LinearObservable(avg[1])
    vanishing = cX.norm() < tol and cY.norm() < tol
    kappa = 0.0 if vanishing else commutator(cX, cY)
    return CenterReport(cX, cY, kappa, vanishing)


def time_average_matrix(profile: FieldProfile, geometry: str, T_total: float,
                        steps_per_unit: int = DEFAULT_STEPS, t0: float = 0.0) -> np.ndarray:
    """(1/T) int_{t0}^{t0+T} u(t, 0) dt, acting on the initial variables.

    Each step contributes I_k U_k with I_k the exact integral of the frozen
    step flow, so the average carries no quadrature error beyond the
    stepper's own.
    """
    if not T_total > 0:
        raise ValueError("T_total must be positive")
    _, E, integ = step_matrices(profile, geometry, t0, t0 + T_total, steps_per_unit)
    nodes = kernels.chain4(E, keep_nodes=True)[:-1]
    avg = np.einsum("nij,njk->ik", integ, nodes) / T_total
    if t0 != 0.0:
        avg = avg @ evolution_matrix(profile, geometry, t0, steps_per_unit)
    return avg


def loop_center(profile: FieldProfile, geometry: str = "cylindrical", n_periods: int = 1,
                steps_per_unit: int = DEFAULT_STEPS, duration: float | None = None,
                loop_tol: float = LOOP_TOL, vanish_tol: float = VANISH_TOL) -> CenterReport:
    """Center of a closed loop of length n_periods * period (or ``duration``).

    Raises NotALoopError when u(T_loop) differs from I by ``loop_tol`` or more.
    """
    if duration is None:
        T = n_periods * float(profile.period)
        res = loop_residuals(profile, n_periods, geometry, steps_per_unit)[-1]
    else:
        T = float(duration)
        res = float(np.linalg.norm(evolution_matrix(profile, geometry, T, steps_per_unit) - np.eye(4)))
    if not res < loop_tol:
        raise NotALoopError(f"||u(T) - I|| = {res:.3g} over T = {T}; not a loop, use floquet_point")
    return make_report(time_average_matrix(profile, geometry, T, steps_per_unit), vanish_tol)


def floquet_point(profile: FieldProfile, geometry: str = "cylindrical", window_start: float = 0.0,
                  steps_per_unit: int = DEFAULT_STEPS, period: float | None = None) -> tuple:
    """Averaged x and y rows over [tau, tau + period]."""
    T = float(profile.period if period is None else period)
    avg = time_average_matrix(profile, geometry, T, steps_per_unit, t0=window_start)
    return LinearObservable(avg[0]), LinearObservable(avg[1])


def kappa_matrix(report: CenterReport) -> np.ndarray:
    """kappa_{kl} with [X_k, X_l] = i kappa_{kl}, X_1 = X, X_2 = Y."""
    k = report.kappa
    return np.array([[0.0, k], [-k, 0.0]])


def drift_velocity(report: CenterReport, F) -> np.ndarray:
    """v_l = sum_k F_k kappa_{kl}; zero for vanishing centers."""
    F = np.asarray(F, dtype=float).reshape(2)
    if report.vanishing:
        return np.zeros(2)
    return F @ kappa_matrix(report)


__all__ = ["CenterReport", "LinearObservable", "NotALoopError", "commutator", "drift_velocity",
           "floquet_point", "loop_center", "time_average_matrix", "J"]
