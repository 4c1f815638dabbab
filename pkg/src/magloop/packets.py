"""Gaussian packets under the linear evolution and constant-force drift runs.

A Gaussian state of a quadratic Hamiltonian is fully described by its mean
and covariance, which transform as q -> u q (+ forced shift) and
C -> u C u^T.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from magloop import kernels
from magloop.center import CenterReport, NotALoopError, drift_velocity, loop_center
from magloop.engine import (DEFAULT_STEPS, J, force_vector, step_matrices,
                            step_second_integrals)
from magloop.floquet import floquet_report, jordan_kind
from magloop.profiles import Biharmonic, FieldProfile

SYM_TOL = 1e-12


class SeparatrixError(ValueError):
    pass


@dataclass(frozen=True)
class GaussianPacket:
    mean: tuple
    cov: tuple

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.asarray(self.cov, dtype=float)
        if mean.shape != (4,) or cov.shape != (4, 4):
            raise ValueError("packet needs a 4-vector mean and a 4x4 covariance")
        scale = max(1.0, float(np.abs(cov).max()))
        if np.abs(cov - cov.T).max() > SYM_TOL * scale:
            raise ValueError("covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        if np.linalg.eigvalsh(cov).min() <= 0:
            raise ValueError("covariance is not positive definite")
        object.__setattr__(self, "mean", tuple(mean))
        object.__setattr__(self, "cov", tuple(map(tuple, cov)))

    @property
    def mean_vector(self) -> np.ndarray:
        return np.array(self.mean)

    @property
    def cov_matrix(self) -> np.ndarray:
        return np.array(self.cov)

    def transformed(self, u, shift=None) -> "GaussianPacket":
        u = np.asarray(u, dtype=float)
        m = u @ self.mean_vector
        if shift is not None:
            m = m + shift
        c = u @ self.cov_matrix @ u.T
        return GaussianPacket(m, 0.5 * (c + c.T))


def uncertainty_margin(cov) -> float:
    """Smallest eigenvalue of cov + iJ/2 (>= 0 for a quantum state)."""
    h = np.asarray(cov, dtype=float) + 0.5j * J
    return float(np.linalg.eigvalsh(h).min())


def free_shear(tau: float) -> np.ndarray:
    """4x4 free evolution x <- x + tau px, y <- y + tau py."""
    u = np.eye(4)
    u[0, 2] = u[1, 3] = tau
    return u


def _propagate(profile, geometry, F, t, steps_per_unit, t0=0.0):
    _, E, integ = step_matrices(profile, geometry, t0, t, steps_per_unit)
    return E, integ, force_vector(F)


def evolve_packet(profile: FieldProfile, geometry: str, F, packet: GaussianPacket, t: float,
                  steps_per_unit: int = DEFAULT_STEPS, t0: float = 0.0) -> GaussianPacket:
    """Packet at time t; mean and covariance share one set of step matrices."""
    E, integ, f = _propagate(profile, geometry, F, t, steps_per_unit, t0)
    if len(E) == 0:
        return packet
    q = kernels.affine_chain(E, integ, f, packet.mean_vector)[-1]
    u = kernels.chain4(E)
    c = u @ packet.cov_matrix @ u.T
    return GaussianPacket(q, 0.5 * (c + c.T))


def packet_history(profile: FieldProfile, geometry: str, F, packet: GaussianPacket, times,
                   steps_per_unit: int = DEFAULT_STEPS) -> list:
    """(t, packet) at increasing sample times, chaining interval by interval."""
    out, cur, t_prev = [], packet, 0.0
    for t in times:
        cur = evolve_packet(profile, geometry, F, cur, float(t), steps_per_unit, t0=t_prev)
        t_prev = float(t)
        out.append((t_prev, cur))
    return out


# -- drift ------------------------------------------------------------------

@dataclass
class DriftResult:
    displacements: np.ndarray  # (n_blocks - 1, 2) per-block center shifts
    centers: np.ndarray  # (n_blocks, 2) per-block Floquet points
    fitted: np.ndarray
    predicted: np.ndarray
    relative_error: float
    center: CenterReport


def drift_experiment(profile: FieldProfile, geometry: str, F, n_blocks: int = 50,
                     block_period: float | None = None, steps_per_unit: int = DEFAULT_STEPS,
                     q0=None, loop_tol: float = 1e-6) -> DriftResult:
    """Run n_blocks loop periods under force F and fit the center drift.

    Each block center is the exact time average of (x, y) over the block.
    A line through the centers gives the fitted velocity; the prediction
    comes from the commutator of the unforced loop center.
    """
    if n_blocks < 2:
        raise ValueError("need at least two blocks")
    T = float(profile.period if block_period is None else block_period)
    plan, E, integ = step_matrices(profile, geometry, 0.0, T, steps_per_unit)
    u_block = kernels.chain4(E)
    res = float(np.linalg.norm(u_block - np.eye(4)))
    if not res < loop_tol:
        raise NotALoopError(f"base process does not close over {T} (residual {res:.3g})")
    report = loop_center(profile, geometry, duration=T, steps_per_unit=steps_per_unit,
                         loop_tol=loop_tol)
    f = force_vector(F)
    forced = np.einsum("nij,j->i", step_second_integrals(plan, geometry), f)
    q = np.zeros(4) if q0 is None else np.asarray(q0, dtype=float)
    centers = np.empty((n_blocks, 2))
    for k in range(n_blocks):
        nodes = kernels.affine_chain(E, integ, f, q)
        centers[k] = ((np.einsum("nij,nj->i", integ, nodes[:-1]) + forced) / T)[:2]
        q = nodes[-1]
    times = T * np.arange(n_blocks)
    A = np.column_stack([np.ones(n_blocks), times])
    coef, *_ = np.linalg.lstsq(A, centers, rcond=None)
    fitted = coef[1]
    predicted = drift_velocity(report, np.asarray(F, dtype=float))
    rel = float(np.linalg.norm(fitted - predicted) / max(np.linalg.norm(predicted), np.finfo(float).eps))
    return DriftResult(np.diff(centers, axis=0), centers, fitted, predicted, rel, report)


# -- inverted free evolution ------------------------------------------------

@dataclass
class InversionSnapshot:
    t: float
    packet: GaussianPacket
    effective_time: float
    free_cov: np.ndarray

    @property
    def cov_error(self) -> float:
        c = self.packet.cov_matrix
        return float(np.linalg.norm(c - self.free_cov) / np.linalg.norm(self.free_cov))


@dataclass
class InversionResult:
    tau: float
    b1: np.ndarray
    snapshots: list


def inversion_demo(beta1: float, beta2: float, n_double_periods: int, packet: GaussianPacket,
                   sep_tol: float = 1e-2, steps_per_unit: int = DEFAULT_STEPS) -> InversionResult:
    """Snapshots at t = 2, 4, ..., 2n of a biharmonic free-evolution
    separatrix point, each compared with free evolution over 2k tau."""
    prof = Biharmonic(beta1, beta2)
    rep = floquet_report(prof, steps_per_unit=steps_per_unit)
    if abs(rep.tr + 2.0) > sep_tol:
        raise SeparatrixError(f"|Tr b(1) + 2| = {abs(rep.tr + 2):.3g} exceeds {sep_tol}")
    kind, tau = jordan_kind(rep.b1, -1.0, zero_tol=max(sep_tol, abs(rep.b1[1, 0]) * 1.0001))
    if kind != "free_evolution":
        raise SeparatrixError(f"point is of {kind} type, not free evolution")
    _, E, _ = step_matrices(prof, "cylindrical", 0.0, 2.0, steps_per_unit)
    u2 = kernels.chain4(E)
    snaps, u = [], np.eye(4)
    c0 = packet.cov_matrix
    for k in range(1, n_double_periods + 1):
        u = u2 @ u
        teff = 2 * k * tau
        fs = free_shear(teff)
        snaps.append(InversionSnapshot(2.0 * k, packet.transformed(u), teff, fs @ c0 @ fs.T))
    return InversionResult(float(tau), rep.b1, snaps)
