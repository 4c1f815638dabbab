"""Exact algebra of Landau-gauge pi-pulse programs and kick/free words."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from magloop.center import CenterReport, make_report, time_average_matrix
from magloop.engine import DEFAULT_STEPS
from magloop.profiles import PiecewiseConstant, ProfileSyntaxError, eval_number

LOOP_TOL = 1e-12
PULSE_TOL = 1e-12

# nilpotent direction of pulse-pair products
E_SHEAR = np.zeros((4, 4))
E_SHEAR[0, 3] = 1.0
E_SHEAR[1, 2] = 1.0


class NotALoopSequence(ValueError):
    pass


def landau_pulse_matrix(beta: float) -> np.ndarray:
    """Evolution over a pi-pulse beta * dt = +-pi/2 with dt = pi/(2|beta|).

    The same closed form holds for both signs of beta.
    """
    beta = float(beta)
    if beta == 0.0:
        raise ValueError("a pi-pulse needs beta != 0")
    r = 1.0 / beta
    return np.array([[1.0, 0.0, 0.0, r],
                     [0.0, -1.0, -r, 0.0],
                     [0.0, 0.0, 1.0, 0.0],
                     [0.0, 0.0, 0.0, -1.0]])


@dataclass(frozen=True)
class PulseSequence:
    """Even-length list of nonzero pulse fields; durations follow from
    beta_i * dt_i = +-pi/2."""

    betas: tuple

    def __post_init__(self):
        betas = tuple(float(b) for b in self.betas)
        if not betas or len(betas) % 2:
            raise ValueError("a pulse sequence needs an even, nonzero number of pulses")
        if any(b == 0.0 for b in betas):
            raise ValueError("pulse fields must be nonzero")
        object.__setattr__(self, "betas", betas)

    @classmethod
    def from_segments(cls, segments, tol: float = PULSE_TOL) -> "PulseSequence":
        """Build from explicit (beta_i, dt_i), checking |beta_i dt_i| = pi/2."""
        segs = [(float(b), float(dt)) for b, dt in segments]
        for b, dt in segs:
            if dt <= 0 or abs(abs(b * dt) - 0.5 * math.pi) > tol:
                raise ValueError(f"segment ({b}, {dt}) is not a pi-pulse")
        return cls(tuple(b for b, _ in segs))

    @property
    def durations(self) -> tuple:
        return tuple(0.5 * math.pi / abs(b) for b in self.betas)

    @property
    def duration(self) -> float:
        return float(sum(self.durations))

    def profile(self) -> PiecewiseConstant:
        return PiecewiseConstant(tuple(zip(self.betas, self.durations)))

    def __add__(self, other: "PulseSequence") -> "PulseSequence":
        return PulseSequence(self.betas + other.betas)


@dataclass
class SequenceResult:
    u_total: np.ndarray
    gamma: float
    is_loop: bool


def gamma_closed_form(seq: PulseSequence) -> float:
    """Alternating pairwise sum of 1/beta_{2j-1} - 1/beta_{2j}."""
    b = seq.betas
    return float(sum(1.0 / b[i] - 1.0 / b[i + 1] for i in range(0, len(b), 2)))


def landau_sequence(seq: PulseSequence, tol: float = LOOP_TOL) -> SequenceResult:
    """u(T) = u_{2n} ... u_1; Gamma is the (1, 4) entry of u(T) = I + Gamma E."""
    u = np.eye(4)
    for b in seq.betas:
        u = landau_pulse_matrix(b) @ u
    gamma = float(u[0, 3])
    return SequenceResult(u, gamma, abs(gamma) < tol)


def kappa_closed_form(seq: PulseSequence) -> float:
    """-(pi / 4T) sum 1/(beta_i |beta_i|)."""
    return -math.pi / (4.0 * seq.duration) * sum(1.0 / (b * abs(b)) for b in seq.betas)


def landau_center_commutator(seq: PulseSequence, steps_per_unit: int = DEFAULT_STEPS,
                             tol: float = LOOP_TOL, kappa_tol: float = 1e-8) -> CenterReport:
    """Center of a Landau loop from the exact piecewise evolution.

    Raises NotALoopSequence for Gamma != 0 and RuntimeError if the averaged
    kappa and the closed form disagree.
    """
    res = landau_sequence(seq, tol)
    if not res.is_loop:
        raise NotALoopSequence(f"Gamma = {res.gamma:.3g}; the sequence does not close")
    avg = time_average_matrix(seq.profile(), "landau", seq.duration, steps_per_unit)
    report = make_report(avg)
    # make_report zeroes kappa only for vanishing centers; Landau centers never vanish
    closed = kappa_closed_form(seq)
    if abs(report.kappa - closed) > kappa_tol * max(1.0, abs(closed)):
        raise RuntimeError(f"kappa {report.kappa} disagrees with closed form {closed}")
    return report


def parse_pulses(text: str) -> PulseSequence:
    """``landau:pi/6,pi/4,pi,pi/3``."""
    kind, sep, body = text.partition(":")
    if not sep or kind.strip().lower() != "landau":
        raise ProfileSyntaxError(f"expected landau:<b1>,<b2>,..., got {text!r}")
    try:
        return PulseSequence(tuple(eval_number(v) for v in body.split(",")))
    except ValueError as exc:
        if isinstance(exc, ProfileSyntaxError):
            raise
        raise ProfileSyntaxError(str(exc)) from exc


# -- kick / free words ------------------------------------------------------

def kick_matrix(a: float) -> np.ndarray:
    return np.array([[1.0, 0.0], [-float(a), 1.0]])


def free_matrix(tau: float) -> np.ndarray:
    return np.array([[1.0, float(tau)], [0.0, 1.0]])


def parity_matrix() -> np.ndarray:
    return -np.eye(2)


@dataclass(frozen=True)
class Kick:
    a: float

    def matrix(self):
        return kick_matrix(self.a)


@dataclass(frozen=True)
class Free:
    tau: float

    def matrix(self):
        return free_matrix(self.tau)


@dataclass(frozen=True)
class Parity:
    def matrix(self):
        return parity_matrix()


@dataclass(frozen=True)
class KickFreeWord:
    """Primitives written in operator order: the rightmost acts first."""

    items: tuple

    def __post_init__(self):
        items = tuple(self.items)
        if not items:
            raise ValueError("a word needs at least one primitive")
        object.__setattr__(self, "items", items)

    def __mul__(self, k: int) -> "KickFreeWord":
        return KickFreeWord(self.items * int(k))


def word_product(word: KickFreeWord) -> np.ndarray:
    """Matrix of the word; for operators U = U_1 ... U_m the Heisenberg
    matrices multiply in the same written order."""
    m = np.eye(2)
    for p in word.items:
        m = m @ p.matrix()
    return m


def word_product_in_time_order(primitives) -> np.ndarray:
    """Same product for primitives listed in the order they act."""
    return word_product(KickFreeWord(tuple(reversed(tuple(primitives)))))


@dataclass
class WordResult:
    product: np.ndarray
    is_loop: bool
    order: int | None
    threshold: bool
    diagonalizable: bool


def verify_word_loop(word: KickFreeWord, max_order: int = 64, tol: float = LOOP_TOL) -> WordResult:
    """Smallest k <= max_order with product^k = I, plus the Jordan check
    for threshold products (|Tr| = 2)."""
    m = word_product(word)
    scale = max(1.0, float(np.abs(m).max()))
    order, acc = None, np.eye(2)
    for k in range(1, max_order + 1):
        acc = acc @ m
        if np.abs(acc - np.eye(2)).max() < tol * scale * k:
            order = k
            break
    tr = float(np.trace(m))
    threshold = abs(abs(tr) - 2.0) < tol * scale
    diagonalizable = True
    if threshold:
        s = math.copysign(1.0, tr)
        # (M - sI)^2 = 0 always at threshold; diagonalizable only if M = sI
        diagonalizable = bool(np.abs(m - s * np.eye(2)).max() < tol * scale)
    return WordResult(m, order is not None, order, threshold, diagonalizable)


_PRIM = re.compile(r"^\s*(free|kick|parity)\s*\((.*)\)\s*$", re.IGNORECASE)


def parse_word(text: str, t: float | None = None) -> KickFreeWord:
    """``word:free(t)*kick(3/t)*...``; ``t`` binds the symbol t.

    A trailing ``^k`` repeats the whole word k times.
    """
    kind, sep, body = text.partition(":")
    if not sep or kind.strip().lower() != "word":
        raise ProfileSyntaxError(f"expected word:<primitives>, got {text!r}")
    body, _, power = body.partition("^")
    names = {"t": t} if t is not None else {}
    items = []
    for chunk in _split_star(body):
        m = _PRIM.match(chunk)
        if not m:
            raise ProfileSyntaxError(f"bad primitive {chunk!r}")
        name, arg = m.group(1).lower(), m.group(2).strip()
        if name == "parity":
            if arg:
                raise ProfileSyntaxError("parity() takes no argument")
            items.append(Parity())
            continue
        val = eval_number(arg, names)
        items.append(Free(val) if name == "free" else Kick(val))
    word = KickFreeWord(tuple(items))
    if power.strip():
        word = word * int(eval_number(power))
    return word


def _split_star(text: str) -> list:
    parts, depth, cur = [], 0, []
    for ch in text:
        depth += (ch == "(") - (ch == ")")
        if ch == "*" and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p for p in parts if p.strip()]
