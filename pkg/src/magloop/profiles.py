"""Dimensionless magnetic field programs beta(t).

All dynamics in this package run in the rescaled units hbar = m = 1 with the
field period set to 1 for the harmonic and biharmonic programs.  Physical
units only appear in :func:`rescale` and :func:`physical_amplitudes`.
"""
from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, field
from typing import Union

import numpy as np

TWO_PI = 2.0 * math.pi


class ProfileDomainError(ValueError):
    """Raised when a profile is evaluated outside its time domain."""


class ProfileSyntaxError(ValueError):
    """Raised for an unparsable profile literal."""


@dataclass(frozen=True)
class Constant:
    beta: float

    def beta_at(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.beta) if np.ndim(t) else float(self.beta)

    def gamma(self, t):
        return self.beta * np.asarray(t, dtype=float) if np.ndim(t) else self.beta * float(t)

    @property
    def period(self) -> float:
        return 1.0


@dataclass(frozen=True)
class Harmonic:
    beta0: float
    beta1: float

    def beta_at(self, t):
        return self.beta0 + self.beta1 * np.sin(TWO_PI * np.asarray(t, dtype=float)) if np.ndim(t) \
            else self.beta0 + self.beta1 * math.sin(TWO_PI * t)

    def gamma(self, t):
        t = np.asarray(t, dtype=float) if np.ndim(t) else float(t)
        # 1 - cos(2 pi t) written as 2 sin^2(pi t) to keep integer times exact
        return self.beta0 * t + self.beta1 * 2.0 * np.sin(math.pi * t) ** 2 / TWO_PI

    @property
    def period(self) -> float:
        return 1.0


@dataclass(frozen=True)
class Biharmonic:
    beta1: float
    beta2: float

    def beta_at(self, t):
        if np.ndim(t):
            t = np.asarray(t, dtype=float)
            return self.beta1 * np.sin(TWO_PI * t) + self.beta2 * np.sin(2 * TWO_PI * t)
        return self.beta1 * math.sin(TWO_PI * t) + self.beta2 * math.sin(2 * TWO_PI * t)

    def gamma(self, t):
        t = np.asarray(t, dtype=float) if np.ndim(t) else float(t)
        return (self.beta1 * 2.0 * np.sin(math.pi * t) ** 2 / TWO_PI
                + self.beta2 * 2.0 * np.sin(TWO_PI * t) ** 2 / (2 * TWO_PI))

    @property
    def period(self) -> float:
        return 1.0


@dataclass(frozen=True)
class PiecewiseConstant:
    """Step program: ``segments`` is a sequence of ``(beta_i, dt_i)`` pairs."""

    segments: tuple
    _edges: np.ndarray = field(init=False, repr=False, compare=False)
    _gammas: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        segs = tuple((float(b), float(dt)) for b, dt in self.segments)
        if not segs:
            raise ValueError("piecewise profile needs at least one segment")
        if any(dt <= 0 for _, dt in segs):
            raise ValueError("segment durations must be positive")
        object.__setattr__(self, "segments", segs)
        edges = np.concatenate([[0.0], np.cumsum([dt for _, dt in segs])])
        gammas = np.concatenate([[0.0], np.cumsum([b * dt for b, dt in segs])])
        object.__setattr__(self, "_edges", edges)
        object.__setattr__(self, "_gammas", gammas)

    @property
    def duration(self) -> float:
        return float(self._edges[-1])

    @property
    def period(self) -> float:
        return self.duration

    @property
    def edges(self) -> np.ndarray:
        return self._edges.copy()

    def _index(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.duration):
            raise ProfileDomainError(f"t outside [0, {self.duration}]")
        # left-closed segments; t == T belongs to the last one
        idx = np.searchsorted(self._edges, t, side="right") - 1
        return np.clip(idx, 0, len(self.segments) - 1)

    def beta_at(self, t):
        betas = np.array([b for b, _ in self.segments])
        out = betas[self._index(t)]
        return out if np.ndim(t) else float(out)

    def gamma(self, t):
        idx = self._index(t)
        betas = np.array([b for b, _ in self.segments])
        out = self._gammas[idx] + betas[idx] * (np.asarray(t, dtype=float) - self._edges[idx])
        return out if np.ndim(t) else float(out)


FieldProfile = Union[Constant, Harmonic, Biharmonic, PiecewiseConstant]


def beta_at(profile: FieldProfile, t):
    """Field value beta(t); piecewise profiles raise outside ``[0, T]``."""
    return profile.beta_at(t)


def gamma_integral(profile: FieldProfile, t):
    """Closed-form rotation angle gamma(t) = integral of beta from 0 to t."""
    return profile.gamma(t)


def is_periodic(profile: FieldProfile) -> bool:
    return isinstance(profile, (Constant, Harmonic, Biharmonic))


def breakpoints(profile: FieldProfile, t0: float, t1: float) -> np.ndarray:
    """Interior times in (t0, t1) where beta jumps."""
    if isinstance(profile, PiecewiseConstant):
        e = profile.edges
        return e[(e > t0) & (e < t1)]
    return np.empty(0)


# -- physical units ---------------------------------------------------------

@dataclass(frozen=True)
class PhysicalFieldSpec:
    """Field amplitudes in tesla plus the drive angular frequency (rad/s).

    ``family`` says how to read ``B_amplitudes``: ``constant`` (B,),
    ``harmonic`` (B0, B1) or ``biharmonic`` (B1, B2).
    """

    B_amplitudes: tuple
    omega: float
    charge: float
    mass: float
    family: str = "harmonic"

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        object.__setattr__(self, "B_amplitudes", tuple(float(b) for b in self.B_amplitudes))


_FAMILY_SIZES = {"constant": 1, "harmonic": 2, "biharmonic": 2}


def _beta_scale(omega: float, charge: float, mass: float) -> float:
    # beta = pi e B / (m omega) in SI, i.e. e B T / (2 m) with T = 2 pi / omega
    return math.pi * charge / (mass * omega)


def rescale(spec: PhysicalFieldSpec) -> FieldProfile:
    """Map physical amplitudes onto a dimensionless profile (time unit 2 pi / omega)."""
    n = _FAMILY_SIZES.get(spec.family)
    if n is None:
        raise ValueError(f"unknown family {spec.family!r}")
    if len(spec.B_amplitudes) != n:
        raise ValueError(f"{spec.family} needs {n} amplitude(s)")
    if all(b == 0.0 for b in spec.B_amplitudes):
        return Constant(0.0)
    k = _beta_scale(spec.omega, spec.charge, spec.mass)
    betas = [k * b for b in spec.B_amplitudes]
    if spec.family == "constant":
        return Constant(betas[0])
    if spec.family == "harmonic":
        return Harmonic(*betas)
    return Biharmonic(*betas)


def physical_amplitudes(profile: FieldProfile, omega: float, charge: float, mass: float) -> tuple:
    """Inverse of :func:`rescale`: field amplitudes in tesla."""
    if not mass > 0 or not omega > 0:
        raise ValueError("mass and omega must be positive")
    k = _beta_scale(omega, charge, mass)
    if isinstance(profile, Constant):
        vals = (profile.beta,)
    elif isinstance(profile, Harmonic):
        vals = (profile.beta0, profile.beta1)
    elif isinstance(profile, Biharmonic):
        vals = (profile.beta1, profile.beta2)
    else:
        raise TypeError("piecewise profiles have no amplitude form")
    return tuple(v / k for v in vals)


# -- inhomogeneity diagnostic ----------------------------------------------

def cylindrical_wave_coefficients(k: float, n_terms: int) -> np.ndarray:
    """Coefficients Phi_0, Phi_2, ..., Phi_2n of the regular cylindrical wave.

    ``k`` is omega / (2c); Phi_0 is normalized to 1.
    """
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    coef = np.empty(n_terms + 1)
    coef[0] = 1.0
    for n in range(1, n_terms + 1):
        coef[n] = -k * k * coef[n - 1] / (n * (n + 1))
    return coef


def cylindrical_wave_profile(k: float, r, n_terms: int):
    """Partial sum of Phi(r) = sum_n Phi_2n r^2n up to n = n_terms."""
    coef = cylindrical_wave_coefficients(k, n_terms)
    r2 = np.asarray(r, dtype=float) ** 2
    # Horner in r^2
    out = np.zeros_like(r2) + coef[-1]
    for c in coef[-2::-1]:
        out = out * r2 + c
    return out if np.ndim(r) else float(out)


# -- literal syntax ---------------------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNOPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def eval_number(text: str, names: dict | None = None) -> float:
    """Evaluate a small arithmetic literal such as ``-pi/5`` or ``3/t``."""
    env = {"pi": math.pi, "e": math.e}
    if names:
        env.update(names)

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](walk(node.left), walk(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](walk(node.operand))
        if isinstance(node, ast.Name) and node.id in env:
            return float(env[node.id])
        raise ProfileSyntaxError(f"unsupported expression {text!r}")

    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ProfileSyntaxError(f"cannot parse {text!r}") from exc
    return walk(tree)


def _split_top(text: str, sep: str) -> list:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def parse_profile(text: str) -> FieldProfile:
    """Parse ``constant:b``, ``harmonic:b0,b1``, ``biharmonic:b1,b2`` or
    ``piecewise:b1*dt1;b2*dt2;...``.

    In a piecewise segment the duration follows the last top-level ``*``, so
    ``2*pi*0.5`` means beta = 2 pi over dt = 0.5.
    """
    kind, sep, body = text.partition(":")
    if not sep:
        raise ProfileSyntaxError(f"missing ':' in profile literal {text!r}")
    kind = kind.strip().lower()
    if kind == "piecewise":
        segs = []
        for chunk in body.split(";"):
            if not chunk.strip():
                continue
            pieces = _split_top(chunk, "*")
            if len(pieces) < 2:
                raise ProfileSyntaxError(f"segment {chunk!r} needs beta*dt")
            segs.append((eval_number("*".join(pieces[:-1])), eval_number(pieces[-1])))
        try:
            return PiecewiseConstant(tuple(segs))
        except ValueError as exc:
            raise ProfileSyntaxError(str(exc)) from exc
    vals = [eval_number(v) for v in body.split(",")]
    expected = {"constant": 1, "harmonic": 2, "biharmonic": 2}.get(kind)
    if expected is None:
        raise ProfileSyntaxError(f"unknown profile kind {kind!r}")
    if len(vals) != expected:
        raise ProfileSyntaxError(f"{kind} takes {expected} value(s), got {len(vals)}")
    return {"constant": Constant, "harmonic": Harmonic, "biharmonic": Biharmonic}[kind](*vals)


def format_profile(profile: FieldProfile) -> str:
    if isinstance(profile, Constant):
        return f"constant:{profile.beta!r}"
    if isinstance(profile, Harmonic):
        return f"harmonic:{profile.beta0!r},{profile.beta1!r}"
    if isinstance(profile, Biharmonic):
        return f"biharmonic:{profile.beta1!r},{profile.beta2!r}"
    return "piecewise:" + ";".join(f"{b!r}*{dt!r}" for b, dt in profile.segments)
