"""Pure numpy implementations of the hot loops.

Same signatures and semantics as the compiled ``_ckernels`` module; used when
the extension is not built or MAGLOOP_PURE is set.
"""
from __future__ import annotations

import numpy as np

SMALL_BETA = 1e-12


def cell_chain(c, sb, mbs, keep_nodes=False):
    """Left-multiply the 2x2 steps [[c, sb], [mbs, c]] in order.

    Returns the product (2, 2), or every partial product (n + 1, 2, 2) when
    ``keep_nodes`` is set.
    """
    c = np.asarray(c, dtype=float).tolist()
    sb = np.asarray(sb, dtype=float).tolist()
    mbs = np.asarray(mbs, dtype=float).tolist()
    a11, a12, a21, a22 = 1.0, 0.0, 0.0, 1.0
    if keep_nodes:
        out = np.empty((len(c) + 1, 2, 2))
        out[0] = np.eye(2)
    for k in range(len(c)):
        ck, sk, mk = c[k], sb[k], mbs[k]
        a11, a12, a21, a22 = (ck * a11 + sk * a21, ck * a12 + sk * a22,
                              mk * a11 + ck * a21, mk * a12 + ck * a22)
        if keep_nodes:
            out[k + 1, 0, 0] = a11
            out[k + 1, 0, 1] = a12
            out[k + 1, 1, 0] = a21
            out[k + 1, 1, 1] = a22
    if keep_nodes:
        return out
    return np.array([[a11, a12], [a21, a22]])


def cell_grid(beta0, beta1, beta2, s1, s2, h):
    """One-period cells for many amplitude triples at once.

    beta(t_k) = beta0 + beta1 * s1[k] + beta2 * s2[k] is frozen on step k of
    length h.  Returns (b11, b12, b21, b22) shaped like ``beta0``.
    """
    beta0 = np.asarray(beta0, dtype=float)
    beta1 = np.asarray(beta1, dtype=float)
    beta2 = np.asarray(beta2, dtype=float)
    a11 = np.ones_like(beta0)
    a12 = np.zeros_like(beta0)
    a21 = np.zeros_like(beta0)
    a22 = np.ones_like(beta0)
    for k in range(len(s1)):
        beta = beta0 + beta1 * s1[k] + beta2 * s2[k]
        x = beta * h
        c = np.cos(x)
        s = np.sin(x)
        small = np.abs(beta) < SMALL_BETA
        sb = np.where(small, h * (1.0 - x * x / 6.0), s / np.where(small, 1.0, beta))
        mbs = -beta * s
        a11, a12, a21, a22 = (c * a11 + sb * a21, c * a12 + sb * a22,
                              mbs * a11 + c * a21, mbs * a12 + c * a22)
    return a11, a12, a21, a22


def chain4(steps, keep_nodes=False):
    """Ordered product steps[n-1] @ ... @ steps[0] (optionally all partials)."""
    steps = np.asarray(steps, dtype=float)
    n = steps.shape[0]
    m = steps.shape[1]
    acc = np.eye(m)
    if keep_nodes:
        out = np.empty((n + 1, m, m))
        out[0] = acc
    for k in range(n):
        acc = steps[k] @ acc
        if keep_nodes:
            out[k + 1] = acc
    return out if keep_nodes else acc


def affine_chain(steps, integrals, force, q0):
    """Iterate q <- E_k q + I_k f; returns all nodes (n + 1, 4)."""
    steps = np.asarray(steps, dtype=float)
    kicks = np.asarray(integrals, dtype=float) @ np.asarray(force, dtype=float)
    out = np.empty((steps.shape[0] + 1, steps.shape[1]))
    q = np.asarray(q0, dtype=float).copy()
    out[0] = q
    for k in range(steps.shape[0]):
        q = steps[k] @ q + kicks[k]
        out[k + 1] = q
    return out
