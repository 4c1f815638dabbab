# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the loops in ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, fabs

cnp.import_array()

cdef double SMALL_BETA = 1e-12


def cell_chain(c, sb, mbs, bint keep_nodes=False):
    cdef const double[:] cv = np.ascontiguousarray(c, dtype=np.float64)
    cdef const double[:] sv = np.ascontiguousarray(sb, dtype=np.float64)
    cdef const double[:] mv = np.ascontiguousarray(mbs, dtype=np.float64)
    cdef Py_ssize_t n = cv.shape[0], k
    cdef double a11 = 1.0, a12 = 0.0, a21 = 0.0, a22 = 1.0
    cdef double t11, t12, t21, t22, ck, sk, mk
    cdef double[:, :, :] ov
    if keep_nodes:
        out = np.empty((n + 1, 2, 2))
        ov = out
        ov[0, 0, 0] = 1.0
        ov[0, 0, 1] = 0.0
        ov[0, 1, 0] = 0.0
        ov[0, 1, 1] = 1.0
    with nogil:
        for k in range(n):
            ck = cv[k]
            sk = sv[k]
            mk = mv[k]
            t11 = ck * a11 + sk * a21
            t12 = ck * a12 + sk * a22
            t21 = mk * a11 + ck * a21
            t22 = mk * a12 + ck * a22
            a11 = t11
            a12 = t12
            a21 = t21
            a22 = t22
            if keep_nodes:
                ov[k + 1, 0, 0] = a11
                ov[k + 1, 0, 1] = a12
                ov[k + 1, 1, 0] = a21
                ov[k + 1, 1, 1] = a22
    if keep_nodes:
        return out
    return np.array([[a11, a12], [a21, a22]])


def cell_grid(beta0, beta1, beta2, s1, s2, double h):
    shape = np.shape(beta0)
    cdef const double[:] b0 = np.ascontiguousarray(beta0, dtype=np.float64).ravel()
    cdef const double[:] b1 = np.ascontiguousarray(beta1, dtype=np.float64).ravel()
    cdef const double[:] b2 = np.ascontiguousarray(beta2, dtype=np.float64).ravel()
    cdef const double[:] sv1 = np.ascontiguousarray(s1, dtype=np.float64)
    cdef const double[:] sv2 = np.ascontiguousarray(s2, dtype=np.float64)
    cdef Py_ssize_t m = b0.shape[0], nsteps = sv1.shape[0], i, k
    r11 = np.empty(m)
    r12 = np.empty(m)
    r21 = np.empty(m)
    r22 = np.empty(m)
    cdef double[:] o11 = r11, o12 = r12, o21 = r21, o22 = r22
    cdef double a11, a12, a21, a22, t11, t12, t21, t22
    cdef double beta, x, c, s, sbv, mbs
    with nogil:
        for i in range(m):
            a11 = 1.0
            a12 = 0.0
            a21 = 0.0
            a22 = 1.0
            for k in range(nsteps):
                beta = b0[i] + b1[i] * sv1[k] + b2[i] * sv2[k]
                x = beta * h
                c = cos(x)
                s = sin(x)
                if fabs(beta) < SMALL_BETA:
                    sbv = h * (1.0 - x * x / 6.0)
                else:
                    sbv = s / beta
                mbs = -beta * s
                t11 = c * a11 + sbv * a21
                t12 = c * a12 + sbv * a22
                t21 = mbs * a11 + c * a21
                t22 = mbs * a12 + c * a22
                a11 = t11
                a12 = t12
                a21 = t21
                a22 = t22
            o11[i] = a11
            o12[i] = a12
            o21[i] = a21
            o22[i] = a22
    return r11.reshape(shape), r12.reshape(shape), r21.reshape(shape), r22.reshape(shape)


def chain4(steps, bint keep_nodes=False):
    cdef const double[:, :, :] sv = np.ascontiguousarray(steps, dtype=np.float64)
    cdef Py_ssize_t n = sv.shape[0], m = sv.shape[1], k, i, j, l
    acc_arr = np.eye(m)
    tmp_arr = np.empty((m, m))
    cdef double[:, :] acc = acc_arr
    cdef double[:, :] tmp = tmp_arr
    cdef double[:, :, :] ov
    cdef double total
    if keep_nodes:
        out = np.empty((n + 1, m, m))
        ov = out
        ov[0, :, :] = acc
    with nogil:
        for k in range(n):
            for i in range(m):
                for j in range(m):
                    total = 0.0
                    for l in range(m):
                        total = total + sv[k, i, l] * acc[l, j]
                    tmp[i, j] = total
            for i in range(m):
                for j in range(m):
                    acc[i, j] = tmp[i, j]
                    if keep_nodes:
                        ov[k + 1, i, j] = tmp[i, j]
    if keep_nodes:
        return out
    return acc_arr


def affine_chain(steps, integrals, force, q0):
    cdef const double[:, :, :] sv = np.ascontiguousarray(steps, dtype=np.float64)
    kicks_arr = np.ascontiguousarray(np.asarray(integrals, dtype=np.float64) @ np.asarray(force, dtype=np.float64))
    cdef const double[:, :] kv = kicks_arr
    cdef Py_ssize_t n = sv.shape[0], m = sv.shape[1], k, i, l
    out = np.empty((n + 1, m))
    cdef double[:, :] ov = out
    q_arr = np.array(q0, dtype=np.float64)
    cdef double[:] q = q_arr
    cdef double total
    for i in range(m):
        ov[0, i] = q[i]
    with nogil:
        for k in range(n):
            for i in range(m):
                total = kv[k, i]
                for l in range(m):
                    total = total + sv[k, i, l] * ov[k, l]
                ov[k + 1, i] = total
    return out
