# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled iteration kernels for dense ridge / logistic problems.

The Python layer pre-draws sampling indices and schedule arrays per chunk;
this module only runs the numeric loop, so both engines see the same sample
path. kind: 0 = ridge, 1 = logistic. mode: 0 = single-element (idx1 + per-step
estimator weights w = v_i / n), 1 = tau-nice (idx2 rows), 2 = full batch.
"""

import numpy as np

from libc.math cimport exp, fabs, isfinite, log1p, sqrt

# Gradient norms at or below this are treated as stationary (matches core).
cdef double ZERO_TOL = 1e-12


cdef inline double _softplus(double u) nogil:
    # log(1 + exp(u)) without overflow
    if u > 30.0:
        return u
    return log1p(exp(u))


cdef inline double _neg_sigmoid(double z) nogil:
    # 1 / (1 + exp(z)); IEEE-safe for large |z|
    return 1.0 / (1.0 + exp(z))


cdef void _dense_full_grad(int kind, double[:, ::1] A, double[::1] b, double lam_r,
                           double[::1] x, double[::1] out) nogil:
    cdef Py_ssize_t n = A.shape[0], d = A.shape[1]
    cdef Py_ssize_t i, k
    cdef double dot, coef
    for k in range(d):
        out[k] = 0.0
    for i in range(n):
        dot = 0.0
        for k in range(d):
            dot += A[i, k] * x[k]
        if kind == 0:
            coef = dot - b[i]
        else:
            coef = -0.5 * b[i] * _neg_sigmoid(b[i] * dot)
        for k in range(d):
            out[k] += coef * A[i, k]
    for k in range(d):
        out[k] = out[k] / n + lam_r * x[k]


cdef double _dense_loss(int kind, double[:, ::1] A, double[::1] b, double lam_r,
                        double[::1] x) nogil:
    cdef Py_ssize_t n = A.shape[0], d = A.shape[1]
    cdef Py_ssize_t i, k
    cdef double dot, acc = 0.0, xsq = 0.0
    for i in range(n):
        dot = 0.0
        for k in range(d):
            dot += A[i, k] * x[k]
        if kind == 0:
            acc += 0.5 * (dot - b[i]) * (dot - b[i])
        else:
            acc += 0.5 * _softplus(-b[i] * dot)
    for k in range(d):
        xsq += x[k] * x[k]
    return acc / n + 0.5 * lam_r * xsq


def dense_loss_gradnorm(int kind, double[:, ::1] A, double[::1] b, double lam_r, double[::1] x):
    """(f(x), ||grad f(x)||) for the dense problem."""
    cdef double[::1] buf = np.empty(A.shape[1])
    cdef double loss, sq = 0.0
    cdef Py_ssize_t k
    with nogil:
        loss = _dense_loss(kind, A, b, lam_r, x)
        _dense_full_grad(kind, A, b, lam_r, x, buf)
        for k in range(A.shape[1]):
            sq += buf[k] * buf[k]
    return loss, sqrt(sq)


cdef inline double _row_coef(int kind, double[:, ::1] A, double[::1] b,
                             Py_ssize_t i, double[::1] point) nogil:
    # scalar multiplier of a_i inside grad f_i at `point` (regularizer excluded)
    cdef double dot = 0.0
    cdef Py_ssize_t k
    for k in range(A.shape[1]):
        dot += A[i, k] * point[k]
    if kind == 0:
        return dot - b[i]
    return -0.5 * b[i] * _neg_sigmoid(b[i] * dot)


cdef int _estimate(int kind, double[:, ::1] A, double[::1] b, double lam_r,
                   int mode, long[::1] idx1, double[::1] w_arr, long[:, ::1] idx2,
                   Py_ssize_t t, double[::1] point, double[::1] out) nogil:
    """out <- g(point) for the draw of iteration t. Returns 0, or 1 on non-finite."""
    cdef Py_ssize_t n = A.shape[0], d = A.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double coef, w, check = 0.0
    if mode == 0:
        i = idx1[t]
        w = w_arr[t]
        coef = _row_coef(kind, A, b, i, point)
        for k in range(d):
            out[k] = w * (coef * A[i, k] + lam_r * point[k])
    elif mode == 1:
        for k in range(d):
            out[k] = 0.0
        for j in range(idx2.shape[1]):
            i = idx2[t, j]
            coef = _row_coef(kind, A, b, i, point)
            for k in range(d):
                out[k] += coef * A[i, k]
        for k in range(d):
            out[k] = out[k] / idx2.shape[1] + lam_r * point[k]
    else:
        for k in range(d):
            out[k] = 0.0
        for i in range(n):
            coef = _row_coef(kind, A, b, i, point)
            for k in range(d):
                out[k] += coef * A[i, k]
        for k in range(d):
            out[k] = out[k] / n + lam_r * point[k]
    for k in range(d):
        check += out[k] * out[k]
    if not isfinite(check):
        return 1
    return 0


def run_chunk(int kind, double[:, ::1] A, double[::1] b, double lam_r,
              double[::1] x, double[::1] d_vec, int mode,
              long[::1] idx1, double[::1] w_arr, long[:, ::1] idx2,
              double[::1] rho, double[::1] gamma, double[::1] lam, double theta,
              long[::1] rec_local, double[::1] loss_out, double[::1] gnorm_out,
              long[::1] zeros_out, long zero_count, double diverge_loss):
    """Advance x in place over one chunk of iterations.

    Logs f, ||grad f|| and the cumulative zero-gradient count at each local
    iteration listed in rec_local (state before that step). Returns
    (status, diverged_local_t, zero_count, records_written); status 1 flags a
    non-finite or exploding trajectory.
    """
    cdef Py_ssize_t m = rho.shape[0]
    cdef Py_ssize_t d = A.shape[1]
    cdef Py_ssize_t n_rec = rec_local.shape[0]
    cdef double[::1] g = np.empty(d)
    cdef double[::1] xp = np.empty(d)
    cdef double[::1] gbuf = np.empty(d)
    cdef Py_ssize_t t, k, rec_ptr = 0, wrote = 0
    cdef long diverged_at = -1
    cdef double gsq, dirnorm, scale, fx, sq, lam_t
    cdef bint use_vasso = theta > 0.0
    cdef double[::1] direction

    with nogil:
        for t in range(m):
            if rec_ptr < n_rec and rec_local[rec_ptr] == t:
                fx = _dense_loss(kind, A, b, lam_r, x)
                _dense_full_grad(kind, A, b, lam_r, x, gbuf)
                sq = 0.0
                for k in range(d):
                    sq += gbuf[k] * gbuf[k]
                loss_out[wrote] = fx
                gnorm_out[wrote] = sqrt(sq)
                zeros_out[wrote] = zero_count
                wrote += 1
                rec_ptr += 1
                if not isfinite(fx) or fabs(fx) > diverge_loss:
                    diverged_at = t
                    break

            if _estimate(kind, A, b, lam_r, mode, idx1, w_arr, idx2, t, x, g) != 0:
                diverged_at = t
                break
            if use_vasso:
                sq = 0.0
                for k in range(d):
                    d_vec[k] = (1.0 - theta) * d_vec[k] + theta * g[k]
                    sq += d_vec[k] * d_vec[k]
                direction = d_vec
                dirnorm = sqrt(sq)
            else:
                sq = 0.0
                for k in range(d):
                    sq += g[k] * g[k]
                direction = g
                dirnorm = sqrt(sq)

            lam_t = lam[t]
            if dirnorm <= ZERO_TOL:
                scale = rho[t] * (1.0 - lam_t)
                zero_count += 1
            else:
                scale = rho[t] * ((1.0 - lam_t) + lam_t / dirnorm)
            for k in range(d):
                xp[k] = x[k] + scale * direction[k]

            if _estimate(kind, A, b, lam_r, mode, idx1, w_arr, idx2, t, xp, g) != 0:
                diverged_at = t
                break
            for k in range(d):
                x[k] = x[k] - gamma[t] * g[k]

    return (0 if diverged_at < 0 else 1), diverged_at, zero_count, wrote
