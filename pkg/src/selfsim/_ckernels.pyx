# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled occupation-time kernels.

Same contract as ``selfsim._pykernels``. Terms whose Gaussian exponent
exceeds 800 are skipped; they are zero in double precision.
"""
import numpy as np
from libc.math cimport exp, fabs, sqrt, M_PI

DEF CUT = 38.6
DEF QMAX = 1490.0  # exp(-QMAX / 2) underflows to zero
DEF INV_SQRT_2PI = 0.3989422804014327


cdef inline double _profile(const double[:, ::1] X, const double* lam, Py_ssize_t k,
                            double inv_h, int kind, Py_ssize_t d, double norm) noexcept nogil:
    cdef double q = 0.0, z, z0 = 0.0
    cdef Py_ssize_t i
    if kind == 2:
        for i in range(d):
            if fabs((X[i, k] - lam[i]) * inv_h) > 1.0:
                return 0.0
        return norm
    for i in range(d):
        z = (X[i, k] - lam[i]) * inv_h
        q += z * z
        if q > QMAX:
            return 0.0
        if i == 0:
            z0 = z
    if kind == 1:
        return z0 * exp(-0.5 * q) * norm
    return exp(-0.5 * q) * norm


def occupation_sums(const double[:, ::1] X, levels, double inv_h, int kind, breaks, double dt):
    cdef double[:, ::1] lv = np.ascontiguousarray(np.atleast_2d(levels), dtype=np.float64)
    cdef long long[::1] br = np.ascontiguousarray(breaks, dtype=np.int64)
    cdef Py_ssize_t L = lv.shape[0], d = X.shape[0], n1 = X.shape[1], nb = br.shape[0]
    out_arr = np.zeros((L, nb))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t j, k, b
    cdef double acc, g_prev, g_next, norm = 0.5 ** d if kind == 2 else INV_SQRT_2PI ** d
    with nogil:
        for j in range(L):
            acc = 0.0
            b = 0
            while b < nb and br[b] == 0:
                out[j, b] = 0.0
                b += 1
            g_prev = _profile(X, &lv[j, 0], 0, inv_h, kind, d, norm)
            for k in range(n1 - 1):
                g_next = _profile(X, &lv[j, 0], k + 1, inv_h, kind, d, norm)
                acc += 0.5 * dt * (g_prev + g_next)
                g_prev = g_next
                while b < nb and br[b] == k + 1:
                    out[j, b] = acc
                    b += 1
    return out_arr


def bridge_sums(const double[:, ::1] X, levels, const double[:, ::1] A, const double[:, ::1] B, const double[:, ::1] V,
                const double[::1] w, double h2, breaks, double dt):
    cdef double[:, ::1] lv = np.ascontiguousarray(np.atleast_2d(levels), dtype=np.float64)
    cdef long long[::1] br = np.ascontiguousarray(breaks, dtype=np.int64)
    cdef Py_ssize_t L = lv.shape[0], d = X.shape[0], n = X.shape[1] - 1, nb = br.shape[0]
    cdef Py_ssize_t Q = w.shape[0]
    amax_arr = np.max(np.abs(A), axis=1)
    bmax_arr = np.max(np.abs(B), axis=1)
    vmax_arr = np.max(V, axis=1)
    cdef double[::1] amax = amax_arr, bmax = bmax_arr, vmax = vmax_arr
    out_arr = np.zeros((L, nb))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t j, k, q, i, b
    cdef double acc, step, xk, dx, reach, dist, mu, var, ss, dens, width
    cdef bint skip
    with nogil:
        for j in range(L):
            acc = 0.0
            b = 0
            while b < nb and br[b] == 0:
                out[j, b] = 0.0
                b += 1
            for k in range(n):
                skip = False
                width = CUT * sqrt(vmax[k] + h2)
                for i in range(d):
                    xk = X[i, k]
                    dx = X[i, k + 1] - xk
                    reach = amax[k] * fabs(xk) + bmax[k] * fabs(dx) + width
                    dist = fabs(xk - lv[j, i])
                    if dist > reach:
                        skip = True
                        break
                if not skip:
                    step = 0.0
                    for q in range(Q):
                        var = V[k, q] + h2
                        ss = 0.0
                        for i in range(d):
                            xk = X[i, k]
                            dx = X[i, k + 1] - xk
                            mu = xk + A[k, q] * xk + B[k, q] * dx
                            ss += (mu - lv[j, i]) * (mu - lv[j, i])
                        ss /= var
                        if ss < QMAX:
                            dens = exp(-0.5 * ss) / sqrt(2.0 * M_PI * var)
                            for i in range(1, d):
                                dens /= sqrt(2.0 * M_PI * var)
                            step += w[q] * dens
                    acc += dt * step
                while b < nb and br[b] == k + 1:
                    out[j, b] = acc
                    b += 1
    return out_arr
