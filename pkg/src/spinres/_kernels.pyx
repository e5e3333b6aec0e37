# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: complex Jacobi eigensolver and the linewidth model."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, copysign
cdef extern from "complex.h" nogil:
    double cabs(double complex)
    double complex conj(double complex)
    double creal(double complex)

cnp.import_array()

BACKEND = "cython"


def jacobi_eigh(h, double tol=1e-14, int max_sweeps=60):
    cdef double complex[:, ::1] a = np.array(h, dtype=np.complex128, order="C", copy=True)
    cdef Py_ssize_t n = a.shape[0]
    vv = np.eye(n, dtype=np.complex128)
    cdef double complex[:, ::1] v = vv
    cdef Py_ssize_t p, q, k
    cdef double scale = 0.0, off, mag, app, aqq, tau, t, c, s, skip
    cdef double complex apq, ph, phc, xp, xq
    cdef int sweeps = 0
    for p in range(n):
        for q in range(n):
            scale += creal(a[p, q] * conj(a[p, q]))
    scale = sqrt(scale)
    if scale == 0.0 or n == 1:
        return np.array([creal(a[p, p]) for p in range(n)]), vv, 0
    skip = 1e-17 * scale
    for sweeps in range(1, max_sweeps + 1):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                mag = cabs(a[p, q])
                off += mag * mag
        if sqrt(2.0 * off) <= tol * scale:
            return np.array([creal(a[p, p]) for p in range(n)]), vv, sweeps - 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = cabs(apq)
                if mag <= skip:
                    continue
                app = creal(a[p, p])
                aqq = creal(a[q, q])
                ph = apq / mag
                tau = (aqq - app) / (2.0 * mag)
                t = copysign(1.0, tau) / (fabs(tau) + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                phc = conj(ph)
                for k in range(n):
                    xp = a[k, p]
                    xq = a[k, q]
                    a[k, p] = c * xp - (s * phc) * xq
                    a[k, q] = s * xp + (c * phc) * xq
                for k in range(n):
                    xp = a[p, k]
                    xq = a[q, k]
                    a[p, k] = c * xp - (s * ph) * xq
                    a[q, k] = s * xp + (c * ph) * xq
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = app - t * mag
                a[q, q] = aqq + t * mag
                for k in range(n):
                    xp = v[k, p]
                    xq = v[k, q]
                    v[k, p] = c * xp - (s * phc) * xq
                    v[k, q] = s * xp + (c * phc) * xq
    return np.array([creal(a[p, p]) for p in range(n)]), vv, sweeps


def linewidth_model(field, double kappa, double f_r_mhz, g, gamma, g_coll, double mu):
    cdef double[::1] b = np.ascontiguousarray(field, dtype=np.float64).ravel()
    cdef double[::1] gg = np.ascontiguousarray(g, dtype=np.float64)
    cdef double[::1] ww = np.ascontiguousarray(gamma, dtype=np.float64)
    cdef double[::1] cc = np.ascontiguousarray(g_coll, dtype=np.float64)
    cdef Py_ssize_t m = b.shape[0], n = gg.shape[0], i, k
    out = np.empty(m)
    cdef double[::1] o = out
    cdef double acc, d
    for i in range(m):
        acc = kappa
        for k in range(n):
            d = f_r_mhz - gg[k] * mu * b[i]
            acc = acc + 2.0 * cc[k] * cc[k] * ww[k] / (d * d + ww[k] * ww[k])
        o[i] = acc
    return out.reshape(np.shape(field))


def linewidth_jacobian(field, double f_r_mhz, g, gamma, g_coll, double mu):
    cdef double[::1] b = np.ascontiguousarray(field, dtype=np.float64).ravel()
    cdef double[::1] gg = np.ascontiguousarray(g, dtype=np.float64)
    cdef double[::1] ww = np.ascontiguousarray(gamma, dtype=np.float64)
    cdef double[::1] cc = np.ascontiguousarray(g_coll, dtype=np.float64)
    cdef Py_ssize_t m = b.shape[0], n = gg.shape[0], i, k
    jac = np.empty((m, 1 + 3 * n))
    cdef double[:, ::1] j = jac
    cdef double d, den, den2, gk, wk, ck
    for i in range(m):
        j[i, 0] = 1.0
        for k in range(n):
            gk = gg[k]
            wk = ww[k]
            ck = cc[k]
            d = f_r_mhz - gk * mu * b[i]
            den = d * d + wk * wk
            den2 = den * den
            j[i, 1 + 3 * k] = 4.0 * ck * ck * wk * d * mu * b[i] / den2
            j[i, 2 + 3 * k] = 2.0 * ck * ck * (d * d - wk * wk) / den2
            j[i, 3 + 3 * k] = 4.0 * ck * wk / den
    return jac
