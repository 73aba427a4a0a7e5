# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the modal kernels in ``_kernels_py``.

Same signatures and summation order per mode; the GIL is released so that
tau-level worker threads run concurrently.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, expm1, cos, sin, sqrt, fabs

cnp.import_array()

cdef double SERIES_CUTOFF = 1e-3
cdef double EPS = 2.220446049250313e-16


cdef inline double complex _phi(double complex z, double t) noexcept nogil:
    cdef double complex w = z * t
    cdef double a = w.real
    cdef double b = w.imag
    cdef double sb2, ea
    if sqrt(a * a + b * b) < SERIES_CUTOFF:
        return t * (1.0 + w * (0.5 + w * (1.0 / 6.0 + w * (1.0 / 24.0 + w / 120.0))))
    sb2 = sin(0.5 * b)
    ea = exp(a)
    return ((expm1(a) * cos(b) - 2.0 * sb2 * sb2) + 1j * (ea * sin(b))) / z


cdef inline double complex _cexp(double complex z) noexcept nogil:
    cdef double ea = exp(z.real)
    return ea * cos(z.imag) + 1j * (ea * sin(z.imag))


def expsum_eval(lam, B, t):
    cdef const double complex[:, ::1] L = np.ascontiguousarray(lam, dtype=np.complex128)
    cdef const double complex[:, :, ::1] Bv = np.ascontiguousarray(B, dtype=np.complex128)
    cdef const double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef Py_ssize_t nt = tv.shape[0], n = Bv.shape[0], nj = Bv.shape[1], nk = Bv.shape[2]
    out = np.empty((nt, n, nj), dtype=np.float64)
    cdef double[:, :, ::1] o = out
    cdef double complex[64] e
    cdef Py_ssize_t i, m, j, k
    cdef double complex acc
    if nk > 64:
        raise ValueError("at most 64 exponentials per mode")
    with nogil:
        for i in range(nt):
            for m in range(n):
                for k in range(nk):
                    e[k] = _cexp(L[m, k] * tv[i])
                for j in range(nj):
                    acc = 0
                    for k in range(nk):
                        acc = acc + Bv[m, j, k] * e[k]
                    o[i, m, j] = acc.real
    return out


def expsum_quad(lam, G, t):
    cdef const double complex[:, ::1] L = np.ascontiguousarray(lam, dtype=np.complex128)
    cdef const double complex[:, :, ::1] Gv = np.ascontiguousarray(G, dtype=np.complex128)
    cdef const double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef Py_ssize_t nt = tv.shape[0], n = Gv.shape[0], nk = Gv.shape[1]
    out = np.empty(nt, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i, m, k, l
    cdef double total, mode_sum
    cdef double complex z
    with nogil:
        for i in range(nt):
            total = 0.0
            for m in range(n):
                mode_sum = 0.0
                for k in range(nk):
                    for l in range(nk):
                        z = L[m, k] + L[m, l].conjugate()
                        mode_sum += (Gv[m, k, l] * _phi(z, tv[i])).real
                total += mode_sum
            o[i] = total
    return out


cdef inline void _horner(const double[:, ::1] C, Py_ssize_t m, double complex z,
                         double complex *p, double complex *dp) noexcept nogil:
    cdef Py_ssize_t i
    cdef double complex pp = 0, dd = 0
    for i in range(C.shape[1]):
        dd = dd * z + pp
        pp = pp * z + C[m, i]
    p[0] = pp
    dp[0] = dd


def polish_roots(coeffs, roots, int maxit=8):
    cdef const double[:, ::1] C = np.ascontiguousarray(coeffs, dtype=np.float64)
    x = np.array(roots, dtype=np.complex128, order="C")
    best = np.empty(x.shape, dtype=np.float64)
    cdef double complex[:, ::1] X = x
    cdef double[:, ::1] R = best
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1], m, r
    cdef int it
    cdef double complex z, p, dp, step, cand, pc, dpc
    cdef double res, resc
    with nogil:
        for m in range(n):
            for r in range(d):
                z = X[m, r]
                _horner(C, m, z, &p, &dp)
                res = sqrt(p.real * p.real + p.imag * p.imag)
                for it in range(maxit):
                    if res == 0.0 or (dp.real == 0.0 and dp.imag == 0.0):
                        break
                    step = p / dp
                    cand = z - step
                    _horner(C, m, cand, &pc, &dpc)
                    resc = sqrt(pc.real * pc.real + pc.imag * pc.imag)
                    if not (resc < res):
                        break
                    z = cand
                    p = pc
                    dp = dpc
                    res = resc
                    if sqrt(step.real * step.real + step.imag * step.imag) <= \
                            4.0 * EPS * sqrt(z.real * z.real + z.imag * z.imag):
                        break
                X[m, r] = z
                R[m, r] = res
    return x, best
