# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled propagation kernels.

Same signatures and semantics as :mod:`etapt._pykernels`.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, isfinite

cdef extern from "<complex.h>" nogil:
    double complex cexp(double complex)
    double creal(double complex)
    double cimag(double complex)

cnp.import_array()


cdef inline bint _cfinite(double complex z) nogil:
    return isfinite(creal(z)) and isfinite(cimag(z))


cdef void _apply_h(const double complex[:, ::1] coeffs, int k,
                   const double complex[:, :, ::1] mats,
                   double complex[::1] v, double complex[::1] out) nogil:
    # out = -1j * (sum_j coeffs[k, j] * mats[j]) @ v
    cdef Py_ssize_t n_terms = mats.shape[0]
    cdef Py_ssize_t dim = mats.shape[1]
    cdef Py_ssize_t i, j, r
    cdef double complex acc, cj
    for r in range(dim):
        out[r] = 0
    for j in range(n_terms):
        cj = coeffs[k, j]
        if cj == 0:
            continue
        for r in range(dim):
            acc = 0
            for i in range(dim):
                acc = acc + mats[j, r, i] * v[i]
            out[r] = out[r] + cj * acc
    for r in range(dim):
        out[r] = -1j * out[r]


def rk4_dense(coeffs, mats, psi0, double dt):
    cdef const double complex[:, ::1] c = np.ascontiguousarray(coeffs, dtype=complex)
    cdef const double complex[:, :, ::1] m = np.ascontiguousarray(mats, dtype=complex)
    cdef Py_ssize_t n_steps = (c.shape[0] - 1) // 2
    cdef Py_ssize_t dim = m.shape[1]
    states_arr = np.full((n_steps + 1, dim), np.nan, dtype=complex)
    cdef double complex[:, ::1] states = states_arr
    cdef double complex[::1] psi = np.array(psi0, dtype=complex)
    cdef double complex[::1] tmp = np.empty(dim, dtype=complex)
    cdef double complex[::1] k1 = np.empty(dim, dtype=complex)
    cdef double complex[::1] k2 = np.empty(dim, dtype=complex)
    cdef double complex[::1] k3 = np.empty(dim, dtype=complex)
    cdef double complex[::1] k4 = np.empty(dim, dtype=complex)
    cdef Py_ssize_t step, r
    cdef int k0
    cdef bint ok
    cdef double half = 0.5 * dt
    cdef double sixth = dt / 6.0
    for r in range(dim):
        states[0, r] = psi[r]
    with nogil:
        for step in range(n_steps):
            k0 = <int>(2 * step)
            _apply_h(c, k0, m, psi, k1)
            for r in range(dim):
                tmp[r] = psi[r] + half * k1[r]
            _apply_h(c, k0 + 1, m, tmp, k2)
            for r in range(dim):
                tmp[r] = psi[r] + half * k2[r]
            _apply_h(c, k0 + 1, m, tmp, k3)
            for r in range(dim):
                tmp[r] = psi[r] + dt * k3[r]
            _apply_h(c, k0 + 2, m, tmp, k4)
            ok = True
            for r in range(dim):
                psi[r] = psi[r] + sixth * (k1[r] + 2.0 * k2[r] + 2.0 * k3[r] + k4[r])
                if not _cfinite(psi[r]):
                    ok = False
            if not ok:
                with gil:
                    return states_arr, int(step)
            for r in range(dim):
                states[step + 1, r] = psi[r]
    return states_arr, int(n_steps)


cdef inline void _wn_rhs(double complex a, double complex b,
                         double complex h0, double complex hp, double complex hm,
                         double complex* da, double complex* db,
                         double complex* dc) nogil:
    da[0] = -1j * (hp + h0 * a + hm * a * a)
    db[0] = -1j * (h0 + 2.0 * hm * a)
    dc[0] = -1j * hm * cexp(b)


def wei_norman_rk4(h0, hp, hm, double dt):
    cdef const double complex[::1] H0 = np.ascontiguousarray(h0, dtype=complex)
    cdef const double complex[::1] HP = np.ascontiguousarray(hp, dtype=complex)
    cdef const double complex[::1] HM = np.ascontiguousarray(hm, dtype=complex)
    cdef Py_ssize_t n_steps = (H0.shape[0] - 1) // 2
    out_arr = np.full((n_steps + 1, 3), np.nan, dtype=complex)
    cdef double complex[:, ::1] out = out_arr
    cdef double complex a = 0, b = 0, cc = 0
    cdef double complex a1, b1, c1, a2, b2, c2, a3, b3, c3, a4, b4, c4
    cdef double half = 0.5 * dt
    cdef double sixth = dt / 6.0
    cdef Py_ssize_t step, k
    out[0, 0] = 0
    out[0, 1] = 0
    out[0, 2] = 0
    with nogil:
        for step in range(n_steps):
            k = 2 * step
            _wn_rhs(a, b, H0[k], HP[k], HM[k], &a1, &b1, &c1)
            _wn_rhs(a + half * a1, b + half * b1, H0[k + 1], HP[k + 1], HM[k + 1], &a2, &b2, &c2)
            _wn_rhs(a + half * a2, b + half * b2, H0[k + 1], HP[k + 1], HM[k + 1], &a3, &b3, &c3)
            _wn_rhs(a + dt * a3, b + dt * b3, H0[k + 2], HP[k + 2], HM[k + 2], &a4, &b4, &c4)
            a = a + sixth * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
            b = b + sixth * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
            cc = cc + sixth * (c1 + 2.0 * c2 + 2.0 * c3 + c4)
            if not (_cfinite(a) and _cfinite(b) and _cfinite(cc)):
                with gil:
                    return out_arr, int(step)
            out[step + 1, 0] = a
            out[step + 1, 1] = b
            out[step + 1, 2] = cc
    return out_arr, int(n_steps)


def su11_lift(coords, psi0, n_out=None):
    cdef const double complex[:, ::1] co = np.ascontiguousarray(coords, dtype=complex)
    cdef const double complex[::1] p0 = np.ascontiguousarray(psi0, dtype=complex)
    cdef Py_ssize_t n_t = co.shape[0]
    cdef Py_ssize_t dim = p0.shape[0]
    cdef Py_ssize_t rows = dim if n_out is None else int(n_out)
    if not 0 < rows <= dim:
        raise ValueError("n_out must lie in 1..len(psi0)")
    out_arr = np.zeros((n_t, rows), dtype=complex)
    cdef double complex[:, ::1] out = out_arr
    cdef double complex[::1] v = np.empty(rows, dtype=complex)
    cdef double complex a, b, c, w, acc, half_c, half_a
    cdef Py_ssize_t t, n, mm
    cdef double kn
    with nogil:
        for t in range(n_t):
            a = co[t, 0]
            b = co[t, 1]
            c = co[t, 2]
            half_c = 0.5 * c
            half_a = 0.5 * a
            # exp(c K-) psi0, then exp(b K0), on the retained rows
            for n in range(rows):
                acc = p0[n]
                w = 1.0
                mm = 1
                while n + 2 * mm < dim:
                    w = w * half_c / mm * sqrt(<double>((n + 2 * mm - 1) * (n + 2 * mm)))
                    acc = acc + w * p0[n + 2 * mm]
                    mm += 1
                kn = 0.5 * n + 0.25
                v[n] = cexp(b * kn) * acc
            # exp(a K+)
            for n in range(rows):
                acc = v[n]
                w = 1.0
                mm = 1
                while n - 2 * mm >= 0:
                    w = w * half_a / mm * sqrt(<double>((n - 2 * mm + 2) * (n - 2 * mm + 1)))
                    acc = acc + w * v[n - 2 * mm]
                    mm += 1
                out[t, n] = acc
    return out_arr
