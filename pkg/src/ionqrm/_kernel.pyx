# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled trajectory stepping kernel.

Mirrors ``_pykernel``: RK4 for i dpsi/dt = H(t) psi with H in qubit-block
form and the rotating displacement factored as diagonal phase scalings
around a single un-rotated tone-sum matrix.  See _pykernel for the layout
and conventions; the arithmetic here is the same, executed without the
interpreter in the loop (BLAS zgemv for the block matvecs).
"""

from libc.math cimport cos, sin, fmod

from scipy.linalg.cython_blas cimport zgemv

import numpy as np

ctypedef double complex cplx

cdef double TWO_PI = 6.283185307179586476925286766559
cdef int ONE = 1
cdef cplx C_ONE = 1.0
cdef cplx C_ZERO = 0.0
cdef char TRANS_T = b'T'
cdef char TRANS_N = b'N'

BACKEND_NAME = "compiled"


cdef inline void _fill_phase(cplx* p, int n, double nu, double t) noexcept nogil:
    # p[m] = exp(i nu t m); recurrence keeps the per-entry error at ~n ulp
    cdef double theta = fmod(nu * t, TWO_PI)
    cdef cplx e = cos(theta) + 1j * sin(theta)
    cdef int m
    p[0] = 1.0
    for m in range(1, n):
        p[m] = p[m - 1] * e


cdef inline void _tone_sum(cplx* msum, cplx* dbase, int kmats, int n2,
                           cplx* wk) noexcept nogil:
    cdef cplx* d0 = dbase
    cdef cplx* d1
    cdef cplx* d2
    cdef cplx w0 = wk[0]
    cdef cplx w1, w2
    cdef int i, kk
    if kmats == 1:
        for i in range(n2):
            msum[i] = w0 * d0[i]
    elif kmats == 2:
        d1 = dbase + n2
        w1 = wk[1]
        for i in range(n2):
            msum[i] = w0 * d0[i] + w1 * d1[i]
    elif kmats == 3:
        d1 = dbase + n2
        d2 = dbase + 2 * n2
        w1 = wk[1]
        w2 = wk[2]
        for i in range(n2):
            msum[i] = w0 * d0[i] + w1 * d1[i] + w2 * d2[i]
    else:
        for i in range(n2):
            msum[i] = w0 * d0[i]
        for kk in range(1, kmats):
            d1 = dbase + kk * n2
            w1 = wk[kk]
            for i in range(n2):
                msum[i] = msum[i] + w1 * d1[i]


cdef inline void _weights(cplx* wk, int kmats, double* om_half, double* delta,
                          double* phi, int* group, signed char* carrier,
                          int ntones, double t, double beta_k) noexcept nogil:
    cdef int j
    cdef double s, amp
    for j in range(kmats):
        wk[j] = 0.0
    for j in range(ntones):
        s = delta[j] * t + phi[j]
        amp = om_half[j]
        if carrier[j]:
            amp = amp * (1.0 + beta_k)
        wk[group[j]] = wk[group[j]] + amp * (cos(s) - 1j * sin(s))


cdef inline void _deriv_tones(cplx* out, cplx* v, cplx* m, cplx* p,
                              double xi_k, int n, cplx* t1, cplx* t2) noexcept nogil:
    cdef int i
    cdef double hx = 0.5 * xi_k
    # excited block: -i (p o (M (conj(p) o vg)) + (xi/2) ve)
    for i in range(n):
        t1[i] = p[i].conjugate() * v[i]
    zgemv(&TRANS_T, &n, &n, &C_ONE, m, &n, t1, &ONE, &C_ZERO, t2, &ONE)
    for i in range(n):
        out[n + i] = -1j * (p[i] * t2[i] + hx * v[n + i])
    # ground block: M^dag u = conj(M^T conj(u)), u = conj(p) o ve
    for i in range(n):
        t1[i] = p[i] * v[n + i].conjugate()
    zgemv(&TRANS_N, &n, &n, &C_ONE, m, &n, t1, &ONE, &C_ZERO, t2, &ONE)
    for i in range(n):
        out[i] = -1j * (p[i] * t2[i].conjugate() - hx * v[i])


cdef inline void _deriv_const(cplx* out, cplx* v, cplx* b, double* dg,
                              double* de, double xi_k, int n,
                              cplx* t1, cplx* t2) noexcept nogil:
    cdef int i
    cdef double hx = 0.5 * xi_k
    zgemv(&TRANS_T, &n, &n, &C_ONE, b, &n, v, &ONE, &C_ZERO, t2, &ONE)
    for i in range(n):
        out[n + i] = -1j * (t2[i] + (de[i] + hx) * v[n + i])
    for i in range(n):
        t1[i] = v[n + i].conjugate()
    zgemv(&TRANS_N, &n, &n, &C_ONE, b, &n, t1, &ONE, &C_ZERO, t2, &ONE)
    for i in range(n):
        out[i] = -1j * (t2[i].conjugate() + (dg[i] - hx) * v[i])


def advance_tones(cplx[::1] psi, double t0, double h, int nsteps,
                  double nu, cplx[:, :, ::1] dmats,
                  double[::1] om_half, double[::1] delta, double[::1] phi,
                  int[::1] group, signed char[::1] carrier,
                  double[::1] xi, double[::1] beta):
    """Advance psi in place by nsteps RK4 steps under the tone Hamiltonian."""
    cdef int kmats = dmats.shape[0]
    cdef int n = dmats.shape[1]
    cdef int n2 = n * n
    cdef int ntwo = 2 * n
    if kmats > 8:
        raise ValueError("at most 8 distinct drive matrices supported")

    scratch = np.empty((4, ntwo), dtype=np.complex128)
    ybuf = np.empty(ntwo, dtype=np.complex128)
    mbuf = np.empty(n2, dtype=np.complex128)
    pbuf = np.empty(n, dtype=np.complex128)
    tbuf = np.empty((2, n), dtype=np.complex128)

    cdef cplx[:, ::1] kv = scratch
    cdef cplx[::1] yv = ybuf
    cdef cplx[::1] mv = mbuf
    cdef cplx[::1] pv = pbuf
    cdef cplx[:, ::1] tv = tbuf

    cdef cplx* k1 = &kv[0, 0]
    cdef cplx* k2 = &kv[1, 0]
    cdef cplx* k3 = &kv[2, 0]
    cdef cplx* k4 = &kv[3, 0]
    cdef cplx* y = &yv[0]
    cdef cplx* m = &mv[0]
    cdef cplx* p = &pv[0]
    cdef cplx* t1 = &tv[0, 0]
    cdef cplx* t2 = &tv[1, 0]
    cdef cplx* ps = &psi[0]
    cdef cplx* db = &dmats[0, 0, 0]
    cdef double* omh = &om_half[0]
    cdef double* dl = &delta[0]
    cdef double* ph = &phi[0]
    cdef int* gr = &group[0]
    cdef signed char* ca = &carrier[0]
    cdef int ntones = om_half.shape[0]

    cdef cplx wk[8]
    cdef int k, i
    cdef double t, tm, te, xi_k, beta_k
    cdef double h2 = 0.5 * h
    cdef double h6 = h / 6.0

    with nogil:
        for k in range(nsteps):
            t = t0 + k * h
            xi_k = xi[k]
            beta_k = beta[k]

            _weights(wk, kmats, omh, dl, ph, gr, ca, ntones, t, beta_k)
            _tone_sum(m, db, kmats, n2, wk)
            _fill_phase(p, n, nu, t)
            _deriv_tones(k1, ps, m, p, xi_k, n, t1, t2)

            tm = t + h2
            _weights(wk, kmats, omh, dl, ph, gr, ca, ntones, tm, beta_k)
            _tone_sum(m, db, kmats, n2, wk)
            _fill_phase(p, n, nu, tm)
            for i in range(ntwo):
                y[i] = ps[i] + h2 * k1[i]
            _deriv_tones(k2, y, m, p, xi_k, n, t1, t2)
            for i in range(ntwo):
                y[i] = ps[i] + h2 * k2[i]
            _deriv_tones(k3, y, m, p, xi_k, n, t1, t2)

            te = t + h
            _weights(wk, kmats, omh, dl, ph, gr, ca, ntones, te, beta_k)
            _tone_sum(m, db, kmats, n2, wk)
            _fill_phase(p, n, nu, te)
            for i in range(ntwo):
                y[i] = ps[i] + h * k3[i]
            _deriv_tones(k4, y, m, p, xi_k, n, t1, t2)

            for i in range(ntwo):
                ps[i] = ps[i] + h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


def advance_constant(cplx[::1] psi, double h, int nsteps,
                     double[::1] dg, double[::1] de, cplx[:, ::1] bmat,
                     double[::1] xi):
    """Advance psi in place under a time-independent block Hamiltonian."""
    cdef int n = dg.shape[0]
    cdef int ntwo = 2 * n

    scratch = np.empty((4, ntwo), dtype=np.complex128)
    ybuf = np.empty(ntwo, dtype=np.complex128)
    tbuf = np.empty((2, n), dtype=np.complex128)

    cdef cplx[:, ::1] kv = scratch
    cdef cplx[::1] yv = ybuf
    cdef cplx[:, ::1] tv = tbuf

    cdef cplx* k1 = &kv[0, 0]
    cdef cplx* k2 = &kv[1, 0]
    cdef cplx* k3 = &kv[2, 0]
    cdef cplx* k4 = &kv[3, 0]
    cdef cplx* y = &yv[0]
    cdef cplx* t1 = &tv[0, 0]
    cdef cplx* t2 = &tv[1, 0]
    cdef cplx* ps = &psi[0]
    cdef cplx* b = &bmat[0, 0]
    cdef double* dgp = &dg[0]
    cdef double* dep = &de[0]

    cdef int k, i
    cdef double xi_k
    cdef double h2 = 0.5 * h
    cdef double h6 = h / 6.0

    with nogil:
        for k in range(nsteps):
            xi_k = xi[k]
            _deriv_const(k1, ps, b, dgp, dep, xi_k, n, t1, t2)
            for i in range(ntwo):
                y[i] = ps[i] + h2 * k1[i]
            _deriv_const(k2, y, b, dgp, dep, xi_k, n, t1, t2)
            for i in range(ntwo):
                y[i] = ps[i] + h2 * k2[i]
            _deriv_const(k3, y, b, dgp, dep, xi_k, n, t1, t2)
            for i in range(ntwo):
                y[i] = ps[i] + h * k3[i]
            _deriv_const(k4, y, b, dgp, dep, xi_k, n, t1, t2)
            for i in range(ntwo):
                ps[i] = ps[i] + h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
