# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: ordered-exponential coefficient integrator and the
Fock-basis Wigner sum. Mirrors ``optolie._pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, cos, sin, exp, fabs, pow, M_PI

from optolie.errors import IntegrationError

cnp.import_array()

cdef extern from "complex.h" nogil:
    double complex cexp(double complex)
    double cabs(double complex)
    double creal(double complex)
    double complex conj(double complex)


cdef struct Model:
    double omega_m
    double n
    double c[6]
    double s[6]
    double complex d[6]
    double Omega
    double wcp
    double wd


cdef inline double complex _alpha1(double t, Model* m) noexcept nogil:
    cdef double pref
    if m.Omega == 0.0:
        return 0.0
    pref = m.Omega / (m.wcp * m.wcp - m.wd * m.wd)
    return pref * (m.wcp + cexp(1j * m.wcp * t)
                   * (-m.wcp * cos(m.wd * t) + 1j * m.wd * sin(m.wd * t)))


cdef inline void _rhs(double t, double complex* y, double complex* out, Model* m) noexcept nogil:
    cdef double complex h[6]
    cdef double nu = m.n
    cdef double complex a1 = y[0], a2 = y[1], a3 = y[2]
    cdef double complex mi = -1j
    cdef int j
    cdef double complex al
    if m.Omega != 0.0:
        al = _alpha1(t, m)
        nu = m.n + creal(al * conj(al))
    for j in range(6):
        h[j] = m.omega_m * nu * m.c[j] * cexp(1j * m.s[j] * m.omega_m * t) + m.d[j]
    out[0] = mi * (h[0] + 2.0 * a1 * h[2] + 4.0 * a1 * a1 * h[4])
    out[1] = mi * (h[1] + a2 * h[2] + 2.0 * a1 * h[3] + 4.0 * a1 * a2 * h[4])
    out[2] = mi * (h[2] + 4.0 * a1 * h[4])
    out[3] = mi * cexp(a3) * (h[3] + 2.0 * a2 * h[4])
    out[4] = mi * cexp(2.0 * a3) * h[4]
    out[5] = mi * (h[5] + a2 * h[3] + (a2 * a2 + 2.0 * a1) * h[4])


# Dormand-Prince 5(4)
cdef double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784, B6 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40


cdef int _integrate(Model* m, const double* tg, Py_ssize_t nt, double rtol, double atol,
                    double complex* out, double* t_fail) noexcept nogil:
    cdef double complex y[6]
    cdef double complex yn[6]
    cdef double complex k1[6]
    cdef double complex k2[6]
    cdef double complex k3[6]
    cdef double complex k4[6]
    cdef double complex k5[6]
    cdef double complex k6[6]
    cdef double complex k7[6]
    cdef double complex tmp[6]
    cdef double t = tg[0], h = 1e-6, hs, err, sc, e, fac, tend
    cdef Py_ssize_t i, j
    cdef int nsteps = 0
    cdef bint clipped
    for j in range(6):
        y[j] = 0.0
        out[j] = 0.0
    _rhs(t, y, k1, m)
    for i in range(1, nt):
        tend = tg[i]
        while t < tend:
            hs = h
            clipped = False
            if t + hs > tend:
                hs = tend - t
                clipped = True
            if hs < 1e-14 * (1.0 + fabs(t)):
                t_fail[0] = t
                return -1
            for j in range(6):
                tmp[j] = y[j] + hs * A21 * k1[j]
            _rhs(t + C2 * hs, tmp, k2, m)
            for j in range(6):
                tmp[j] = y[j] + hs * (A31 * k1[j] + A32 * k2[j])
            _rhs(t + C3 * hs, tmp, k3, m)
            for j in range(6):
                tmp[j] = y[j] + hs * (A41 * k1[j] + A42 * k2[j] + A43 * k3[j])
            _rhs(t + C4 * hs, tmp, k4, m)
            for j in range(6):
                tmp[j] = y[j] + hs * (A51 * k1[j] + A52 * k2[j] + A53 * k3[j] + A54 * k4[j])
            _rhs(t + C5 * hs, tmp, k5, m)
            for j in range(6):
                tmp[j] = y[j] + hs * (A61 * k1[j] + A62 * k2[j] + A63 * k3[j]
                                      + A64 * k4[j] + A65 * k5[j])
            _rhs(t + hs, tmp, k6, m)
            for j in range(6):
                yn[j] = y[j] + hs * (B1 * k1[j] + B3 * k3[j] + B4 * k4[j]
                                     + B5 * k5[j] + B6 * k6[j])
            _rhs(t + hs, yn, k7, m)
            err = 0.0
            for j in range(6):
                sc = atol + rtol * max(cabs(y[j]), cabs(yn[j]))
                e = cabs(hs * (E1 * k1[j] + E3 * k3[j] + E4 * k4[j] + E5 * k5[j]
                               + E6 * k6[j] + E7 * k7[j])) / sc
                err += e * e
            err = sqrt(err / 6.0)
            if err <= 1.0:
                t = t + hs
                if t > tend - 1e-15 * (1.0 + fabs(tend)):
                    t = tend
                for j in range(6):
                    y[j] = yn[j]
                    k1[j] = k7[j]
                if err == 0.0:
                    fac = 5.0
                else:
                    fac = min(5.0, max(0.2, 0.9 * pow(err, -0.2)))
                # a step clipped to the grid must not shrink the proposal
                if clipped:
                    h = max(h, hs * fac)
                else:
                    h = hs * fac
            else:
                fac = max(0.2, 0.9 * pow(err, -0.2))
                h = hs * fac
            nsteps += 1
            if nsteps > 50000000:
                t_fail[0] = t
                return -2
        for j in range(6):
            out[6 * i + j] = y[j]
    return 0


def integrate_wn(t_grid, double omega_m, double n, c, s, d, double Omega,
                 double wcp, double wd, double rtol, double atol):
    cdef Model m
    cdef int j, status
    cdef double t_fail = 0.0
    tg = np.ascontiguousarray(t_grid, dtype=np.float64)
    cdef const double[::1] tgv = tg
    cdef Py_ssize_t nt = tg.shape[0]
    out = np.zeros((nt, 6), dtype=np.complex128)
    cdef double complex[:, ::1] ov = out
    m.omega_m = omega_m
    m.n = n
    m.Omega = Omega
    m.wcp = wcp
    m.wd = wd
    for j in range(6):
        m.c[j] = float(c[j])
        m.s[j] = float(s[j])
        m.d[j] = complex(d[j])
    if nt < 2:
        return out
    with nogil:
        status = _integrate(&m, &tgv[0], nt, rtol, atol, &ov[0, 0], &t_fail)
    if status != 0:
        raise IntegrationError(
            f"coefficient integration failed at t={t_fail:.6g} "
            f"({'step underflow' if status == -1 else 'step budget exhausted'})",
            t_fail=t_fail)
    return out


def wigner_kernel(rho, xvec, pvec):
    """W[i, j] at (x=xvec[j], p=pvec[i]); upward Laguerre recurrence.

    One grid row at a time: the recurrence runs over (m, k) with the x
    points innermost, so the inner loop is a contiguous, vectorizable sweep.
    Complex arithmetic is spelled out on (re, im) pairs.
    """
    a = np.ascontiguousarray(rho, dtype=np.complex128)
    cdef const double[:, ::1] rr = np.ascontiguousarray(a.real)
    cdef const double[:, ::1] ri = np.ascontiguousarray(a.imag)
    cdef const double[::1] xv = np.ascontiguousarray(xvec, dtype=np.float64)
    cdef const double[::1] pv = np.ascontiguousarray(pvec, dtype=np.float64)
    cdef Py_ssize_t M = rr.shape[0], nx = xv.shape[0], npp = pv.shape[0]
    W = np.empty((npp, nx), dtype=np.float64)
    cdef double[:, ::1] Wv = W
    cdef double[:, ::1] wr = np.empty((M, nx), dtype=np.float64)
    cdef double[:, ::1] wi = np.empty((M, nx), dtype=np.float64)
    cdef double[::1] tr = np.empty(nx, dtype=np.float64)
    cdef double[::1] ti = np.empty(nx, dtype=np.float64)
    cdef double[::1] ar = np.empty(nx, dtype=np.float64)
    cdef double[::1] acc = np.empty(nx, dtype=np.float64)
    cdef Py_ssize_t i, j, m, k
    cdef double ai, sm, isk, isq_m, c0, c1, t2r, t2i, s2 = sqrt(2.0)
    with nogil:
        for j in range(nx):
            ar[j] = s2 * xv[j]
        for i in range(npp):
            ai = s2 * pv[i]
            for j in range(nx):
                wr[0, j] = exp(-0.5 * (ar[j] * ar[j] + ai * ai))
                wi[0, j] = 0.0
                acc[j] = rr[0, 0] * wr[0, j]
            for k in range(1, M):
                # w_k = A w_{k-1} / sqrt(k)
                isk = 1.0 / sqrt(<double>k)
                c0 = 2.0 * rr[0, k]
                c1 = 2.0 * ri[0, k]
                for j in range(nx):
                    wr[k, j] = (ar[j] * wr[k - 1, j] - ai * wi[k - 1, j]) * isk
                    wi[k, j] = (ar[j] * wi[k - 1, j] + ai * wr[k - 1, j]) * isk
                    acc[j] += c0 * wr[k, j] - c1 * wi[k, j]
            for m in range(1, M):
                sm = sqrt(<double>m)
                isq_m = 1.0 / sm
                c0 = rr[m, m]
                c1 = ri[m, m]
                for j in range(nx):
                    tr[j] = wr[m, j]
                    ti[j] = wi[m, j]
                    # w_m = (conj(A) w_m - sqrt(m) w_{m-1}) / sqrt(m)
                    wr[m, j] = (ar[j] * tr[j] + ai * ti[j] - sm * wr[m - 1, j]) * isq_m
                    wi[m, j] = (ar[j] * ti[j] - ai * tr[j] - sm * wi[m - 1, j]) * isq_m
                    acc[j] += c0 * wr[m, j] - c1 * wi[m, j]
                for k in range(m + 1, M):
                    isk = 1.0 / sqrt(<double>k)
                    c0 = 2.0 * rr[m, k]
                    c1 = 2.0 * ri[m, k]
                    for j in range(nx):
                        t2r = (ar[j] * wr[k - 1, j] - ai * wi[k - 1, j] - sm * tr[j]) * isk
                        t2i = (ar[j] * wi[k - 1, j] + ai * wr[k - 1, j] - sm * ti[j]) * isk
                        tr[j] = wr[k, j]
                        ti[j] = wi[k, j]
                        wr[k, j] = t2r
                        wi[k, j] = t2i
                        acc[j] += c0 * t2r - c1 * t2i
            for j in range(nx):
                Wv[i, j] = acc[j] / M_PI
    return W
