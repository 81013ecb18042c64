# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled assembly kernel for the shipped flux laws.

Mirrors kernels.pyref.group_system for the law codes 0 (power law, with
optional gradient regularization) and 1 (implicit shear-thinning viscosity).
The caller guarantees eps > 0 for the Jacobian whenever p < 2.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, pow, sqrt

cnp.import_array()


cdef inline double _visc(double s, double gamma, double c) noexcept nogil:
    # root of 1/F = (s F)^gamma + c, bracketed by (0, 1/c]
    cdef double lo = 0.0, hi = 1.0 / c, f = 0.5 / c
    cdef double r, dr, step
    cdef int it
    for it in range(200):
        r = 1.0 / f - pow(s * f, gamma) - c
        if r < 0.0:
            hi = f
        elif r > 0.0:
            lo = f
        else:
            return f
        dr = -1.0 / (f * f)
        if s > 0.0:
            dr -= gamma * s * pow(s * f, gamma - 1.0)
        step = f - r / dr
        if step <= lo or step >= hi:
            step = 0.5 * (lo + hi)
        if fabs(step - f) <= 1e-16 * f:
            return step
        f = step
    return f


cdef inline double _visc_prime(double f, double s, double gamma) noexcept nogil:
    cdef double sf
    if s <= 0.0:
        return 0.0
    sf = pow(s * f, gamma - 1.0)
    return -gamma * f * sf / (1.0 / (f * f) + gamma * s * sf)


cdef inline void _flux(int code, double p, double eps, double alpha, double t0,
                       double g0, double g1, double* a0, double* a1) noexcept nogil:
    cdef double m2 = g0 * g0 + g1 * g1 + eps * eps
    cdef double m, coef, gamma
    if code == 0:
        if m2 == 0.0:
            a0[0] = 0.0
            a1[0] = 0.0
            return
        coef = pow(m2, 0.5 * (p - 2.0))
    else:
        m = sqrt(m2)
        gamma = alpha / (1.0 - alpha)
        coef = _visc(m, gamma, pow(t0, gamma))
    a0[0] = coef * g0
    a1[0] = coef * g1


cdef inline void _flux_jac(int code, double p, double eps, double alpha, double t0,
                           double g0, double g1, double* d) noexcept nogil:
    cdef double m2 = g0 * g0 + g1 * g1 + eps * eps
    cdef double m, f, fp, c0, c1, gamma
    if code == 0:
        if m2 == 0.0:
            # continuous extension: zero for p > 2, identity at p = 2
            c0 = 1.0 if p == 2.0 else 0.0
            d[0] = c0; d[1] = 0.0; d[2] = 0.0; d[3] = c0
            return
        c0 = pow(m2, 0.5 * (p - 2.0))
        c1 = (p - 2.0) * pow(m2, 0.5 * (p - 4.0))
    else:
        m = sqrt(m2)
        gamma = alpha / (1.0 - alpha)
        f = _visc(m, gamma, pow(t0, gamma))
        fp = _visc_prime(f, m, gamma)
        c0 = f
        c1 = fp / m if m > 0.0 else 0.0
    d[0] = c0 + c1 * g0 * g0
    d[1] = c1 * g0 * g1
    d[2] = d[1]
    d[3] = c0 + c1 * g1 * g1


cdef inline double _sigma(double t, double p, double eps) noexcept nogil:
    if eps > 0.0:
        return pow(t * t + eps * eps, 0.5 * (p - 2.0)) * t
    if t == 0.0:
        return 0.0
    return pow(fabs(t), p - 2.0) * t


cdef inline double _sigma_prime(double t, double p, double eps) noexcept nogil:
    cdef double w
    if eps > 0.0:
        w = t * t + eps * eps
        return pow(w, 0.5 * (p - 4.0)) * (eps * eps + (p - 1.0) * t * t)
    if p == 2.0:
        return 1.0
    if t == 0.0:
        return 0.0  # continuous extension (p > 2); p < 2 requires eps > 0
    return (p - 1.0) * pow(fabs(t), p - 2.0)


def group_system(double[:, ::1] U,
                 double[:, :, ::1] E,
                 double[::1] w,
                 double[:, ::1] S,
                 double[::1] wf,
                 long[::1] face_ptr,
                 double[::1] face_scale,
                 int code, double p,
                 double eps_res, double eps_jac,
                 double alpha, double t0,
                 bint want_jac):
    cdef Py_ssize_t m = U.shape[0]
    cdef Py_ssize_t nloc = U.shape[1]
    cdef Py_ssize_t nq = E.shape[0]
    cdef Py_ssize_t nfaces = face_ptr.shape[0] - 1

    R_arr = np.zeros((m, nloc))
    J_arr = np.zeros((m, nloc, nloc)) if want_jac else np.zeros((0, 0, 0))
    cdef double[:, ::1] R = R_arr
    cdef double[:, :, ::1] J = J_arr

    cdef Py_ssize_t i, q, j, jj, c, f, qlo, qhi
    cdef double g0, g1, a0, a1, wq, d, sg, sc, ww
    cdef double jac[4]
    cdef double[::1] h0 = np.empty(nloc)
    cdef double[::1] h1 = np.empty(nloc)

    with nogil:
        for i in range(m):
            for q in range(nq):
                g0 = 0.0
                g1 = 0.0
                for j in range(nloc):
                    g0 += E[q, 0, j] * U[i, j]
                    g1 += E[q, 1, j] * U[i, j]
                wq = w[q]
                _flux(code, p, eps_res, alpha, t0, g0, g1, &a0, &a1)
                for j in range(nloc):
                    R[i, j] += wq * (a0 * E[q, 0, j] + a1 * E[q, 1, j])
                if want_jac:
                    _flux_jac(code, p, eps_jac, alpha, t0, g0, g1, jac)
                    for j in range(nloc):
                        h0[j] = jac[0] * E[q, 0, j] + jac[1] * E[q, 1, j]
                        h1[j] = jac[2] * E[q, 0, j] + jac[3] * E[q, 1, j]
                    for j in range(nloc):
                        ww = wq * E[q, 0, j]
                        for jj in range(nloc):
                            J[i, j, jj] += ww * h0[jj]
                        ww = wq * E[q, 1, j]
                        for jj in range(nloc):
                            J[i, j, jj] += ww * h1[jj]
            for f in range(nfaces):
                qlo = face_ptr[f]
                qhi = face_ptr[f + 1]
                sc = face_scale[f]
                for q in range(qlo, qhi):
                    d = 0.0
                    for j in range(nloc):
                        d += S[q, j] * U[i, j]
                    ww = sc * wf[q]
                    sg = ww * _sigma(d, p, eps_res)
                    for j in range(nloc):
                        R[i, j] += sg * S[q, j]
                    if want_jac:
                        sg = ww * _sigma_prime(d, p, eps_jac)
                        for j in range(nloc):
                            if S[q, j] != 0.0:
                                for jj in range(nloc):
                                    J[i, j, jj] += sg * S[q, j] * S[q, jj]
    return R_arr, (J_arr if want_jac else None)
