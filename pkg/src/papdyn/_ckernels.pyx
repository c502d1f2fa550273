# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled stepping kernels; see ``_kernels_py`` for the reference semantics."""
from libc.math cimport sin, tanh, floor, isfinite

import numpy as np

cdef double SNAP = 1e-9


cdef inline double _act(long code, double param, double x, const double[:] tab_x,
                        const double[:] tab_y, long start, long length) nogil:
    cdef long lo, hi, mid
    cdef double w
    if code == 0:
        return sin(x)
    if code == 1:
        return tanh(x)
    if code == 2:
        if x > param:
            return param
        if x < -param:
            return -param
        return x
    lo = start
    hi = start + length - 1
    if x <= tab_x[lo]:
        return tab_y[lo]
    if x >= tab_x[hi]:
        return tab_y[hi]
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tab_x[mid] <= x:
            lo = mid
        else:
            hi = mid
    w = (x - tab_x[lo]) / (tab_x[hi] - tab_x[lo])
    return tab_y[lo] + w * (tab_y[hi] - tab_y[lo])


cdef void _delayed(long m, double h, const double[:] D, const double[:, :, :] hist,
                   double[:, :] vals, double[:, :] ders, double[:, :] out) nogil:
    cdef long nq = D.shape[0]
    cdef long n = vals.shape[1]
    cdef long q, i, j
    cdef double u, s, th, th2, th3, h00, h10, h01, h11
    for q in range(nq):
        u = m * 0.5 * h - D[q]
        if u <= SNAP * h:
            for i in range(n):
                out[q, i] = hist[q, m, i]
            continue
        s = u / h
        j = <long> floor(s)
        th = s - j
        if th > 1.0 - SNAP:
            j += 1
            th = 0.0
        if th < SNAP:
            for i in range(n):
                out[q, i] = vals[j, i]
            continue
        th2 = th * th
        th3 = th2 * th
        h00 = 2 * th3 - 3 * th2 + 1
        h10 = th3 - 2 * th2 + th
        h01 = -2 * th3 + 3 * th2
        h11 = th3 - th2
        for i in range(n):
            out[q, i] = (h00 * vals[j, i] + h10 * h * ders[j, i]
                         + h01 * vals[j + 1, i] + h11 * h * ders[j + 1, i])


cdef void _f(long m, double[:] x, double[:, :] xd, const double[:, :] c, const double[:, :] I,
             const double[:, :, :] d, const double[:, :, :] a, const double[:, :, :, :] b,
             const long[:, :] code, const double[:, :] par, const double[:] tx,
             const double[:] ty, const long[:, :] tstart, const long[:, :] tlen,
             const long[:, :] ti, const long[:, :] si, const long[:, :] ni,
             double[:] fx, double[:] res) nogil:
    cdef long n = x.shape[0]
    cdef long i, j, l
    cdef double acc, bv
    for j in range(n):
        fx[j] = _act(code[0, j], par[0, j], x[j], tx, ty, tstart[0, j], tlen[0, j])
    for i in range(n):
        acc = -c[i, m] * x[i] + I[i, m]
        for j in range(n):
            acc += d[i, j, m] * fx[j]
            acc += a[i, j, m] * _act(code[1, j], par[1, j], xd[ti[i, j], j], tx, ty,
                                     tstart[1, j], tlen[1, j])
            for l in range(n):
                bv = b[i, j, l, m]
                if bv != 0.0:
                    acc += bv * _act(code[2, j], par[2, j], xd[si[i, j], j], tx, ty,
                                     tstart[2, j], tlen[2, j]) \
                              * _act(code[2, l], par[2, l], xd[ni[i, j], l], tx, ty,
                                     tstart[2, l], tlen[2, l])
        res[i] = acc


def rk4_dde(double h, x0, c, I, d, a, b, act_code, act_param, tab_x, tab_y, tab_start,
            tab_len, delays, tau_idx, sigma_idx, nu_idx, hist, double[:, :] values,
            double[:, :] derivs):
    cdef const double[:, :] cv = np.ascontiguousarray(c, dtype=np.float64)
    cdef const double[:, :] Iv = np.ascontiguousarray(I, dtype=np.float64)
    cdef const double[:, :, :] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef const double[:, :, :] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[:, :, :, :] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef const long[:, :] code = np.ascontiguousarray(act_code, dtype=np.int_)
    cdef const double[:, :] par = np.ascontiguousarray(act_param, dtype=np.float64)
    cdef const double[:] tx = np.ascontiguousarray(tab_x, dtype=np.float64)
    cdef const double[:] ty = np.ascontiguousarray(tab_y, dtype=np.float64)
    cdef const long[:, :] tst = np.ascontiguousarray(tab_start, dtype=np.int_)
    cdef const long[:, :] tln = np.ascontiguousarray(tab_len, dtype=np.int_)
    cdef const double[:] D = np.ascontiguousarray(delays, dtype=np.float64)
    cdef const long[:, :] ti = np.ascontiguousarray(tau_idx, dtype=np.int_)
    cdef const long[:, :] si = np.ascontiguousarray(sigma_idx, dtype=np.int_)
    cdef const long[:, :] ni = np.ascontiguousarray(nu_idx, dtype=np.int_)
    cdef const double[:, :, :] hv = np.ascontiguousarray(hist, dtype=np.float64)
    cdef long n = values.shape[1]
    cdef long nsteps = values.shape[0] - 1
    cdef long nq = D.shape[0]
    cdef double[:, :] xd0 = np.zeros((nq, n))
    cdef double[:, :] xdm = np.zeros((nq, n))
    cdef double[:] k1 = np.zeros(n)
    cdef double[:] k2 = np.zeros(n)
    cdef double[:] k3 = np.zeros(n)
    cdef double[:] k4 = np.zeros(n)
    cdef double[:] tmp = np.zeros(n)
    cdef double[:] fx = np.zeros(n)
    cdef long k, i
    cdef long bad = -1
    cdef double xn
    for i in range(n):
        values[0, i] = x0[i]
    with nogil:
        _delayed(0, h, D, hv, values, derivs, xd0)
        for k in range(nsteps):
            _f(2 * k, values[k], xd0, cv, Iv, dv, av, bv, code, par, tx, ty, tst, tln,
               ti, si, ni, fx, k1)
            for i in range(n):
                derivs[k, i] = k1[i]
            _delayed(2 * k + 1, h, D, hv, values, derivs, xdm)
            for i in range(n):
                tmp[i] = values[k, i] + 0.5 * h * k1[i]
            _f(2 * k + 1, tmp, xdm, cv, Iv, dv, av, bv, code, par, tx, ty, tst, tln,
               ti, si, ni, fx, k2)
            for i in range(n):
                tmp[i] = values[k, i] + 0.5 * h * k2[i]
            _f(2 * k + 1, tmp, xdm, cv, Iv, dv, av, bv, code, par, tx, ty, tst, tln,
               ti, si, ni, fx, k3)
            _delayed(2 * k + 2, h, D, hv, values, derivs, xd0)
            for i in range(n):
                tmp[i] = values[k, i] + h * k3[i]
            _f(2 * k + 2, tmp, xd0, cv, Iv, dv, av, bv, code, par, tx, ty, tst, tln,
               ti, si, ni, fx, k4)
            for i in range(n):
                xn = values[k, i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                values[k + 1, i] = xn
                if not isfinite(xn):
                    bad = k + 1
            if bad >= 0:
                break
        if bad < 0:
            _f(2 * nsteps, values[nsteps], xd0, cv, Iv, dv, av, bv, code, par, tx, ty, tst,
               tln, ti, si, ni, fx, k1)
            for i in range(n):
                derivs[nsteps, i] = k1[i]
    return bad


def expo_recursion(const double[:, :] E, const double[:, :] P, double[:, :] y):
    cdef long n = E.shape[0]
    cdef long nsteps = E.shape[1]
    cdef long i, k
    cdef double acc
    with nogil:
        for i in range(n):
            acc = y[i, 0]
            for k in range(nsteps):
                acc = E[i, k] * acc + P[i, k]
                y[i, k + 1] = acc
