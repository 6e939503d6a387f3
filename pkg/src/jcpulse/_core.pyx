# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the per-block sequence-optimization loops.

Mirrors jcpulse._kernels_py exactly; see that module for the conventions.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, cos, hypot, sin, sqrt

cnp.import_array()

IS_COMPILED = True

ctypedef double complex cplx


cdef inline void mat2_mul(cplx* a, cplx* b, cplx* out) nogil:
    # out = a @ b for row-major 2x2
    out[0] = a[0] * b[0] + a[1] * b[2]
    out[1] = a[0] * b[1] + a[1] * b[3]
    out[2] = a[2] * b[0] + a[3] * b[2]
    out[3] = a[2] * b[1] + a[3] * b[3]


cdef inline cplx wtrace(cplx* t, cplx* b, int w) nogil:
    if w == 1:
        return (t[0].conjugate() * b[0] + t[1].conjugate() * b[1]
                + t[2].conjugate() * b[2] + t[3].conjugate() * b[3])
    elif w == 2:
        return t[0].conjugate() * b[0]
    return t[3].conjugate() * b[3]


def sideband_block_pulses(g, delta, beta, duration, int n_blocks):
    """Per-pulse block rotations, shape (M, n_blocks+1, 2, 2)."""
    cdef cnp.ndarray[double, ndim=1] g_ = np.ascontiguousarray(g, dtype=float)
    cdef int m = g_.shape[0]
    cdef cnp.ndarray[double, ndim=1] d_ = np.ascontiguousarray(
        np.broadcast_to(np.asarray(delta, dtype=float), (m,)))
    cdef cnp.ndarray[double, ndim=1] b_ = np.ascontiguousarray(
        np.broadcast_to(np.asarray(beta, dtype=float), (m,)))
    cdef cnp.ndarray[double, ndim=1] t_ = np.ascontiguousarray(
        np.broadcast_to(np.asarray(duration, dtype=float), (m,)))
    out_arr = np.empty((m, n_blocks + 1, 2, 2), dtype=complex)
    cdef cplx[:, :, :, :] out = out_arr
    cdef int k, n
    cdef double gn, w, th, ax, ay, az, c, s, ph
    for k in range(m):
        for n in range(n_blocks + 1):
            gn = g_[k] * sqrt(n)
            w = hypot(d_[k], gn)
            th = t_[k] * w
            if w > 0:
                ax = gn * cos(b_[k]) / w
                ay = gn * sin(b_[k]) / w
                az = -d_[k] / w
            else:
                ax = ay = az = 0.0
            c = cos(th / 2.0)
            s = sin(th / 2.0)
            out[k, n, 0, 0] = c - 1j * s * az
            out[k, n, 0, 1] = -1j * s * (ax - 1j * ay)
            out[k, n, 1, 0] = -1j * s * (ax + 1j * ay)
            out[k, n, 1, 1] = c + 1j * s * az
        ph = d_[k] * t_[k] / 2.0
        out[k, 0, 0, 0] = cos(ph) + 1j * sin(ph)
        out[k, 0, 0, 1] = 0.0
        out[k, 0, 1, 0] = 0.0
        out[k, 0, 1, 1] = cos(ph) - 1j * sin(ph)
    return out_arr


def block_chain(pulse_blocks):
    """Ordered product over the pulse axis: B_n = U_{M-1,n} ... U_{0,n}."""
    pb_arr = np.ascontiguousarray(pulse_blocks, dtype=complex)
    cdef cplx[:, :, :, :] pb = pb_arr
    cdef int m = pb.shape[0]
    cdef int nb = pb.shape[1]
    out_arr = np.empty((nb, 2, 2), dtype=complex)
    cdef cplx[:, :, :] out = out_arr
    cdef cplx acc[4]
    cdef cplx tmp[4]
    cdef cplx u[4]
    cdef int k, n
    for n in range(nb):
        acc[0] = 1.0; acc[1] = 0.0; acc[2] = 0.0; acc[3] = 1.0
        for k in range(m):
            u[0] = pb[k, n, 0, 0]; u[1] = pb[k, n, 0, 1]
            u[2] = pb[k, n, 1, 0]; u[3] = pb[k, n, 1, 1]
            mat2_mul(u, acc, tmp)
            acc[0] = tmp[0]; acc[1] = tmp[1]; acc[2] = tmp[2]; acc[3] = tmp[3]
        out[n, 0, 0] = acc[0]; out[n, 0, 1] = acc[1]
        out[n, 1, 0] = acc[2]; out[n, 1, 1] = acc[3]
    return out_arr


cdef _envs(cplx[:, :, :, :] pb, cplx[:, :, :, :] prefix, cplx[:, :, :, :] suffix):
    cdef int m = pb.shape[0]
    cdef int nb = pb.shape[1]
    cdef int k, n
    cdef cplx a[4]
    cdef cplx b[4]
    cdef cplx o[4]
    for n in range(nb):
        prefix[0, n, 0, 0] = 1.0; prefix[0, n, 0, 1] = 0.0
        prefix[0, n, 1, 0] = 0.0; prefix[0, n, 1, 1] = 1.0
        suffix[m, n, 0, 0] = 1.0; suffix[m, n, 0, 1] = 0.0
        suffix[m, n, 1, 0] = 0.0; suffix[m, n, 1, 1] = 1.0
    for k in range(m):
        for n in range(nb):
            a[0] = pb[k, n, 0, 0]; a[1] = pb[k, n, 0, 1]
            a[2] = pb[k, n, 1, 0]; a[3] = pb[k, n, 1, 1]
            b[0] = prefix[k, n, 0, 0]; b[1] = prefix[k, n, 0, 1]
            b[2] = prefix[k, n, 1, 0]; b[3] = prefix[k, n, 1, 1]
            mat2_mul(a, b, o)
            prefix[k + 1, n, 0, 0] = o[0]; prefix[k + 1, n, 0, 1] = o[1]
            prefix[k + 1, n, 1, 0] = o[2]; prefix[k + 1, n, 1, 1] = o[3]
    for k in range(m - 1, -1, -1):
        for n in range(nb):
            a[0] = suffix[k + 1, n, 0, 0]; a[1] = suffix[k + 1, n, 0, 1]
            a[2] = suffix[k + 1, n, 1, 0]; a[3] = suffix[k + 1, n, 1, 1]
            b[0] = pb[k, n, 0, 0]; b[1] = pb[k, n, 0, 1]
            b[2] = pb[k, n, 1, 0]; b[3] = pb[k, n, 1, 1]
            mat2_mul(a, b, o)
            suffix[k, n, 0, 0] = o[0]; suffix[k, n, 0, 1] = o[1]
            suffix[k, n, 1, 0] = o[2]; suffix[k, n, 1, 1] = o[3]


def vsa_objective_grad(params, int n_blocks, tgt, wmode, double d_perp,
                       double norm):
    """Objective and gradient for a resonant fixed-length pulse sequence."""
    cdef cnp.ndarray[double, ndim=1] p_ = np.ascontiguousarray(params, dtype=float)
    cdef int m = p_.shape[0] // 2
    cdef int nb = n_blocks + 1
    cdef cnp.ndarray[double, ndim=1] g_ = np.empty(m)
    cdef int k, n
    for k in range(m):
        g_[k] = sin(p_[k]) ** 2
    pb_arr = sideband_block_pulses(g_, np.zeros(m), p_[m:], np.full(m, np.pi),
                                   n_blocks)
    cdef cplx[:, :, :, :] pb = pb_arr
    pre_arr = np.empty((m + 1, nb, 2, 2), dtype=complex)
    suf_arr = np.empty((m + 1, nb, 2, 2), dtype=complex)
    cdef cplx[:, :, :, :] prefix = pre_arr
    cdef cplx[:, :, :, :] suffix = suf_arr
    _envs(pb, prefix, suffix)

    cdef cnp.ndarray[cplx, ndim=3] t_ = np.ascontiguousarray(tgt, dtype=complex)
    cdef cnp.ndarray[long, ndim=1] w_ = np.ascontiguousarray(wmode, dtype=int)
    cdef cplx z = d_perp
    cdef cplx bfin[4]
    for n in range(nb):
        if w_[n] == 0:
            continue
        bfin[0] = prefix[m, n, 0, 0]; bfin[1] = prefix[m, n, 0, 1]
        bfin[2] = prefix[m, n, 1, 0]; bfin[3] = prefix[m, n, 1, 1]
        z = z + wtrace(&t_[n, 0, 0], bfin, w_[n])
    cdef double f = 1.0 - abs(z) / norm

    grad_arr = np.zeros(2 * m)
    cdef double[:] grad = grad_arr
    cdef double az = abs(z)
    if az == 0.0:
        return f, grad_arr
    cdef cplx zc = z.conjugate()
    cdef cplx u[4]
    cdef cplx du[4]
    cdef cplx gm[4]
    cdef cplx t1[4]
    cdef cplx t2[4]
    cdef cplx pr[4]
    cdef cplx su[4]
    cdef cplx dzx, dzb
    cdef double eb_r, eb_i, coef
    for k in range(m):
        eb_r = cos(p_[m + k]); eb_i = sin(p_[m + k])
        gm[0] = 0.0; gm[1] = eb_r - 1j * eb_i
        gm[2] = eb_r + 1j * eb_i; gm[3] = 0.0
        dzx = 0.0; dzb = 0.0
        for n in range(1, nb):
            if w_[n] == 0:
                continue
            u[0] = pb[k, n, 0, 0]; u[1] = pb[k, n, 0, 1]
            u[2] = pb[k, n, 1, 0]; u[3] = pb[k, n, 1, 1]
            pr[0] = prefix[k, n, 0, 0]; pr[1] = prefix[k, n, 0, 1]
            pr[2] = prefix[k, n, 1, 0]; pr[3] = prefix[k, n, 1, 1]
            su[0] = suffix[k + 1, n, 0, 0]; su[1] = suffix[k + 1, n, 0, 1]
            su[2] = suffix[k + 1, n, 1, 0]; su[3] = suffix[k + 1, n, 1, 1]
            # d/dx: (-i/2) * pi*sqrt(n)*sin(2x) * G U
            coef = 3.141592653589793 * sqrt(n) * sin(2.0 * p_[k])
            mat2_mul(gm, u, t1)
            du[0] = -0.5j * coef * t1[0]; du[1] = -0.5j * coef * t1[1]
            du[2] = -0.5j * coef * t1[2]; du[3] = -0.5j * coef * t1[3]
            mat2_mul(du, pr, t1)
            mat2_mul(su, t1, t2)
            dzx = dzx + wtrace(&t_[n, 0, 0], t2, w_[n])
            # d/dbeta: (-i/2) (sz U - U sz): entries (0,1) and (1,0) only
            du[0] = 0.0; du[3] = 0.0
            du[1] = -1j * u[1]
            du[2] = 1j * u[2]
            mat2_mul(du, pr, t1)
            mat2_mul(su, t1, t2)
            dzb = dzb + wtrace(&t_[n, 0, 0], t2, w_[n])
        grad[k] = -(zc * dzx).real / (az * norm)
        grad[m + k] = -(zc * dzb).real / (az * norm)
    return f, grad_arr


def bus_objective_grad(deltas, double dt, int n_blocks, tgt, wmode,
                       double d_perp, double norm):
    """Objective and gradient for a detuning-only sequence at g = 1, beta = 0."""
    cdef cnp.ndarray[double, ndim=1] d_ = np.ascontiguousarray(deltas, dtype=float)
    cdef int m = d_.shape[0]
    cdef int nb = n_blocks + 1
    pb_arr = sideband_block_pulses(np.ones(m), d_, np.zeros(m), np.full(m, dt),
                                   n_blocks)
    cdef cplx[:, :, :, :] pb = pb_arr
    pre_arr = np.empty((m + 1, nb, 2, 2), dtype=complex)
    suf_arr = np.empty((m + 1, nb, 2, 2), dtype=complex)
    cdef cplx[:, :, :, :] prefix = pre_arr
    cdef cplx[:, :, :, :] suffix = suf_arr
    _envs(pb, prefix, suffix)

    cdef cnp.ndarray[cplx, ndim=3] t_ = np.ascontiguousarray(tgt, dtype=complex)
    cdef cnp.ndarray[long, ndim=1] w_ = np.ascontiguousarray(wmode, dtype=int)
    cdef cplx z = d_perp
    cdef cplx bfin[4]
    cdef int n, k
    for n in range(nb):
        if w_[n] == 0:
            continue
        bfin[0] = prefix[m, n, 0, 0]; bfin[1] = prefix[m, n, 0, 1]
        bfin[2] = prefix[m, n, 1, 0]; bfin[3] = prefix[m, n, 1, 1]
        z = z + wtrace(&t_[n, 0, 0], bfin, w_[n])
    cdef double f = 1.0 - abs(z) / norm

    grad_arr = np.zeros(m)
    cdef double[:] grad = grad_arr
    cdef double az = abs(z)
    if az == 0.0:
        return f, grad_arr
    cdef cplx zc = z.conjugate()
    cdef double t = dt / 2.0
    cdef cplx du[4]
    cdef cplx t1[4]
    cdef cplx t2[4]
    cdef cplx pr[4]
    cdef cplx su[4]
    cdef cplx dz
    cdef double dd, w, c, s, dc, ds, mx, mz, dmx, dmz, rn
    for k in range(m):
        dd = d_[k]
        dz = 0.0
        for n in range(nb):
            if w_[n] == 0:
                continue
            pr[0] = prefix[k, n, 0, 0]; pr[1] = prefix[k, n, 0, 1]
            pr[2] = prefix[k, n, 1, 0]; pr[3] = prefix[k, n, 1, 1]
            su[0] = suffix[k + 1, n, 0, 0]; su[1] = suffix[k + 1, n, 0, 1]
            su[2] = suffix[k + 1, n, 1, 0]; su[3] = suffix[k + 1, n, 1, 1]
            if n == 0:
                # block 0: diag(e^{i dd t}, e^{-i dd t})
                du[0] = 1j * t * (cos(dd * t) + 1j * sin(dd * t))
                du[1] = 0.0; du[2] = 0.0
                du[3] = -1j * t * (cos(dd * t) - 1j * sin(dd * t))
            else:
                rn = sqrt(n)
                w = hypot(dd, rn)
                c = cos(t * w); s = sin(t * w)
                dc = -t * s * dd / w
                ds = t * c * dd / w
                mx = rn / w; mz = -dd / w
                dmx = -rn * dd / (w * w * w)
                dmz = -n / (w * w * w)
                du[0] = dc - 1j * (ds * mz + s * dmz)
                du[1] = -1j * (ds * mx + s * dmx)
                du[2] = du[1]
                du[3] = dc + 1j * (ds * mz + s * dmz)
            mat2_mul(du, pr, t1)
            mat2_mul(su, t1, t2)
            dz = dz + wtrace(&t_[n, 0, 0], t2, w_[n])
        grad[k] = -(zc * dz).real / (az * norm)
    return f, grad_arr
