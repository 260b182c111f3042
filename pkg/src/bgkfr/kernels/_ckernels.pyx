# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; same contracts as ``_pykernels``.

Loops keep the phase index innermost so the compiler can vectorize over
contiguous memory. Parallelism is over elements (or spatial nodes); every
reduction stays inside one thread, so results do not depend on the thread
count.
"""
from cython.parallel cimport prange
from libc.math cimport exp, fabs, isfinite, lgamma, log, sqrt

import numpy as np

NAME = "cython"

cdef int _threads = 1


def set_num_threads(int n):
    global _threads
    _threads = n if n > 0 else 1


def get_num_threads():
    return _threads


_scratch_cache = {}


def _scratch(name, shape, dtype=np.float64):
    """Reusable work array; fresh large allocations cost page faults every call."""
    arr = _scratch_cache.get(name)
    if arr is None or arr.shape != shape or arr.dtype != dtype:
        arr = np.empty(shape, dtype=dtype)
        _scratch_cache[name] = arr
    return arr


def squeeze_limit(double[:, :, ::1] f, const double[::1] mean_w, double neg_tol=1e-12):
    cdef Py_ssize_t n_e = f.shape[0], n_s = f.shape[1], n_q = f.shape[2]
    lo_arr = _scratch("squeeze_lo", (n_e, n_q))
    bad_arr = np.zeros(n_e, dtype=np.intp)
    cdef double[:, ::1] lo = lo_arr
    cdef Py_ssize_t[::1] bad = bad_arr
    cdef Py_ssize_t e, i, q, q2
    cdef double v, beta, denom, mu, big
    cdef double* lo_e
    cdef double* f_row
    for e in prange(n_e, nogil=True, num_threads=_threads, schedule="static"):
        lo_e = &lo[e, 0]
        f_row = &f[e, 0, 0]
        for q in range(n_q):
            lo_e[q] = f_row[q]
        for i in range(1, n_s):
            f_row = &f[e, i, 0]
            for q in range(n_q):
                v = f_row[q]
                lo_e[q] = v if v < lo_e[q] else lo_e[q]
        # only columns with a negative value need work or can have a bad mean;
        # the element's largest |f| scales the mean-negativity tolerance
        big = -1.0
        for q in range(n_q):
            if lo_e[q] < 0.0:
                if big < 0.0:
                    big = 0.0
                    for i in range(n_s):
                        for q2 in range(n_q):
                            if fabs(f[e, i, q2]) > big:
                                big = fabs(f[e, i, q2])
                mu = 0.0
                for i in range(n_s):
                    mu = mu + mean_w[i] * f[e, i, q]
                if mu < -neg_tol * big:
                    bad[e] = bad[e] + 1
                denom = mu - lo_e[q]
                if fabs(denom) < 1e-300:
                    beta = 1.0
                else:
                    beta = fabs(mu / denom)
                    if beta > 1.0:
                        beta = 1.0
                # clamp the round-off residue at the minimum so a second pass is a no-op
                for i in range(n_s):
                    v = mu + beta * (f[e, i, q] - mu)
                    f[e, i, q] = v if v > 0.0 else 0.0
    return int(bad_arr.sum())


def transport_rhs(const double[:, :, ::1] f, const double[:, ::1] D, const double[::1] gl,
                  const double[::1] gr, const double[::1] rdx, const double[::1] u,
                  const double[::1] ghost_l, const double[::1] ghost_r,
                  double[:, :, ::1] out):
    cdef Py_ssize_t n_e = f.shape[0], n_s = f.shape[1], n_q = f.shape[2]
    jl_arr = _scratch("jump_l", (n_e, n_q))
    jr_arr = _scratch("jump_r", (n_e, n_q))
    cdef double[:, ::1] jl = jl_arr
    cdef double[:, ::1] jr = jr_arr
    cdef Py_ssize_t e, i, l, q
    cdef double uq, a, b, s, gli, gri, d
    cdef const double* fe
    cdef const double* fl
    cdef double* oi
    for e in prange(n_e, nogil=True, num_threads=_threads, schedule="static"):
        # jumps between the upwind common flux and the element's own flux
        for q in range(n_q):
            uq = u[q]
            if e == 0:
                a = ghost_l[q]
            else:
                a = f[e - 1, n_s - 1, q]
            if e == n_e - 1:
                b = ghost_r[q]
            else:
                b = f[e + 1, 0, q]
            if uq > 0.0:
                jl[e, q] = uq * (a - f[e, 0, q])
                jr[e, q] = 0.0
            else:
                jl[e, q] = 0.0
                jr[e, q] = uq * (b - f[e, n_s - 1, q])
        s = -rdx[e]
        fe = &f[e, 0, 0]
        for i in range(n_s):
            oi = &out[e, i, 0]
            gli = gl[i]
            gri = gr[i]
            fl = fe
            d = D[i, 0]
            for q in range(n_q):
                oi[q] = d * fl[q]
            for l in range(1, n_s):
                fl = fe + l * n_q
                d = D[i, l]
                for q in range(n_q):
                    oi[q] = oi[q] + d * fl[q]
            for q in range(n_q):
                oi[q] = s * (u[q] * oi[q] + gli * jl[e, q] + gri * jr[e, q])
    return np.asarray(out)


def phase_moments(const double[:, :, ::1] f, const double[::1] wu, const double[::1] u1,
                  const double[::1] wz, const double[::1] z, Py_ssize_t n_v, Py_ssize_t n_z):
    cdef Py_ssize_t n_e = f.shape[0], n_s = f.shape[1]
    cdef Py_ssize_t n = n_e * n_s
    cdef const double[:, ::1] flat = np.asarray(f).reshape(n, n_v * n_z)
    out_arr = np.empty((n, 3))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t k, q, r
    cdef double a, b, v, r0, r1, r2
    for k in prange(n, nogil=True, num_threads=_threads, schedule="static"):
        r0 = 0.0
        r1 = 0.0
        r2 = 0.0
        for q in range(n_v):
            a = 0.0
            b = 0.0
            for r in range(n_z):
                v = wz[r] * flat[k, q * n_z + r]
                a = a + v
                b = b + v * z[r]
            r0 = r0 + wu[q] * a
            r1 = r1 + wu[q] * u1[q] * a
            r2 = r2 + wu[q] * (0.5 * u1[q] * u1[q] * a + b)
        out[k, 0] = r0
        out[k, 1] = r1
        out[k, 2] = r2
    return out_arr


def add_relaxation(const double[:, :, ::1] f, const double[:, ::1] gu, const double[:, ::1] gz,
                   const double[::1] inv_tau, double[:, :, ::1] out):
    cdef Py_ssize_t n_e = f.shape[0], n_s = f.shape[1]
    cdef Py_ssize_t n_v = gu.shape[1], n_z = gz.shape[1]
    cdef Py_ssize_t e, i, k, q, r, j
    cdef double it, gq
    for e in prange(n_e, nogil=True, num_threads=_threads, schedule="static"):
        for i in range(n_s):
            k = e * n_s + i
            it = inv_tau[k]
            for q in range(n_v):
                gq = gu[k, q]
                for r in range(n_z):
                    j = q * n_z + r
                    out[e, i, j] = out[e, i, j] + (gq * gz[k, r] - f[e, i, j]) * it
    return np.asarray(out)


cdef int _project_node(const double* u, const double* wu, Py_ssize_t n_v,
                       const double* z, const double* logz, const double* wz,
                       Py_ssize_t n_z, double delta, double log_norm,
                       double* a, double* gu, double* gz,
                       double* M, double* J) noexcept nogil:
    """Fill ``gu``, ``gz`` for parameters ``a`` and return moments / Jacobian."""
    cdef Py_ssize_t q, r
    cdef double w, s, s2, uq, ku
    cdef double A0 = 0.0, A1 = 0.0, Ak = 0.0
    cdef double B0 = 0.0, B1 = 0.0, Bk = 0.0
    cdef double C0 = 0.0, C1 = 0.0, Ck = 0.0
    cdef double Z0 = 0.0, Z1 = 0.0, D0 = 0.0, D1 = 0.0
    cdef double theta = 0.5 / a[1], gzr, dz
    cdef double c_log = log_norm - 0.5 * delta * log(theta)
    for q in range(n_v):
        uq = u[q]
        s = uq - a[2]
        s2 = s * s
        gu[q] = a[0] * exp(-a[1] * s2)
        w = wu[q] * gu[q]
        ku = 0.5 * uq * uq
        A0 = A0 + w
        A1 = A1 + w * uq
        Ak = Ak + w * ku
        B0 = B0 + w * s2
        B1 = B1 + w * s2 * uq
        Bk = Bk + w * s2 * ku
        C0 = C0 + w * s
        C1 = C1 + w * s * uq
        Ck = Ck + w * s * ku
    if delta == 0.0:
        gz[0] = 1.0
        Z0 = wz[0]
        Z1 = wz[0] * z[0]
    else:
        for r in range(n_z):
            # Lambda (z/theta)^(delta/2 - 1) exp(-z/theta) / theta
            gzr = exp(c_log + (0.5 * delta - 1.0) * logz[r] - z[r] / theta)
            gz[r] = gzr
            w = wz[r] * gzr
            dz = 0.5 * delta / a[1] - 2.0 * z[r]
            Z0 = Z0 + w
            Z1 = Z1 + w * z[r]
            D0 = D0 + w * dz
            D1 = D1 + w * dz * z[r]
    M[0] = A0 * Z0
    M[1] = A1 * Z0
    M[2] = Ak * Z0 + A0 * Z1
    if J != NULL:
        J[0] = M[0] / a[0]
        J[3] = M[1] / a[0]
        J[6] = M[2] / a[0]
        J[1] = -B0 * Z0 + A0 * D0
        J[4] = -B1 * Z0 + A1 * D0
        J[7] = -(Bk * Z0 + B0 * Z1) + Ak * D0 + A0 * D1
        J[2] = 2.0 * a[1] * C0 * Z0
        J[5] = 2.0 * a[1] * C1 * Z0
        J[8] = 2.0 * a[1] * (Ck * Z0 + C0 * Z1)
    return 0


cdef int _solve3(double* J, double* b) noexcept nogil:
    """In-place Gaussian elimination with partial pivoting; 1 if singular."""
    cdef int i, j, k, piv
    cdef double t, m
    for k in range(3):
        piv = k
        for i in range(k + 1, 3):
            if fabs(J[3 * i + k]) > fabs(J[3 * piv + k]):
                piv = i
        if J[3 * piv + k] == 0.0 or not isfinite(J[3 * piv + k]):
            return 1
        if piv != k:
            for j in range(3):
                t = J[3 * k + j]
                J[3 * k + j] = J[3 * piv + j]
                J[3 * piv + j] = t
            t = b[k]
            b[k] = b[piv]
            b[piv] = t
        for i in range(k + 1, 3):
            m = J[3 * i + k] / J[3 * k + k]
            for j in range(k, 3):
                J[3 * i + j] = J[3 * i + j] - m * J[3 * k + j]
            b[i] = b[i] - m * b[k]
    for k in range(2, -1, -1):
        t = b[k]
        for j in range(k + 1, 3):
            t = t - J[3 * k + j] * b[j]
        b[k] = t / J[3 * k + k]
    return 0


cdef inline double _rel_res(double* M, const double[:, ::1] Q, Py_ssize_t k) noexcept nogil:
    cdef double sc = 0.0, r = 0.0
    cdef int b
    for b in range(3):
        if fabs(Q[k, b]) > sc:
            sc = fabs(Q[k, b])
        if fabs(M[b] - Q[k, b]) > r:
            r = fabs(M[b] - Q[k, b])
    if sc == 0.0:
        sc = 1.0
    return r / sc


def dvm_project(const double[:, ::1] Q, const double[::1] u, const double[::1] wu,
                const double[::1] z, const double[::1] wz, double delta, int n_iters,
                double floor, double[:, ::1] alpha, double[:, ::1] gu, double[:, ::1] gz,
                double[::1] res, int[::1] status):
    """Batched Newton projection for m = d = 1 grids.

    ``status``: 0 ok, 1 singular Jacobian, 2 step left the admissible set,
    3 residual grew above ``floor``, 4 inadmissible input state.
    """
    cdef Py_ssize_t n = Q.shape[0], k
    cdef Py_ssize_t n_v = u.shape[0], n_z = z.shape[0]
    logz_arr = np.log(np.where(np.asarray(z) > 0.0, np.asarray(z), 1.0))
    cdef const double[::1] logz = logz_arr
    cdef double log_norm = -lgamma(0.5 * delta) if delta > 0.0 else 0.0
    cdef double rho, vel, theta, r_new
    # per-node scratch (moments, Jacobian, step): C arrays would be shared
    # between OpenMP threads
    work_arr = _scratch("dvm_work", (n, 15))
    cdef double[:, ::1] work = work_arr
    cdef double* M
    cdef double* J
    cdef double* st
    cdef int it, b
    for k in prange(n, nogil=True, num_threads=_threads, schedule="static"):
        status[k] = 0
        M = &work[k, 0]
        J = &work[k, 3]
        st = &work[k, 12]
        rho = Q[k, 0]
        if not rho > 0.0:
            status[k] = 4
            continue
        vel = Q[k, 1] / rho
        theta = (Q[k, 2] - 0.5 * rho * vel * vel) / (0.5 * (1.0 + delta) * rho)
        if not theta > 0.0:
            status[k] = 4
            continue
        alpha[k, 0] = rho / sqrt(2.0 * 3.141592653589793 * theta)
        alpha[k, 1] = 0.5 / theta
        alpha[k, 2] = vel
        _project_node(&u[0], &wu[0], n_v, &z[0], &logz[0], &wz[0], n_z, delta, log_norm,
                      &alpha[k, 0], &gu[k, 0], &gz[k, 0], M, J if n_iters > 0 else NULL)
        res[k] = _rel_res(M, Q, k)
        for it in range(n_iters):
            for b in range(3):
                st[b] = M[b] - Q[k, b]
            if _solve3(J, st):
                status[k] = 1
                break
            for b in range(3):
                alpha[k, b] = alpha[k, b] - st[b]
            if (not isfinite(alpha[k, 0]) or not isfinite(alpha[k, 1])
                    or not isfinite(alpha[k, 2]) or not alpha[k, 0] > 0.0
                    or not alpha[k, 1] > 0.0):
                status[k] = 2
                break
            _project_node(&u[0], &wu[0], n_v, &z[0], &logz[0], &wz[0], n_z, delta,
                          log_norm, &alpha[k, 0], &gu[k, 0], &gz[k, 0], M,
                          J if it + 1 < n_iters else NULL)
            r_new = _rel_res(M, Q, k)
            if r_new > res[k] and r_new > floor:
                status[k] = 3
                res[k] = r_new
                break
            res[k] = r_new
    return np.asarray(status)


def rk_stage(const double[::1] f, const double[::1] k, double[::1] stage, double[::1] acc,
             double a, double b, bint first):
    """``stage = f + a k`` and ``acc (+)= b k`` in one pass over flat arrays."""
    cdef Py_ssize_t n = f.shape[0], j
    cdef double kj
    if first:
        for j in prange(n, nogil=True, num_threads=_threads, schedule="static"):
            kj = k[j]
            stage[j] = f[j] + a * kj
            acc[j] = b * kj
    else:
        for j in prange(n, nogil=True, num_threads=_threads, schedule="static"):
            kj = k[j]
            stage[j] = f[j] + a * kj
            acc[j] = acc[j] + b * kj


def rk_finish(double[::1] f, const double[::1] acc, const double[::1] k, double b):
    """``f += acc + b k``."""
    cdef Py_ssize_t n = f.shape[0], j
    for j in prange(n, nogil=True, num_threads=_threads, schedule="static"):
        f[j] = f[j] + (acc[j] + b * k[j])
