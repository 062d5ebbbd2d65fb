# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: batched block-tridiagonal solves and RK4 Bloch integration.

Same signatures and results as :mod:`fwm_sim._fallback`.
"""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.stdlib cimport malloc, free
from libc.math cimport cos, sin, fabs

cnp.import_array()

ctypedef double complex cplx


cdef int _lu_solve(cplx* M, int m, cplx* B, int nrhs) noexcept nogil:
    """Gaussian elimination with partial pivoting, in place.

    ``M`` is m x m row-major, ``B`` is m x nrhs row-major; on exit ``B`` holds
    the solution.  Returns 1 on an exactly singular pivot.
    """
    cdef int i, j, k, p
    cdef double best, mag
    cdef cplx piv, f, tmp
    for k in range(m):
        p = k
        best = fabs(M[k * m + k].real) + fabs(M[k * m + k].imag)
        for i in range(k + 1, m):
            mag = fabs(M[i * m + k].real) + fabs(M[i * m + k].imag)
            if mag > best:
                best = mag
                p = i
        if best == 0.0:
            return 1
        if p != k:
            for j in range(m):
                tmp = M[k * m + j]
                M[k * m + j] = M[p * m + j]
                M[p * m + j] = tmp
            for j in range(nrhs):
                tmp = B[k * nrhs + j]
                B[k * nrhs + j] = B[p * nrhs + j]
                B[p * nrhs + j] = tmp
        piv = M[k * m + k]
        for i in range(k + 1, m):
            f = M[i * m + k] / piv
            if f == 0:
                continue
            for j in range(k + 1, m):
                M[i * m + j] = M[i * m + j] - f * M[k * m + j]
            for j in range(nrhs):
                B[i * nrhs + j] = B[i * nrhs + j] - f * B[k * nrhs + j]
    for k in range(m - 1, -1, -1):
        piv = M[k * m + k]
        for j in range(nrhs):
            tmp = B[k * nrhs + j]
            for i in range(k + 1, m):
                tmp = tmp - M[k * m + i] * B[i * nrhs + j]
            B[k * nrhs + j] = tmp / piv
    return 0


cdef int _solve_point(const cplx[:, :, ::1] D0, const double[:, :, ::1] dc,
                      const cplx[:, :, ::1] A, const cplx[:, :, ::1] C,
                      double wF, double wB, double wP,
                      const cplx[:, ::1] r, cplx[:, ::1] x,
                      cplx* G, cplx* y, cplx* M, cplx* B) noexcept nogil:
    cdef int K = D0.shape[0]
    cdef int m = D0.shape[1]
    cdef int nr = m + 1
    cdef int k, i, j, l, bad = 0
    cdef cplx s
    for k in range(K):
        for i in range(m):
            for j in range(m):
                M[i * m + j] = D0[k, i, j]
            M[i * m + i] = M[i * m + i] - 1j * (dc[k, i, 0] * wF + dc[k, i, 1] * wB + dc[k, i, 2] * wP)
            for j in range(m):
                B[i * nr + j] = C[k, i, j]
            B[i * nr + m] = r[k, i]
        if k > 0:
            # M -= A_k G_{k-1};  rhs -= A_k y_{k-1}
            for i in range(m):
                for l in range(m):
                    s = A[k, i, l]
                    if s == 0:
                        continue
                    for j in range(m):
                        M[i * m + j] = M[i * m + j] - s * G[((k - 1) * m + l) * m + j]
                    B[i * nr + m] = B[i * nr + m] - s * y[(k - 1) * m + l]
        if _lu_solve(M, m, B, nr):
            bad = 1
        for i in range(m):
            for j in range(m):
                G[(k * m + i) * m + j] = B[i * nr + j]
            y[k * m + i] = B[i * nr + m]
    for i in range(m):
        x[K - 1, i] = y[(K - 1) * m + i]
    for k in range(K - 2, -1, -1):
        for i in range(m):
            s = y[k * m + i]
            for j in range(m):
                s = s - G[(k * m + i) * m + j] * x[k + 1, j]
            x[k, i] = s
    return bad


def block_tridiag_solve(D0, diag_coef, A, C, freqs, rhs, int nthreads=1):
    cdef const cplx[:, :, ::1] D0v = np.ascontiguousarray(D0, dtype=complex)
    cdef const double[:, :, ::1] dcv = np.ascontiguousarray(diag_coef, dtype=float)
    cdef const cplx[:, :, ::1] Av = np.ascontiguousarray(A, dtype=complex)
    cdef const cplx[:, :, ::1] Cv = np.ascontiguousarray(C, dtype=complex)
    cdef const double[:, ::1] fv = np.ascontiguousarray(freqs, dtype=float)
    cdef const cplx[:, :, ::1] rv = np.ascontiguousarray(rhs, dtype=complex)
    cdef int K = D0v.shape[0]
    cdef int m = D0v.shape[1]
    cdef Py_ssize_t npts = fv.shape[0]
    out = np.zeros((npts, K, m), dtype=complex)
    cdef cplx[:, :, ::1] xv = out
    cdef Py_ssize_t n
    cdef cplx* work
    cdef int nbad = 0
    if nthreads < 1:
        nthreads = 1
    for n in prange(npts, nogil=True, schedule="static", num_threads=nthreads):
        work = <cplx*> malloc((K * m * m + K * m + m * m + m * (m + 1)) * sizeof(cplx))
        nbad += _solve_point(D0v, dcv, Av, Cv, fv[n, 0], fv[n, 1], fv[n, 2], rv[n], xv[n],
                             work, work + K * m * m, work + K * m * m + K * m,
                             work + K * m * m + K * m + m * m)
        free(work)
    if nbad:
        raise np.linalg.LinAlgError(f"singular block encountered at {nbad} point(s)")
    return out


cdef void _deriv(int n, const double* h0, const cplx* K, const double* w, int nc,
                 const double* gam, const double* pop, double t,
                 const cplx* rho, cplx* out, cplx* H) noexcept nogil:
    cdef int i, j, l, c
    cdef cplx ph, acc
    for i in range(n * n):
        H[i] = 0
    for i in range(n):
        H[i * n + i] = h0[i]
    for c in range(nc):
        ph = cos(w[c] * t) + 1j * sin(w[c] * t)
        for i in range(n):
            for j in range(n):
                acc = K[(c * n + i) * n + j]
                if acc != 0:
                    H[i * n + j] = H[i * n + j] + ph * acc
                    H[j * n + i] = H[j * n + i] + ph.conjugate() * acc.conjugate()
    for i in range(n):
        for j in range(n):
            acc = 0
            for l in range(n):
                acc = acc + H[i * n + l] * rho[l * n + j] - rho[i * n + l] * H[l * n + j]
            out[i * n + j] = -1j * acc - gam[i * n + j] * rho[i * n + j]
    for i in range(n):
        acc = 0
        for l in range(n):
            acc = acc + pop[i * n + l] * rho[l * n + l]
        out[i * n + i] = out[i * n + i] + acc


def rk4_bloch(h0, couplings, omegas, gam, popmat, rho0, double t0, double dt,
              long n_steps, long sample_every):
    cdef const double[::1] h0v = np.ascontiguousarray(h0, dtype=float)
    cdef const cplx[:, :, ::1] Kv = np.ascontiguousarray(couplings, dtype=complex)
    cdef const double[::1] wv = np.ascontiguousarray(omegas, dtype=float)
    cdef const double[:, ::1] gv = np.ascontiguousarray(gam, dtype=float)
    cdef const double[:, ::1] pv = np.ascontiguousarray(popmat, dtype=float)
    cdef int n = h0v.shape[0]
    cdef int nc = Kv.shape[0]
    cdef int nn = n * n
    cdef long n_samples = n_steps // sample_every + 1
    samples = np.empty((n_samples, n, n), dtype=complex)
    times = np.empty(n_samples)
    cdef cplx[:, :, ::1] sv = samples
    cdef double[::1] tv = times
    rho_arr = np.ascontiguousarray(rho0, dtype=complex).copy()
    cdef cplx[:, ::1] rho = rho_arr
    buf = np.zeros((6, nn), dtype=complex)
    cdef cplx[:, ::1] b = buf
    cdef const cplx* Kp = &Kv[0, 0, 0] if nc > 0 else NULL
    cdef const double* wp = &wv[0] if nc > 0 else NULL
    cdef long s, j = 1
    cdef int i
    cdef double t, tr, tr0 = 0.0, drift = 0.0
    cdef cplx* r = &rho[0, 0]
    cdef cplx* k1 = &b[0, 0]
    cdef cplx* k2 = &b[1, 0]
    cdef cplx* k3 = &b[2, 0]
    cdef cplx* k4 = &b[3, 0]
    cdef cplx* tmp = &b[4, 0]
    cdef cplx* H = &b[5, 0]
    for i in range(n):
        tr0 += r[i * n + i].real
    for i in range(nn):
        sv[0, i // n, i % n] = r[i]
    tv[0] = t0
    with nogil:
        for s in range(n_steps):
            t = t0 + s * dt
            _deriv(n, &h0v[0], Kp, wp, nc, &gv[0, 0], &pv[0, 0], t, r, k1, H)
            for i in range(nn):
                tmp[i] = r[i] + 0.5 * dt * k1[i]
            _deriv(n, &h0v[0], Kp, wp, nc, &gv[0, 0], &pv[0, 0], t + 0.5 * dt, tmp, k2, H)
            for i in range(nn):
                tmp[i] = r[i] + 0.5 * dt * k2[i]
            _deriv(n, &h0v[0], Kp, wp, nc, &gv[0, 0], &pv[0, 0], t + 0.5 * dt, tmp, k3, H)
            for i in range(nn):
                tmp[i] = r[i] + dt * k3[i]
            _deriv(n, &h0v[0], Kp, wp, nc, &gv[0, 0], &pv[0, 0], t + dt, tmp, k4, H)
            for i in range(nn):
                r[i] = r[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if (s + 1) % sample_every == 0:
                tr = 0.0
                for i in range(n):
                    tr += r[i * n + i].real
                if fabs(tr - tr0) > drift:
                    drift = fabs(tr - tr0)
                for i in range(nn):
                    sv[j, i // n, i % n] = r[i]
                tv[j] = t0 + (s + 1) * dt
                j += 1
    return times, samples, drift
