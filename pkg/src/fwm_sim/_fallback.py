"""Pure numpy implementations of the hot kernels.

Signatures mirror the compiled ``_kernels`` extension exactly; ``backend``
picks one of the two at import time.
"""
from __future__ import annotations

import numpy as np


def block_tridiag_solve(D0, diag_coef, A, C, freqs, rhs, nthreads=1):
    """Solve a batch of block-tridiagonal systems.

    Point ``n`` solves ``A[k] x[k-1] + D[k] x[k] + C[k] x[k+1] = rhs[n, k]``
    where ``D[k] = D0[k] - 1j * diag(diag_coef[k] @ freqs[n])``.

    Shapes: ``D0, A, C`` are ``(K, m, m)``; ``diag_coef`` is ``(K, m, 3)``;
    ``freqs`` is ``(n, 3)``; ``rhs`` is ``(n, K, m)``.  Returns ``(n, K, m)``.
    ``nthreads`` is accepted for signature parity and ignored.
    """
    D0 = np.asarray(D0, dtype=complex)
    A = np.asarray(A, dtype=complex)
    C = np.asarray(C, dtype=complex)
    freqs = np.asarray(freqs, dtype=float)
    rhs = np.asarray(rhs, dtype=complex)
    K, m, _ = D0.shape
    npts = freqs.shape[0]
    idx = np.arange(m)

    G = np.empty((npts, K, m, m), dtype=complex)
    y = np.empty((npts, K, m), dtype=complex)
    for k in range(K):
        D = np.broadcast_to(D0[k], (npts, m, m)).copy()
        D[:, idx, idx] -= 1j * (freqs @ diag_coef[k].T)
        r = rhs[:, k, :]
        if k > 0:
            D -= A[k] @ G[:, k - 1]
            r = r - np.einsum("ij,nj->ni", A[k], y[:, k - 1])
        cols = np.concatenate([np.broadcast_to(C[k], (npts, m, m)), r[:, :, None]], axis=2)
        sol = np.linalg.solve(D, cols)
        G[:, k] = sol[:, :, :m]
        y[:, k] = sol[:, :, m]

    x = np.empty_like(y)
    x[:, K - 1] = y[:, K - 1]
    for k in range(K - 2, -1, -1):
        x[:, k] = y[:, k] - np.einsum("nij,nj->ni", G[:, k], x[:, k + 1])
    return x


def rk4_bloch(h0, couplings, omegas, gam, popmat, rho0, t0, dt, n_steps, sample_every):
    """Fixed-step RK4 integration of a driven, damped density matrix.

    ``H(t) = diag(h0) + sum_m (exp(i w_m t) K_m + h.c.)`` and the damping is
    ``-gam * rho`` elementwise plus ``diag(popmat @ diag(rho))`` on the
    populations.  Returns ``(times, samples, max_trace_drift)`` with one
    sample every ``sample_every`` steps, the initial state included.
    """
    h0 = np.asarray(h0, dtype=float)
    K = np.asarray(couplings, dtype=complex)
    Kd = np.conj(np.transpose(K, (0, 2, 1)))
    w = np.asarray(omegas, dtype=float)
    gam = np.asarray(gam, dtype=float)
    popmat = np.asarray(popmat, dtype=float)
    H0 = np.diag(h0).astype(complex)
    n = H0.shape[0]
    di = np.arange(n)

    def deriv(t, rho):
        ph = np.exp(1j * w * t)
        H = H0 + np.tensordot(ph, K, axes=1) + np.tensordot(np.conj(ph), Kd, axes=1)
        out = -1j * (H @ rho - rho @ H) - gam * rho
        out[di, di] += popmat @ rho[di, di]
        return out

    rho = np.array(rho0, dtype=complex)
    n_samples = n_steps // sample_every + 1
    samples = np.empty((n_samples, n, n), dtype=complex)
    times = np.empty(n_samples)
    tr0 = np.trace(rho).real
    drift = 0.0
    samples[0] = rho
    times[0] = t0
    j = 1
    for s in range(n_steps):
        t = t0 + s * dt
        k1 = deriv(t, rho)
        k2 = deriv(t + 0.5 * dt, rho + 0.5 * dt * k1)
        k3 = deriv(t + 0.5 * dt, rho + 0.5 * dt * k2)
        k4 = deriv(t + dt, rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if (s + 1) % sample_every == 0:
            samples[j] = rho
            times[j] = t0 + (s + 1) * dt
            drift = max(drift, abs(np.trace(rho).real - tr0))
            j += 1
    return times, samples, drift
