"""Steady-state harmonic (Floquet) expansion of the four-level Bloch equations.

Every density-matrix element is expanded in powers of the F, B and P phase
factors, ``rho_ij = sum sigma_ij^(a,b,c) exp(i (a w_F + b w_B + c w_P) t)``.
An element ``(i, j)`` only carries harmonics whose total photon number
``a + b + c`` equals ``nu_j - nu_i`` (``nu = 0`` for ground, 1 for excited
levels), so for a fixed probe order ``c`` each unknown is fixed by the
element and the F-photon index ``a``.  Grouping unknowns by ``a`` turns the
stationary recurrence relations into a block-tridiagonal system: the F field
couples neighbouring blocks, the B field acts inside a block.

Single-point solves go through a sparse LU factorisation; the batched path
used for velocity and frequency sweeps eliminates the blocks directly with
the kernels from :mod:`fwm_sim.backend`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import backend, tolerances
from .model import ModelConfig

__all__ = [
    "LEVELS",
    "HarmonicIndex",
    "HarmonicDensityMatrix",
    "SolveReport",
    "SolverError",
    "TruncationError",
    "solve_zeroth_order",
    "solve_first_order",
    "conjugate_amplitude",
    "check_truncation",
    "BatchSolver",
]

LEVELS = "abcd"
N_EL = 16
_NU = np.array([0, 0, 1, 1])
# net photon number of element e = 4 i + j
NET = (_NU[None, :] - _NU[:, None]).ravel()
POPS = (0, 5, 10, 15)


class SolverError(ArithmeticError):
    """Singular or ill-conditioned harmonic system."""


class TruncationError(ValueError):
    """Harmonic truncation too small for the requested quantity."""


def _lvl(x) -> int:
    if isinstance(x, str):
        return LEVELS.index(x)
    return int(x)


@dataclass(frozen=True)
class HarmonicIndex:
    a: int
    b: int
    c: int = 0

    def order(self) -> int:
        return abs(self.a) + abs(self.b)

    def within(self, n_max: int) -> bool:
        return abs(self.c) <= 1 and self.order() <= n_max


@dataclass(frozen=True)
class HarmonicDensityMatrix:
    """Harmonic coefficients keyed by ``(i, j, a, b, c)`` with integer levels."""

    order: str
    coefficients: dict = field(repr=False)
    truncation: int

    def get(self, i, j, a: int, b: int, c: int = 0) -> complex:
        return self.coefficients.get((_lvl(i), _lvl(j), a, b, c), 0j)

    def __contains__(self, key) -> bool:
        i, j, *rest = key
        return (_lvl(i), _lvl(j), *rest) in self.coefficients

    def norm(self) -> float:
        return float(np.sqrt(sum(abs(v) ** 2 for v in self.coefficients.values())))

    def entries(self):
        """Rows ``[i, j, a, b, c, re, im]`` in a fixed order."""
        return [[*k, v.real, v.imag] for k, v in sorted(self.coefficients.items())]

    def to_json(self) -> str:
        return json.dumps({"order": self.order, "truncation": self.truncation,
                           "entries": self.entries()})

    def hermiticity_error(self) -> float:
        worst = 0.0
        for (i, j, a, b, c), v in self.coefficients.items():
            worst = max(worst, abs(v - np.conj(self.get(j, i, -a, -b, -c))))
        return worst


@dataclass(frozen=True)
class SolveReport:
    residual_norm: float
    n_unknowns: int
    converged: bool


# -- operators ----------------------------------------------------------------

def _sup(X):
    """Commutator superoperator on row-major vec: vec([X, r])."""
    eye = np.eye(X.shape[0])
    return np.kron(X, eye) - np.kron(eye, X.T)


def operators(config: ModelConfig):
    """Return ``(H0, M_F, M_B, M_P, R)``.

    ``M_I`` carries the ``exp(+i w_I t)`` part of each coupling including
    the factor ``Omega_I / 2``; ``R`` is the 16 x 16 relaxation superoperator.
    """
    lv, fs, rx = config.levels, config.fields, config.relaxation
    H0 = np.diag([0.0, 0.0, lv.omega_c, lv.omega_d]).astype(complex)
    MF = np.zeros((4, 4), complex)
    MF[0, 2] = MF[0, 3] = 0.5 * fs.rabi_F
    MB = np.zeros((4, 4), complex)
    MB[1, 2], MB[1, 3] = 0.5 * fs.rabi_B * lv.sign_bc, 0.5 * fs.rabi_B * lv.sign_bd
    MP = np.zeros((4, 4), complex)
    MP[1, 2], MP[1, 3] = 0.5 * fs.rabi_P * lv.sign_bc, 0.5 * fs.rabi_P * lv.sign_bd

    G, g, gt, br = rx.gamma_e, rx.gamma_g, rx.transit_feed, rx.branching
    R = np.zeros((N_EL, N_EL))
    for i in range(4):
        for j in range(4):
            if i == j:
                continue
            if _NU[i] == _NU[j] == 0:
                rate = g
            elif _NU[i] == _NU[j] == 1:
                rate = G
            else:
                rate = 0.5 * G
            R[4 * i + j, 4 * i + j] = -rate
    R[10, 10] = R[15, 15] = -G
    for ground in (0, 5):
        R[ground, 10] = R[ground, 15] = G * br
    R[0, 0] -= 0.5 * gt
    R[0, 5] += 0.5 * gt
    R[5, 5] -= 0.5 * gt
    R[5, 0] += 0.5 * gt
    return H0, MF, MB, MP, R


@dataclass(frozen=True, eq=False)
class _Family:
    """Block-tridiagonal system for one probe order ``c``."""

    c: int
    a_values: np.ndarray      # (K,)
    present: np.ndarray       # (K, 16) bool
    trace_rows: np.ndarray    # (K,) bool
    D0: np.ndarray            # (K, 16, 16)
    diag_coef: np.ndarray     # (K, 16, 3) coefficients of (w_F, w_B, w_P)
    A: np.ndarray             # (K, 16, 16) coupling to block k-1
    C: np.ndarray             # (K, 16, 16) coupling to block k+1
    rhs0: np.ndarray          # (K, 16)

    def block_of(self, a: int) -> int | None:
        hit = np.nonzero(self.a_values == a)[0]
        return int(hit[0]) if hit.size else None

    def harmonic_b(self, k: int, e: int) -> int:
        return int(NET[e] - self.c - self.a_values[k])


@lru_cache(maxsize=64)
def _family(config: ModelConfig, c: int) -> _Family:
    n_max = config.truncation
    H0, MF, MB, MP, R = operators(config)
    D0_full = -1j * _sup(H0) + R - 1j * _sup(MB + MB.conj().T)
    A_full = -1j * _sup(MF)
    C_full = -1j * _sup(MF.conj().T)

    a_all = np.arange(-n_max, n_max + 1)
    pres_all = np.abs(a_all)[:, None] + np.abs(NET[None, :] - c - a_all[:, None]) <= n_max
    keep = pres_all.any(axis=1)
    a_vals, present = a_all[keep], pres_all[keep]
    K = a_vals.size

    D0 = np.zeros((K, N_EL, N_EL), complex)
    A = np.zeros_like(D0)
    C = np.zeros_like(D0)
    dc = np.zeros((K, N_EL, 3))
    rhs0 = np.zeros((K, N_EL), complex)
    trace_rows = present[:, POPS[0]].copy()
    for k in range(K):
        p = present[k]
        D0[k] = np.where(p[:, None] & p[None, :], D0_full, 0)
        if k > 0:
            A[k] = np.where(p[:, None] & present[k - 1][None, :], A_full, 0)
        if k < K - 1:
            C[k] = np.where(p[:, None] & present[k + 1][None, :], C_full, 0)
        for e in range(N_EL):
            if not p[e]:
                D0[k, e, e] = 1.0
            else:
                dc[k, e] = (a_vals[k], NET[e] - c - a_vals[k], c)
        if trace_rows[k]:
            # replace the sigma_aa row by the trace condition
            D0[k, 0] = 0
            D0[k, 0, list(POPS)] = 1.0
            A[k, 0] = C[k, 0] = 0
            dc[k, 0] = 0
            if c == 0 and a_vals[k] == 0:
                rhs0[k, 0] = 1.0
    for arr in (a_vals, present, trace_rows, D0, dc, A, C, rhs0):
        arr.setflags(write=False)
    return _Family(c, a_vals, present, trace_rows, D0, dc, A, C, rhs0)


@lru_cache(maxsize=64)
def _source(config: ModelConfig, c: int):
    """Map zeroth-order blocks onto first-order right-hand sides.

    Returns ``(S, k0)``: ``S[k] @ x0[k0[k]]`` is the inhomogeneous term of
    first-order block ``k``; ``k0[k] = -1`` marks blocks without a source.
    """
    fam0, fam1 = _family(config, 0), _family(config, c)
    MP = operators(config)[3]
    S_full = 1j * _sup(MP if c > 0 else MP.conj().T)
    K = fam1.a_values.size
    S = np.zeros((K, N_EL, N_EL), complex)
    k0 = np.full(K, -1)
    for k, a in enumerate(fam1.a_values):
        j = fam0.block_of(int(a))
        if j is None:
            continue
        rows = fam1.present[k].copy()
        if fam1.trace_rows[k]:
            rows[0] = False
        S[k] = np.where(rows[:, None], S_full, 0)
        k0[k] = j
    S.setflags(write=False)
    k0.setflags(write=False)
    return S, k0


def _first_rhs(config: ModelConfig, c: int, x0):
    """Right-hand sides for probe order ``c``; ``x0`` is ``(..., K0, 16)``."""
    S, k0 = _source(config, c)
    x0 = np.asarray(x0)
    out = np.zeros(x0.shape[:-2] + (k0.size, N_EL), complex)
    ok = k0 >= 0
    out[..., ok, :] = np.einsum("kij,...kj->...ki", S[ok], x0[..., k0[ok], :])
    return out


# -- single-point sparse path ---------------------------------------------------

def _assemble(fam: _Family, freqs):
    K = fam.a_values.size
    idx = -np.ones((K, N_EL), dtype=int)
    idx[fam.present] = np.arange(int(fam.present.sum()))
    w = np.asarray(freqs, dtype=float)
    rows, cols, vals = [], [], []

    def put(k_row, k_col, block):
        r, q = np.nonzero(block)
        keep = (idx[k_row, r] >= 0) & (idx[k_col, q] >= 0)
        rows.append(idx[k_row, r[keep]])
        cols.append(idx[k_col, q[keep]])
        vals.append(block[r[keep], q[keep]])

    for k in range(K):
        D = fam.D0[k] - 1j * np.diag(fam.diag_coef[k] @ w)
        put(k, k, D)
        if k > 0:
            put(k, k - 1, fam.A[k])
        if k < K - 1:
            put(k, k + 1, fam.C[k])
    n = int(fam.present.sum())
    M = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n))
    return M, idx


def _sparse_solve(fam: _Family, freqs, rhs_blocks):
    M, idx = _assemble(fam, freqs)
    b = rhs_blocks[fam.present]
    try:
        lu = spla.splu(M)
    except RuntimeError as exc:
        raise SolverError(f"singular harmonic system: {exc}") from exc
    x = lu.solve(b)
    bn = np.linalg.norm(b)
    res = float(np.linalg.norm(M @ x - b) / bn) if bn > 0 else float(np.linalg.norm(M @ x))
    if not np.all(np.isfinite(x)) or res > tolerances.RESIDUAL:
        op = spla.LinearOperator(M.shape, matvec=lu.solve, dtype=complex)
        cond = spla.onenormest(M) * spla.onenormest(op)
        raise SolverError(f"ill-conditioned harmonic system: residual {res:.3g}, "
                          f"condition estimate {cond:.3g}")
    out = np.zeros(fam.present.shape, complex)
    out[fam.present] = x
    return out, res, M.shape[0]


def _same_solution(config: ModelConfig, c: int, w, x, rhs_fn) -> bool:
    """Re-solve with one more harmonic order and compare on the shared labels."""
    import dataclasses

    bigger = dataclasses.replace(config, truncation=config.truncation + 1)
    fam, fam_b = _family(config, c), _family(bigger, c)
    xb, _, _ = _sparse_solve(fam_b, w, rhs_fn(bigger))
    scale = max(np.abs(xb).max(), np.abs(x).max())
    if scale == 0:
        return True
    diff = 0.0
    for k, a in enumerate(fam.a_values):
        kb = fam_b.block_of(int(a))
        diff = max(diff, np.abs(np.where(fam.present[k], x[k] - xb[kb], 0)).max())
    shared = 0.0
    for kb, a in enumerate(fam_b.a_values):
        k = fam.block_of(int(a))
        extra = fam_b.present[kb] if k is None else fam_b.present[kb] & ~fam.present[k]
        shared = max(shared, np.abs(np.where(extra, xb[kb], 0)).max())
    return bool(max(diff, shared) <= tolerances.TRUNCATION * scale)


def _to_coefficients(fam: _Family, x, coeffs: dict):
    for k, a in enumerate(fam.a_values):
        for e in map(int, np.nonzero(fam.present[k])[0]):
            coeffs[(e // 4, e % 4, int(a), fam.harmonic_b(k, e), fam.c)] = complex(x[k, e])


def _blocks_from_hdm(fam: _Family, rho: HarmonicDensityMatrix):
    x = np.zeros(fam.present.shape, complex)
    for k, a in enumerate(fam.a_values):
        for e in np.nonzero(fam.present[k])[0]:
            x[k, e] = rho.get(e // 4, e % 4, int(a), fam.harmonic_b(k, e), fam.c)
    return x


def _check_freqs(atomic_freqs):
    w = tuple(float(v) for v in atomic_freqs)
    if len(w) != 3 or not all(np.isfinite(w)):
        raise ValueError("atomic_freqs must be three finite numbers (w_F, w_B, w_P)")
    return w


def solve_zeroth_order(config: ModelConfig, atomic_freqs):
    """Pump-only steady state at one velocity class.

    ``atomic_freqs`` are the atomic-frame ``(w_F, w_B, w_P)``; the probe is
    ignored at this order.  Returns ``(HarmonicDensityMatrix, SolveReport)``.
    """
    if config.truncation < 1:
        raise TruncationError("truncation must be >= 1 to couple neighbouring harmonics")
    w = _check_freqs(atomic_freqs)
    fam = _family(config, 0)
    x, res, n = _sparse_solve(fam, w, np.asarray(fam.rhs0))
    coeffs: dict = {}
    _to_coefficients(fam, x, coeffs)
    rho = HarmonicDensityMatrix("zeroth", coeffs, config.truncation)
    conv = _same_solution(config, 0, w, x, lambda cfg: np.asarray(_family(cfg, 0).rhs0))
    return rho, SolveReport(res, n, conv)


def solve_first_order(config: ModelConfig, atomic_freqs, rho0: HarmonicDensityMatrix):
    """Response linear in the probe Rabi frequency, both probe orders ``c = +-1``."""
    if rho0.order != "zeroth":
        raise ValueError("rho0 must be a zeroth-order solution")
    if rho0.truncation < config.truncation:
        raise TruncationError(f"rho0 truncated at {rho0.truncation}, source needs "
                              f"harmonics up to {config.truncation}")
    w = _check_freqs(atomic_freqs)
    fam0 = _family(config, 0)
    x0 = _blocks_from_hdm(fam0, rho0)
    coeffs: dict = {}
    worst, n_tot, conv = 0.0, 0, True
    for c in (-1, 1):
        fam = _family(config, c)
        x, res, n = _sparse_solve(fam, w, _first_rhs(config, c, x0))
        _to_coefficients(fam, x, coeffs)
        worst, n_tot = max(worst, res), n_tot + n
        conv = conv and _same_solution(config, c, w, x, _bigger_rhs(config, c, w))
    rho = HarmonicDensityMatrix("first", coeffs, config.truncation)
    return rho, SolveReport(worst, n_tot, conv)


def _bigger_rhs(config: ModelConfig, c: int, w):
    def rhs(cfg):
        fam0 = _family(cfg, 0)
        x0, _, _ = _sparse_solve(fam0, w, np.asarray(fam0.rhs0))
        return _first_rhs(cfg, c, x0)
    return rhs


def conjugate_amplitude(rhoP: HarmonicDensityMatrix) -> complex:
    """``sigma_ac + sigma_ad`` at harmonic ``(1, 1, -1)``: the phase-matched conjugate."""
    if rhoP.order != "first":
        raise ValueError("conjugate amplitude needs a first-order solution")
    if rhoP.truncation < 2:
        raise TruncationError("harmonic (1, 1, -1) needs truncation >= 2")
    return rhoP.get("a", "c", 1, 1, -1) + rhoP.get("a", "d", 1, 1, -1)


def _single_amplitude(config: ModelConfig, w) -> complex:
    rho0, _ = solve_zeroth_order(config, w)
    rhoP, _ = solve_first_order(config, w, rho0)
    return conjugate_amplitude(rhoP)


def check_truncation(config: ModelConfig, atomic_freqs, tol: float = tolerances.TRUNCATION,
                     start: int = 2, limit: int = 64) -> int:
    """Smallest order in the doubling sequence ``start, 2 start, ...`` that agrees
    with the next one to relative ``tol`` in the conjugate amplitude."""
    import dataclasses

    n = start
    prev = _single_amplitude(dataclasses.replace(config, truncation=n), atomic_freqs)
    while 2 * n <= limit:
        cur = _single_amplitude(dataclasses.replace(config, truncation=2 * n), atomic_freqs)
        if abs(cur - prev) <= tol * abs(cur):
            return n
        n, prev = 2 * n, cur
    raise TruncationError(f"conjugate amplitude not converged by truncation {limit}; "
                          "fields too strong for the harmonic expansion")


# -- batched path ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class _Compact:
    """A family restricted to the unknowns connected to its right-hand side.

    Unknowns outside the connected component of the source are exactly zero,
    so dropping them leaves the solution unchanged.  The survivors are
    regrouped by F index into blocks of width ``m``, padded with identity rows.
    """

    a_values: np.ndarray      # (K,)
    D0: np.ndarray            # (K, m, m)
    diag_coef: np.ndarray     # (K, m, 3)
    A: np.ndarray
    C: np.ndarray
    slot: np.ndarray          # (K_full, 16, 2) compact (block, slot) or -1

    def block_of(self, a: int) -> int | None:
        hit = np.nonzero(self.a_values == a)[0]
        return int(hit[0]) if hit.size else None


def _connected(fam: _Family, seeds: np.ndarray) -> np.ndarray:
    """Unknowns linked to ``seeds`` through any nonzero matrix entry."""
    K = fam.a_values.size
    keep = seeds & fam.present
    stack = list(zip(*np.nonzero(keep)))
    while stack:
        k, e = stack.pop()
        nbrs = [(k, fam.D0[k, e, :] != 0), (k, fam.D0[k, :, e] != 0)]
        if k > 0:
            nbrs += [(k - 1, fam.A[k, e, :] != 0), (k - 1, fam.C[k - 1, :, e] != 0)]
        if k < K - 1:
            nbrs += [(k + 1, fam.C[k, e, :] != 0), (k + 1, fam.A[k + 1, :, e] != 0)]
        for kk, mask in nbrs:
            new = mask & fam.present[kk] & ~keep[kk]
            for ee in np.nonzero(new)[0]:
                keep[kk, ee] = True
                stack.append((kk, int(ee)))
    return keep


def _compact(fam: _Family, keep: np.ndarray) -> _Compact:
    rows = [np.nonzero(keep[k])[0] for k in range(keep.shape[0])]
    used = [k for k, r in enumerate(rows) if r.size]
    m = max(r.size for r in rows)
    K = len(used)
    D0 = np.zeros((K, m, m), complex)
    D0[:, np.arange(m), np.arange(m)] = 1.0
    A = np.zeros((K, m, m), complex)
    C = np.zeros_like(A)
    dc = np.zeros((K, m, 3))
    slot = -np.ones(keep.shape + (2,), dtype=int)
    for kc, k in enumerate(used):
        r = rows[k]
        n = r.size
        slot[k, r, 0] = kc
        slot[k, r, 1] = np.arange(n)
        D0[kc, :n, :n] = fam.D0[k][np.ix_(r, r)]
        dc[kc, :n] = fam.diag_coef[k][r]
        if kc > 0:
            rp = rows[used[kc - 1]]
            A[kc, :n, :rp.size] = fam.A[k][np.ix_(r, rp)]
        if kc < K - 1:
            rn = rows[used[kc + 1]]
            C[kc, :n, :rn.size] = fam.C[k][np.ix_(r, rn)]
    a_vals = fam.a_values[used]
    for arr in (a_vals, D0, dc, A, C, slot):
        arr.setflags(write=False)
    return _Compact(a_vals, D0, dc, A, C, slot)


class BatchSolver:
    """Zeroth plus first-order (``c = -1``) solves for many frequency triples.

    The ``c = +1`` coefficients follow from Hermiticity,
    ``sigma_ij^(a,b,+1) = conj(sigma_ji^(-a,-b,-1))``, so only one probe
    order is solved here.  Both systems are pruned to the unknowns that
    the sources actually reach before elimination.
    """

    def __init__(self, config: ModelConfig, kernel: str | None = None):
        if config.truncation < 2:
            raise TruncationError("harmonic (1, 1, -1) needs truncation >= 2")
        self.config = config
        fam0, fam1 = _family(config, 0), _family(config, -1)
        keep0 = _connected(fam0, fam0.rhs0 != 0)
        S, k0 = _source(config, -1)
        seeds1 = np.zeros_like(fam1.present)
        for k in range(k0.size):
            if k0[k] >= 0:
                seeds1[k] = (S[k][:, keep0[k0[k]]] != 0).any(axis=1)
        keep1 = _connected(fam1, seeds1)
        self.c0, self.c1 = _compact(fam0, keep0), _compact(fam1, keep1)
        self.rhs0 = np.zeros(self.c0.D0.shape[:2], complex)
        for k, e in zip(*np.nonzero(keep0)):
            kc, s = self.c0.slot[k, e]
            self.rhs0[kc, s] = fam0.rhs0[k, e]
        # compact source: rhs1[kc] = Sc[kc] @ x0[k0c[kc]]
        m0, m1 = self.c0.D0.shape[1], self.c1.D0.shape[1]
        self.Sc = np.zeros((self.c1.a_values.size, m1, m0), complex)
        self.k0c = np.full(self.c1.a_values.size, -1)
        for k in range(k0.size):
            if k0[k] < 0 or not keep1[k].any():
                continue
            kc = self.c1.slot[k, keep1[k]][0, 0]
            r = np.nonzero(keep1[k])[0]
            q = np.nonzero(keep0[k0[k]])[0]
            if q.size == 0:
                continue
            self.k0c[kc] = self.c0.slot[k0[k], q[0], 0]
            self.Sc[kc][np.ix_(self.c1.slot[k, r, 1], self.c0.slot[k0[k], q, 1])] = \
                S[k][np.ix_(r, q)]
        self._solve = (backend.block_tridiag_solve if kernel is None
                       else backend.get(kernel).block_tridiag_solve)
        self._conj_slots = [tuple(self.c1.slot[fam1.block_of(1), e]) for e in (2, 3)]
        self._probe_slots = [tuple(self.c1.slot[fam1.block_of(0), e]) for e in (9, 13)]

    @property
    def n_unknowns(self) -> tuple[int, int]:
        return (int((self.c0.slot[..., 0] >= 0).sum()), int((self.c1.slot[..., 0] >= 0).sum()))

    def solve(self, freqs, threads: int = 1):
        """Return the compact ``c = -1`` solution, shape ``(n, K1, m1)``."""
        f = np.ascontiguousarray(np.atleast_2d(freqs), dtype=float)
        c0, c1 = self.c0, self.c1
        rhs0 = np.broadcast_to(self.rhs0, (f.shape[0],) + self.rhs0.shape)
        x0 = self._solve(c0.D0, c0.diag_coef, c0.A, c0.C, f, rhs0, threads)
        rhs1 = np.zeros((f.shape[0],) + c1.D0.shape[:2], complex)
        ok = self.k0c >= 0
        rhs1[:, ok] = np.einsum("kij,nkj->nki", self.Sc[ok], x0[:, self.k0c[ok]])
        return self._solve(c1.D0, c1.diag_coef, c1.A, c1.C, f, rhs1, threads)

    def _pick(self, x1, slot):
        k, s = slot
        if k < 0:
            return np.zeros(x1.shape[0], complex)
        return x1[:, k, s]

    def element(self, x1, i, j, a: int):
        """``sigma_ij`` of the ``c = -1`` family in F block ``a`` (zero if pruned)."""
        fam1 = _family(self.config, -1)
        k = fam1.block_of(a)
        if k is None:
            return np.zeros(x1.shape[0], complex)
        return self._pick(x1, tuple(self.c1.slot[k, 4 * _lvl(i) + _lvl(j)]))

    def conjugate(self, x1):
        return sum(self._pick(x1, s) for s in self._conj_slots)

    def probe_absorption(self, x1):
        """Dipole-weighted ``Im(sign_bc sigma_bc + sign_bd sigma_bd)`` at ``(0, 0, +1)``."""
        lv = self.config.levels
        cb, db = (self._pick(x1, s) for s in self._probe_slots)
        coh = lv.sign_bc * np.conj(cb) + lv.sign_bd * np.conj(db)
        return coh.imag
