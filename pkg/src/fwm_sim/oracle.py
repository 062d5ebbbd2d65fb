"""Brute-force time-domain integration of the full Bloch equations.

Used to validate the harmonic solver: the density matrix of a single velocity
class is propagated with all three fields and their time-dependent phases,
without any perturbative split, and harmonic coefficients are recovered by
demodulating the steady-state trajectory.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce

import numpy as np

from . import backend, tolerances
from .model import ModelConfig, to_atomic_frame

__all__ = ["TimeEvolution", "integrate_time_domain", "demodulate", "fundamental_frequency",
           "dump_trajectory_csv"]


@dataclass(frozen=True)
class TimeEvolution:
    times: np.ndarray          # (M,)
    rho_samples: np.ndarray    # (M, 4, 4)
    dt: float
    sample_interval: float
    atomic_freqs: tuple
    base_period: float | None  # common period of all field phases, if one exists
    trace_drift: float


def fundamental_frequency(freqs, max_den: int = 1000, rtol: float = 1e-12):
    """Largest ``w0`` with every nonzero entry of ``freqs`` an integer multiple of it.

    Returns ``None`` when the frequencies are not commensurate with
    denominators up to ``max_den``.
    """
    nz = [abs(float(f)) for f in freqs if f != 0]
    if not nz:
        return None
    fracs = []
    for f in nz:
        q = Fraction(f).limit_denominator(max_den)
        if abs(float(q) - f) > rtol * max(1.0, f):
            return None
        fracs.append(q)
    num = reduce(math.gcd, (q.numerator * (reduce(math.lcm, [p.denominator for p in fracs]) // q.denominator)
                            for q in fracs))
    den = reduce(math.lcm, [q.denominator for q in fracs])
    return num / den


def _bloch_terms(config: ModelConfig):
    lv, fs, rx = config.levels, config.fields, config.relaxation
    h0 = np.array([0.0, 0.0, lv.omega_c, lv.omega_d])
    K = np.zeros((3, 4, 4), complex)
    # exp(+i w t) parts: F on |a><c|, |a><d|; B and P on |b><c|, |b><d|
    K[0, 0, 2] = K[0, 0, 3] = fs.rabi_F / 2
    for n, rabi in ((1, fs.rabi_B), (2, fs.rabi_P)):
        K[n, 1, 2] = lv.sign_bc * rabi / 2
        K[n, 1, 3] = lv.sign_bd * rabi / 2
    G, g = rx.gamma_e, rx.gamma_g
    gam = np.full((4, 4), G / 2)    # ground-excited optical coherences
    gam[0, 1] = gam[1, 0] = g
    gam[2, 3] = gam[3, 2] = G
    np.fill_diagonal(gam, 0.0)
    gt, br = rx.transit_feed, rx.branching
    pop = np.array([
        [-gt / 2, gt / 2, G * br, G * br],
        [gt / 2, -gt / 2, G * br, G * br],
        [0.0, 0.0, -G, 0.0],
        [0.0, 0.0, 0.0, -G],
    ])
    return h0, K, gam, pop


def max_step(config: ModelConfig, atomic_freqs) -> float:
    lv, fs = config.levels, config.fields
    scale = max(config.relaxation.gamma_e, *map(abs, atomic_freqs), abs(lv.omega_c),
                abs(lv.omega_d), fs.rabi_F, fs.rabi_B, fs.rabi_P)
    return 0.01 / scale


def integrate_time_domain(config: ModelConfig, v: float, t_final: float, dt: float | None = None,
                          *, require_steady: bool = True, keep: float = 0.5,
                          kernel: str | None = None) -> TimeEvolution:
    """RK4-propagate the velocity class ``v`` from equal ground populations.

    The step is the largest one not exceeding ``dt`` (default: the stability
    bound) that divides the sampling interval, and when the field phases are
    commensurate the sampling interval divides their common period, so that
    demodulation windows hold whole periods.  Only the last ``keep`` fraction
    of the trajectory is returned.
    """
    freqs = tuple(float(f) for f in to_atomic_frame(config.fields, v, config.doppler.ku))
    bound = max_step(config, freqs)
    if dt is None:
        dt = bound
    elif dt > bound * (1 + 1e-12):
        raise ValueError(f"dt={dt:.3g} exceeds the stability bound {bound:.3g}")
    if require_steady and t_final < 20.0 / config.relaxation.gamma_g:
        raise ValueError("t_final must be >= 20/gamma_g to reach the steady state")

    top = 3.0 * max(map(abs, freqs)) + 1.0
    h_target = min(0.05, 0.25 * math.pi / top)
    w0 = fundamental_frequency(freqs)
    if w0 is not None:
        base = 2 * math.pi / w0
        per = math.ceil(base / h_target)
        h = base / per
    else:
        base = None
        h = h_target
    sub = max(1, math.ceil(h / dt * (1 - 1e-12)))
    dt = h / sub
    n_samples = int(t_final / h)
    h0, K, gam, pop = _bloch_terms(config)
    rho0 = np.diag([0.5, 0.5, 0.0, 0.0]).astype(complex)
    kern = backend if kernel is None else backend.get(kernel)
    times, samples, drift = kern.rk4_bloch(h0, K, np.array(freqs), gam, pop, rho0, 0.0, dt,
                                           n_samples * sub, sub)
    times = np.arange(times.size) * h   # exact sample instants
    if drift > tolerances.TRACE_DRIFT:
        raise FloatingPointError(f"trace drift {drift:.3g}: step size too large for stability")
    start = int(round((1 - keep) * (times.size - 1)))
    return TimeEvolution(times[start:], samples[start:], dt, h, freqs, base, float(drift))


def demodulate(evolution: TimeEvolution, element, freq_combo, atomic_freqs=None) -> complex:
    """Average of ``rho_ij(t) exp(-i w t)`` over whole periods of the trajectory.

    ``w = a w_F + b w_B + c w_P`` for ``freq_combo = (a, b[, c])``.  When the
    field phases share a common period the window is the largest whole number
    of those periods, which makes the extraction exact for every harmonic;
    otherwise it is a whole number of periods of ``w`` itself.
    """
    from .floquet import _lvl

    i, j = (_lvl(x) for x in element)
    combo = tuple(freq_combo) + (0,) * (3 - len(freq_combo))
    wF, wB, wP = evolution.atomic_freqs if atomic_freqs is None else atomic_freqs
    w = combo[0] * wF + combo[1] * wB + combo[2] * wP
    h = evolution.sample_interval
    if abs(w) >= math.pi / h:
        raise ValueError(f"frequency {w:.4g} aliases at sample interval {h:.3g}")
    total = evolution.times.size
    if evolution.base_period is not None:
        period = evolution.base_period
    elif w != 0:
        period = 2 * math.pi / abs(w)
    else:
        period = None
    if period is None:
        n = total
    else:
        n_per = int((total * h) // period)
        if n_per < 10:
            raise ValueError("trajectory shorter than 10 periods; integrate longer")
        n = int(round(n_per * period / h))
        n = min(n, total)
    t = evolution.times[-n:]
    sig = evolution.rho_samples[-n:, i, j]
    return complex(np.mean(sig * np.exp(-1j * w * t)))


def dump_trajectory_csv(evolution: TimeEvolution, path, elements=("ac", "ad", "cc")):
    """Write ``t, re(rho_ij), im(rho_ij), ...`` for the requested elements."""
    from .floquet import _lvl

    cols = [evolution.times]
    header = ["t"]
    for el in elements:
        i, j = _lvl(el[0]), _lvl(el[1])
        cols += [evolution.rho_samples[:, i, j].real, evolution.rho_samples[:, i, j].imag]
        header += [f"re_rho_{el}", f"im_rho_{el}"]
    np.savetxt(path, np.column_stack(cols), delimiter=",", header=",".join(header),
               comments="", fmt="%.12g")
