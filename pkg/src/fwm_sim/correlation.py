"""Normalized intensity cross-correlation of the conjugate and probe channels.

``g2`` is the lag-domain correlation

    G2(tau) = <dI_C(t) dI_P(t + tau)> / sqrt(<dI_C^2> <dI_P^2>),

where ``<.>`` is the sample mean over an integration window of length T and
``dI = I - <I>`` uses the mean of the window it belongs to.  With several
windows per lag the per-window coefficients are averaged, so
``|G2| <= 1`` holds term by term.

``correlation_spectrum`` is the frequency-domain counterpart: the real part
of the segment-averaged cross-spectral density, divided by the geometric
mean of the two auto-spectral densities.

``synth_two_channel`` generates a synthetic pair by passing slow laser
frequency jitter through the static response curves of the model: the
conjugate intensity from a pump scan and the probe transmission
``exp(-od * alpha / alpha_max)`` from the saturated-absorption reference.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import spectra
from .model import ModelConfig, config_hash, validate_config

__all__ = [
    "ZeroVarianceError",
    "CsvFormatError",
    "TimeSeriesPair",
    "CorrelationResult",
    "CrossSpectrum",
    "g2",
    "correlation_spectrum",
    "synth_two_channel",
    "response_curves",
    "read_pair_csv",
    "write_pair_csv",
    "write_g2_csv",
    "write_spectrum_csv",
]

BOUND_SLACK = 1e-9
MIN_SEGMENTS = 4
RESPONSE_STEP = 0.01     # grid step of the precomputed response curves, Gamma
RESPONSE_HALF = 3.0      # minimum half-width of that grid, Gamma
PAIR_HEADER = "t,i_c,i_p"


class ZeroVarianceError(ValueError):
    """A channel is constant over an integration window."""


class CsvFormatError(ValueError):
    """Malformed two-channel CSV; ``lineno`` is 1-based."""

    def __init__(self, path, lineno: int, message: str):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


@dataclass(frozen=True)
class TimeSeriesPair:
    i_c: np.ndarray
    i_p: np.ndarray
    dt_sample: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        i_c = np.ascontiguousarray(self.i_c, dtype=float)
        i_p = np.ascontiguousarray(self.i_p, dtype=float)
        if i_c.ndim != 1 or i_c.shape != i_p.shape:
            raise ValueError("channels must be 1-D and of equal length")
        if not (self.dt_sample > 0 and math.isfinite(self.dt_sample)):
            raise ValueError("dt_sample must be positive and finite")
        if not (np.all(np.isfinite(i_c)) and np.all(np.isfinite(i_p))):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "i_c", i_c)
        object.__setattr__(self, "i_p", i_p)

    @property
    def length(self) -> int:
        return self.i_c.size

    @property
    def duration(self) -> float:
        return self.length * self.dt_sample

    def swapped(self) -> "TimeSeriesPair":
        return TimeSeriesPair(self.i_p, self.i_c, self.dt_sample, dict(self.meta))


@dataclass(frozen=True)
class CorrelationResult:
    lags: np.ndarray
    g2: np.ndarray
    window_T: float
    n_windows: np.ndarray

    def __post_init__(self):
        if np.any(np.abs(self.g2) > 1.0 + BOUND_SLACK):
            raise ArithmeticError("normalized correlation exceeds 1 in magnitude")

    def at(self, lag: float = 0.0) -> float:
        return float(self.g2[int(np.argmin(np.abs(self.lags - lag)))])


@dataclass(frozen=True)
class CrossSpectrum:
    frequency: np.ndarray
    value: np.ndarray
    power_c: np.ndarray
    power_p: np.ndarray
    segment_length: int
    n_segments: int
    normalization: str = "Re(<X_c^* X_p>) / sqrt(<|X_c|^2> <|X_p|^2>)"


def _samples(x, dt: float, what: str) -> int:
    n = x / dt
    k = int(round(n))
    if k < 0 or abs(n - k) > 1e-9 * max(1.0, abs(n)):
        raise ValueError(f"{what} = {x} is not a non-negative multiple of dt_sample")
    return k


def _flat(x, ss) -> bool:
    # a constant window leaves only rounding residue after the mean is removed
    scale = np.max(np.abs(x), axis=1)
    return bool(np.any(np.sqrt(ss / x.shape[1]) <= 1e-12 * scale))


def _pearson(x, y):
    """Row-wise correlation coefficient; rows are windows."""
    dx = x - x.mean(axis=1, keepdims=True)
    dy = y - y.mean(axis=1, keepdims=True)
    sxx = np.einsum("ij,ij->i", dx, dx)
    syy = np.einsum("ij,ij->i", dy, dy)
    if _flat(x, sxx) or _flat(y, syy):
        raise ZeroVarianceError("a channel has zero variance within an integration window")
    r = np.einsum("ij,ij->i", dx, dy) / np.sqrt(sxx * syy)
    return np.clip(r, -1.0, 1.0)


def _windows(x, start: int, stop: int, width: int):
    """Non-overlapping windows of ``width`` samples tiling ``x[start:stop]``."""
    k = (stop - start) // width
    return x[start:start + k * width].reshape(k, width)


def g2(pair: TimeSeriesPair, max_lag: float = 0.0, window_T: float | None = None) -> CorrelationResult:
    """Normalized cross-correlation on the lag grid ``[-max_lag, +max_lag]``.

    ``max_lag`` and ``window_T`` are in the units of ``dt_sample`` and must be
    whole multiples of it.  For each lag the conjugate channel is cut into
    non-overlapping windows of length ``window_T`` and paired with the probe
    channel shifted by the lag; each window is normalized with its own means
    and the coefficients are averaged.  ``window_T`` defaults to the longest
    window that fits, ``duration - max_lag``.

    Raises
    ------
    ValueError
        If ``max_lag`` or ``window_T`` do not fit the data.
    ZeroVarianceError
        If either channel is constant over some window.
    """
    dt = pair.dt_sample
    n = pair.length
    L = _samples(max_lag, dt, "max_lag")
    if L >= n:
        raise ValueError(f"max_lag of {L} samples exceeds the {n}-sample series")
    W = n - L if window_T is None else _samples(window_T, dt, "window_T")
    if W < 2:
        raise ValueError("window_T must span at least two samples")
    if W + L > n:
        raise ValueError(f"window_T + max_lag = {W + L} samples exceeds the {n}-sample series")
    lags = np.arange(-L, L + 1)
    out = np.empty(lags.size)
    counts = np.empty(lags.size, dtype=int)
    for k, tau in enumerate(lags):
        lo = max(0, -tau)
        hi = n - max(0, tau)
        c = _windows(pair.i_c, lo, hi, W)
        p = _windows(pair.i_p, lo + tau, hi + tau, W)
        r = _pearson(c, p)
        out[k] = r.mean()
        counts[k] = r.size
    return CorrelationResult(lags * dt, out, W * dt, counts)


def correlation_spectrum(pair: TimeSeriesPair, segment_length: int = 256) -> CrossSpectrum:
    """Signed, normalized cross-spectrum averaged over non-overlapping segments.

    Each segment has its own mean removed and a Hann taper applied.  The DC
    bin is dropped.  Bins where either channel has no power report 0.

    Raises
    ------
    ValueError
        If ``segment_length`` is not a power of two or fewer than four
        segments fit in the series.
    """
    m = int(segment_length)
    if m < 2 or m & (m - 1):
        raise ValueError(f"segment_length must be a power of two, got {segment_length}")
    n_seg = pair.length // m
    if n_seg < MIN_SEGMENTS:
        raise ValueError(f"only {n_seg} segments of {m} samples; at least {MIN_SEGMENTS} are needed")
    taper = np.hanning(m)

    def transform(x):
        seg = x[:n_seg * m].reshape(n_seg, m)
        seg = seg - seg.mean(axis=1, keepdims=True)
        return np.fft.rfft(seg * taper, axis=1)[:, 1:]

    xc = transform(pair.i_c)
    xp = transform(pair.i_p)
    cross = (np.conj(xc) * xp).mean(axis=0)
    pc = (np.abs(xc) ** 2).mean(axis=0)
    pp = (np.abs(xp) ** 2).mean(axis=0)
    denom = np.sqrt(pc * pp)
    tiny = np.finfo(float).tiny
    value = np.where(denom > tiny, cross.real / np.where(denom > tiny, denom, 1.0), 0.0)
    value = np.clip(value, -1.0, 1.0)
    freq = np.fft.rfftfreq(m, pair.dt_sample)[1:]
    return CrossSpectrum(freq, value, pc, pp, m, n_seg)


# -- synthetic two-channel signal -------------------------------------------------

@functools.lru_cache(maxsize=16)
def _curves(config: ModelConfig, lo: float, hi: float, pump_rabi: float,
            threads: int | None, scheme: str):
    axis = np.round(np.arange(lo, hi + 0.5 * RESPONSE_STEP, RESPONSE_STEP), 12)
    rc = spectra.pump_scan(config, axis, threads=threads, scheme=scheme).values
    alpha = spectra.satabs_reference(config, axis, pump_rabi=pump_rabi,
                                     threads=threads, scheme=scheme).values
    return axis, rc, alpha


def response_curves(config: ModelConfig, omega_center: float, half_width: float = RESPONSE_HALF, *,
                    pump_rabi: float | None = None, threads: int | None = None,
                    scheme: str = "resonance-adapted"):
    """Pump-scan intensity and satabs absorption on a dense grid around ``omega_center``.

    Returns ``(axis, R_C, alpha)``; the grid points are whole multiples of
    ``RESPONSE_STEP`` so that nearby centres share cached curves.
    """
    d = config.levels.delta_F
    if not (-d <= omega_center <= d):
        raise ValueError(f"omega_center = {omega_center} lies outside the response grid [-{d}, {d}]")
    lo = math.floor((omega_center - half_width) / RESPONSE_STEP) * RESPONSE_STEP
    hi = math.ceil((omega_center + half_width) / RESPONSE_STEP) * RESPONSE_STEP
    pump = spectra.SATABS_PUMP if pump_rabi is None else float(pump_rabi)
    return _curves(config, round(lo, 12), round(hi, 12), pump, threads, scheme)


def _ar1(rng, n: int, rms: float, phi: float):
    """Stationary first-order autoregressive sequence with standard deviation ``rms``."""
    xi = rng.standard_normal(n)
    x = np.empty(n)
    x[0] = rms * xi[0]
    s = rms * math.sqrt(1.0 - phi * phi)
    for k in range(1, n):
        x[k] = phi * x[k - 1] + s * xi[k]
    return x


def synth_two_channel(config: ModelConfig, omega_center: float, jitter_rms: float,
                      n_samples: int = 16384, dt_sample: float = 1.0, seed: int = 0, *,
                      corr_time: float | None = None, od: float = 1.0, noise: float = 1e-4,
                      pump_rabi: float | None = None, threads: int | None = None,
                      scheme: str = "resonance-adapted") -> TimeSeriesPair:
    """Conjugate and probe intensities under slow laser-frequency jitter.

    Parameters
    ----------
    omega_center
        Mean laser detuning from ``omega_co``, in Gamma.
    jitter_rms
        Standard deviation of the frequency jitter, in Gamma.
    corr_time
        Correlation time of the AR(1) jitter; defaults to ``10 * dt_sample``.
    od
        Optical depth at the largest absorption on the response grid.
    noise
        Standard deviation of the detection noise, as a fraction of each
        channel's mean level.
    pump_rabi
        Saturating pump of the absorption reference (default
        ``spectra.SATABS_PUMP``).

    Both channels are the response curves interpolated linearly at the
    jittered frequency; the jitter is static in the sense that the atoms
    follow it adiabatically.  The generator is seeded, so a fixed seed
    reproduces the samples bit for bit.
    """
    config = validate_config(config)
    if jitter_rms < 0 or not math.isfinite(jitter_rms):
        raise ValueError("jitter_rms must be finite and non-negative")
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    if od < 0 or noise < 0:
        raise ValueError("od and noise must be non-negative")
    tc = 10.0 * dt_sample if corr_time is None else float(corr_time)
    if tc < 0:
        raise ValueError("corr_time must be non-negative")
    half = max(RESPONSE_HALF, 6.0 * jitter_rms)
    axis, rc, alpha = response_curves(config, float(omega_center), half, pump_rabi=pump_rabi,
                                      threads=threads, scheme=scheme)
    amax = float(np.max(alpha))
    rp = np.exp(-od * alpha / amax) if amax > 0 else np.ones_like(alpha)

    rng = np.random.default_rng(seed)
    phi = math.exp(-dt_sample / tc) if tc > 0 else 0.0
    w = omega_center + _ar1(rng, int(n_samples), float(jitter_rms), phi)
    i_c = np.interp(w, axis, rc)
    i_p = np.interp(w, axis, rp)
    nc = rng.standard_normal(int(n_samples))
    npr = rng.standard_normal(int(n_samples))
    i_c = i_c + noise * float(np.mean(rc)) * nc
    i_p = i_p + noise * float(np.mean(rp)) * npr
    meta = {"config_hash": config_hash(config), "omega_center": float(omega_center),
            "jitter_rms": float(jitter_rms), "seed": int(seed), "corr_time": tc,
            "od": float(od), "noise": float(noise)}
    return TimeSeriesPair(i_c, i_p, float(dt_sample), meta)


# -- CSV ----------------------------------------------------------------------------

def read_pair_csv(path) -> TimeSeriesPair:
    """Read ``t,i_c,i_p`` samples; the header line is mandatory, ``#`` lines are skipped.

    The time column must be uniformly spaced.  Every problem is reported as a
    :class:`CsvFormatError` carrying the offending line number.
    """
    rows = []
    header_seen = False
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if not header_seen:
                if line.replace(" ", "") != PAIR_HEADER:
                    raise CsvFormatError(path, lineno, f"expected header {PAIR_HEADER!r}, got {line!r}")
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise CsvFormatError(path, lineno, f"expected 3 columns, got {len(parts)}")
            try:
                vals = [float(p) for p in parts]
            except ValueError:
                raise CsvFormatError(path, lineno, f"non-numeric value in {line!r}") from None
            if not all(math.isfinite(v) for v in vals):
                raise CsvFormatError(path, lineno, "non-finite value")
            rows.append((lineno, vals))
    if not header_seen:
        raise CsvFormatError(path, 1, f"missing header {PAIR_HEADER!r}")
    if len(rows) < 2:
        raise CsvFormatError(path, rows[-1][0] if rows else 1, "need at least two samples")
    data = np.array([r[1] for r in rows])
    t = data[:, 0]
    dt = t[1] - t[0]
    if not dt > 0:
        raise CsvFormatError(path, rows[1][0], "time column must increase")
    steps = np.diff(t)
    bad = np.nonzero(np.abs(steps - dt) > 1e-6 * dt)[0]
    if bad.size:
        raise CsvFormatError(path, rows[bad[0] + 1][0], "time column is not uniformly sampled")
    # the mean step is the better estimate once uniformity is established
    dt = (t[-1] - t[0]) / (t.size - 1)
    return TimeSeriesPair(data[:, 1], data[:, 2], float(dt), {"source": str(path)})


def _write(path, header: str, columns: str, rows) -> None:
    fmt = spectra.format_value
    lines = [header, columns] + [",".join(fmt(v) for v in row) for row in rows]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_pair_csv(pair: TimeSeriesPair, path) -> None:
    t = np.arange(pair.length) * pair.dt_sample
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(PAIR_HEADER + "\n")
        for row in zip(t, pair.i_c, pair.i_p):
            fh.write(",".join(spectra.format_value(v) for v in row) + "\n")


def write_g2_csv(result: CorrelationResult, path, tag: str = "") -> None:
    header = f"# kind=g2, window_T={spectra.format_value(result.window_T)}{tag}"
    _write(path, header, "lag,g2", zip(result.lags, result.g2))


def write_spectrum_csv(cs: CrossSpectrum, path, tag: str = "") -> None:
    header = (f"# kind=correlation_spectrum, segment_length={cs.segment_length}, "
              f"n_segments={cs.n_segments}{tag}")
    _write(path, header, "frequency,value", zip(cs.frequency, cs.value))
