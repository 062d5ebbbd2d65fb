"""Scan drivers: pump scan, probe scan and the saturated-absorption reference.

All detunings are measured from the crossover frequency ``omega_co`` in
units of Gamma.  Every scan point gets its own resonance-adapted velocity
grid; the nodes of all points are then solved in one batch, so threading
happens inside the kernel and the assembly of the spectrum stays in axis
order.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import doppler
from .floquet import SolverError
from .model import ModelConfig, config_hash, config_to_dict

__all__ = [
    "Spectrum",
    "default_axis",
    "default_probe_axis",
    "pump_scan",
    "probe_scan",
    "satabs_reference",
    "satabs_config",
    "SATABS_PUMP",
    "local_maxima",
    "local_minima",
    "fwhm",
    "format_value",
    "write_csv",
    "read_csv",
]

KINDS = ("pump_scan", "probe_scan", "satabs")
SATABS_PUMP = 0.5   # saturating pump Rabi frequency for the reference, in Gamma
NORMALIZATIONS = ("none", "max")


@dataclass(frozen=True)
class Spectrum:
    axis: np.ndarray
    values: np.ndarray
    kind: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown spectrum kind {self.kind!r}")
        if self.axis.shape != self.values.shape:
            raise ValueError("axis and values differ in length")
        if self.axis.size > 1 and not np.all(np.diff(self.axis) > 0):
            raise ValueError("axis must be strictly increasing")

    @property
    def step(self) -> float:
        return float(self.axis[1] - self.axis[0]) if self.axis.size > 1 else 0.0


def _symmetric(half: float, n: int) -> np.ndarray:
    # linspace is not exactly odd about its midpoint; this is
    a = np.linspace(-half, half, n)
    return 0.5 * (a - a[::-1])


def default_axis(config: ModelConfig, n: int = 401) -> np.ndarray:
    """``n`` equally spaced detunings over ``[-delta_F, +delta_F]``, exactly symmetric."""
    return _symmetric(config.levels.delta_F, n)


def default_probe_axis(config: ModelConfig, n: int = 401) -> np.ndarray:
    """``n`` probe offsets over ``+-50 gamma_g``.

    The two-photon line is about ``2 gamma_g`` wide, so this keeps it resolved
    by some 40 points whatever the ground-state decay.
    """
    return _symmetric(50.0 * config.relaxation.gamma_g, n)


def _check_axis(axis) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    if axis.ndim != 1 or axis.size == 0:
        raise ValueError("axis must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(axis)):
        raise ValueError("axis contains non-finite detunings")
    if axis.size > 1 and not np.all(np.diff(axis) > 0):
        raise ValueError("axis must be strictly increasing")
    return axis


def _scan(config: ModelConfig, field_sets, labels, what, threads, scheme):
    """Velocity-averaged observable for each beam setting, in order."""
    grids = []
    for fs in field_sets:
        cfg = dataclasses.replace(config, fields=fs)
        grids.append(doppler.grid_for(cfg, scheme))
    try:
        vals = doppler.evaluate_nodes(config, field_sets, grids, what, threads, labels)
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        raise SolverError(str(exc)) from exc
    weights = np.stack([g.weights for g in grids])
    return doppler._ordered_sum(weights * vals, axis=1)


def _normalize(values, mode: str):
    if mode not in NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {NORMALIZATIONS}")
    if mode == "max":
        top = float(np.max(np.abs(values))) if values.size else 0.0
        return values / top if top > 0 else values.copy()
    return values


def _meta(config: ModelConfig, normalization: str, **extra) -> dict:
    return {"config": config_to_dict(config), "config_hash": config_hash(config),
            "normalization": normalization, **extra}


def pump_scan(config: ModelConfig, axis=None, *, normalization: str = "none",
              threads: int | None = None, scheme: str = "resonance-adapted") -> Spectrum:
    """Conjugate intensity with all three beams at ``omega_co + delta``.

    Records ``|<A>|^2`` where ``<A>`` is the coherent velocity average of the
    conjugate amplitude.  ``normalization="max"`` divides by the scan maximum.
    """
    axis = _check_axis(default_axis(config) if axis is None else axis)
    co = config.levels.omega_co
    sets = [config.fields.tuned(co + d) for d in axis]
    labels = [f"delta={d:.6g}" for d in axis]
    amp = _scan(config, sets, labels, "conjugate", threads, scheme)
    values = _normalize(np.abs(amp) ** 2, normalization)
    return Spectrum(axis, values, "pump_scan", _meta(config, normalization, scheme=scheme))


def probe_scan(config: ModelConfig, omega_F_fixed: float, delta_axis=None, *,
               normalization: str = "none", threads: int | None = None,
               scheme: str = "resonance-adapted") -> Spectrum:
    """Conjugate intensity versus ``omega_P - omega_F`` with ``omega_B = omega_F`` fixed.

    ``omega_F_fixed`` is a detuning from ``omega_co``.  The default axis is
    :func:`default_probe_axis`.
    """
    axis = _check_axis(default_probe_axis(config) if delta_axis is None else delta_axis)
    w = config.levels.omega_co + float(omega_F_fixed)
    sets = [config.fields.tuned(w, d) for d in axis]
    labels = [f"probe offset={d:.6g}" for d in axis]
    amp = _scan(config, sets, labels, "conjugate", threads, scheme)
    values = _normalize(np.abs(amp) ** 2, normalization)
    meta = _meta(config, normalization, scheme=scheme, omega_F=float(omega_F_fixed))
    return Spectrum(axis, values, "probe_scan", meta)


def satabs_config(config: ModelConfig, pump_rabi: float | None = None) -> ModelConfig:
    """Beam assignment for the saturated-absorption reference.

    The saturating pump takes the counterpropagating B slot, so it drives the
    same ``b`` transitions as the co-propagating weak probe; the F slot is
    switched off.  ``pump_rabi`` defaults to :data:`SATABS_PUMP`; the weak
    four-wave-mixing pumps (0.01 Gamma) saturate too little to resolve the
    Lamb dips at the two transitions.
    """
    pump = SATABS_PUMP if pump_rabi is None else float(pump_rabi)
    return config.with_fields(rabi_F=0.0, rabi_B=pump)


def satabs_reference(config: ModelConfig, axis=None, *, pump_rabi: float | None = None,
                     normalization: str = "none", threads: int | None = None,
                     scheme: str = "resonance-adapted") -> Spectrum:
    """Velocity-averaged probe absorption with a counterpropagating saturating pump.

    Pump and probe share the laser frequency ``omega_co + delta``.  The value
    is ``Im(sign_bc sigma_bc + sign_bd sigma_bd)`` at the probe harmonic,
    divided by ``rabi_P`` so that it does not depend on the probe strength.
    Lamb dips appear where one velocity class is resonant with both beams:
    at ``omega_c``, ``omega_d`` and, through the shared ground level, at the
    crossover.
    """
    axis = _check_axis(default_axis(config) if axis is None else axis)
    cfg = satabs_config(config, pump_rabi)
    if cfg.fields.rabi_P <= 0:
        raise ValueError("satabs_reference needs a nonzero probe Rabi frequency")
    co = cfg.levels.omega_co
    sets = [cfg.fields.tuned(co + d) for d in axis]
    labels = [f"delta={d:.6g}" for d in axis]
    alpha = _scan(cfg, sets, labels, "probe_absorption", threads, scheme).real
    values = _normalize(alpha / cfg.fields.rabi_P, normalization)
    meta = _meta(cfg, normalization, scheme=scheme, pump_rabi=cfg.fields.rabi_B)
    return Spectrum(axis, values, "satabs", meta)


# -- lineshape helpers ---------------------------------------------------------

def local_maxima(values, rel_floor: float = 0.0) -> np.ndarray:
    """Indices of strict interior local maxima (plateaus count once, at their centre).

    Maxima below ``rel_floor`` times the global maximum are dropped.
    """
    return _extrema(np.asarray(values, dtype=float), rel_floor, +1)


def local_minima(values) -> np.ndarray:
    """Indices of strict interior local minima."""
    return _extrema(-np.asarray(values, dtype=float), None, +1)


def _extrema(y, rel_floor, sign):
    idx = []
    n = y.size
    i = 1
    while i < n - 1:
        if y[i] > y[i - 1]:
            j = i
            while j < n - 1 and y[j + 1] == y[i]:
                j += 1
            if j < n - 1 and y[j + 1] < y[i]:
                idx.append((i + j) // 2)
            i = j + 1
        else:
            i += 1
    idx = np.array(idx, dtype=int)
    if rel_floor and idx.size:
        idx = idx[y[idx] >= rel_floor * y.max()]
    return idx


def fwhm(spectrum: Spectrum) -> float:
    """Full width at half maximum of the highest peak, by linear interpolation.

    Returns ``nan`` if the half-maximum level is not crossed on both sides
    within the axis.
    """
    x, y = spectrum.axis, spectrum.values
    k = int(np.argmax(y))
    half = 0.5 * y[k]
    left = np.nonzero(y[:k] < half)[0]
    right = np.nonzero(y[k:] < half)[0]
    if left.size == 0 or right.size == 0:
        return float("nan")
    i = left[-1]
    xl = x[i] + (half - y[i]) * (x[i + 1] - x[i]) / (y[i + 1] - y[i])
    j = k + right[0]
    xr = x[j - 1] + (half - y[j - 1]) * (x[j] - x[j - 1]) / (y[j] - y[j - 1])
    return float(xr - xl)


# -- CSV -------------------------------------------------------------------------

def format_value(x: float) -> str:
    """Fixed-point decimal with 12 significant digits."""
    return np.format_float_positional(float(x), precision=12, unique=False,
                                      fractional=False, trim="-")


def write_csv(spectrum: Spectrum, path) -> None:
    meta = spectrum.meta
    lines = [f"# kind={spectrum.kind}, config_hash={meta.get('config_hash', '')}, "
             f"normalization={meta.get('normalization', 'none')}",
             "detuning,value"]
    lines += [f"{format_value(a)},{format_value(v)}" for a, v in zip(spectrum.axis, spectrum.values)]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path) -> Spectrum:
    """Read a spectrum written by :func:`write_csv`; ``meta`` holds the header fields."""
    with open(path, encoding="utf-8") as fh:
        head = fh.readline().lstrip("#").strip()
        meta = dict(part.strip().split("=", 1) for part in head.split(","))
        cols = fh.readline().strip()
        if cols != "detuning,value":
            raise ValueError(f"{path}: expected column header 'detuning,value', got {cols!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    kind = meta.pop("kind")
    return Spectrum(data[:, 0], data[:, 1], kind, meta)
