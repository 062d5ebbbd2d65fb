"""Command-line entry point ``fwm-sim``.

Subcommands write a CSV (or two) plus a JSON manifest into ``--out``.

Exit codes: 0 success, 2 bad input (config, flags, CSV), 3 solver failure
or unwritable output, 4 zero-variance channel in ``correlate``.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys

import numpy as np

from . import __version__, backend, correlation, spectra
from .floquet import SolverError
from .model import ConfigError, ModelConfig, config_hash, config_to_dict, load_config, validate_config

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_VARIANCE = 0, 2, 3, 4


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


def _frequency(token: str):
    """``32``, ``33``, ``co`` or a detuning from omega_co in Gamma."""
    t = token.strip().lower()
    if t in ("32", "33", "co"):
        return t
    try:
        x = float(t)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"invalid frequency {token!r}: use 32, 33, co or a number") from None
    if not np.isfinite(x):
        raise argparse.ArgumentTypeError(f"invalid frequency {token!r}")
    return x


def _resolve(token, config: ModelConfig) -> float:
    lv = config.levels
    if token == "32":
        return lv.omega_c - lv.omega_co
    if token == "33":
        return lv.omega_d - lv.omega_co
    if token == "co":
        return 0.0
    return float(token)


def _positive_int(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {s!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fwm-sim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="model config JSON (defaults are used when omitted)")
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--threads", type=_positive_int,
                        help="worker cap; default FWM_SIM_THREADS or the CPU count")
    common.add_argument("--scheme", default="resonance-adapted",
                        choices=("resonance-adapted", "gauss-hermite", "uniform-trapezoid"))

    beams = argparse.ArgumentParser(add_help=False)
    beams.add_argument("--rabi", type=float, help="pump Rabi frequency Omega_F (Gamma)")
    beams.add_argument("--pump-ratio", type=float,
                       help="power ratio P_B/P_F, applied as Omega_B^2 = ratio * Omega_F^2")
    beams.add_argument("--normalize", default="none", choices=spectra.NORMALIZATIONS)

    sub = p.add_subparsers(dest="command", required=True)
    ps = sub.add_parser("pump-scan", parents=[common, beams], help="conjugate intensity vs pump detuning")
    ps.add_argument("--points", type=_positive_int, default=401)

    pr = sub.add_parser("probe-scan", parents=[common, beams], help="conjugate intensity vs probe offset")
    pr.add_argument("--omega-f", type=_frequency, default="co",
                    help="fixed pump frequency: 32, 33, co or a detuning in Gamma")
    pr.add_argument("--points", type=_positive_int, default=401)

    sa = sub.add_parser("satabs", parents=[common], help="saturated-absorption reference")
    sa.add_argument("--pump-rabi", type=float, default=spectra.SATABS_PUMP)
    sa.add_argument("--normalize", default="none", choices=spectra.NORMALIZATIONS)
    sa.add_argument("--points", type=_positive_int, default=401)

    co = sub.add_parser("correlate", parents=[common], help="probe/conjugate cross-correlation")
    src = co.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="two-channel CSV with header t,i_c,i_p")
    src.add_argument("--synth", action="store_true", help="generate a synthetic pair from the model")
    co.add_argument("--center", type=_frequency, default="co", help="synthetic laser centre (32, 33, co, number)")
    co.add_argument("--seed", type=int, default=0)
    co.add_argument("--rabi", type=float, help="pump Rabi frequency for the conjugate response")
    co.add_argument("--pump-ratio", type=float)
    co.add_argument("--pump-rabi", type=float, default=spectra.SATABS_PUMP,
                    help="saturating pump of the probe-absorption response")
    co.add_argument("--jitter-rms", type=float, default=0.2, help="frequency jitter rms (Gamma)")
    co.add_argument("--corr-time", type=float, help="jitter correlation time (default 10 dt)")
    co.add_argument("--n-samples", type=_positive_int, default=16384)
    co.add_argument("--dt", type=float, default=1.0, help="sample period")
    co.add_argument("--od", type=float, default=1.0, help="optical depth of the probe channel")
    co.add_argument("--noise", type=float, default=1e-4, help="relative detection noise per channel")
    co.add_argument("--max-lag", type=int, default=50, help="largest lag, in samples")
    co.add_argument("--window", type=int, help="integration time T in samples (default: longest that fits)")
    co.add_argument("--segment", type=_positive_int, default=256, help="spectrum segment length (power of two)")
    co.add_argument("--save-series", action="store_true", help="also write the analysed t,i_c,i_p series")
    return p


def _config(args) -> ModelConfig:
    if args.config:
        try:
            cfg = load_config(args.config)
        except FileNotFoundError:
            raise _Fail(EXIT_INPUT, f"config file not found: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise _Fail(EXIT_INPUT, f"{args.config}: invalid JSON: {exc}") from None
        except OSError as exc:
            raise _Fail(EXIT_INPUT, f"cannot read config {args.config}: {exc}") from None
    else:
        cfg = ModelConfig()
    rabi = getattr(args, "rabi", None)
    ratio = getattr(args, "pump_ratio", None)
    if ratio is not None and not ratio > 0:
        raise _Fail(EXIT_INPUT, "--pump-ratio must be positive")
    if rabi is not None or ratio is not None:
        cfg = cfg.with_pumps(cfg.fields.rabi_F if rabi is None else rabi, ratio)
    return validate_config(cfg)


def _outdir(path: str) -> str:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise _Fail(EXIT_SOLVER, f"cannot create output directory {path}: {exc}") from None
    if not os.access(path, os.W_OK):
        raise _Fail(EXIT_SOLVER, f"output directory {path} is not writable")
    return path


def _manifest(args, argv, cfg: ModelConfig, outputs, **extra):
    data = {
        "command": {"subcommand": args.command, "argv": list(argv)},
        "config_hash": config_hash(cfg),
        "config": config_to_dict(cfg),
        "tool_version": __version__,
        "backend": backend.NAME,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "output_paths": [os.path.abspath(p) for p in outputs],
        **extra,
    }
    path = os.path.join(args.out, f"{args.command.replace('-', '_')}.manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _axis(kind: str, cfg: ModelConfig, n: int):
    return spectra.default_probe_axis(cfg, n) if kind == "probe" else spectra.default_axis(cfg, n)


def _run_scan(args, argv) -> int:
    cfg = _config(args)
    out = _outdir(args.out)
    extra = {}
    if args.command == "pump-scan":
        spectrum = spectra.pump_scan(cfg, _axis("pump", cfg, args.points), normalization=args.normalize,
                                 threads=args.threads, scheme=args.scheme)
    elif args.command == "probe-scan":
        w = _resolve(args.omega_f, cfg)
        spectrum = spectra.probe_scan(cfg, w, _axis("probe", cfg, args.points), normalization=args.normalize,
                                  threads=args.threads, scheme=args.scheme)
        width = spectra.fwhm(spectrum)
        extra = {"omega_F": w, "fwhm": None if np.isnan(width) else width,
                 "peak_offset": float(spectrum.axis[int(np.argmax(spectrum.values))])}
    else:
        spectrum = spectra.satabs_reference(cfg, _axis("pump", cfg, args.points), pump_rabi=args.pump_rabi,
                                        normalization=args.normalize, threads=args.threads,
                                        scheme=args.scheme)
        extra = {"pump_rabi": args.pump_rabi,
                 "dips": [float(x) for x in spectrum.axis[spectra.local_minima(spectrum.values)]]}
    path = os.path.join(out, f"{args.command.replace('-', '_')}.csv")
    spectra.write_csv(spectrum, path)
    _manifest(args, argv, _spectrum_config(spectrum, cfg), [path], **extra)
    return EXIT_OK


def _spectrum_config(spectrum, cfg: ModelConfig) -> ModelConfig:
    # satabs runs on its own beam assignment; the manifest names that config
    if spectrum.kind == "satabs":
        return spectra.satabs_config(cfg, spectrum.meta.get("pump_rabi"))
    return cfg


def _run_correlate(args, argv) -> int:
    cfg = _config(args)
    out = _outdir(args.out)
    if args.synth:
        centre = _resolve(args.center, cfg)
        try:
            pair = correlation.synth_two_channel(
                cfg, centre, args.jitter_rms, args.n_samples, args.dt, args.seed,
                corr_time=args.corr_time, od=args.od, noise=args.noise,
                pump_rabi=args.pump_rabi, threads=args.threads, scheme=args.scheme)
        except ValueError as exc:
            raise _Fail(EXIT_INPUT, str(exc)) from None
        tag = f", config_hash={config_hash(cfg)}, seed={args.seed}, center={spectra.format_value(centre)}"
    else:
        try:
            pair = correlation.read_pair_csv(args.input)
        except FileNotFoundError:
            raise _Fail(EXIT_INPUT, f"input file not found: {args.input}") from None
        tag = f", source={os.path.basename(args.input)}"
    try:
        window = None if args.window is None else args.window * pair.dt_sample
        res = correlation.g2(pair, args.max_lag * pair.dt_sample, window)
        spectrum = correlation.correlation_spectrum(pair, args.segment)
    except correlation.ZeroVarianceError as exc:
        raise _Fail(EXIT_VARIANCE, str(exc)) from None
    except ValueError as exc:
        raise _Fail(EXIT_INPUT, str(exc)) from None
    g2_path = os.path.join(out, "g2.csv")
    sp_path = os.path.join(out, "correlation_spectrum.csv")
    correlation.write_g2_csv(res, g2_path, tag)
    correlation.write_spectrum_csv(spectrum, sp_path, tag)
    outputs = [g2_path, sp_path]
    if args.save_series:
        ts_path = os.path.join(out, "series.csv")
        correlation.write_pair_csv(pair, ts_path)
        outputs.append(ts_path)
    _manifest(args, argv, cfg, outputs, g2_zero=res.at(0.0), window_T=res.window_T,
              spectrum_normalization=spectrum.normalization, synthetic=bool(args.synth),
              synth=pair.meta if args.synth else None)
    return EXIT_OK


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = _parser().parse_args(argv)
    try:
        if args.command == "correlate":
            return _run_correlate(args, argv)
        return _run_scan(args, argv)
    except _Fail as exc:
        print(f"fwm-sim: error: {exc}", file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"fwm-sim: config error: {problem}", file=sys.stderr)
        return EXIT_INPUT
    except correlation.CsvFormatError as exc:
        print(f"fwm-sim: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"fwm-sim: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"fwm-sim: I/O error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"fwm-sim: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
