"""Compare the compiled kernels with the numpy fallback.

Times a batched block-tridiagonal solve over the velocity nodes of a pump
scan and one RK4 time-domain run, checks that both backends agree, and
prints a small table.

Usage::

    python benchmarks/bench_kernels.py [--points 41] [--repeat 3] [--threads 1]
"""
from __future__ import annotations

import argparse
import dataclasses
import time

import numpy as np

from fwm_sim import backend, doppler, spectra
from fwm_sim.floquet import BatchSolver
from fwm_sim.model import ModelConfig, to_atomic_frame, validate_config
from fwm_sim.oracle import integrate_time_domain


def best_of(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def scan_freqs(config, n_points):
    """Atomic-frame frequency triples for every node of an ``n_points`` pump scan."""
    rows = []
    for d in spectra.default_axis(config, n_points):
        fs = config.fields.tuned(config.levels.omega_co + d)
        grid = doppler.grid_for(dataclasses.replace(config, fields=fs))
        rows.append(np.column_stack(to_atomic_frame(fs, grid.nodes, config.doppler.ku)))
    return np.concatenate(rows)


def bench_solve(config, freqs, kernel, threads, repeat):
    solver = BatchSolver(config, kernel=kernel)
    return best_of(lambda: solver.conjugate(solver.solve(freqs, threads)), repeat)


def bench_rk4(config, kernel, repeat):
    run = lambda: integrate_time_domain(config, 0.5, 100.0, kernel=kernel, require_steady=False)
    return best_of(lambda: run().rho_samples, repeat)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=41, help="pump-scan points (default 41)")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)

    if not backend.COMPILED:
        raise SystemExit("compiled kernels are not built; nothing to compare")

    cfg = validate_config(ModelConfig().with_pumps(0.5))
    freqs = scan_freqs(cfg, args.points)
    rk_cfg = validate_config(ModelConfig(truncation=4).with_pumps(0.2)
                             .with_fields(rabi_P=0.002, omega_F=-14.0, omega_B=-14.0, omega_P=-13.75)
                             .with_relaxation(gamma_g=0.1).with_doppler(ku=1.0))

    rows = []
    t_np, a_np = bench_solve(cfg, freqs, "numpy", args.threads, args.repeat)
    t_cy, a_cy = bench_solve(cfg, freqs, "cython", args.threads, args.repeat)
    err = float(np.max(np.abs(a_cy - a_np)) / np.max(np.abs(a_np)))
    rows.append((f"block_tridiag_solve ({freqs.shape[0]} nodes)", t_np, t_cy, err))

    t_np, r_np = bench_rk4(rk_cfg, "numpy", args.repeat)
    t_cy, r_cy = bench_rk4(rk_cfg, "cython", args.repeat)
    err = float(np.max(np.abs(r_cy - r_np)))
    rows.append(("rk4_bloch (t = 100)", t_np, t_cy, err))

    print(f"{'kernel':<38}{'numpy s':>10}{'cython s':>10}{'speedup':>9}{'max diff':>11}")
    for name, a, b, e in rows:
        print(f"{name:<38}{a:>10.3f}{b:>10.3f}{a / b:>9.1f}{e:>11.1e}")


if __name__ == "__main__":
    main()
