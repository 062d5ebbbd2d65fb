import dataclasses
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fwm_sim import floquet, tolerances
from fwm_sim.floquet import (BatchSolver, HarmonicDensityMatrix, TruncationError, check_truncation,
                             conjugate_amplitude, solve_first_order, solve_zeroth_order)
from fwm_sim.model import LevelScheme, ModelConfig, validate_config

freq = st.floats(-20, 20, allow_nan=False)
rabi = st.floats(0.0, 1.0, allow_nan=False)


def make(rabi_F=0.2, rabi_B=0.2, rabi_P=0.002, truncation=3, **relax):
    cfg = ModelConfig(truncation=truncation).with_fields(rabi_F=rabi_F, rabi_B=rabi_B, rabi_P=rabi_P)
    if relax:
        cfg = cfg.with_relaxation(**relax)
    return validate_config(cfg)


def both(cfg, w):
    rho0, rep0 = solve_zeroth_order(cfg, w)
    rhoP, repP = solve_first_order(cfg, w, rho0)
    return rho0, rep0, rhoP, repP


def test_zero_field_steady_state():
    rho0, rep = solve_zeroth_order(make(0.0, 0.0), (-14.5, -14.5, -14.5))
    for (i, j, a, b, c), v in rho0.coefficients.items():
        expect = 0.5 if (i == j and i < 2 and a == b == 0) else 0.0
        assert abs(v - expect) < 1e-14
    assert rep.residual_norm < 1e-12 and rep.converged


@given(rabi, rabi, freq, freq, st.integers(2, 4))
def test_structural_invariants(rF, rB, wF, wB, n):
    cfg = make(rF, rB, truncation=n)
    rho0, rep = solve_zeroth_order(cfg, (wF, wB, wF))
    norm = rho0.norm()
    assert rep.residual_norm >= 0
    assert rho0.hermiticity_error() <= tolerances.STRUCTURAL * norm
    pops = [rho0.get(k, k, 0, 0) for k in range(4)]
    assert abs(sum(pops) - 1) <= tolerances.STRUCTURAL
    for p in pops:
        assert abs(p.imag) <= tolerances.STRUCTURAL
        assert -tolerances.STRUCTURAL <= p.real <= 1 + tolerances.STRUCTURAL
    labels = {(a, b) for (_, _, a, b, _) in rho0.coefficients}
    for a, b in labels - {(0, 0)}:
        if abs(a * wF + b * wB) > 1e-9:
            assert abs(sum(rho0.get(k, k, a, b) for k in range(4))) <= tolerances.STRUCTURAL


@given(rabi, freq, st.floats(-3, 3))
def test_first_order_linear_in_probe(r, w, offset):
    cfg = make(r, r, 0.001)
    w3 = (w, w + 0.7, w + offset)
    rho0, _ = solve_zeroth_order(cfg, w3)
    one, _ = solve_first_order(cfg, w3, rho0)
    two, _ = solve_first_order(cfg.with_fields(rabi_P=0.002), w3, rho0)
    for key, v in one.coefficients.items():
        assert abs(two.coefficients[key] - 2 * v) <= 1e-13 * max(1e-300, abs(v)) + 1e-30


def test_zero_probe_gives_zero_first_order():
    _, _, rhoP, _ = both(make(rabi_P=0.0), (-14.5, 14.5, -14.25))
    assert all(v == 0 for v in rhoP.coefficients.values())
    assert conjugate_amplitude(rhoP) == 0


def test_conjugate_intensity_quadratic_in_probe():
    w = (-14.5, 14.5, -14.5)
    a1 = conjugate_amplitude(both(make(rabi_P=0.001), w)[2])
    a3 = conjugate_amplitude(both(make(rabi_P=0.003), w)[2])
    assert abs(a3 - 3 * a1) < 1e-13 * abs(a1)
    assert abs(abs(a3) ** 2 / abs(a1) ** 2 - 9) < 1e-10


def test_symmetric_point_both_paths_nonzero():
    _, _, rhoP, _ = both(make(), (0.0, 0.0, 0.0))
    ac = rhoP.get("a", "c", 1, 1, -1)
    ad = rhoP.get("a", "d", 1, 1, -1)
    assert abs(ac) > 1e-12 and abs(ad) > 1e-12
    assert abs(ac + ad) > 1e-3 * max(abs(ac), abs(ad))


def test_selection_rule_makes_n3_exact():
    w = (-13.1, 15.2, -12.7)
    amps = [conjugate_amplitude(both(make(1.0, 1.0, truncation=n), w)[2]) for n in (3, 4, 6)]
    assert amps[0] == pytest.approx(amps[1], rel=1e-12, abs=0)
    assert amps[0] == pytest.approx(amps[2], rel=1e-12, abs=0)
    a2 = conjugate_amplitude(both(make(1.0, 1.0, truncation=2), w)[2])
    assert a2 != amps[0]


def test_converged_flag_and_unknowns():
    rho0, rep0, rhoP, repP = both(make(), (-14.5, 14.5, -14.5))
    assert rep0.converged and repP.converged
    assert rep0.n_unknowns > 0 and repP.n_unknowns > rep0.n_unknowns
    assert repP.residual_norm < tolerances.RESIDUAL


@pytest.mark.parametrize("w", [(0.0, 0.0, 0.0), (1.0, 1.0, 1.0), (-14.5, 14.5, -14.5)])
def test_check_truncation_weak_fields(w):
    assert check_truncation(make(0.01, 0.01), w) <= 3
    assert check_truncation(make(0.0, 0.0), w) == 2


@pytest.mark.parametrize("w", [(0.0, 0.0, 0.0), (1.0, 1.0, 1.0)])
def test_check_truncation_grows_with_field(w):
    weak = check_truncation(make(0.01, 0.01), w)
    strong = check_truncation(make(1.0, 1.0), w)
    assert strong > weak


def test_truncation_errors():
    with pytest.raises(TruncationError):
        solve_zeroth_order(make(truncation=1).__class__(truncation=0), (0, 0, 0))
    rho0, _ = solve_zeroth_order(make(truncation=2), (0, 0, 0))
    with pytest.raises(TruncationError):
        solve_first_order(make(truncation=3), (0, 0, 0), rho0)
    _, _, rhoP, _ = both(make(truncation=1), (0, 0, 0))
    with pytest.raises(TruncationError):
        conjugate_amplitude(rhoP)
    with pytest.raises(ValueError):
        conjugate_amplitude(rho0)
    with pytest.raises(ValueError):
        solve_zeroth_order(make(), (0.0, float("nan"), 0.0))


def test_degenerate_beats_total_order_sums():
    cfg = make(0.3, 0.3)
    w = -14.2

    def class_sums(wB):
        rho0, _ = solve_zeroth_order(cfg, (w, wB, w))
        out = {}
        for (i, j, a, b, _), v in rho0.coefficients.items():
            out[(i, j, a + b)] = out.get((i, j, a + b), 0) + v
        return out

    exact = class_sums(w)
    lo, hi = class_sums(w - 1e-6), class_sums(w + 1e-6)
    for key, v in exact.items():
        extrap = 0.5 * (lo[key] + hi[key])
        assert abs(extrap - v) <= 1e-8 * max(1.0, abs(v))


def test_json_dump():
    rho0, _ = solve_zeroth_order(make(), (-14.5, 14.5, -14.5))
    data = json.loads(rho0.to_json())
    assert data["order"] == "zeroth" and data["truncation"] == 3
    i, j, a, b, c, re, im = data["entries"][0]
    assert rho0.get(i, j, a, b, c) == complex(re, im)


def test_two_level_limit_matches_rate_equations():
    # F alone on a resonant a-c transition, d pushed far away: three-level
    # rate equations with transit refilling the undriven ground state
    G, gt, om = 1.0, 0.01, 0.2
    cfg = validate_config(ModelConfig(levels=LevelScheme.from_splitting(2e6))
                          .with_fields(rabi_F=om, rabi_B=0.0, rabi_P=0.0))
    wc = cfg.levels.omega_c
    rho0, _ = solve_zeroth_order(cfg, (wc, 0.0, wc))
    R = (om ** 2 / 4) * G / (G ** 2 / 4)
    pcc = 1.0 / (2 * (G + R) / R + 1 + G / gt)
    assert rho0.get("c", "c", 0, 0).real == pytest.approx(pcc, rel=1e-8)


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("r", [0.01, 0.5, 1.0])
def test_batch_solver_matches_sparse_path(n, r):
    cfg = make(r, 0.7 * r, 0.001, truncation=n)
    solver = BatchSolver(cfg)
    ws = np.array([(-14.5, 14.5, -14.5), (0.3, -0.2, 0.1), (-3.0, 7.0, -2.5)])
    x1 = solver.solve(ws)
    amps = solver.conjugate(x1)
    for k, w in enumerate(ws):
        _, _, rhoP, _ = both(cfg, w)
        ref = conjugate_amplitude(rhoP)
        assert abs(amps[k] - ref) <= 1e-10 * abs(ref)
        for el in ("ac", "ad", "cb", "db"):
            for a in (-1, 0, 1):
                i, j = "abcd".index(el[0]), "abcd".index(el[1])
                b = floquet.NET[4 * i + j] - a + 1
                got = solver.element(x1, i, j, a)[k]
                ref = rhoP.get(i, j, a, b, -1)
                assert abs(got - ref) <= 1e-10 * abs(ref) + 1e-300


def test_pruning_shrinks_system():
    cfg = make(truncation=3)
    solver = BatchSolver(cfg)
    n0, n1 = solver.n_unknowns
    _, rep0, _, repP = both(cfg, (-14.5, 14.5, -14.5))
    assert 0 < n0 < rep0.n_unknowns
    assert 0 < n1 < repP.n_unknowns / 2


def test_batch_solver_deterministic_across_threads():
    cfg = make(0.5, 0.5)
    solver = BatchSolver(cfg)
    ws = np.column_stack([np.linspace(-20, 20, 64)] * 3) + np.array([0.0, 0.3, -0.1])
    a = solver.conjugate(solver.solve(ws, threads=1))
    b = solver.conjugate(solver.solve(ws, threads=4))
    assert np.array_equal(a, b)
