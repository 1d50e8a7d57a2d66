"""Acceptance gate: one test per headline capability, each printing a single
pass/fail line with the measured figure of merit.

Run with `pytest -v tests/test_acceptance.py` (add -s to see the lines even
on success).  These tests exercise the full pipeline at production settings,
so the whole file takes a few minutes.
"""

import math

import numpy as np
import pytest

from critheat.blowup import refined_criterion_check
from critheat.config import run_experiment
from critheat.diagnostics import (
    energy_dissipation_residual,
    l2_dissipation_residual,
)
from critheat.evolve import EvolveConfig, heat_semigroup_apply, simulate
from critheat.grid import RadialField, l2_norm_sq, make_grid
from critheat.ground_state import GroundState, compute_constants
from critheat.harness import (
    bisect_threshold,
    bubbles_experiment,
    convergence_study,
    decay_suite,
    heat_rate_suite,
    levine_experiment,
    refined_experiment,
)
from critheat.initial_data import InitialDataSpec, build_initial_data


def _verdict(name: str, ok: bool, detail: str):
    print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# shared expensive fixtures


@pytest.fixture(scope="module")
def grid2048():
    return make_grid(4, 100.0, 2048)


@pytest.fixture(scope="module")
def consts2048(grid2048):
    return compute_constants(grid2048)


def _dissipation_run(n, error_tol, cadence):
    grid = make_grid(4, 100.0, n)
    u0 = RadialField(grid, 0.1 * np.exp(-grid.r**2))
    cfg = EvolveConfig(
        t_final=1.0,
        error_tol=error_tol,
        checkpoint_every=cadence,
        checkpoint_growth=0.0,
    )
    return simulate(u0, cfg)


@pytest.fixture(scope="module")
def dissipation_base():
    return _dissipation_run(1024, 1e-6, 0.002)


@pytest.fixture(scope="module")
def dissipation_refined():
    return _dissipation_run(2048, 2.5e-7, 0.001)


# ---------------------------------------------------------------------------
# criteria


def test_01_variational_constants(grid2048, consts2048):
    g_exact = 32.0 * math.pi**2 / 3.0
    errs = {
        "grad": abs(consts2048.grad_W_sq - g_exact) / g_exact,
        "pot": abs(consts2048.int_W_crit - g_exact) / g_exact,
        "energy": abs(consts2048.E_W - g_exact / 4.0) / (g_exact / 4.0),
        "sobolev": abs(consts2048.sobolev_C - g_exact**-0.25) / g_exact**-0.25,
        "oracle": abs(consts2048.grad_W_sq - consts2048.grad_W_sq_oracle)
        / consts2048.grad_W_sq_oracle,
    }
    worst = max(errs.values())
    _verdict(
        "01 variational constants",
        worst < 5e-3,
        f"max rel err {worst:.2e} over {sorted(errs)}",
    )


def test_02_static_residual_convergence():
    study = convergence_study(4, 100.0, [512, 1024, 2048, 4096])
    factors = study["residual_reduction_factors"]
    _verdict(
        "02 static residual",
        all(f >= 3.0 for f in factors),
        "reduction factors per doubling " + str([f"{f:.2f}" for f in factors]),
    )


def test_03_energy_dissipation(dissipation_base, dissipation_refined):
    e0 = abs(dissipation_base.samples[0].E)
    res = abs(energy_dissipation_residual(dissipation_base, 0.0, 1.0)) / e0
    res_fine = (
        abs(energy_dissipation_residual(dissipation_refined, 0.0, 1.0))
        / abs(dissipation_refined.samples[0].E)
    )
    _verdict(
        "03 energy dissipation",
        res <= 1e-3 and res / max(res_fine, 1e-300) >= 3.0,
        f"relative residual {res:.2e}, refined {res_fine:.2e} "
        f"(factor {res / max(res_fine, 1e-300):.2f})",
    )


def test_04_l2_dissipation_and_linear_exactness(dissipation_base, dissipation_refined, grid2048):
    l2_0 = dissipation_base.samples[0].l2_sq
    res = abs(l2_dissipation_residual(dissipation_base, 1.0)) / l2_0
    res_fine = (
        abs(l2_dissipation_residual(dissipation_refined, 1.0))
        / dissipation_refined.samples[0].l2_sq
    )
    u0 = RadialField(grid2048, np.exp(-grid2048.r**2))
    u0.values[-1] = 0.0
    ut = heat_semigroup_apply(u0, 1.0, n_steps=512)
    s2 = 1.0 + 4.0
    exact = (1.0 / s2) ** 2 * np.exp(-grid2048.r**2 / s2)
    rel_lin = math.sqrt(
        l2_norm_sq(RadialField(grid2048, ut.values - exact))
        / l2_norm_sq(RadialField(grid2048, exact))
    )
    _verdict(
        "04 L2 dissipation + linear flow",
        res <= 1e-3 and res / max(res_fine, 1e-300) >= 3.0 and rel_lin <= 1e-4,
        f"relative residual {res:.2e} (refined {res_fine:.2e}), "
        f"linear-flow error {rel_lin:.2e}",
    )


def test_05_semigroup_decay_rates(grid2048):
    results = heat_rate_suite(
        grid2048, [(1, "inf"), (2, 4), (2, 2)], t_lo=10.0, t_hi=100.0, n_times=6
    )
    devs = [abs(r["slope"] - r["expected"]) for r in results]
    detail = ", ".join(
        f"L^{r['a']}->L^{r['p']}: {r['slope']:.4f} (want {r['expected']:.2f})"
        for r in results
    )
    _verdict("05 semigroup decay rates", all(d <= 0.05 for d in devs), detail)


def test_06_gradient_trapping_and_decay():
    amplitudes = list(np.linspace(0.1, 2.5, 10))
    family = InitialDataSpec(family="gaussian")
    grid_args = {"d": 4, "r_max": 100.0, "n": 512, "grading": "graded"}
    cfg = EvolveConfig(t_final=50.0, error_tol=1e-6)
    reports, records = decay_suite(amplitudes, family, grid_args, cfg)
    ok = True
    worst_ratio = 0.0
    for rep, rec in zip(reports, records):
        worst_ratio = max(worst_ratio, rep["max_grad_ratio"])
        grad_end = rec.samples[-1].h1_sq / rec.samples[0].h1_sq
        ok &= rep["below_threshold"]
        ok &= rep["verdict"] != "BlewUp"
        ok &= not rep["trapping_violated"]
        ok &= grad_end <= 1e-2
        ok &= bool(rep["decayed"])
    _verdict(
        "06 gradient trapping + decay",
        ok,
        f"10 runs, max ||grad u||^2/||grad W||^2 = {worst_ratio:.3f}, all decayed",
    )


def test_07_negative_energy_blowup(grid2048, consts2048):
    grid = make_grid(4, 100.0, 1024)
    consts = compute_constants(grid)
    results = {}
    for key, (g, c) in {"base": (grid, consts), "fine": (grid2048, consts2048)}.items():
        built = build_initial_data(InitialDataSpec(family="gaussian", a=6.0), g, c)
        report, _ = levine_experiment(built, EvolveConfig(t_final=1.0, error_tol=1e-6), c)
        results[key] = report
    b, f = results["base"], results["fine"]
    scale = abs(b["E0"])
    ok = (
        b["E0"] < 0.0
        and b["verdict"] == "BlewUp"
        and f["verdict"] == "BlewUp"
        and b["worst_margin"] >= -1e-6 * scale
        and f["worst_margin"] >= -1e-7 * scale
        and b["t_blow_observed"] <= b["t_hat"]
    )
    _verdict(
        "07 negative-energy blow-up",
        ok,
        f"E0={b['E0']:.2f}, t_blow={b['t_blow_observed']:.4f} <= t_hat={b['t_hat']:.3f}, "
        f"convexity margins {b['worst_margin']:.3f} / {f['worst_margin']:.3f}",
    )


def test_08_refined_criterion(grid2048, consts2048):
    grid = make_grid(4, 100.0, 1024)
    consts = compute_constants(grid)
    report, record = refined_experiment(
        grid, consts, EvolveConfig(t_final=2.0, error_tol=1e-6), grad_ratio=1.2, r_c=25.0
    )
    rep = refined_criterion_check(record, consts)
    tol = 1e-3 * consts.grad_W_sq
    ok = (
        report["verdict"] == "BlewUp"
        and report["E0"] < consts.E_W
        and report["grad_sq0"] >= consts.grad_W_sq
        and rep.worst_margin >= -tol
    )
    _verdict(
        "08 refined blow-up criterion",
        ok,
        f"verdict {report['verdict']}, worst margin -K - g(E) = {rep.worst_margin:.3f} "
        f"(tol {tol:.2e})",
    )


def test_09_dichotomy_bisection():
    family = InitialDataSpec(family="gaussian")
    cfg = EvolveConfig(t_final=50.0, error_tol=1e-6)
    mids = {}
    for n in (512, 1024):
        grid = make_grid(4, 100.0, n)
        consts = compute_constants(grid)
        res = bisect_threshold(family, 0.5, 8.0, 1e-3, grid, consts, cfg)
        assert res.rel_width <= 1e-3
        assert res.verdict_lo == "Decayed" and res.verdict_hi == "BlewUp"
        mids[n] = 0.5 * (res.a_lo + res.a_hi)
    drift = abs(mids[1024] - mids[512]) / mids[512]
    _verdict(
        "09 dichotomy bisection",
        drift <= 0.05,
        f"threshold amplitude {mids[512]:.4f} (N=512) vs {mids[1024]:.4f} (N=1024), "
        f"drift {drift:.2%}",
    )


def test_10_profile_decoupling():
    grid = make_grid(4, 100.0, 4096)
    residuals = []
    ok = True
    for ratio in (10.0, 100.0, 1000.0):
        rep = bubbles_experiment(grid, [1.0, ratio])
        lams = sorted(rep["recovered_scales"])
        ok &= len(lams) == 2
        ok &= abs(lams[0] - 1.0) <= 0.05
        ok &= abs(lams[1] - ratio) <= 0.05 * ratio
        residuals.append(abs(rep["r_h1_rel"]))
    ok &= residuals[0] > residuals[1] > residuals[2]
    ok &= residuals[2] <= 0.02
    _verdict(
        "10 profile decoupling",
        ok,
        "H^1-dot residuals over ratios {10,100,1000}: "
        + str([f"{r:.4f}" for r in residuals]),
    )


def test_11_determinism(tmp_path):
    cfg = {
        "experiment": "decay",
        "grid": {"n": 512},
        "evolve": {"t_final": 50.0},
        "initial_data": {"family": "gaussian", "a": 0.1},
    }
    code1 = run_experiment(dict(cfg), tmp_path / "run1")
    code2 = run_experiment(dict(cfg), tmp_path / "run2")
    csv1 = (tmp_path / "run1" / "run_000.csv").read_bytes()
    csv2 = (tmp_path / "run2" / "run_000.csv").read_bytes()
    rep1 = (tmp_path / "run1" / "report.json").read_bytes()
    rep2 = (tmp_path / "run2" / "report.json").read_bytes()
    _verdict(
        "11 determinism",
        code1 == 0 and code2 == 0 and csv1 == csv2 and rep1 == rep2,
        f"{len(csv1)} CSV bytes identical across repeated runs",
    )
