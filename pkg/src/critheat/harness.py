"""Experiment orchestration: single runs, threshold bisection, Levine and
refined blow-up suites, semigroup rate fits, bubble extraction and grid
convergence studies.

Every experiment returns a plain-dict report (JSON-ready) plus the run
records that produced it; persistence of manifests/CSVs lives in `runio`.
All experiments are deterministic: there is no randomness anywhere in the
pipeline, and outputs are written in a fixed order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import diagnostics as diag
from .blowup import (
    build_levine_series,
    choose_offset,
    convexity_check,
    predicted_blowup_time,
    refined_criterion_check,
)
from .diagnostics import RunRecord
from .evolve import EvolveConfig, heat_semigroup_apply, simulate
from .grid import RadialField, RadialGrid, integrate, lp_norm, make_grid
from .ground_state import GroundState, VariationalConstants, compute_constants
from .initial_data import (
    BuiltData,
    InitialDataSpec,
    build_initial_data,
    truncated_bubble_for_grad_ratio,
)
from .profiles import extract_bubbles, fit_bubble


class NumericalAbort(RuntimeError):
    """An experiment could not complete (bad bracket, budget exhausted, ...)."""


def run_single(
    built: BuiltData,
    config: EvolveConfig,
    decay_floor_rel: Optional[float] = 1e-3,
) -> RunRecord:
    """One nonlinear evolution; the Decayed floor is relative to the initial
    kinetic energy unless disabled."""
    cfg = config
    if decay_floor_rel is not None and built.grad_sq > 0:
        cfg = replace(config, decay_grad_sq_floor=decay_floor_rel * built.grad_sq)
    return simulate(built.field, cfg)


# ---------------------------------------------------------------------------
# threshold bisection


@dataclass
class ThresholdResult:
    a_lo: float
    a_hi: float
    verdict_lo: str
    verdict_hi: str
    iterations: int
    history: list[tuple[float, str]]
    records: list[RunRecord]

    @property
    def rel_width(self) -> float:
        return (self.a_hi - self.a_lo) / self.a_lo

    def as_dict(self) -> dict:
        return {
            "a_lo": self.a_lo,
            "a_hi": self.a_hi,
            "verdict_lo": self.verdict_lo,
            "verdict_hi": self.verdict_hi,
            "iterations": self.iterations,
            "rel_width": self.rel_width,
            "history": [{"a": a, "verdict": v} for a, v in self.history],
        }


def _classify_amplitude(
    a: float,
    family: InitialDataSpec,
    grid: RadialGrid,
    consts: VariationalConstants,
    config: EvolveConfig,
    decay_floor_rel: float,
) -> tuple[str, RunRecord]:
    spec = replace(family, a=a)
    built = build_initial_data(spec, grid, consts)
    record = run_single(built, config, decay_floor_rel)
    status = record.verdict.status
    if status in ("Decayed", "BlewUp"):
        return status, record
    # one retry at doubled horizon and halved tolerance before giving up
    retry_cfg = replace(config, t_final=2.0 * config.t_final, error_tol=0.5 * config.error_tol)
    record = run_single(built, retry_cfg, decay_floor_rel)
    return record.verdict.status, record


def bisect_threshold(
    family: InitialDataSpec,
    a_min: float,
    a_max: float,
    rel_tol: float,
    grid: RadialGrid,
    consts: VariationalConstants,
    config: EvolveConfig,
    decay_floor_rel: float = 1e-3,
    max_iter: int = 60,
) -> ThresholdResult:
    """Standard bisection on amplitude across the decay/blow-up dichotomy."""
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    history: list[tuple[float, str]] = []
    records: list[RunRecord] = []

    def classify(a: float) -> str:
        status, rec = _classify_amplitude(a, family, grid, consts, config, decay_floor_rel)
        history.append((a, status))
        records.append(rec)
        if status not in ("Decayed", "BlewUp"):
            raise NumericalAbort(
                f"amplitude {a}: verdict {status} even after retry at doubled horizon"
            )
        return status

    v_lo = classify(a_min)
    v_hi = classify(a_max)
    if not (v_lo == "Decayed" and v_hi == "BlewUp"):
        raise NumericalAbort(
            f"endpoints do not bracket the dichotomy: a_min -> {v_lo}, a_max -> {v_hi}"
        )
    lo, hi = a_min, a_max
    iters = 0
    while (hi - lo) / lo > rel_tol:
        if iters >= max_iter:
            raise NumericalAbort("bisection budget exhausted")
        mid = 0.5 * (lo + hi)
        if classify(mid) == "Decayed":
            lo = mid
        else:
            hi = mid
        iters += 1
    return ThresholdResult(
        a_lo=lo,
        a_hi=hi,
        verdict_lo="Decayed",
        verdict_hi="BlewUp",
        iterations=iters,
        history=history,
        records=records,
    )


# ---------------------------------------------------------------------------
# heat semigroup rate suite


def _parse_pair(a, p) -> tuple[float, float]:
    def conv(x):
        if x in ("inf", "Inf", "infinity", math.inf):
            return math.inf
        return float(x)

    a, p = conv(a), conv(p)
    if not (1.0 <= a <= p):
        raise ValueError(f"inadmissible pair (a={a}, p={p}): need 1 <= a <= p")
    return a, p


def measure_heat_rate(
    grid: RadialGrid,
    a: float,
    p: float,
    t_values: np.ndarray,
    n_steps: int = 512,
) -> dict:
    """Fitted log-log decay exponent of the L^a -> L^p semigroup bound.

    A fixed-width Gaussian decays at its L^1 rate, masking the L^a rate for
    a > 1, so each probe time t uses the width-sqrt(t) Gaussian whose
    evolution saturates the L^a -> L^p scaling exactly; the fitted slope then
    checks the solver against -2(1/a - 1/p).
    """
    a, p = _parse_pair(a, p)
    ratios = []
    for t in t_values:
        u0 = RadialField(grid, np.exp(-grid.r**2 / t))
        u0.values[-1] = 0.0
        ut = heat_semigroup_apply(u0, float(t), n_steps=n_steps)
        ratios.append(lp_norm(ut, p) / lp_norm(u0, a))
    slope = float(np.polyfit(np.log(t_values), np.log(ratios), 1)[0])
    return {
        "a": a,
        "p": "inf" if p == math.inf else p,
        "slope": slope,
        "expected": -2.0 * (1.0 / a - 1.0 / p),
        "t_values": list(map(float, t_values)),
        "ratios": list(map(float, ratios)),
    }


def heat_rate_suite(
    grid: RadialGrid,
    pairs: list[tuple],
    t_lo: float = 10.0,
    t_hi: float = 100.0,
    n_times: int = 6,
    n_steps: int = 512,
) -> list[dict]:
    t_values = np.geomspace(t_lo, t_hi, n_times)
    return [measure_heat_rate(grid, a, p, t_values, n_steps) for a, p in pairs]


# ---------------------------------------------------------------------------
# suites over independent initial data


def _decay_worker(args):
    a, family_dict, grid_args, evolve_cfg, decay_floor_rel = args
    grid = make_grid(**grid_args)
    consts = compute_constants(grid)
    spec = replace(InitialDataSpec(**family_dict), a=a)
    built = build_initial_data(spec, grid, consts)
    record = run_single(built, evolve_cfg, decay_floor_rel)
    trap = diag.gradient_trapping_monitor(record, consts)
    decayed = diag.decay_verdict(record, decay_floor=1e-2)
    return {
        "a": a,
        "E0": built.energy,
        "grad_sq0": built.grad_sq,
        "below_threshold": built.below_threshold,
        "verdict": record.verdict.status,
        "terminal_time": record.verdict.terminal_time,
        "max_grad_ratio": trap.max_ratio,
        "trapping_violated": trap.violated,
        "decayed": decayed,
        "s_norm_converged": diag.s_norm_converged(record),
    }, record


def decay_suite(
    amplitudes: list[float],
    family: InitialDataSpec,
    grid_args: dict,
    config: EvolveConfig,
    decay_floor_rel: float = 1e-3,
    workers: int = 1,
) -> tuple[list[dict], list[RunRecord]]:
    """Independent below-threshold runs with trapping and decay verdicts."""
    jobs = [
        (a, family.as_dict(), grid_args, config, decay_floor_rel) for a in amplitudes
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_decay_worker, jobs))
    else:
        results = [_decay_worker(j) for j in jobs]
    reports = [r for r, _ in results]
    records = [rec for _, rec in results]
    return reports, records


# ---------------------------------------------------------------------------
# blow-up experiments


def levine_experiment(
    built: BuiltData,
    config: EvolveConfig,
    consts: VariationalConstants,
    alpha: float = 0.1,
    epsilon: float = 0.1,
) -> tuple[dict, RunRecord]:
    """Negative-energy run: verdict, convexity margins, certified time bound."""
    if built.energy >= 0:
        raise NumericalAbort(
            f"Levine experiment requires E(u_0) < 0, got {built.energy}"
        )
    record = run_single(built, config, decay_floor_rel=None)
    a_off = choose_offset(record, alpha)
    series = build_levine_series(record, A=a_off, alpha=alpha, epsilon=epsilon)
    conv = convexity_check(series)
    t_hat = predicted_blowup_time(series)
    t_blow = (
        record.verdict.terminal_time if record.verdict.status == "BlewUp" else None
    )
    report = {
        "in_set": True,
        "E0": built.energy,
        "verdict": record.verdict.status,
        "worst_margin": conv.worst_margin,
        "worst_product": conv.worst_product,
        "t_hat": t_hat,
        "t_blow_observed": t_blow,
        "params": {"A": a_off, "alpha": alpha, "delta": series.delta, "epsilon": epsilon},
    }
    return report, record


def refined_experiment(
    grid: RadialGrid,
    consts: VariationalConstants,
    config: EvolveConfig,
    grad_ratio: float = 1.2,
    r_c: float = 25.0,
) -> tuple[dict, RunRecord]:
    """Truncated-bubble datum above the bubble gradient norm, below its energy."""
    spec = truncated_bubble_for_grad_ratio(grid, consts, grad_ratio, r_c)
    built = build_initial_data(spec, grid, consts)
    if not built.in_blowup_set:
        raise NumericalAbort(
            "constructed datum is not in the blow-up set: "
            f"E={built.energy} vs E_W={consts.E_W}, grad_sq={built.grad_sq} "
            f"vs {consts.grad_W_sq}"
        )
    record = run_single(built, config, decay_floor_rel=None)
    rep = refined_criterion_check(record, consts)
    report = rep.as_dict()
    report["E0"] = built.energy
    report["grad_sq0"] = built.grad_sq
    report["spec"] = spec.as_dict()
    return report, record


# ---------------------------------------------------------------------------
# bubble extraction and convergence studies


def bubbles_experiment(
    grid: RadialGrid, scales: list[float], j_max: int = 4, stop_tol: float = 0.05
) -> dict:
    """Synthetic multi-bubble superposition, then greedy extraction."""
    u = np.zeros(grid.n)
    for lam in scales:
        u += GroundState(d=grid.d, lam=lam).profile(grid.r)
    field = RadialField(grid, u)
    dec = extract_bubbles(field, j_max=j_max, stop_tol=stop_tol)
    from .grid import h1dot_norm_sq

    return {
        "input_scales": list(map(float, scales)),
        "recovered_scales": [lam for lam, _ in dec.profiles],
        "r_h1": dec.r_h1,
        "r_h1_rel": dec.r_h1 / h1dot_norm_sq(field),
        "r_energy": dec.r_energy,
        "separations": dec.separations,
    }


def static_residual(grid: RadialGrid) -> float:
    """Weighted-L^2 residual of Delta W + W^{2*-1} = 0 away from the boundary.

    The last node is excluded: its row encodes the Dirichlet truncation, not
    the free-space operator, so its defect measures the model and not the
    stencil.
    """
    from .grid import apply_laplacian
    from .ground_state import nonlinearity_power

    w = GroundState(d=grid.d).on_grid(grid)
    p = nonlinearity_power(grid.d)
    res = apply_laplacian(grid, w.values) + np.abs(w.values) ** (p - 1) * w.values
    res[-1] = 0.0
    return math.sqrt(integrate(grid, res**2))


def convergence_study(
    d: int, r_max: float, n_values: list[int], grading: str = "graded"
) -> dict:
    """Static residual and constants across grid refinements."""
    rows = []
    for n in n_values:
        grid = make_grid(d, r_max, n, grading)
        consts = compute_constants(grid)
        rows.append(
            {
                "n": n,
                "static_residual": static_residual(grid),
                "grad_W_sq": consts.grad_W_sq,
                "quad_rel_err": consts.quad_rel_err,
            }
        )
    factors = [
        rows[i]["static_residual"] / rows[i + 1]["static_residual"]
        for i in range(len(rows) - 1)
    ]
    return {"rows": rows, "residual_reduction_factors": factors}
