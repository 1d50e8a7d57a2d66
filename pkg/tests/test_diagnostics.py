"""Diagnostic record, CSV serialization and trajectory-identity tests."""

import numpy as np
import pytest

from critheat.diagnostics import (
    CSV_COLUMNS,
    DiagnosticSample,
    RunRecord,
    Verdict,
    decay_verdict,
    energy_dissipation_residual,
    gradient_trapping_monitor,
    l2_dissipation_residual,
    s_norm_converged,
)
from critheat.evolve import EvolveConfig, simulate
from critheat.grid import RadialField


def _sample(t, **kw):
    base = dict(
        t=t, E=1.0, kinetic=0.5, potential=0.5, l2_sq=1.0, l4_4th=1.0,
        linf=1.0, K=0.0, s_accum=0.0, grad_l3_accum=0.0, ut_accum=0.0,
    )
    base.update(kw)
    return DiagnosticSample(**base)


def _record(grid, samples, status="ReachedTFinal"):
    rec = RunRecord(grid=grid, samples=samples)
    rec.verdict = Verdict(status=status, terminal_time=samples[-1].t, reason="")
    return rec


def test_sample_row_matches_columns():
    s = _sample(0.5, E=2.0)
    row = s.row()
    assert len(row) == len(CSV_COLUMNS)
    assert row[CSV_COLUMNS.index("E")] == 2.0
    assert s.h1_sq == 2.0 * s.kinetic


def test_csv_round_trip(grid4):
    rec = _record(grid4, [_sample(0.0), _sample(0.1, E=0.9)])
    text = rec.to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 3
    vals = [float(x) for x in lines[2].split(",")]
    assert vals[0] == 0.1 and vals[1] == 0.9


def test_sample_at_nearest_and_missing(grid4):
    rec = _record(grid4, [_sample(0.0), _sample(0.5), _sample(1.0)])
    assert rec.sample_at(0.5).t == 0.5
    with pytest.raises(KeyError):
        rec.sample_at(0.3)


def test_energy_dissipation_residual_requires_order(grid4):
    rec = _record(grid4, [_sample(0.0), _sample(1.0)])
    with pytest.raises(ValueError):
        energy_dissipation_residual(rec, 1.0, 0.0)


def test_dissipation_identities_on_a_real_run(grid4):
    u0 = RadialField(grid4, 0.1 * np.exp(-grid4.r**2))
    cfg = EvolveConfig(
        t_final=0.5, error_tol=1e-6, checkpoint_every=0.002, checkpoint_growth=0.0
    )
    rec = simulate(u0, cfg)
    e0 = abs(rec.samples[0].E)
    assert abs(energy_dissipation_residual(rec, 0.0, 0.5)) < 1e-3 * e0
    assert abs(l2_dissipation_residual(rec, 0.5)) < 1e-3 * rec.samples[0].l2_sq


def test_trapping_monitor_gates_on_threshold(grid4, consts4):
    below = _record(grid4, [_sample(0.0, E=1.0, kinetic=1.0), _sample(0.1, kinetic=2.0)])
    rep = gradient_trapping_monitor(below, consts4)
    assert rep.applicable
    assert rep.max_ratio == pytest.approx(4.0 / consts4.grad_W_sq)
    assert not rep.violated
    above = _record(grid4, [_sample(0.0, kinetic=consts4.grad_W_sq)])
    assert not gradient_trapping_monitor(above, consts4).applicable


def test_s_norm_convergence_flag(grid4):
    ts = np.linspace(0.0, 10.0, 101)
    saturating = [_sample(t, s_accum=1.0 - np.exp(-5.0 * t)) for t in ts]
    growing = [_sample(t, s_accum=t) for t in ts]
    assert s_norm_converged(_record(grid4, saturating))
    assert not s_norm_converged(_record(grid4, growing))


def test_decay_verdict_gating(grid4):
    decayed = _record(
        grid4, [_sample(0.0, kinetic=1.0), _sample(10.0, kinetic=1e-4)]
    )
    assert decay_verdict(decayed, decay_floor=1e-2) is True
    still_big = _record(
        grid4, [_sample(0.0, kinetic=1.0), _sample(10.0, kinetic=0.5)]
    )
    assert decay_verdict(still_big, decay_floor=1e-2) is False
    blew = _record(grid4, [_sample(0.0)], status="BlewUp")
    assert decay_verdict(blew, decay_floor=1e-2) is None
