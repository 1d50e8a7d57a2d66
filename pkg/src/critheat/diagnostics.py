"""Per-run diagnostic records and the identities checked along trajectories.

A simulation appends one `DiagnosticSample` per checkpoint; the completed
`RunRecord` is then interrogated by pure post-processing functions: the two
dissipation identities, the gradient-trapping monitor and the decay verdict.

The time derivative u_t entering the accumulators is always evaluated through
the PDE right-hand side at checkpoints, never by differencing u in time, so
adaptive-step noise does not pollute the dissipation residuals.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .grid import RadialField, RadialGrid
from .ground_state import VariationalConstants

CSV_COLUMNS = [
    "t",
    "E",
    "kinetic",
    "potential",
    "l2_sq",
    "l4_4th",
    "linf",
    "K",
    "s_accum",
    "grad_l3_accum",
    "ut_accum",
]


@dataclass(frozen=True)
class DiagnosticSample:
    """One checkpoint slice of scalar diagnostics."""

    t: float
    E: float
    kinetic: float
    potential: float
    l2_sq: float
    l4_4th: float
    linf: float
    K: float
    s_accum: float  # int_0^t int |u|^6
    grad_l3_accum: float  # int_0^t int |grad u|^3
    ut_accum: float  # int_0^t int |u_t|^2

    @property
    def h1_sq(self) -> float:
        return 2.0 * self.kinetic

    def row(self) -> list[float]:
        return [getattr(self, c) for c in CSV_COLUMNS]


@dataclass(frozen=True)
class Verdict:
    status: str  # Decayed | BlewUp | ReachedTFinal | Inconclusive
    terminal_time: float
    reason: str


@dataclass
class RunRecord:
    """Full trajectory log of one simulation."""

    grid: RadialGrid
    samples: list[DiagnosticSample] = dc_field(default_factory=list)
    dt_times: list[float] = dc_field(default_factory=list)
    dt_values: list[float] = dc_field(default_factory=list)
    field_checkpoints: list[RadialField] = dc_field(default_factory=list)
    verdict: Optional[Verdict] = None
    accepted_steps: int = 0
    rejected_steps: int = 0

    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.samples])

    def sample_at(self, t: float, tol: float = 1e-9) -> DiagnosticSample:
        ts = self.times()
        i = int(np.argmin(np.abs(ts - t)))
        if abs(ts[i] - t) > tol * max(1.0, abs(t)) + 1e-12:
            raise KeyError(f"time {t} was not sampled (nearest {ts[i]})")
        return self.samples[i]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for s in self.samples:
            writer.writerow(["%.17g" % v for v in s.row()])
        return buf.getvalue()


def energy_dissipation_residual(record: RunRecord, t1: float, t2: float) -> float:
    """Defect of E(t2) + int_{t1}^{t2} int |u_t|^2 = E(t1)."""
    if not t1 < t2:
        raise ValueError("need t1 < t2")
    s1 = record.sample_at(t1)
    s2 = record.sample_at(t2)
    return s2.E + (s2.ut_accum - s1.ut_accum) - s1.E


def l2_dissipation_residual(record: RunRecord, t: float) -> float:
    """Defect of ||u(t)||^2 - ||u_0||^2 + 2 int_0^t K(u(s)) ds = 0."""
    s = record.sample_at(t)
    ts = record.times()
    mask = ts <= s.t + 1e-12
    k_int = float(np.trapezoid(record.series("K")[mask], ts[mask]))
    return s.l2_sq - record.samples[0].l2_sq + 2.0 * k_int


@dataclass(frozen=True)
class TrappingReport:
    applicable: bool
    max_ratio: float
    violated: bool
    reason: str


def gradient_trapping_monitor(
    record: RunRecord, consts: VariationalConstants
) -> TrappingReport:
    """Max over checkpoints of ||grad u||^2 / ||grad W||^2 for below-threshold runs."""
    s0 = record.samples[0]
    if not (s0.E <= consts.E_W and s0.h1_sq < consts.grad_W_sq):
        return TrappingReport(False, float("nan"), False, "initial data not below threshold")
    ratios = record.series("kinetic") * 2.0 / consts.grad_W_sq
    max_ratio = float(np.max(ratios))
    return TrappingReport(True, max_ratio, max_ratio >= 1.0, "")


def s_norm_converged(record: RunRecord, rel: float = 0.01) -> bool:
    """True when the space-time L^6 accumulator grew < `rel` over the last decade."""
    ts = record.times()
    s = record.series("s_accum")
    t_end = ts[-1]
    if t_end <= 0 or s[-1] == 0.0:
        return True
    t_ref = t_end / 10.0
    s_ref = float(np.interp(t_ref, ts, s))
    return (s[-1] - s_ref) <= rel * s[-1]


def decay_verdict(record: RunRecord, decay_floor: float) -> Optional[bool]:
    """True when the final kinetic energy fell below decay_floor times the
    initial one and the S-norm accumulator has converged.  None when the run
    blew up (verdict gated)."""
    if record.verdict is not None and record.verdict.status == "BlewUp":
        return None
    s0, s_end = record.samples[0], record.samples[-1]
    if s0.h1_sq == 0.0:
        return True
    return s_end.h1_sq <= decay_floor * s0.h1_sq and s_norm_converged(record)
