"""Convexity (concavity-of-I) blow-up machinery, post-processed from run records.

The classical argument tracks I(t) = int_0^t ||u||^2 ds + A, whose second
derivative is -2K(u); negative initial energy makes I log-convex enough that
the solution cannot exist past t_hat = A / (alpha ||u_0||^2).  The refined
criterion covers positive-energy data above the bubble's gradient norm via
the threshold curves f, e, g.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .diagnostics import RunRecord
from .ground_state import VariationalConstants, g_of_E, nonlinearity_power


@dataclass(frozen=True)
class LevineSeries:
    """Sampled I, I', I'', J along a run, with the proof parameters."""

    A: float
    alpha: float
    delta: float
    epsilon: float
    t: np.ndarray
    I: np.ndarray
    Iprime: np.ndarray
    Idoubleprime: np.ndarray
    J: np.ndarray


def build_levine_series(
    record: RunRecord,
    A: float,
    alpha: float = 0.1,
    epsilon: float = 0.1,
) -> LevineSeries:
    if A <= 0:
        raise ValueError("offset A must be positive")
    if not record.samples:
        raise ValueError("record has no diagnostic samples")
    t = record.times()
    l2 = record.series("l2_sq")
    k = record.series("K")
    e = record.series("E")
    i_of_t = A + np.concatenate(
        ([0.0], np.cumsum(0.5 * np.diff(t) * (l2[:-1] + l2[1:])))
    )
    p = nonlinearity_power(record.grid.d)
    delta = 0.5 * (p - 1)
    return LevineSeries(
        A=A,
        alpha=alpha,
        delta=delta,
        epsilon=epsilon,
        t=t,
        I=i_of_t,
        Iprime=l2,
        Idoubleprime=-2.0 * k,
        J=-e,
    )


def choose_offset(record: RunRecord, alpha: float = 0.1) -> float:
    """Smallest power of 10 making I''(0) I(0) - (1+alpha) I'(0)^2 >= 0."""
    s0 = record.samples[0]
    idd0 = -2.0 * s0.K
    ip0 = s0.l2_sq
    if idd0 <= 0:
        raise ValueError("I''(0) <= 0: no offset can certify convexity at t=0")
    need = (1.0 + alpha) * ip0**2 / idd0
    return 10.0 ** math.ceil(math.log10(max(need, 1e-300)))


@dataclass(frozen=True)
class ConvexityReport:
    applicable: bool
    worst_margin: float  # min over samples of I'' - 4(1+delta) J
    worst_product: float  # min over samples of I'' I - (1+alpha) (I')^2
    reason: str = ""


def convexity_check(series: LevineSeries) -> ConvexityReport:
    """Margins of the two differential inequalities driving the argument."""
    if series.J[0] <= 0:
        return ConvexityReport(
            False, float("nan"), float("nan"), "J(0) = -E(u_0) <= 0: hypothesis not met"
        )
    margin = series.Idoubleprime - 4.0 * (1.0 + series.delta) * series.J
    product = series.Idoubleprime * series.I - (1.0 + series.alpha) * series.Iprime**2
    return ConvexityReport(True, float(np.min(margin)), float(np.min(product)))


def predicted_blowup_time(series: LevineSeries) -> float:
    """Certified existence bound t_hat = 1 / (I(0)^alpha alpha a~),
    a~ = I'(0)/I(0)^{1+alpha}; simplifies to A / (alpha ||u_0||^2)."""
    if series.J[0] <= 0:
        raise ValueError("J(0) <= 0: blow-up hypothesis not met")
    ip0 = series.Iprime[0]
    if ip0 <= 0:
        raise ValueError("I'(0) = 0: data has no L^2 mass")
    a_tilde = ip0 / series.I[0] ** (1.0 + series.alpha)
    return 1.0 / (series.I[0] ** series.alpha * series.alpha * a_tilde)


@dataclass(frozen=True)
class RefinedReport:
    applicable: bool
    in_set: bool
    worst_margin: float  # min over samples of -K - g(E)
    t_hat: Optional[float]
    t_blow_observed: Optional[float]
    verdict: str
    params: dict

    def as_dict(self) -> dict:
        return {
            "applicable": self.applicable,
            "in_set": self.in_set,
            "worst_margin": self.worst_margin,
            "t_hat": self.t_hat,
            "t_blow_observed": self.t_blow_observed,
            "verdict": self.verdict,
            "params": self.params,
        }


def refined_criterion_check(
    record: RunRecord,
    consts: VariationalConstants,
    alpha: float = 0.1,
    epsilon: float = 0.1,
) -> RefinedReport:
    """Check -K(u(t)) >= g(E(u(t))) along a run started above the bubble's
    gradient norm but below its energy."""
    s0 = record.samples[0]
    in_set = s0.E < consts.E_W and s0.h1_sq >= consts.grad_W_sq
    params = {"alpha": alpha, "epsilon": epsilon, "delta": 1.0}
    verdict = record.verdict.status if record.verdict else "unknown"
    if not in_set:
        return RefinedReport(False, False, float("nan"), None, None, verdict, params)

    margins = []
    for s in record.samples:
        if s.E >= consts.E_W:
            continue  # g only defined below E(W); dissipation keeps E < E(W)
        margins.append(-s.K - g_of_E(s.E, consts))
    worst = float(np.min(margins)) if margins else float("nan")

    t_hat = None
    t_blow = None
    if s0.l2_sq > 0 and -2.0 * s0.K > 0:
        a = choose_offset(record, alpha)
        # refined argument: J(0) replaced by 2 g(E(u_0)) > 0
        t_hat = a / (alpha * s0.l2_sq)
        params["A"] = a
    if record.verdict and record.verdict.status == "BlewUp":
        t_blow = record.verdict.terminal_time
    return RefinedReport(True, True, worst, t_hat, t_blow, verdict, params)
