"""IMEX time integration of u_t = Delta u + |u|^{p-1} u on the radial grid.

One step treats diffusion by Crank-Nicolson (tridiagonal solve) and the
nonlinearity explicitly at a midpoint predictor, giving a second-order scheme.
Step size is controlled by step doubling: one full step is compared with two
half steps, the step accepted when their difference is below `error_tol`.

Blow-up cannot be observed directly (the true criterion is an infinite
space-time norm), so it is operationalized with two signals that must both
fire: the time step collapsing to its floor with the local error still above
tolerance, and the sup-norm escaping past `linf_ceiling`.  A run where only
one signal fires ends Inconclusive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy.linalg import solve_banded

from .diagnostics import DiagnosticSample, RunRecord, Verdict
from .grid import (
    RadialField,
    apply_laplacian,
    h1dot_norm_sq,
    integrate,
    l2_norm_sq,
    linf_norm,
    radial_derivative,
)
from .ground_state import critical_exponent, energy, nonlinearity_power, virial_K


class OverflowSignal(RuntimeError):
    """Non-finite values produced inside a step: blow-up evidence."""


@dataclass(frozen=True)
class EvolveConfig:
    t_final: float
    dt_init: float = 1e-4
    dt_min: float = 1e-12
    dt_max: float = 0.25
    error_tol: float = 1e-7
    linf_ceiling: float = 1e6
    checkpoint_every: float = 0.01
    checkpoint_growth: float = 0.05  # geometric cadence: interval >= growth * t
    decay_grad_sq_floor: Optional[float] = None  # absolute floor on ||grad u||^2
    store_fields: bool = False
    store_every: int = 1  # keep every k-th checkpointed field
    max_steps: int = 5_000_000

    def __post_init__(self):
        if not (0 < self.dt_min < self.dt_init <= self.dt_max):
            raise ValueError("need 0 < dt_min < dt_init <= dt_max")
        if min(self.t_final, self.error_tol, self.linf_ceiling, self.checkpoint_every) <= 0:
            raise ValueError("t_final, error_tol, linf_ceiling, checkpoint_every must be positive")


def _nonlinearity(u: np.ndarray, p: int) -> np.ndarray:
    if p == 3:
        return u * u * u  # real data: |u|^2 u = u^3
    return np.abs(u) ** (p - 1) * u


def step_imex(field: RadialField, dt: float, nonlinear: bool = True) -> RadialField:
    """One Crank-Nicolson / explicit-midpoint step; Dirichlet 0 at R_max."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    grid = field.grid
    p = nonlinearity_power(grid.d)
    u = field.values
    sub, diag, sup = grid.lap_bands

    with np.errstate(over="ignore", invalid="ignore"):
        lap_u = apply_laplacian(grid, u)
        if nonlinear:
            rhs0 = lap_u + _nonlinearity(u, p)
            u_half = u + 0.5 * dt * rhs0
            n_mid = _nonlinearity(u_half, p)
        else:
            n_mid = 0.0
        b = u + 0.5 * dt * lap_u + dt * n_mid

    if not np.all(np.isfinite(b)):
        raise OverflowSignal(f"non-finite values at t={field.t}")

    # solve (I - dt/2 L) u_new = b on nodes 0..n-2, pinning u(R_max) = 0
    m = grid.n - 1
    ab = np.zeros((3, m))
    ab[0, 1:] = -0.5 * dt * sup[: m - 1]
    ab[1, :] = 1.0 - 0.5 * dt * diag[:m]
    ab[2, :-1] = -0.5 * dt * sub[1:m]
    u_new = np.empty_like(u)
    u_new[:m] = solve_banded((1, 1), ab, b[:m])
    u_new[m] = 0.0

    if not np.all(np.isfinite(u_new)):
        raise OverflowSignal(f"non-finite values at t={field.t}")
    return RadialField(grid, u_new, field.t + dt)


def heat_semigroup_apply(field: RadialField, t: float, n_steps: int = 256) -> RadialField:
    """Pure linear flow e^{t Delta}, via Crank-Nicolson substeps.

    Substep times are quadratically graded toward 0, where the solution
    evolves fastest; Crank-Nicolson is unconditionally stable so late steps
    can be large.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0.0:
        return field.copy()
    times = t * (np.arange(n_steps + 1) / n_steps) ** 2
    out = field.copy()
    for t0, t1 in zip(times[:-1], times[1:]):
        out = step_imex(out, t1 - t0, nonlinear=False)
    return out


def _sample(
    field: RadialField,
    s_accum: float,
    g3_accum: float,
    ut_accum: float,
    nonlinear: bool,
) -> tuple[DiagnosticSample, np.ndarray]:
    """Diagnostics at a checkpoint; also returns the densities needed for the
    trapezoidal accumulator update at the next checkpoint."""
    grid = field.grid
    p = nonlinearity_power(grid.d)
    u = field.values
    du = radial_derivative(field)
    lap_u = apply_laplacian(grid, u)
    ut = lap_u + (_nonlinearity(u, p) if nonlinear else 0.0)
    e = energy(field)
    dens = np.array(
        [
            integrate(grid, u**6),
            integrate(grid, np.abs(du) ** 3),
            integrate(grid, ut**2),
        ]
    )
    samp = DiagnosticSample(
        t=field.t,
        E=e.total,
        kinetic=e.kinetic,
        potential=e.potential,
        l2_sq=l2_norm_sq(field),
        l4_4th=integrate(grid, np.abs(u) ** critical_exponent(grid.d)),
        linf=linf_norm(field),
        K=virial_K(field),
        s_accum=s_accum,
        grad_l3_accum=g3_accum,
        ut_accum=ut_accum,
    )
    return samp, dens


def simulate(
    initial: RadialField,
    config: EvolveConfig,
    nonlinear: bool = True,
    diagnostics_hook: Optional[Callable[[DiagnosticSample], None]] = None,
) -> RunRecord:
    """Adaptive nonlinear (or linear) evolution with checkpointed diagnostics."""
    record = RunRecord(grid=initial.grid)
    u = initial.copy()
    u.values[-1] = 0.0  # Dirichlet model

    s_acc = g3_acc = ut_acc = 0.0
    samp, dens_prev = _sample(u, s_acc, g3_acc, ut_acc, nonlinear)
    record.samples.append(samp)
    if diagnostics_hook:
        diagnostics_hook(samp)
    if config.store_fields:
        record.field_checkpoints.append(u.copy())
    n_checkpoints = 1

    dt = config.dt_init
    next_cp = min(config.checkpoint_every, config.t_final)
    linf_escaped = False
    dt_collapsed = False
    overflowed = False
    status = None
    reason = ""

    while u.t < config.t_final - 1e-14:
        if record.accepted_steps + record.rejected_steps >= config.max_steps:
            status, reason = "Inconclusive", "step budget exhausted"
            break
        dt_try = min(dt, next_cp - u.t, config.t_final - u.t)
        try:
            u_full = step_imex(u, dt_try, nonlinear)
            u_half = step_imex(
                step_imex(u, 0.5 * dt_try, nonlinear), 0.5 * dt_try, nonlinear
            )
        except OverflowSignal:
            overflowed = True
            linf_escaped = True
            dt_collapsed = True
            break
        err = float(np.max(np.abs(u_full.values - u_half.values))) / (
            1.0 + float(np.max(np.abs(u_half.values)))
        )
        if err > config.error_tol and dt_try > config.dt_min:
            dt = max(0.5 * dt_try, config.dt_min)
            record.rejected_steps += 1
            continue
        if err > config.error_tol:
            dt_collapsed = True  # stepping at the floor with error above tol
        u = u_half
        record.accepted_steps += 1
        record.dt_times.append(u.t)
        record.dt_values.append(dt_try)
        if err < 0.25 * config.error_tol:
            dt = min(dt_try * 1.25, config.dt_max)
        else:
            dt = dt_try

        cur_linf = linf_norm(u)
        if cur_linf > config.linf_ceiling:
            linf_escaped = True
        if linf_escaped and dt_collapsed:
            status, reason = "BlewUp", "sup-norm escaped and dt collapsed to floor"
            break
        if cur_linf > 1e3 * config.linf_ceiling:
            # far past the ceiling the explicit stage is about to overflow
            linf_escaped = dt_collapsed = True
            status, reason = "BlewUp", "sup-norm far past ceiling"
            break

        if u.t >= next_cp - 1e-14:
            samp, dens = _sample(u, s_acc, g3_acc, ut_acc, nonlinear)
            w = 0.5 * (samp.t - record.samples[-1].t)
            s_acc += w * (dens_prev[0] + dens[0])
            g3_acc += w * (dens_prev[1] + dens[1])
            ut_acc += w * (dens_prev[2] + dens[2])
            samp = replace(samp, s_accum=s_acc, grad_l3_accum=g3_acc, ut_accum=ut_acc)
            dens_prev = dens
            record.samples.append(samp)
            if diagnostics_hook:
                diagnostics_hook(samp)
            n_checkpoints += 1
            if config.store_fields and n_checkpoints % config.store_every == 0:
                record.field_checkpoints.append(u.copy())
            interval = max(config.checkpoint_every, config.checkpoint_growth * u.t)
            next_cp = min(u.t + interval, config.t_final)
            if (
                config.decay_grad_sq_floor is not None
                and samp.h1_sq <= config.decay_grad_sq_floor
            ):
                status, reason = "Decayed", "kinetic energy fell below the decay floor"
                break

    if status is None:
        if overflowed:
            status, reason = "BlewUp", "overflow inside a step"
        elif u.t >= config.t_final - 1e-14:
            status = "ReachedTFinal"
            reason = "reached t_final"
        elif linf_escaped or dt_collapsed:
            status = "Inconclusive"
            reason = (
                "sup-norm escaped without dt collapse"
                if linf_escaped
                else "dt collapsed without sup-norm escape"
            )
        else:
            status, reason = "Inconclusive", "terminated early"
    elif status == "BlewUp" and overflowed:
        reason = "overflow inside a step"

    record.verdict = Verdict(status=status, terminal_time=u.t, reason=reason)
    return record
