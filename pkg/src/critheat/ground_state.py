"""The static bubble solution W, variational constants and threshold curves.

For d = 4 the bubble is W(r) = (1 + r^2/8)^{-1} with scalings
W_lambda(r) = lambda W(lambda r); for d = 3 it is W(r) = (1 + r^2/3)^{-1/2}
with W_lambda = lambda^{1/2} W(lambda r).  W solves Delta W + W^{2*-1} = 0
and extremizes the critical Sobolev inequality.

All constants are computed twice: once by grid quadrature and once by
high-precision adaptive 1-D quadrature on [0, R_ORACLE].  A mismatch beyond
0.5% aborts, flagging an inadequate grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import quad

from .grid import (
    RadialField,
    RadialGrid,
    h1dot_norm_sq,
    integrate,
    surface_area,
)

R_ORACLE = 1.0e4
ORACLE_MISMATCH_TOL = 5.0e-3


class GridQualityError(RuntimeError):
    """Grid quadrature disagrees with the 1-D oracle beyond tolerance."""


class ZeroFieldError(ValueError):
    pass


def critical_exponent(d: int) -> float:
    """2* = 2d/(d-2): 4 in d=4, 6 in d=3."""
    return 2.0 * d / (d - 2.0)


def nonlinearity_power(d: int) -> int:
    """p = 2* - 1, the power in u_t = Delta u + |u|^{p-1} u."""
    return int(round(critical_exponent(d))) - 1


@dataclass(frozen=True)
class GroundState:
    """Closed-form evaluator for the scaled bubble W_lambda."""

    d: int = 4
    lam: float = 1.0

    def __post_init__(self):
        if self.d not in (3, 4):
            raise ValueError("d must be 3 or 4")
        if self.lam <= 0:
            raise ValueError("scale must be positive")

    def profile(self, r: np.ndarray) -> np.ndarray:
        lr = self.lam * np.asarray(r, dtype=float)
        if self.d == 4:
            core = 1.0 / (1.0 + lr**2 / 8.0)
            amp = self.lam
        else:
            core = 1.0 / np.sqrt(1.0 + lr**2 / 3.0)
            amp = math.sqrt(self.lam)
        return amp * core

    def profile_derivative(self, r: np.ndarray) -> np.ndarray:
        lr = self.lam * np.asarray(r, dtype=float)
        if self.d == 4:
            dcore = -(lr / 4.0) / (1.0 + lr**2 / 8.0) ** 2
            amp = self.lam**2
        else:
            dcore = -(lr / 3.0) / (1.0 + lr**2 / 3.0) ** 1.5
            amp = self.lam**1.5
        return amp * dcore

    def on_grid(self, grid: RadialGrid) -> RadialField:
        if grid.d != self.d:
            raise ValueError("grid dimension mismatch")
        return RadialField(grid, self.profile(grid.r))


def _oracle_grad_sq(d: int) -> float:
    gs = GroundState(d=d)
    val, _ = quad(
        lambda r: gs.profile_derivative(np.array([r]))[0] ** 2 * r ** (d - 1),
        0.0,
        R_ORACLE,
        limit=400,
        epsabs=1e-13,
        epsrel=1e-13,
    )
    return surface_area(d) * val


def _oracle_pot(d: int) -> float:
    gs = GroundState(d=d)
    p = critical_exponent(d)
    val, _ = quad(
        lambda r: gs.profile(np.array([r]))[0] ** p * r ** (d - 1),
        0.0,
        R_ORACLE,
        limit=400,
        epsabs=1e-13,
        epsrel=1e-13,
    )
    return surface_area(d) * val


@dataclass(frozen=True)
class VariationalConstants:
    """Grid-computed bubble constants, cross-checked against the 1-D oracle."""

    d: int
    grad_W_sq: float
    int_W_crit: float  # integral of W^{2*}
    E_W: float
    sobolev_C: float
    grad_W_sq_oracle: float
    int_W_crit_oracle: float
    quad_rel_err: float

    @property
    def two_star(self) -> float:
        return critical_exponent(self.d)

    def as_dict(self) -> dict:
        return {
            "d": self.d,
            "grad_W_sq": self.grad_W_sq,
            "int_W_crit": self.int_W_crit,
            "E_W": self.E_W,
            "sobolev_C": self.sobolev_C,
            "grad_W_sq_oracle": self.grad_W_sq_oracle,
            "int_W_crit_oracle": self.int_W_crit_oracle,
            "quad_rel_err": self.quad_rel_err,
        }


def compute_constants(grid: RadialGrid) -> VariationalConstants:
    """Bubble constants on this grid, aborting if quadrature is untrustworthy."""
    d = grid.d
    w = GroundState(d=d).on_grid(grid)
    grad_sq = h1dot_norm_sq(w)
    p = critical_exponent(d)
    pot = integrate(grid, np.abs(w.values) ** p)

    grad_sq_o = _oracle_grad_sq(d)
    pot_o = _oracle_pot(d)
    rel = max(abs(grad_sq - grad_sq_o) / grad_sq_o, abs(pot - pot_o) / pot_o)
    if rel > ORACLE_MISMATCH_TOL:
        raise GridQualityError(
            f"grid constants off by {rel:.2e} relative to the 1-D oracle; "
            "refine the grid or enlarge R_max"
        )
    # E(W) = grad/2 - pot/2* with pot = grad; equals grad/d
    e_w = 0.5 * grad_sq - pot / p
    sob_c = pot ** (1.0 / p) / math.sqrt(grad_sq)
    return VariationalConstants(
        d=d,
        grad_W_sq=grad_sq,
        int_W_crit=pot,
        E_W=e_w,
        sobolev_C=sob_c,
        grad_W_sq_oracle=grad_sq_o,
        int_W_crit_oracle=pot_o,
        quad_rel_err=rel,
    )


class EnergyParts(NamedTuple):
    total: float
    kinetic: float
    potential: float


def energy(field: RadialField) -> EnergyParts:
    """E(u) = 1/2 int |grad u|^2 - 1/2* int |u|^{2*}."""
    d = field.grid.d
    p = critical_exponent(d)
    kin = 0.5 * h1dot_norm_sq(field)
    pot = -integrate(field.grid, np.abs(field.values) ** p) / p
    return EnergyParts(kin + pot, kin, pot)


def virial_K(field: RadialField) -> float:
    """K(u) = int |grad u|^2 - int |u|^{2*}; vanishes on W."""
    p = critical_exponent(field.grid.d)
    return h1dot_norm_sq(field) - integrate(field.grid, np.abs(field.values) ** p)


def sobolev_quotient(field: RadialField) -> float:
    """||u||_{2*} / ||grad u||_2; maximized (= sobolev_C) by the bubble."""
    p = critical_exponent(field.grid.d)
    num = integrate(field.grid, np.abs(field.values) ** p) ** (1.0 / p)
    den = math.sqrt(h1dot_norm_sq(field))
    if den == 0.0:
        raise ZeroFieldError("Sobolev quotient of the zero field")
    return num / den


def f_curve(y: float, consts: VariationalConstants) -> float:
    """f(y) = y/2 - C^{2*} y^{2*/2} / 2*; concave, maximized at ||grad W||^2."""
    if y < 0:
        raise ValueError("f is defined for y >= 0")
    p = consts.two_star
    return 0.5 * y - consts.sobolev_C**p * y ** (p / 2.0) / p


def _f_derivative(y: float, consts: VariationalConstants) -> float:
    p = consts.two_star
    return 0.5 - 0.5 * consts.sobolev_C**p * y ** (p / 2.0 - 1.0)


def e_inverse(e_val: float, consts: VariationalConstants) -> float:
    """Inverse of f on its decreasing branch [||grad W||^2, infinity).

    Bisection-safeguarded Newton from 2 ||grad W||^2; 1e-12 relative tolerance.
    """
    if e_val > consts.E_W * (1.0 + 1e-12) + 1e-300:
        raise ValueError(f"e_inverse domain is E <= E(W); got {e_val} > {consts.E_W}")
    g = consts.grad_W_sq
    if e_val >= consts.E_W:
        return g
    lo = g
    hi = 2.0 * g
    while f_curve(hi, consts) > e_val:
        hi *= 2.0
    y = 2.0 * g
    for _ in range(200):
        fy = f_curve(y, consts) - e_val
        if fy > 0:
            lo = max(lo, y)
        else:
            hi = min(hi, y)
        dfy = _f_derivative(y, consts)
        step = fy / dfy if dfy != 0 else math.inf
        y_new = y - step
        if not (lo < y_new < hi):
            y_new = 0.5 * (lo + hi)
        if abs(y_new - y) <= 1e-12 * max(1.0, abs(y)):
            return y_new
        y = y_new
    return y


def g_of_E(e_val: float, consts: VariationalConstants) -> float:
    """g(E) = 2/(d-2) (e(E) - d E); positive below E(W), zero at E(W)."""
    d = consts.d
    return 2.0 / (d - 2.0) * (e_inverse(e_val, consts) - d * e_val)


def trapping_margin(field: RadialField, consts: VariationalConstants) -> float:
    """K(u)/||grad u||^2 - [1 - (||grad u||/||grad W||)^2].

    Nonnegative (up to quadrature error) by the sharp Sobolev inequality, with
    equality exactly on the bubble family; this is the computable form of the
    coercivity driving gradient trapping (d = 4).
    """
    h1 = h1dot_norm_sq(field)
    if h1 == 0.0:
        raise ZeroFieldError("trapping margin of the zero field")
    return virial_K(field) / h1 - (1.0 - h1 / consts.grad_W_sq)
