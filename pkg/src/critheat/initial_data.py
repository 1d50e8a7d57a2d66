"""Initial-data families and their threshold-membership flags.

Three families cover every experiment: Gaussians a exp(-r^2/sigma^2), scaled
bubbles eps W_lambda, and smoothly truncated bubbles s W(r) chi(r/R_c) (the
bubble is not square-integrable in d = 4, so L^2-based blow-up experiments
need the cutoff).  Membership in the below-threshold set and in the blow-up
set is always recomputed from the built field, never assumed from the
requested parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .grid import RadialField, RadialGrid, h1dot_norm_sq
from .ground_state import GroundState, VariationalConstants, energy

FAMILIES = ("gaussian", "bubble_scaled", "truncated_bubble")


def smooth_cutoff(x: np.ndarray) -> np.ndarray:
    """C^2 quintic step: 1 for x <= 1, 0 for x >= 2."""
    y = np.clip(x - 1.0, 0.0, 1.0)
    return 1.0 - y**3 * (10.0 - 15.0 * y + 6.0 * y**2)


@dataclass(frozen=True)
class InitialDataSpec:
    family: str
    a: float = 1.0  # gaussian amplitude
    sigma: float = 1.0  # gaussian width
    eps: float = 1.0  # bubble_scaled amplitude factor
    lam: float = 1.0  # bubble scale
    s: float = 1.0  # truncated_bubble amplitude
    r_c: float = 25.0  # cutoff radius

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")

    def build(self, grid: RadialGrid) -> RadialField:
        r = grid.r
        if self.family == "gaussian":
            vals = self.a * np.exp(-(r**2) / self.sigma**2)
        elif self.family == "bubble_scaled":
            vals = self.eps * GroundState(d=grid.d, lam=self.lam).profile(r)
        else:
            vals = self.s * GroundState(d=grid.d).profile(r) * smooth_cutoff(r / self.r_c)
        vals = vals.copy()
        vals[-1] = 0.0  # Dirichlet model at R_max
        return RadialField(grid, vals)

    def as_dict(self) -> dict:
        return {
            "family": self.family,
            "a": self.a,
            "sigma": self.sigma,
            "eps": self.eps,
            "lam": self.lam,
            "s": self.s,
            "r_c": self.r_c,
        }


@dataclass(frozen=True)
class BuiltData:
    spec: InitialDataSpec
    field: RadialField
    energy: float
    grad_sq: float
    below_threshold: bool  # E <= E(W) and ||grad u|| < ||grad W||
    in_blowup_set: bool  # E < E(W) and ||grad u|| >= ||grad W||


def build_initial_data(
    spec: InitialDataSpec, grid: RadialGrid, consts: VariationalConstants
) -> BuiltData:
    u0 = spec.build(grid)
    e = energy(u0).total
    h1 = h1dot_norm_sq(u0)
    return BuiltData(
        spec=spec,
        field=u0,
        energy=e,
        grad_sq=h1,
        below_threshold=(e <= consts.E_W and h1 < consts.grad_W_sq),
        in_blowup_set=(e < consts.E_W and h1 >= consts.grad_W_sq),
    )


def truncated_bubble_for_grad_ratio(
    grid: RadialGrid,
    consts: VariationalConstants,
    grad_ratio: float,
    r_c: float = 25.0,
) -> InitialDataSpec:
    """Amplitude s making ||grad s W chi||_{L^2} = grad_ratio ||grad W||_{L^2}."""
    base = InitialDataSpec(family="truncated_bubble", s=1.0, r_c=r_c)
    h1_base = h1dot_norm_sq(base.build(grid))
    s = grad_ratio * np.sqrt(consts.grad_W_sq / h1_base)
    return InitialDataSpec(family="truncated_bubble", s=float(s), r_c=r_c)
