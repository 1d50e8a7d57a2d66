"""Radial grids on a truncated ball in R^d and the discrete operators on them.

A radially symmetric function u(|x|) on R^d (d = 3 or 4) is represented by its
samples on nodes 0 = r_0 < r_1 < ... < r_{N-1} = R_max.  Quadrature weights
encode the measure omega_{d-1} r^{d-1} dr, so that `integrate` realizes every
d-dimensional volume integral of a radial integrand.  Differential stencils
are classic 3-point finite differences on the (possibly graded) node set.

The outer boundary carries a homogeneous Dirichlet condition (ghost value 0
beyond R_max); the origin uses the symmetry-regularized Laplacian stencil.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import brentq


class GridError(ValueError):
    pass


def surface_area(d: int) -> float:
    """Area of the unit (d-1)-sphere, omega_{d-1} = 2 pi^{d/2} / Gamma(d/2)."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def ball_volume(d: int, radius: float = 1.0) -> float:
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) * radius**d


def _graded_nodes(r_max: float, n: int, inner_radius: float) -> np.ndarray:
    """Geometrically graded nodes: about half of them inside r <= inner_radius."""
    k = n // 2
    m = n - 1
    target = inner_radius / r_max

    def frac(g):
        # (g^k - 1) / (g^m - 1), stable near g = 1 and for large exponents
        lg = math.log(g)
        if m * lg > 500.0:
            return math.exp((k - m) * lg)
        return math.expm1(k * lg) / math.expm1(m * lg)

    # frac decreases from k/m (g -> 1) toward 0 as g grows; bracket the ratio
    if target >= k / m:
        return np.linspace(0.0, r_max, n)
    g = brentq(lambda x: frac(x) - target, 1.0 + 1e-14, 2.0, xtol=1e-15)
    h0 = r_max * (g - 1.0) / math.expm1(m * math.log(g))
    steps = h0 * g ** np.arange(m)
    nodes = np.concatenate(([0.0], np.cumsum(steps)))
    nodes[-1] = r_max
    return nodes


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Nodes, quadrature weights and stencils for radial functions on R^d."""

    d: int
    r: np.ndarray
    r_max: float
    grading: str
    grading_param: float = 0.0

    def __post_init__(self):
        if self.d not in (3, 4):
            raise GridError(f"dimension must be 3 or 4, got {self.d}")
        if len(self.r) < 16:
            raise GridError(f"need at least 16 nodes, got {len(self.r)}")
        if self.r[0] != 0.0 or not np.all(np.diff(self.r) > 0):
            raise GridError("nodes must start at 0 and be strictly increasing")

    @property
    def n(self) -> int:
        return len(self.r)

    @cached_property
    def weights(self) -> np.ndarray:
        """Cell-exact weights: integrate r^{d-1} times the piecewise-linear
        interpolant exactly, so polynomials of degree <= 1 are integrated
        exactly against the radial measure on any node set."""
        d = self.d
        r = self.r
        a, b = r[:-1], r[1:]
        h = b - a
        p = (b**d - a**d) / d
        q = (b ** (d + 1) - a ** (d + 1)) / (d + 1)
        m0 = (b * p - q) / h
        m1 = (q - a * p) / h
        w = np.zeros_like(r)
        w[:-1] += m0
        w[1:] += m1
        return surface_area(d) * w

    @cached_property
    def lap_bands(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(sub, diag, sup) of the radial Laplacian u_rr + (d-1)/r u_r.

        Row 0 is the symmetry-regularized origin stencil 2d (u_1 - u_0)/r_1^2.
        The last row uses a zero Dirichlet ghost at r_max + h.
        """
        d, r, n = self.d, self.r, self.n
        sub = np.zeros(n)
        diag = np.zeros(n)
        sup = np.zeros(n)

        diag[0] = -2.0 * d / r[1] ** 2
        sup[0] = 2.0 * d / r[1] ** 2

        hl = r[1:-1] - r[:-2]
        hr = r[2:] - r[1:-1]
        ri = r[1:-1]
        c = (d - 1.0) / ri
        sub[1:-1] = 2.0 / (hl * (hl + hr)) - c * hr / (hl * (hl + hr))
        diag[1:-1] = -2.0 / (hl * hr) + c * (hr - hl) / (hl * hr)
        sup[1:-1] = 2.0 / (hr * (hl + hr)) + c * hl / (hr * (hl + hr))

        h = r[-1] - r[-2]
        sub[-1] = 1.0 / h**2 - (d - 1.0) / (2.0 * h * r[-1])
        diag[-1] = -2.0 / h**2
        return sub, diag, sup

    @cached_property
    def grad_stencil(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(lo, mid, hi) coefficients of d/dr; row 0 forced to 0 by symmetry,
        last row a 3-point one-sided difference."""
        r, n = self.r, self.n
        lo = np.zeros(n)
        mid = np.zeros(n)
        hi = np.zeros(n)
        hl = r[1:-1] - r[:-2]
        hr = r[2:] - r[1:-1]
        lo[1:-1] = -hr / (hl * (hl + hr))
        mid[1:-1] = (hr - hl) / (hl * hr)
        hi[1:-1] = hl / (hr * (hl + hr))
        h1 = r[-2] - r[-3]
        h2 = r[-1] - r[-2]
        # backward 3-point, exact for quadratics
        lo[-1] = h2 / (h1 * (h1 + h2))
        mid[-1] = -(h1 + h2) / (h1 * h2)
        hi[-1] = (h1 + 2.0 * h2) / (h2 * (h1 + h2))
        return lo, mid, hi

    def hash(self) -> str:
        h = hashlib.sha256()
        h.update(str(self.d).encode())
        h.update(self.r.tobytes())
        return h.hexdigest()[:16]

    def spec(self) -> dict:
        return {
            "d": self.d,
            "n": self.n,
            "r_max": self.r_max,
            "grading": self.grading,
            "grading_param": self.grading_param,
            "hash": self.hash(),
        }


def make_grid(
    d: int,
    r_max: float,
    n: int,
    grading: str = "graded",
    inner_radius: float = 5.0,
) -> RadialGrid:
    """Build a radial grid; `graded` clusters nodes geometrically near r = 0."""
    if d not in (3, 4):
        raise GridError(f"dimension must be 3 or 4, got {d}")
    if n < 16:
        raise GridError(f"need at least 16 nodes, got {n}")
    if r_max <= 0:
        raise GridError("r_max must be positive")
    if grading == "uniform":
        r = np.linspace(0.0, r_max, n)
        param = 0.0
    elif grading == "graded":
        inner = min(inner_radius, r_max / 2.0)
        r = _graded_nodes(r_max, n, inner)
        param = inner
    else:
        raise GridError(f"unknown grading {grading!r}")
    return RadialGrid(d=d, r=r, r_max=float(r_max), grading=grading, grading_param=param)


@dataclass
class RadialField:
    """Samples of a radial function at one time instant."""

    grid: RadialGrid
    values: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if len(self.values) != self.grid.n:
            raise GridError("field length does not match grid")

    def copy(self) -> "RadialField":
        return RadialField(self.grid, self.values.copy(), self.t)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


def integrate(grid: RadialGrid, samples: np.ndarray) -> float:
    """Integral over R^d (truncated at R_max) of a radial integrand."""
    samples = np.asarray(samples, dtype=float)
    if len(samples) != grid.n:
        raise GridError("sample length does not match grid")
    return float(grid.weights @ samples)


def radial_derivative(field: RadialField) -> np.ndarray:
    """d/dr by centered differences; 0 at the origin by symmetry."""
    lo, mid, hi = field.grid.grad_stencil
    u = field.values
    du = np.empty_like(u)
    du[0] = 0.0
    du[1:-1] = lo[1:-1] * u[:-2] + mid[1:-1] * u[1:-1] + hi[1:-1] * u[2:]
    du[-1] = lo[-1] * u[-3] + mid[-1] * u[-2] + hi[-1] * u[-1]
    return du


def apply_laplacian(grid: RadialGrid, u: np.ndarray) -> np.ndarray:
    sub, diag, sup = grid.lap_bands
    out = diag * u
    out[:-1] += sup[:-1] * u[1:]
    out[1:] += sub[1:] * u[:-1]
    return out


def laplacian_radial(field: RadialField) -> RadialField:
    """Second-order radial Laplacian; Dirichlet ghost beyond R_max."""
    if not field.is_finite():
        raise GridError("field has non-finite values")
    return RadialField(field.grid, apply_laplacian(field.grid, field.values), field.t)


def h1dot_norm_sq(field: RadialField) -> float:
    du = radial_derivative(field)
    return integrate(field.grid, du * du)


def l2_norm_sq(field: RadialField) -> float:
    return integrate(field.grid, field.values**2)


def l4_norm_4th(field: RadialField) -> float:
    return integrate(field.grid, field.values**4)


def lp_norm(field: RadialField, p: float) -> float:
    if p == math.inf:
        return linf_norm(field)
    return integrate(field.grid, np.abs(field.values) ** p) ** (1.0 / p)


def linf_norm(field: RadialField) -> float:
    return float(np.max(np.abs(field.values)))
