"""Radial grids, profiles and the Fubini-Study background on the projective line.

Every circle-invariant potential is a function of ``s = log|z|^2``. For such a
function the Monge-Ampere measure reduces to ``f''(s) ds``, so the mass of a
current is the jump of its slope between ``s = -inf`` and ``s = +inf``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from .errors import DegenerateMetricError, GridError


@dataclass(frozen=True)
class SGrid:
    """Uniform grid on ``[s_min, s_max]`` with ``n_points`` nodes."""

    s_min: float
    s_max: float
    n_points: int

    def __post_init__(self):
        if not (np.isfinite(self.s_min) and np.isfinite(self.s_max)):
            raise GridError("grid bounds must be finite")
        if self.s_max <= self.s_min:
            raise GridError("s_max must exceed s_min")
        if self.n_points < 5:
            raise GridError("at least 5 nodes are required")

    @property
    def spacing(self) -> float:
        return (self.s_max - self.s_min) / (self.n_points - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.s_min, self.s_max, self.n_points)

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid weights; they make discrete mass conservation exact."""
        w = np.full(self.n_points, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w

    def refined(self, k: int) -> "SGrid":
        """Grid with spacing divided by ``k``; old nodes are every k-th new node."""
        if k < 1:
            raise GridError("refinement factor must be >= 1")
        return SGrid(self.s_min, self.s_max, (self.n_points - 1) * k + 1)

    def extended_left(self, new_min: float) -> "SGrid":
        """Same spacing and right end, extended to the left past ``new_min``."""
        h = self.spacing
        extra = max(0, int(np.ceil((self.s_min - new_min) / h - 1e-9)))
        return SGrid(self.s_min - extra * h, self.s_max, self.n_points + extra)

    def mask(self, lo: float = -np.inf, hi: float = np.inf) -> np.ndarray:
        return (self.nodes >= lo - 1e-12) & (self.nodes <= hi + 1e-12)

    def index_of(self, s: float) -> int:
        return int(np.argmin(np.abs(self.nodes - s)))

    def to_dict(self) -> dict:
        return {"s_min": self.s_min, "s_max": self.s_max, "n_points": self.n_points}


@dataclass(frozen=True)
class RadialProfile:
    """Values of a radial potential on a grid plus its asymptotic slopes.

    ``curvature`` optionally carries the exact discrete second difference when
    it was computed in closed form, which avoids cancellation far from the
    origin of ``s``.
    """

    grid: SGrid
    values: np.ndarray
    slope_minus: float = 0.0
    slope_plus: float = 0.0
    curvature: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_points,):
            raise GridError("profile length does not match grid")
        if not np.all(np.isfinite(v)):
            raise GridError("profile values must be finite")
        object.__setattr__(self, "values", v)
        if self.curvature is not None:
            object.__setattr__(self, "curvature", np.asarray(self.curvature, dtype=float))

    @property
    def mass(self) -> float:
        return self.slope_plus - self.slope_minus

    def __add__(self, other: "RadialProfile") -> "RadialProfile":
        _same_grid(self, other)
        curv = None
        if self.curvature is not None and other.curvature is not None:
            curv = self.curvature + other.curvature
        return RadialProfile(self.grid, self.values + other.values,
                             self.slope_minus + other.slope_minus,
                             self.slope_plus + other.slope_plus, curv)

    def __sub__(self, other: "RadialProfile") -> "RadialProfile":
        return self + other.scaled(-1.0)

    def scaled(self, c: float) -> "RadialProfile":
        curv = None if self.curvature is None else c * self.curvature
        return RadialProfile(self.grid, c * self.values, c * self.slope_minus,
                             c * self.slope_plus, curv)

    def shifted(self, c: float) -> "RadialProfile":
        return RadialProfile(self.grid, self.values + c, self.slope_minus,
                             self.slope_plus, self.curvature)

    def restricted(self, grid: SGrid) -> "RadialProfile":
        """Restrict to a sub-grid sharing spacing and nodes."""
        i0 = self.grid.index_of(grid.s_min)
        if abs(self.grid.spacing - grid.spacing) > 1e-12 or \
                abs(self.grid.nodes[i0] - grid.s_min) > 1e-9:
            raise GridError("sub-grid is not aligned")
        sl = slice(i0, i0 + grid.n_points)
        curv = None if self.curvature is None else self.curvature[sl]
        return RadialProfile(grid, self.values[sl], self.slope_minus,
                             self.slope_plus, curv)


def _same_grid(a: RadialProfile, b: RadialProfile) -> None:
    if a.grid != b.grid:
        raise GridError("profiles live on different grids")


def d2(p: RadialProfile) -> np.ndarray:
    """Discrete ``f''`` with boundary ghosts built from the declared slopes.

    Interior nodes use the centred stencil. At the ends the ghost value
    ``u_{-1} = u_1 - 2 h slope`` is used, so the trapezoid sum of the result
    equals ``slope_plus - slope_minus`` exactly.
    """
    if p.curvature is not None:
        return p.curvature
    return d2_values(p.values, p.grid.spacing, p.slope_minus, p.slope_plus)


def d2_values(u: np.ndarray, h: float, slope_minus: float = 0.0,
              slope_plus: float = 0.0) -> np.ndarray:
    out = np.empty_like(u)
    out[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h**2
    out[0] = 2.0 * (u[1] - u[0] - h * slope_minus) / h**2
    out[-1] = 2.0 * (u[-2] - u[-1] + h * slope_plus) / h**2
    return out


def integrate(grid: SGrid, f: np.ndarray) -> float:
    return float(np.dot(grid.weights, f))


# --- closed-form softplus profiles -----------------------------------------

def _forward_gap(x, k):
    """softplus(x + k) - softplus(x), accurate for x << 0."""
    return np.log1p(expit(x) * np.expm1(k))


def softplus(x):
    return np.logaddexp(0.0, x)


def softplus_d2(x, k):
    """softplus(x+k) - 2 softplus(x) + softplus(x-k) without cancellation."""
    y = -np.abs(np.asarray(x, dtype=float))
    return _forward_gap(y, k) - _forward_gap(y - k, k)


def softplus_profile(grid: SGrid, terms: Sequence[tuple], linear: float = 0.0,
                     const: float = 0.0) -> RadialProfile:
    """Profile ``linear*s + const + sum c*softplus(p*s + q)`` with ``p > 0``.

    The discrete curvature is evaluated in closed form.
    """
    s = grid.nodes
    h = grid.spacing
    vals = linear * s + const
    curv = np.zeros_like(s)
    slope_plus = linear
    for c, p, q in terms:
        if p <= 0:
            raise GridError("softplus terms need a positive rate")
        x = p * s + q
        vals = vals + c * softplus(x)
        k = p * h
        cv = np.empty_like(s)
        cv[1:-1] = softplus_d2(x[1:-1], k) / h**2
        cv[0] = 2.0 * _forward_gap(x[0], k) / h**2
        cv[-1] = 2.0 * _forward_gap(-x[-1], k) / h**2
        curv += c * cv
        slope_plus += c * p
    return RadialProfile(grid, vals, linear, slope_plus, curv)


def zero_profile(grid: SGrid) -> RadialProfile:
    return RadialProfile(grid, np.zeros(grid.n_points), 0.0, 0.0,
                         np.zeros(grid.n_points))


def constant_profile(grid: SGrid, c: float) -> RadialProfile:
    return zero_profile(grid).shifted(c)


# --- background geometry ---------------------------------------------------

@dataclass(frozen=True)
class BackgroundGeometry:
    """Reference Kahler form, twisting form and Ricci potential."""

    g0: RadialProfile
    eta_hat: RadialProfile
    ricci_hat: RadialProfile

    @property
    def grid(self) -> SGrid:
        return self.g0.grid

    @property
    def mass_omega(self) -> float:
        return self.g0.mass

    @property
    def mass_eta(self) -> float:
        return self.eta_hat.mass

    @property
    def mass_c1(self) -> float:
        return self.ricci_hat.mass

    @cached_property
    def omega_density(self) -> np.ndarray:
        return d2(self.g0)

    @cached_property
    def chi_density(self) -> np.ndarray:
        """Density of ``eta - Ric(omega)``."""
        return d2(self.eta_hat) - d2(self.ricci_hat)

    @property
    def chi_hat(self) -> RadialProfile:
        return self.eta_hat - self.ricci_hat


def make_fubini_study(V: float, grid: SGrid,
                      eta: Optional[RadialProfile] = None) -> BackgroundGeometry:
    """Fubini-Study form of total mass ``V``: ``g0 = V log(1 + e^s)``.

    The Ricci potential is the closed form ``2 log(1 + e^s)``, normalised to
    vanish at the pole ``s = -inf``.
    """
    if not V > 0:
        raise DegenerateMetricError("V must be positive")
    g0 = softplus_profile(grid, [(V, 1.0, 0.0)])
    if np.any(d2(g0) <= 0):
        raise DegenerateMetricError("reference density underflows on this grid")
    ric = softplus_profile(grid, [(2.0, 1.0, 0.0)])
    eta = zero_profile(grid) if eta is None else eta
    if eta.grid != grid:
        raise GridError("eta lives on a different grid")
    return BackgroundGeometry(g0, eta, ric)


def ricci_potential(g: RadialProfile) -> RadialProfile:
    """Ricci potential ``s - log g''`` of a Kahler potential, from the grid.

    Boundary nodes are filled by quadratic extrapolation because the lumped
    end-cell curvature is not a pointwise density. The result is shifted to
    vanish at the left end; its declared slopes are ``(0, 2)``.
    """
    G = d2(g)
    if np.any(G[1:-1] <= 0):
        raise DegenerateMetricError("potential is not strictly convex")
    s = g.grid.nodes
    r = np.empty_like(s)
    r[1:-1] = -np.log(G[1:-1] * np.exp(-s[1:-1]))
    r[0] = 3 * r[1] - 3 * r[2] + r[3]
    r[-1] = 3 * r[-2] - 3 * r[-3] + r[-4]
    r -= r[0]
    return RadialProfile(g.grid, r, 0.0, 2.0)


@dataclass(frozen=True)
class ClassPath:
    """Linear path ``theta_t = omega + t (eta - Ric(omega))`` on ``[0, t_max)``."""

    bg: BackgroundGeometry
    t_max: float

    @property
    def grid(self) -> SGrid:
        return self.bg.grid

    def mass(self, t: float) -> float:
        return self.bg.mass_omega + t * (self.bg.mass_eta - self.bg.mass_c1)

    def theta_density(self, t: float) -> np.ndarray:
        return self.bg.omega_density + t * self.bg.chi_density

    def theta_potential(self, t: float) -> RadialProfile:
        return self.bg.g0 + self.bg.chi_hat.scaled(t)

    def theta_ratio(self, t: float) -> np.ndarray:
        """Pointwise ``theta_t / omega``."""
        return self.theta_density(t) / self.bg.omega_density


def compute_tmax(bg: BackgroundGeometry) -> ClassPath:
    """Largest time for which the cohomology class stays positive."""
    k = bg.mass_eta - bg.mass_c1
    t_max = np.inf if k >= 0 else bg.mass_omega / (-k)
    return ClassPath(bg, float(t_max))
