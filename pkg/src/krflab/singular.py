"""Singular initial data: Lelong numbers, integrability and approximation.

A profile with pole coefficient ``a`` behaves like ``a s`` as ``s -> -inf``;
its Lelong number is ``nu = 2a`` and its integrability index is ``c = 1/nu``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy.special import logsumexp

from .errors import (CompatibilityError, GridError, NotPlurisubharmonicError,
                     WindowGuardError)
from .geometry import (BackgroundGeometry, RadialProfile, SGrid, d2,
                       softplus_profile)


@dataclass(frozen=True)
class SingularitySpec:
    """Pole profile ``a log(e^s/(1+e^s)) + tail`` with ``0 <= a``."""

    a: float
    tail: Optional[RadialProfile] = None

    def __post_init__(self):
        if self.a < 0:
            raise ValueError("pole coefficient must be non-negative")

    @property
    def nu(self) -> float:
        return 2.0 * self.a

    @property
    def c(self) -> float:
        return np.inf if self.a == 0 else 1.0 / self.nu

    @property
    def half_inverse_index(self) -> float:
        """``1/(2c)``, the time at which the pole is absorbed."""
        return self.nu / 2.0

    @property
    def slope_minus(self) -> float:
        return self.a

    def profile(self, grid: SGrid) -> RadialProfile:
        p = softplus_profile(grid, [(-self.a, 1.0, 0.0)], linear=self.a)
        return p if self.tail is None else p + self.tail


_OFFSETS = {
    "linear": lambda j: float(j),
    "log": lambda j: float(np.log(j)),
    "log1p": lambda j: float(np.log1p(j)),
}


@dataclass(frozen=True)
class GlueFamily:
    """Decreasing smooth approximants glued below ``s = -m_j``.

    ``phi_j = (a/p) log(e^{p s} + e^{-p m_j}) - a log(1 + e^s) + tail``.
    """

    spec: SingularitySpec
    power: float = 1.0
    offset_rule: Union[str, Callable[[float], float]] = "linear"

    def offset(self, j: float) -> float:
        rule = self.offset_rule
        return _OFFSETS[rule](j) if isinstance(rule, str) else float(rule(j))

    def transition(self, j: float) -> float:
        return -self.offset(j)

    def initial(self, j: float, grid: SGrid) -> RadialProfile:
        a, p, m = self.spec.a, self.power, self.offset(j)
        prof = softplus_profile(grid, [(a / p, p, p * m), (-a, 1.0, 0.0)], const=-a * m)
        return prof if self.spec.tail is None else prof + self.spec.tail


# --- Lelong numbers ----------------------------------------------------------

@dataclass(frozen=True)
class LelongMeasurement:
    nu: float
    window: tuple
    sensitivity: float
    low_confidence: bool

    def __float__(self):
        return self.nu


def _slope(grid: SGrid, values: np.ndarray, lo: float, hi: float) -> float:
    m = grid.mask(lo, hi)
    if m.sum() < 3:
        raise WindowGuardError("window holds fewer than 3 nodes")
    return float(np.polyfit(grid.nodes[m], values[m], 1)[0])


def lelong_number(p: RadialProfile, window: tuple = (-9.0, -5.0),
                  shift: float = 1.0, confidence_tol: float = 0.02) -> LelongMeasurement:
    """Twice the fitted slope on a window in the pole hemisphere ``s < 0``.

    The fit is repeated on windows shifted by ``+-shift``; the spread is
    reported as the sensitivity.
    """
    lo, hi = window
    g = p.grid
    if not (g.s_min + g.spacing < lo - shift and hi + shift < 0 and lo < hi):
        raise WindowGuardError(f"window {window} is not inside the pole hemisphere of the grid")
    nu = 2.0 * _slope(g, p.values, lo, hi)
    alt = [2.0 * _slope(g, p.values, lo + d, hi + d) for d in (-shift, shift)]
    sens = float(max(abs(x - nu) for x in alt))
    return LelongMeasurement(nu, (lo, hi), sens, sens > confidence_tol)


# --- exponential integrals ----------------------------------------------------

@dataclass(frozen=True)
class ExpIntegral:
    """Certificate for ``int e^q dV`` with fitted exponential tails."""

    value: float
    log_value: float
    kappa_minus: float
    kappa_plus: float
    divergent: bool
    boundary: bool

    def to_dict(self) -> dict:
        return {k: (None if isinstance(v, float) and not np.isfinite(v) else v)
                for k, v in self.__dict__.items()}


def exp_integral(q: np.ndarray, bg: BackgroundGeometry, tail_width: float = 2.0,
                 tol: float = 0.01) -> ExpIntegral:
    """Integrate ``e^q omega`` over the sphere.

    Interior nodes are summed by the trapezoid rule. Beyond the first and last
    interior node the log-integrand is extrapolated linearly, with rates
    ``kappa_minus`` (growth toward the right) and ``kappa_plus`` (decay).
    A negative rate means divergence.
    """
    g = bg.grid
    s = g.nodes
    G = bg.omega_density
    li = np.asarray(q, dtype=float)[1:-1] + np.log(G[1:-1])
    si = s[1:-1]
    h = g.spacing
    w = np.full(len(si), h)
    w[0] = w[-1] = h / 2
    mL = si <= si[0] + tail_width
    mR = si >= si[-1] - tail_width
    k_minus = float(np.polyfit(si[mL], li[mL], 1)[0])
    k_plus = float(-np.polyfit(si[mR], li[mR], 1)[0])
    divergent = k_minus < -tol or k_plus < -tol
    boundary = (abs(k_minus) <= tol) or (abs(k_plus) <= tol)
    if divergent or boundary:
        val = np.inf if divergent else np.nan
        return ExpIntegral(float(val), float(val), k_minus, k_plus, divergent, boundary)
    parts = [logsumexp(li, b=w), li[0] - np.log(k_minus), li[-1] - np.log(k_plus)]
    lv = float(logsumexp(parts))
    return ExpIntegral(float(np.exp(lv)), lv, k_minus, k_plus, False, False)


def skoda_check(p: RadialProfile, lam: float, bg: BackgroundGeometry,
                tol: float = 0.01) -> ExpIntegral:
    """Quadrature certificate for ``int e^{-2 lam p} dV``."""
    return exp_integral(-2.0 * lam * p.values, bg, tol=tol)


@dataclass(frozen=True)
class IntegrabilityIndex:
    c: float
    nu: float
    below: Optional[ExpIntegral]
    above: Optional[ExpIntegral]
    flagged: bool


def integrability_index(p: RadialProfile, bg: BackgroundGeometry,
                        window: tuple = (-9.0, -5.0)) -> IntegrabilityIndex:
    """``c = 1/nu`` cross-checked by quadrature at ``0.9 c`` and ``1.1 c``."""
    nu = lelong_number(p, window).nu
    if nu <= 1e-8:
        return IntegrabilityIndex(np.inf, nu, None, None, False)
    c = 1.0 / nu
    lo = skoda_check(p, 0.9 * c, bg)
    hi = skoda_check(p, 1.1 * c, bg)
    flagged = lo.divergent or lo.boundary or not hi.divergent
    return IntegrabilityIndex(c, nu, lo, hi, flagged)


# --- equisingular approximation ---------------------------------------------

@dataclass(frozen=True)
class EquisingularResult:
    psi: RadialProfile
    a_prime: float
    certificate: ExpIntegral


def equisingular_approx(p: RadialProfile, eps: float,
                        bg: BackgroundGeometry) -> EquisingularResult:
    """Less singular ``psi >= p`` with pole coefficient ``max(a - eps/4, 0)``.

    ``psi = p + (a - a') log(1 + e^{-s})``; the added term is convex, so
    ``psi`` stays omega-plurisubharmonic. The certificate integrates
    ``e^{2(psi - p)/eps}``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    a = p.slope_minus
    ap = max(a - eps / 4.0, 0.0)
    corr = softplus_profile(p.grid, [(a - ap, 1.0, 0.0)], linear=-(a - ap))
    psi = p + corr
    cert = exp_integral(2.0 * corr.values / eps, bg)
    return EquisingularResult(psi, ap, cert)


# --- supersolution -----------------------------------------------------------

@dataclass(frozen=True)
class Supersolution:
    profile: RadialProfile
    C: float
    time_constant: float


def supersolution(p: RadialProfile, gamma: float, t: float,
                  bg: BackgroundGeometry) -> Supersolution:
    """``(1 - gamma t) p + t log(2C)`` dominating flows started below ``p``.

    ``C`` is the smallest constant with ``dd^c p <= C e^{-gamma p} omega`` and
    ``C e^{-gamma p} >= 1`` on the grid interior.
    """
    if np.max(p.values) > 1e-12:
        raise ValueError("p must be non-positive")
    if gamma * t > 1 + 1e-12:
        raise ValueError("need gamma t <= 1")
    curv = d2(p)[1:-1]
    G = bg.omega_density[1:-1]
    e = np.exp(gamma * p.values[1:-1])
    C = float(max(np.max(curv * e / G), np.max(e)))
    prof = p.scaled(1.0 - gamma * t).shifted(t * np.log(2.0 * C))
    return Supersolution(prof, C, float(np.log(2.0 * C)))


# --- prescribed density -------------------------------------------------------

@dataclass(frozen=True)
class MASolution:
    u: RadialProfile
    compatibility_error: float


def solve_ma_radial(f: np.ndarray, bg: BackgroundGeometry,
                    tol: float = 1e-6) -> MASolution:
    """Solve ``omega + dd^c u = f omega`` with ``sup u = 0``.

    The discrete problem ``d2(u) = (f - 1) g0''`` with zero end slopes is
    integrated by cumulative sums. ``f`` is rescaled to the exact discrete
    mass after the compatibility check.
    """
    g = bg.grid
    f = np.asarray(f, dtype=float)
    if f.shape != (g.n_points,):
        raise GridError("density has wrong length")
    if np.any(f < 0) or not np.all(np.isfinite(f)):
        raise NotPlurisubharmonicError("density must be finite and non-negative")
    G = bg.omega_density
    w = g.weights
    mass = float(np.dot(w, f * G))
    err = abs(mass - bg.mass_omega) / bg.mass_omega
    if err > tol:
        raise CompatibilityError(f"int f dV = {mass:.8g} differs from {bg.mass_omega:.8g}")
    f = f * (bg.mass_omega / mass)
    c = (f - 1.0) * G
    h = g.spacing
    slopes = np.empty(g.n_points - 1)
    slopes[0] = 0.5 * h * c[0]
    slopes[1:] = slopes[0] + h * np.cumsum(c[1:-1])
    u = np.concatenate([[0.0], h * np.cumsum(slopes)])
    u -= u.max()
    return MASolution(RadialProfile(g, u, 0.0, 0.0, c), err)


def normalize_density(f: np.ndarray, bg: BackgroundGeometry) -> np.ndarray:
    """Scale ``f`` so that ``int f dV`` equals the class mass."""
    mass = float(np.dot(bg.grid.weights, f * bg.omega_density))
    return f * (bg.mass_omega / mass)


