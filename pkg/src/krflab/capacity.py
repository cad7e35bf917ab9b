"""Generalised capacity of radial sets and an extinction test for decay rates.

``Cap_psi(E)`` is the supremum of the Monge-Ampere mass of ``E`` over
omega-plurisubharmonic ``u`` with ``psi - 1 <= u <= psi``. Restricted to
radial candidates on the grid this is a linear programme: the mass density
``g0'' + d2(u)`` is linear in ``u`` and in the two end slopes, which carry the
mass sent to the poles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import HypothesisError, KRFError
from .geometry import BackgroundGeometry, RadialProfile


@dataclass(frozen=True)
class CapacityProblem:
    psi: RadialProfile
    nodes: np.ndarray
    bg: BackgroundGeometry

    def __post_init__(self):
        idx = np.unique(np.asarray(self.nodes, dtype=int))
        n = self.bg.grid.n_points
        if idx.size and (idx[0] < 0 or idx[-1] >= n):
            raise IndexError("node index outside grid")
        object.__setattr__(self, "nodes", idx)


@dataclass
class CapacityResult:
    value: float
    u: np.ndarray
    slopes: tuple
    certificate: dict = field(default_factory=dict)


def _mass_operator(n: int, h: float):
    """Sparse map (u, sigma_minus, sigma_plus) -> d2 with slope ghosts."""
    main = np.full(n, -2.0)
    up = np.ones(n - 1)
    lo = np.ones(n - 1)
    up[0] = 2.0
    lo[-1] = 2.0
    D = sparse.diags([lo, main, up], [-1, 0, 1], shape=(n, n), format="lil")
    D = D / h**2
    S = sparse.lil_matrix((n, 2))
    S[0, 0] = -2.0 / h
    S[n - 1, 1] = 2.0 / h
    return sparse.hstack([D, S]).tocsr()


def cap_psi(problem: CapacityProblem, cert_tol: float = 1e-7) -> CapacityResult:
    """Solve the capacity LP and certify optimality from its dual."""
    bg = problem.bg
    g = bg.grid
    n = g.n_points
    w = g.weights
    G = bg.omega_density
    A = _mass_operator(n, g.spacing)
    sel = np.zeros(n)
    sel[problem.nodes] = w[problem.nodes]
    c = -(A.T @ sel)
    const = float(np.dot(sel, G))
    psi = problem.psi.values
    bounds = [(psi[i] - 1.0, psi[i]) for i in range(n)] + [(0.0, None), (None, 0.0)]
    # rho = G + A x >= 0  <=>  -A x <= G
    res = linprog(c, A_ub=-A, b_ub=G, bounds=bounds, method="highs")
    if res.status != 0:
        raise KRFError(f"capacity LP failed: {res.message}")
    x = res.x
    value = const - float(res.fun)
    cert = certify_lp(c, -A, G, bounds, x, res, cert_tol)
    return CapacityResult(value, x[:n], (float(x[n]), float(x[n + 1])), cert)


def certify_lp(c, A_ub, b_ub, bounds, x, res, tol) -> dict:
    """Primal and dual feasibility, complementary slackness and duality gap."""
    y = np.asarray(res.ineqlin.marginals)      # <= 0 for <= rows
    zl = np.asarray(res.lower.marginals)       # >= 0
    zu = np.asarray(res.upper.marginals)       # <= 0
    lo = np.array([b[0] if b[0] is not None else -np.inf for b in bounds])
    hi = np.array([b[1] if b[1] is not None else np.inf for b in bounds])
    slack = b_ub - A_ub @ x
    scale = max(1.0, float(np.max(np.abs(c))))
    primal = max(0.0, float(-slack.min()), float(np.max(lo - x)), float(np.max(x - hi)))
    stationarity = float(np.max(np.abs(c - A_ub.T @ y - zl - zu)))
    dual_sign = max(0.0, float(y.max()), float(-zl.min()), float(zu.max()))
    fl = np.isfinite(lo)
    fu = np.isfinite(hi)
    cs = max(float(np.max(np.abs(y * slack))),
             float(np.max(np.abs(zl[fl] * (x[fl] - lo[fl])))) if fl.any() else 0.0,
             float(np.max(np.abs(zu[fu] * (x[fu] - hi[fu])))) if fu.any() else 0.0)
    dual_obj = float(b_ub @ y + np.dot(zl[fl], lo[fl]) + np.dot(zu[fu], hi[fu]))
    gap = abs(float(c @ x) - dual_obj)
    ok = max(primal, stationarity / scale, dual_sign, cs, gap / scale) <= tol
    return {"primal_infeasibility": primal, "stationarity": stationarity,
            "dual_sign_violation": dual_sign, "complementary_slackness": cs,
            "duality_gap": gap, "certified": bool(ok)}


def sublevel_nodes(phi: np.ndarray, psi: np.ndarray, t: float) -> np.ndarray:
    """Indices of ``{phi < psi - t}``."""
    return np.flatnonzero(phi < psi - t)


# --- extinction test -------------------------------------------------------

@dataclass(frozen=True)
class DecayFunction:
    """Samples of a non-increasing ``g`` and the constant ``C`` of its hypothesis."""

    t: np.ndarray
    g: np.ndarray
    C: float


@dataclass
class ExtinctionResult:
    extinction_time: Optional[float]
    verified: bool
    witness: Optional[dict]
    t0: float
    max_after: Optional[float] = None
    reason: str = ""


def _value_at(d: DecayFunction, t: float) -> float:
    k = np.searchsorted(d.t, t + 1e-12, side="right") - 1
    if k < 0:
        raise HypothesisError("t0 precedes the first sample")
    return float(d.g[k])


def kolodziej_extinction(d: DecayFunction, t0: float, floor: float = 1e-12,
                         rel_tol: float = 1e-9) -> ExtinctionResult:
    """Check ``s g(t+s) <= C g(t)^2`` on samples and extinction by ``t0 + 2``.

    A sampled pair violating the hypothesis is returned as a witness.
    """
    t = np.asarray(d.t, dtype=float)
    gv = np.asarray(d.g, dtype=float)
    if np.any(np.diff(t) <= 0):
        raise ValueError("sample times must increase")
    if np.any(np.diff(gv) > rel_tol * np.maximum(1.0, gv[:-1])):
        raise HypothesisError("g is not non-increasing")
    if np.any(gv < 0):
        raise HypothesisError("g must be non-negative")
    g_t0 = _value_at(d, t0)
    if g_t0 > 1.0 / (2.0 * d.C) * (1 + rel_tol):
        raise HypothesisError(f"g(t0)={g_t0:.4g} exceeds 1/(2C)={1 / (2 * d.C):.4g}")
    worst = None
    start = int(np.searchsorted(t, t0 - 1e-12))
    for lag in range(1, len(t) - start):
        i = np.arange(start, len(t) - lag)
        s = t[i + lag] - t[i]
        keep = s <= 1.0 + 1e-12
        if not keep.any():
            break
        i, s = i[keep], s[keep]
        lhs = s * gv[i + lag]
        rhs = d.C * gv[i] ** 2
        excess = lhs - rhs * (1 + rel_tol)
        k = int(np.argmax(excess))
        if excess[k] > 0 and (worst is None or excess[k] > worst[0]):
            worst = (excess[k], {"t": float(t[i[k]]), "s": float(s[k]),
                                 "lhs": float(lhs[k]), "rhs": float(rhs[k])})
    if worst is not None:
        return ExtinctionResult(None, False, worst[1], t0, reason="hypothesis violated")
    after = t >= t0 + 2.0 - 1e-12
    if not after.any():
        return ExtinctionResult(None, False, None, t0, reason="no samples beyond t0 + 2")
    gmax = float(gv[after].max())
    dead = np.flatnonzero(gv <= floor)
    ext = float(t[dead[0]]) if dead.size else None
    return ExtinctionResult(ext, gmax <= floor, None, t0, gmax,
                            "" if gmax <= floor else "g positive after t0 + 2")


def synthetic_decay(C: float, t0: float, horizon: float = 3.0,
                    step: float = 1e-3, floor: float = 1e-300) -> DecayFunction:
    """Largest sampled function saturating ``s g(t+s) <= C g(t)^2``.

    Starts at ``1/(2C)`` on ``[0, t0]`` and is then defined by the recursion
    ``g(t) = min_s C g(t - s)^2 / s`` over sampled ``s`` in ``(0, 1]``.
    """
    n0 = int(round(t0 / step))
    n = int(round((t0 + horizon) / step)) + 1
    g = np.empty(n)
    g[: n0 + 1] = 1.0 / (2.0 * C)
    L = int(round(1.0 / step))
    lags = np.arange(1, L + 1) * step
    for k in range(n0 + 1, n):
        lo = max(0, k - L)
        prev = g[lo:k][::-1]
        cand = C * prev**2 / lags[: k - lo]
        v = min(g[k - 1], float(cand.min()))
        g[k] = 0.0 if v < floor else v
    return DecayFunction(np.arange(n) * step, g, C)
