"""Executable checks of a priori estimates and qualitative flow properties.

Each check returns an :class:`EstimateReport`. Checks with unspecified
constants follow a fit-then-verify protocol: the smallest admissible constant
is fitted on a coarse trajectory and then verified, with 2x slack, on a run at
half the spacing and half the time step.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .flow import FlowConfig, FlowTrajectory, MaximalFlowResult, run_flow
from .geometry import ClassPath, RadialProfile, SGrid, d2
from .singular import (ExpIntegral, equisingular_approx, exp_integral,
                       lelong_number, solve_ma_radial, supersolution)

ORDER_TOL = 1e-8
QUANT_TOL = 1e-4
SLACK_FLOOR = 1e-3


@dataclass
class EstimateReport:
    theorem: str
    status: str                       # "pass", "fail" or "skipped"
    margin: Optional[float] = None
    constants: Dict[str, float] = field(default_factory=dict)
    witness: Optional[Dict[str, float]] = None
    refinement_stable: Optional[bool] = None
    reason: str = ""
    details: dict = field(default_factory=dict)

    @property
    def holds(self) -> Optional[bool]:
        return None if self.status == "skipped" else self.status == "pass"

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def skipped(theorem: str, reason: str) -> EstimateReport:
    return EstimateReport(theorem, "skipped", reason=reason)


def slack(c: float) -> float:
    """Constant used for verification: twice the fitted allowance."""
    return c + max(abs(c), SLACK_FLOOR)


def stable_pair(c_coarse: float, c_fine: float) -> bool:
    """Fitted constants agree within a factor two (with an absolute floor)."""
    return abs(c_fine - c_coarse) <= max(abs(c_coarse), abs(c_fine) / 2, SLACK_FLOOR)


def _witness(traj_or_grid, t, margins) -> dict:
    grid = traj_or_grid if isinstance(traj_or_grid, SGrid) else traj_or_grid.grid
    i = int(np.argmin(margins))
    return {"t": float(t), "s": float(grid.nodes[i])}


def _same_setup(a: FlowTrajectory, b: FlowTrajectory) -> None:
    if a.grid != b.grid:
        raise ValueError("trajectories use different grids")
    if a.path.bg is not b.path.bg and a.path != b.path:
        raise ValueError("trajectories use different class paths")


# --- normalisation -----------------------------------------------------------

@dataclass(frozen=True)
class Normalization:
    """Reference form ``lam * omega`` so that ``2/3 lam omega <= theta_t <= 2 lam omega``."""

    lam: float
    interval: tuple
    full_window: bool

    def phi(self, u: np.ndarray, t: float) -> np.ndarray:
        return u - t * np.log(self.lam)

    def phi_dot(self, L: np.ndarray) -> np.ndarray:
        return L - np.log(self.lam)


def normalization(path: ClassPath, t_end: float) -> Optional[Normalization]:
    """Smallest admissible reference scale over ``[0, t_end]``.

    Returns ``None`` when ``theta_t`` fails to be positive. ``full_window``
    records whether the two-sided window is attainable; the upper half alone
    is always attainable for a positive path.
    """
    ts = np.linspace(0.0, t_end, 21)
    ratios = np.array([path.theta_ratio(t)[1:-1] for t in ts])
    rmax, rmin = float(ratios.max()), float(ratios.min())
    if rmin <= 0:
        return None
    lo, hi = rmax / 2.0, 1.5 * rmin
    return Normalization(lo, (lo, hi), lo <= hi)


# --- comparison and upper bounds ---------------------------------------------

def check_comparison(a: FlowTrajectory, b: FlowTrajectory,
                     tol: float = ORDER_TOL) -> EstimateReport:
    """``max(u_t - v_t) <= max(u_0 - v_0)`` at every stored time."""
    _same_setup(a, b)
    if not np.allclose(a.times, b.times):
        raise ValueError("trajectories have different output times")
    m0 = float(np.max(a.states[0].u.values - b.states[0].u.values))
    worst, wit = np.inf, None
    for sa, sb in zip(a.states, b.states):
        diff = sa.u.values - sb.u.values
        marg = m0 - diff
        if marg.min() < worst:
            worst = float(marg.min())
            wit = _witness(a, sa.t, marg)
    return EstimateReport("comparison", "pass" if worst >= -tol else "fail", worst,
                          witness=wit, details={"initial_sup_difference": m0})


def check_upper_bound(traj: FlowTrajectory, tol: float = 1e-6) -> EstimateReport:
    """``phi_t <= sup phi_0 + t log 2`` in the normalised reference."""
    nz = normalization(traj.path, float(traj.times.max()))
    if nz is None:
        return skipped("upper_bound", "theta_t is not positive on the time range")
    mask = traj.region_mask()
    sup0 = float(np.max(nz.phi(traj.states[0].u.values, 0.0)[mask]))
    worst, wit = np.inf, None
    for st in traj.states:
        marg = sup0 + st.t * np.log(2.0) - nz.phi(st.u.values, st.t)[mask]
        if marg.min() < worst:
            worst = float(marg.min())
            wit = _witness(traj, st.t, _embed(marg, mask))
    return EstimateReport("upper_bound", "pass" if worst >= -tol else "fail", worst,
                          witness=wit,
                          details={"lambda": nz.lam, "full_window": nz.full_window,
                                   "lambda_interval": list(nz.interval)})


def _embed(vals: np.ndarray, mask: np.ndarray) -> np.ndarray:
    out = np.full(mask.shape, np.inf)
    out[mask] = vals
    return out


def check_derivative_upper(traj: FlowTrajectory, tol: float = 1e-6) -> EstimateReport:
    """``phi_dot <= (phi_t - phi_0)/t + 1`` with ``phi_dot`` from the equation."""
    mask = traj.region_mask()
    u0 = traj.states[0].u.values
    worst, wit = np.inf, None
    for st in traj.states:
        if st.t <= 0:
            continue
        marg = (st.u.values - u0) / st.t + 1.0 - st.log_ratio
        marg = _embed(marg[mask], mask)
        if marg.min() < worst:
            worst = float(marg.min())
            wit = _witness(traj, st.t, marg)
    return EstimateReport("derivative_upper", "pass" if worst >= -tol else "fail",
                          worst, witness=wit)


# --- estimates with a context --------------------------------------------------

@dataclass
class EstimateContext:
    """Parameters shared by the C0, derivative and C2 estimates."""

    T: float
    S: float
    eps0: float
    eps: float
    psi: RadialProfile
    E1: ExpIntegral
    E2: ExpIntegral
    beta: Optional[float] = None
    alpha: Optional[float] = None
    norm: Optional[Normalization] = None
    valid: bool = True
    reason: str = ""

    def to_dict(self) -> dict:
        return _jsonable({"T": self.T, "S": self.S, "eps0": self.eps0, "eps": self.eps,
                          "E1": self.E1.value, "E2": self.E2.value,
                          "beta": self.beta, "alpha": self.alpha,
                          "lambda": None if self.norm is None else self.norm.lam,
                          "valid": self.valid, "reason": self.reason})


def make_context(phi0: RadialProfile, nu0: float, path: ClassPath, T: float, S: float,
                 eps0: float, eps: float, beta: Optional[float] = None,
                 alpha: Optional[float] = None) -> EstimateContext:
    """Build the context and machine-check its hypotheses.

    ``nu0`` is the Lelong number of ``phi0`` so that ``1/(2c) = nu0/2``.
    Failed hypotheses leave ``valid = False`` with a reason.
    """
    bg = path.bg
    eq = equisingular_approx(phi0, eps0, bg)
    psi = eq.psi
    E1 = exp_integral(2.0 * (psi.values - phi0.values) / eps0, bg)
    E2 = exp_integral(-psi.values / T, bg)
    half = nu0 / 2.0
    reasons = []
    if not half < T < S < path.t_max:
        reasons.append(f"need 1/(2c)={half:.4g} < T={T} < S={S} < t_max={path.t_max:.4g}")
    if not 0 < eps0 < eps < T:
        reasons.append("need 0 < eps0 < eps < T")
    if beta is not None:
        al = alpha or 0.0
        if not (half < 1 / (2 * beta) and 2 * beta - al > 0
                and 1 / (2 * beta) < 1 / (2 * beta - al) < path.t_max):
            reasons.append("beta, alpha violate 1/2c < 1/2beta < 1/(2beta - alpha) < t_max")
    if E1.divergent or E1.boundary or E2.divergent or E2.boundary:
        reasons.append("E1 or E2 is not certified finite")
    norm = normalization(path, min(S, path.t_max * (1 - 1e-9)))
    if norm is None or not norm.full_window:
        reasons.append("normalisation window unattainable on [0, S]")
    return EstimateContext(T, S, eps0, eps, psi, E1, E2, beta, alpha, norm,
                           not reasons, "; ".join(reasons))


def _fit_verify(name: str, fit_fn, coarse: FlowTrajectory,
                fine: Optional[FlowTrajectory], tol: float, extra: dict) -> EstimateReport:
    """Fit a constant on ``coarse`` and verify ``slack`` of it on ``fine``.

    ``fit_fn(traj)`` returns ``(C, witness)`` where ``C`` is the smallest
    constant making the estimate hold on ``traj``.
    """
    c_coarse, _ = fit_fn(coarse)
    target = fine if fine is not None else coarse
    c_target, wit = fit_fn(target)
    c_ver = slack(c_coarse)
    margin = c_ver - c_target
    stable = stable_pair(c_coarse, c_target) if fine is not None else None
    ok = margin >= -tol * max(1.0, abs(c_ver)) and stable is not False
    consts = {"C_fit": c_coarse, "C_verify": c_ver, "C_refined": c_target}
    consts.update(extra)
    return EstimateReport(name, "pass" if ok else "fail", float(margin), consts, wit,
                          stable)


def _times_in(traj: FlowTrajectory, lo: float, hi: float, open_lo: bool = False):
    return [st for st in traj.states
            if (st.t > lo + 1e-12 if open_lo else st.t >= lo - 1e-12) and st.t <= hi + 1e-12]


def _max_over(traj, states, fn):
    mask = traj.region_mask()
    best, wit = -np.inf, None
    for st in states:
        v = _embed(fn(st)[mask], mask)
        v = np.where(np.isfinite(v), v, -np.inf)
        i = int(np.argmax(v))
        if v[i] > best:
            best, wit = float(v[i]), {"t": float(st.t), "s": float(traj.grid.nodes[i])}
    return best, wit


def _restrict(ctx_psi: RadialProfile, grid: SGrid) -> np.ndarray:
    """Values of a coarse-grid profile on an aligned refined grid."""
    if ctx_psi.grid == grid:
        return ctx_psi.values
    return np.interp(grid.nodes, ctx_psi.grid.nodes, ctx_psi.values)


def check_c0_lower(traj: FlowTrajectory, ctx: EstimateContext,
                   refined: Optional[FlowTrajectory] = None,
                   tol: float = QUANT_TOL) -> EstimateReport:
    """``phi_t >= (1 - t/(2T)) psi - C`` for ``t`` in ``[eps, T]``."""
    if not ctx.valid:
        return skipped("c0_lower", ctx.reason)
    nz = ctx.norm

    def fit(tr):
        psi = _restrict(ctx.psi, tr.grid)
        sts = _times_in(tr, ctx.eps, ctx.T)
        return _max_over(tr, sts, lambda st: (1 - st.t / (2 * ctx.T)) * psi
                         - nz.phi(st.u.values, st.t))

    rep = _fit_verify("c0_lower", fit, traj, refined, tol, {"T": ctx.T})
    rep.details = {"lambda": nz.lam, "E1": ctx.E1.value, "E2": ctx.E2.value}
    return rep


def _chi_lower(path: ClassPath) -> float:
    """Smallest ``A1 >= 0`` with ``chi >= -A1 omega``."""
    bg = path.bg
    return max(0.0, float(np.max(-bg.chi_density[1:-1] / bg.omega_density[1:-1])))


def _chi_upper(path: ClassPath) -> float:
    bg = path.bg
    return max(0.0, float(np.max(bg.chi_density[1:-1] / bg.omega_density[1:-1])))


def check_dot_lower(traj: FlowTrajectory, ctx: EstimateContext,
                    refined: Optional[FlowTrajectory] = None,
                    tol: float = QUANT_TOL) -> EstimateReport:
    """``phi_dot >= log(t - eps) + A (Psi_t - phi_t) - C`` on ``(eps, S]``.

    ``A`` is fixed by the positivity requirement ``A eps/(6S) omega + chi >= omega``.
    """
    if not ctx.valid:
        return skipped("dot_lower", ctx.reason)
    nz = ctx.norm
    A = 6.0 * ctx.S * (1.0 + _chi_lower(traj.path)) / ctx.eps
    t_hi = min(ctx.S, float(traj.times.max()))

    def fit(tr):
        psi = _restrict(ctx.psi, tr.grid)
        sts = _times_in(tr, ctx.eps, t_hi, open_lo=True)
        return _max_over(tr, sts, lambda st: np.log(st.t - ctx.eps)
                         + A * ((1 - st.t / (2 * ctx.S)) * psi - nz.phi(st.u.values, st.t))
                         - nz.phi_dot(st.log_ratio))

    rep = _fit_verify("dot_lower", fit, traj, refined, tol, {"A": A, "S": ctx.S})
    positivity = A * ctx.eps / (6 * ctx.S) - _chi_lower(traj.path)
    rep.details = {"lambda": nz.lam, "positivity_margin": positivity - 1.0}
    if positivity < 1.0 - 1e-12:
        rep.status = "fail"
    return rep


def check_c2(traj: FlowTrajectory, ctx: EstimateContext,
             refined: Optional[FlowTrajectory] = None,
             tol: float = QUANT_TOL) -> EstimateReport:
    """``0 <= (t - eps) log tr <= -A psi + C`` on ``[eps, T]``.

    ``tr`` is the density ratio against the normalised reference, and ``A``
    follows the bookkeeping ``A eps/(6S) >= 2 + C1 T`` with ``C1`` bounding
    ``tr_omega chi`` from above.
    """
    if not ctx.valid:
        return skipped("c2", ctx.reason)
    nz = ctx.norm
    A = 6.0 * ctx.S * (2.0 + _chi_upper(traj.path) * ctx.T) / ctx.eps

    def fit(tr):
        psi = _restrict(ctx.psi, tr.grid)
        sts = _times_in(tr, ctx.eps, ctx.T)
        return _max_over(tr, sts, lambda st: (st.t - ctx.eps) * nz.phi_dot(st.log_ratio)
                         + A * psi)

    rep = _fit_verify("c2", fit, traj, refined, tol, {"A": A})
    left = np.inf
    for tr in [traj] + ([refined] if refined is not None else []):
        mask = tr.region_mask()
        for st in _times_in(tr, ctx.eps, ctx.T):
            left = min(left, float(np.min(((st.t - ctx.eps)
                                            * nz.phi_dot(st.log_ratio))[mask])))
    rep.details = {"lambda": nz.lam, "left_margin": left}
    if left < -ORDER_TOL:
        rep.status = "fail"
        rep.reason = "trace ratio below one in the normalised reference"
    return rep


@dataclass(frozen=True)
class AuxiliaryData:
    """Functions ``phi1``, ``phi2`` and constants for the finer estimates."""

    phi1: RadialProfile
    phi2: RadialProfile
    C1: float
    delta: float


def check_more_hypotheses(phi0: RadialProfile, aux: AuxiliaryData, path: ClassPath,
                          tol: float = 1e-10) -> List[str]:
    """Guards on the initial data; returns the list of violated hypotheses."""
    bad = []
    G = path.bg.omega_density[1:-1]
    curv = d2(phi0)[1:-1]
    L0 = np.log1p(curv / G)
    c1p1 = aux.C1 * aux.phi1.values[1:-1]
    if np.any(L0 < c1p1 - tol):
        bad.append("phi_dot_0 >= C1 phi1")
    if np.any(curv / G > np.exp(-c1p1) + tol):
        bad.append("Delta phi_0 <= exp(-C1 phi1)")
    if np.any(phi0.values < aux.delta * aux.phi2.values - tol):
        bad.append("phi_0 >= delta phi2")
    if np.max(aux.phi2.values) > -1 + tol:
        bad.append("phi2 <= -1")
    return bad


def check_more_estimates(traj: FlowTrajectory, aux: AuxiliaryData, T: float,
                         refined: Optional[FlowTrajectory] = None,
                         phi0: Optional[RadialProfile] = None,
                         tol: float = QUANT_TOL) -> EstimateReport:
    """``phi_dot >= C2 (phi2 + 1) + C1 phi1`` and
    ``tr <= C (1 + e^{-C1 phi1 - delta phi2})`` on ``[0, T]``.
    """
    if phi0 is not None:
        bad = check_more_hypotheses(phi0, aux, traj.path)
        if bad:
            return skipped("more_estimates", "hypotheses violated: " + ", ".join(bad))
    nz = normalization(traj.path, T)
    if nz is None or not nz.full_window:
        return skipped("more_estimates", "normalisation window unattainable on [0, T]")

    def vals(tr, prof):
        return _restrict(prof, tr.grid)

    def fit_c2(tr):
        p1, p2 = vals(tr, aux.phi1), vals(tr, aux.phi2)
        return _max_over(tr, _times_in(tr, 0.0, T),
                         lambda st: (nz.phi_dot(st.log_ratio) - aux.C1 * p1) / (p2 + 1.0))

    def fit_c(tr):
        p1, p2 = vals(tr, aux.phi1), vals(tr, aux.phi2)
        return _max_over(tr, _times_in(tr, 0.0, T),
                         lambda st: nz.phi_dot(st.log_ratio)
                         - np.logaddexp(0.0, -aux.C1 * p1 - aux.delta * p2))

    r1 = _fit_verify("more_estimates", fit_c2, traj, refined, tol, {})
    # the trace bound is fitted in log form: log tr - log(1 + e^{...}) <= log C
    r2 = _fit_verify("more_estimates", fit_c, traj, refined, tol, {})
    ok = r1.status == "pass" and r2.status == "pass"
    consts = {"C1": aux.C1, "delta": aux.delta,
              "C2_fit": r1.constants["C_fit"], "C2_verify": r1.constants["C_verify"],
              "logC_fit": r2.constants["C_fit"], "logC_verify": r2.constants["C_verify"]}
    stable = None if refined is None else bool(r1.refinement_stable and r2.refinement_stable)
    margin = min(r1.margin, r2.margin)
    wit = r1.witness if r1.margin <= r2.margin else r2.witness
    return EstimateReport("more_estimates", "pass" if ok else "fail", margin, consts,
                          wit, stable, details={"lambda": nz.lam})


# --- singular data ---------------------------------------------------------------

def _sup_norm_bounded(per_j: Dict[float, FlowTrajectory], t: float,
                      ratio: float = 0.6, abs_tol: float = 1e-3):
    js = sorted(per_j)
    sups = [float(np.max(np.abs(per_j[j].at(t).u.values))) for j in js]
    inc = np.diff(sups)
    if len(inc) < 2:
        return True, sups, None
    bounded = inc[-1] <= abs_tol or inc[-1] <= ratio * inc[-2]
    return bool(bounded), sups, float(inc[-1] / inc[-2]) if inc[-2] != 0 else None


def check_lelong_decay(result: MaximalFlowResult, p: RadialProfile,
                       window: tuple = (-9.0, -5.0), envelope_tol: float = 0.02,
                       positivity_tol: float = 0.02,
                       supersolution_tol: float = QUANT_TOL) -> EstimateReport:
    """Lower envelope of Lelong numbers, positivity, boundedness and domination."""
    if not result.hypothesis_holds or result.limit is None:
        return skipped("lelong_decay", "existence hypothesis 1/(2c) < t_max fails")
    traj = result.limit
    path = traj.path
    a = p.slope_minus
    nu0 = lelong_number(traj.states[0].u, window).nu
    rows, env, pos, bnd = [], np.inf, np.inf, True
    for st in traj.states:
        m = lelong_number(st.u, window)
        row = {"t": st.t, "nu": m.nu, "envelope": nu0 - 2 * st.t,
               "sensitivity": m.sensitivity}
        env = min(env, m.nu - (nu0 - 2 * st.t) + envelope_tol)
        if st.t < nu0 / 2 * 0.95:
            pos = min(pos, m.nu - positivity_tol)
        if st.t > nu0 / 2 * 1.05:
            ok, sups, r = _sup_norm_bounded(result.per_j, st.t)
            row.update({"bounded": ok, "sup_norms": sups, "increment_ratio": r})
            bnd = bnd and ok
        rows.append(row)
    dom = np.inf
    mask = traj.region_mask()
    if a > 0:
        gamma = 1.0 / a
        pmax = float(np.max(p.values))
        for st in traj.states:
            if gamma * st.t > 1 or st.t == 0:
                continue
            sup = supersolution(p.shifted(-max(pmax, 0.0)), gamma, st.t, path.bg)
            marg = sup.profile.values + max(pmax, 0.0) * (1 - gamma * st.t) - st.u.values
            dom = min(dom, float(np.min(marg[mask])))
    ok = env >= 0 and pos >= 0 and bnd and dom >= -supersolution_tol
    return EstimateReport("lelong_decay", "pass" if ok else "fail",
                          float(min(env, pos, dom)),
                          {"nu0": nu0}, details={"table": rows, "envelope_margin": env,
                                                 "positivity_margin": pos,
                                                 "bounded_after": bnd,
                                                 "supersolution_margin": dom})


def check_lower_5_3(traj: FlowTrajectory, phi0: RadialProfile, beta: float,
                    tol: float = ORDER_TOL) -> EstimateReport:
    """``phi_t >= (1 - 2 beta t) phi0 - C(t)`` with ``C(t)`` shrinking as ``t -> 0``."""
    path = traj.path
    if not 2 * beta > 1 / path.t_max:
        return skipped("lower_5_3", "need 2 beta > 1/t_max")
    mask = traj.region_mask()
    pts = [st for st in traj.states if st.t > 0]
    Cs = []
    for st in pts:
        Cs.append(float(np.max(((1 - 2 * beta * st.t) * phi0.values - st.u.values)[mask])))
    ts = [st.t for st in pts]
    Cs_arr = np.maximum(np.array(Cs), 0.0)
    monotone = bool(np.all(np.diff(Cs_arr) >= -tol))
    decade = ts[-1] / ts[0] >= 10 - 1e-9
    shrink = Cs_arr[0] <= 0.5 * Cs_arr[-1] + tol
    ok = monotone and decade and shrink
    return EstimateReport("lower_5_3", "pass" if ok else "fail",
                          float(np.min(np.diff(Cs_arr))) if len(Cs_arr) > 1 else None,
                          {"beta": beta},
                          details={"t": ts, "C_t": Cs, "monotone": monotone,
                                   "spans_decade": decade})


def _c2_distance(a, b, path: ClassPath) -> float:
    """Max of value, first and second difference distances."""
    h = path.grid.spacing
    du = a.u.values - b.u.values
    G = path.bg.omega_density
    dd = G * (np.exp(a.log_ratio) - np.exp(b.log_ratio))
    return float(max(np.max(np.abs(du)), np.max(np.abs(np.diff(du) / h)),
                     np.max(np.abs(dd))))


def check_stability(trajs: Dict[float, FlowTrajectory], limit: FlowTrajectory, t: float,
                    tol: float = 1e-3) -> EstimateReport:
    """Distances to the limit flow at time ``t`` decrease in ``j`` below ``tol``."""
    js = sorted(trajs)
    ref = limit.at(t)
    sup = [float(np.max(np.abs(trajs[j].at(t).u.values - ref.u.values))) for j in js]
    c2 = [_c2_distance(trajs[j].at(t), ref, limit.path) for j in js]
    mono = bool(np.all(np.diff(sup) < 0) and np.all(np.diff(c2) < 0))
    ok = mono and sup[-1] <= tol and c2[-1] <= tol
    return EstimateReport("stability", "pass" if ok else "fail", float(tol - max(sup[-1], c2[-1])),
                          details={"j": js, "sup": sup, "c2": c2, "monotone": mono, "t": t})


def dyadic_times(t0: float = 0.4, kmax: int = 6) -> List[float]:
    return [t0 * 2.0 ** (-k) for k in range(kmax + 1)]


def fit_two_time_constant(traj: FlowTrajectory, times: Sequence[float]) -> float:
    """Smallest ``C >= 0`` with ``phi_t >= phi_s + (t-s)(log(t-s) - C)`` on samples."""
    mask = traj.region_mask()
    ts = sorted(times)
    C = 0.0
    pts = [0.0] + ts
    for i, s in enumerate(pts):
        for t in pts[i + 1:]:
            d = traj.at(t).u.values - traj.at(s).u.values
            C = max(C, float(np.max(np.log(t - s) - d[mask] / (t - s))))
    return C


def check_zero_convergence(traj: FlowTrajectory, phi0: RadialProfile, region: tuple,
                           C: Optional[float] = None, t0: float = 0.4, kmax: int = 6,
                           smooth: bool = False, sup_tol: float = 1e-2,
                           c2_tol: float = 1e-2, tol: float = ORDER_TOL) -> EstimateReport:
    """Monotone dyadic sequence and convergence to the initial data on ``region``.

    ``C`` is the two-time constant; when omitted it is fitted on ``traj``.
    With ``smooth`` the first and second differences are also compared.
    """
    path = traj.path
    mask = traj.grid.mask(*region)
    ts = dyadic_times(t0, kmax)
    if C is None:
        C = fit_two_time_constant(traj, ts)
    n = 1

    def u_seq(t):
        return traj.at(t).u.values + n * C * t - n * t * np.log(t) + n * t * np.log(4.0)

    mono = np.inf
    for t in ts[:-1]:
        mono = min(mono, float(np.min((u_seq(t) - u_seq(t / 2))[mask])))
    h = traj.grid.spacing
    G = path.bg.omega_density
    d2_0 = G * np.exp(traj.states[0].log_ratio) - path.theta_density(0.0) \
        if traj.states[0].t == 0 else None
    rows = []
    for t in ts:
        st = traj.at(t)
        diff = st.u.values - phi0.values
        row = {"t": t, "sup": float(np.max(np.abs(diff[mask])))}
        if smooth:
            d2t = G * np.exp(st.log_ratio) - path.theta_density(t)
            dd = np.abs(np.diff(diff) / h)[mask[:-1] & mask[1:]]
            row["d1"] = float(np.max(dd))
            row["d2"] = float(np.max(np.abs(d2t - d2_0)[mask]))
        rows.append(row)
    last = rows[-1]
    ok = mono >= -tol and last["sup"] <= sup_tol
    if smooth:
        ok = ok and last["d2"] <= c2_tol and last["d1"] <= c2_tol
    return EstimateReport("zero_convergence", "pass" if ok else "fail", float(mono),
                          {"C": C}, details={"table": rows, "region": list(region),
                                             "monotone_margin": mono})


def check_h_f_convergence(f: np.ndarray, path: ClassPath, cfg: FlowConfig, region: tuple,
                          regularized: Optional[Dict[float, np.ndarray]] = None,
                          t0: float = 0.4, kmax: int = 6) -> EstimateReport:
    """Flow from the solution of ``(omega + dd^c phi0) = f omega`` near ``t = 0``.

    ``region`` must avoid the pole window. Optional regularised densities
    ``f_j`` give approximating flows whose distance to the flow from
    ``phi0`` is reported at ``t0``.
    """
    sol = solve_ma_radial(f, path.bg)
    phi0 = sol.u
    ts = [0.0] + dyadic_times(t0, kmax)
    traj = run_flow(phi0, ts, cfg, path)
    rep = check_zero_convergence(traj, phi0, region, t0=t0, kmax=kmax, smooth=True)
    rep.theorem = "h_f_convergence"
    rep.details["compatibility_error"] = sol.compatibility_error
    if regularized:
        mask = traj.grid.mask(*region)
        dist = {}
        for j, fj in sorted(regularized.items()):
            tj = run_flow(solve_ma_radial(fj, path.bg).u, [0.0, t0], cfg, path)
            dist[j] = float(np.max(np.abs(tj.at(t0).u.values - traj.at(t0).u.values)[mask]))
        vals = list(dist.values())
        mono = bool(np.all(np.diff(vals) < 0))
        rep.details["regularized_sup_distance"] = dist
        rep.details["regularized_monotone"] = mono
        if not mono:
            rep.status = "fail"
    return rep
