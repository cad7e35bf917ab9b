"""Implicit time stepping for the radial twisted Kahler-Ricci flow.

The unknown is the potential ``u`` with ``theta_t + dd^c u > 0``; the flow is

    du/dt = log[(g_t'' + u'') / g0''].

Each backward Euler step is solved by Newton's method in the variable
``L = log(rho / g0'')`` where ``rho`` is the new density. Since
``u_new = u + dt L``, the density equation reads

    g0'' e^L - dt D2(L) = rho_old + (g_{t+dt}'' - g_t'')

which involves only densities. This keeps full relative precision deep in the
tails where ``g0''`` is tiny compared with the potential values.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.linalg import solve_banded

from .errors import (NewtonConvergenceError,
                     NotPlurisubharmonicError, OutsideExistenceWindowError,
                     WindowGuardError)
from .geometry import (ClassPath, RadialProfile, SGrid, d2, d2_values,
                       softplus_profile)


@dataclass(frozen=True)
class FlowConfig:
    dt_init: float = 1e-3
    dt_policy: str = "fixed"
    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    positivity_floor: float = 1e-12
    t_end: Optional[float] = None
    target_newton_iters: int = 4
    dt_min: float = 1e-7
    dt_max: float = 5e-2

    def __post_init__(self):
        if self.dt_policy not in ("fixed", "adaptive"):
            raise ValueError("dt_policy must be 'fixed' or 'adaptive'")
        if not self.dt_init > 0:
            raise ValueError("dt_init must be positive")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class FlowState:
    """Potential at time ``t`` together with ``L = log(rho / g0'')``."""

    t: float
    u: RadialProfile
    log_ratio: np.ndarray

    @property
    def trace_ratio(self) -> np.ndarray:
        return np.exp(self.log_ratio)

    def density(self, omega_density: np.ndarray) -> np.ndarray:
        return omega_density * np.exp(self.log_ratio)


@dataclass
class FlowTrajectory:
    """Ordered flow states plus solver diagnostics.

    ``region`` marks the s-interval on which values are meaningful, used for
    limits of approximating flows whose deep tail is not converged.
    """

    states: List[FlowState]
    path: ClassPath
    config: FlowConfig
    diagnostics: Dict[str, list] = field(default_factory=dict)
    region: Optional[tuple] = None

    @property
    def grid(self) -> SGrid:
        return self.path.grid

    @property
    def times(self) -> np.ndarray:
        return np.array([st.t for st in self.states])

    def at(self, t: float) -> FlowState:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.states[i].t - t) > 1e-9:
            raise KeyError(f"time {t} not stored")
        return self.states[i]

    def region_mask(self) -> np.ndarray:
        if self.region is None:
            return np.ones(self.grid.n_points, dtype=bool)
        return self.grid.mask(*self.region)

    def phi_dot(self, t: float) -> np.ndarray:
        """Time derivative read from the right-hand side of the equation."""
        return self.at(t).log_ratio

    def export_csv(self, path) -> None:
        s = self.grid.nodes
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "s", "u", "log_density", "trace_ratio"])
            for st in self.states:
                for i in range(len(s)):
                    w.writerow([repr(float(st.t)), repr(float(s[i])),
                                repr(float(st.u.values[i])),
                                repr(float(st.log_ratio[i])),
                                repr(float(np.exp(st.log_ratio[i])))])


def ma_log_density(state: FlowState, path: ClassPath) -> np.ndarray:
    """``log[(g_t'' + u'')/g0'']`` recomputed from the stored potential."""
    rho = path.theta_density(state.t) + d2(state.u)
    if np.any(rho <= 0):
        raise NotPlurisubharmonicError("theta_t + dd^c u is not positive")
    return np.log(rho / path.bg.omega_density)


def initial_state(u0: RadialProfile, path: ClassPath, t0: float = 0.0) -> FlowState:
    if u0.grid != path.grid:
        raise ValueError("initial data and background use different grids")
    rho = path.theta_density(t0) + d2(u0)
    if np.any(rho <= 0):
        raise NotPlurisubharmonicError(
            "initial data is not strictly theta-plurisubharmonic on the grid")
    return FlowState(t0, u0, np.log(rho / path.bg.omega_density))


def _newton(G, rhs, L0, dt, h, cfg: FlowConfig):
    n = len(G)
    L = L0.copy()
    w = dt / h**2
    floor = np.log(cfg.positivity_floor)
    prev = np.inf
    for it in range(1, cfg.newton_max_iter + 1):
        rho = G * np.exp(L)
        F = rho - dt * d2_values(L, h) - rhs
        ab = np.zeros((3, n))
        ab[1] = rho + 2 * w
        ab[0, 1:] = -w
        ab[2, :-1] = -w
        ab[0, 1] = -2 * w
        ab[2, -2] = -2 * w
        delta = solve_banded((1, 1), ab, -F)
        big = np.max(np.abs(delta))
        lam = min(1.0, 2.0 / max(big, 1e-300))
        L = np.maximum(L + lam * delta, floor)
        update = dt * lam * big
        if lam == 1.0 and update <= cfg.newton_tol:
            return L, it, update, False
        # roundoff floor: quadratic convergence has stopped at a tiny update
        if it > 3 and lam == 1.0 and update <= 1e-9 and update > 0.5 * prev:
            return L, it, update, True
        prev = update
    raise NewtonConvergenceError(f"Newton did not converge (last update {update:.3e})")


def step_implicit(state: FlowState, dt: float, path: ClassPath,
                  cfg: FlowConfig = FlowConfig()) -> FlowState:
    """One backward Euler step of size ``dt``."""
    t1 = state.t + dt
    if t1 >= path.t_max:
        raise OutsideExistenceWindowError(f"t={t1} beyond t_max={path.t_max}")
    G = path.bg.omega_density
    rho = G * np.exp(state.log_ratio)
    rhs = rho + (path.theta_density(t1) - path.theta_density(state.t))
    L, it, upd, flag = _newton(G, rhs, state.log_ratio, dt, path.grid.spacing, cfg)
    u = state.u
    # keep closed-form curvature consistent with rho = theta_t + d2(u)
    curv = None if u.curvature is None else G * np.exp(L) - path.theta_density(t1)
    new_u = RadialProfile(u.grid, u.values + dt * L, u.slope_minus,
                          u.slope_plus, curv)
    st = FlowState(t1, new_u, L)
    object.__setattr__(st, "_newton", (it, upd, flag))
    return st


def run_flow(u0: RadialProfile, output_times: Sequence[float], cfg: FlowConfig,
             path: ClassPath) -> FlowTrajectory:
    """Integrate from ``t=0`` and store states at ``output_times``."""
    times = sorted(set(float(t) for t in output_times))
    t_end = max(times[-1], cfg.t_end or 0.0) if times else (cfg.t_end or 0.0)
    if t_end >= path.t_max:
        raise OutsideExistenceWindowError(
            f"requested t={t_end} but t_max={path.t_max}")
    state = initial_state(u0, path)
    out = [state] if (times and times[0] <= 1e-14) else []
    pending = [t for t in times if t > 1e-14]
    diag = {"newton_iters": [], "dt": [], "update": [], "roundoff_limited": 0}
    dt = cfg.dt_init
    while pending:
        target = pending[0]
        step = min(dt, target - state.t)
        if target - (state.t + step) < 1e-9 * max(1.0, target):
            step = target - state.t
        try:
            new = step_implicit(state, step, path, cfg)
        except NewtonConvergenceError:
            if cfg.dt_policy == "fixed" or step / 2 < cfg.dt_min:
                raise
            dt = step / 2
            continue
        it, upd, flag = new._newton
        diag["newton_iters"].append(it)
        diag["dt"].append(step)
        diag["update"].append(upd)
        diag["roundoff_limited"] += int(flag)
        state = new
        if abs(state.t - target) < 1e-12:
            state = replace(state, t=target)
            out.append(state)
            pending.pop(0)
        if cfg.dt_policy == "adaptive":
            if it > cfg.target_newton_iters:
                dt = max(cfg.dt_min, 0.7 * dt)
            elif it < cfg.target_newton_iters:
                dt = min(cfg.dt_max, 1.25 * dt)
    return FlowTrajectory(out, path, cfg, diag)


# --- Example with closed form ----------------------------------------------

def example_initial(j: float, grid: SGrid) -> RadialProfile:
    """``2 log(e^s + 1/j) - 2 log(e^s + 1)`` with exact curvature."""
    m = np.log(j)
    return softplus_profile(grid, [(2.0, 1.0, m), (-2.0, 1.0, 0.0)], const=-2.0 * m)


def exact_example_solution(j: float, t: float, grid: SGrid) -> RadialProfile:
    """Closed-form flow for ``V=2``, ``eta=0`` started at :func:`example_initial`."""
    if not 0 <= t < 1:
        raise OutsideExistenceWindowError("closed form holds for 0 <= t < 1")
    p0 = example_initial(j, grid)
    c = -t * np.log(j) - t + ((t - 1) * np.log1p(-t) if t > 0 else 0.0)
    return p0.scaled(1 - t).shifted(c)


# --- Flows from singular data ----------------------------------------------

@dataclass
class DivergenceReport:
    probe_s: float
    j_values: list
    values: Dict[float, list]
    drop_per_log_j: Dict[float, float]
    divergent: bool


@dataclass
class MaximalFlowResult:
    """Limit of the approximating flows together with per-j runs."""

    limit: Optional[FlowTrajectory]
    per_j: Dict[float, FlowTrajectory]
    j_values: list
    extrapolation_residual: Dict[float, float]
    order: Optional[dict]
    monotone_violation: float
    hypothesis_holds: bool
    divergence: Optional[DivergenceReport] = None
    region: Optional[tuple] = None


def estimate_order(vals: List[np.ndarray], ms: List[float]) -> Optional[float]:
    """Observed power ``q`` of ``m^-q`` convergence; geometric offsets only."""
    if len(vals) < 3:
        return None
    d1 = np.max(np.abs(vals[-2] - vals[-3]))
    d2_ = np.max(np.abs(vals[-1] - vals[-2]))
    r1, r2 = ms[-2] / ms[-3], ms[-1] / ms[-2]
    if d1 <= 0 or d2_ <= 0 or abs(r1 - r2) > 1e-9 * r2:
        return None
    return float(np.log(d1 / d2_) / np.log(r2))


def richardson(vals: List[np.ndarray], ms: List[float], order: float) -> np.ndarray:
    """Two-point Richardson extrapolation assuming error ~ m^-order."""
    if len(vals) < 2:
        return vals[-1]
    a, b = ms[-2] ** order, ms[-1] ** order
    return (b * vals[-1] - a * vals[-2]) / (b - a)


def maximal_flow(family, j_values: Sequence[float], output_times: Sequence[float],
                 cfg: FlowConfig, path: ClassPath,
                 region: tuple = (-12.0, np.inf), probe_s: float = 0.0,
                 guard_margin: float = 5.0, extrapolation_order: float = 2.0,
                 limit_tol: float = 0.0, divergence_drop: float = 0.02
                 ) -> MaximalFlowResult:
    """Flow from singular data as the decreasing limit of approximating flows.

    ``family`` provides ``initial(j, grid)`` and ``transition(j)``. When the
    existence hypothesis ``1/(2c) < t_max`` fails, the per-j values at
    ``probe_s`` are examined for divergence instead of forming a limit.
    """
    grid = path.grid
    spec = family.spec
    hyp = spec.half_inverse_index < path.t_max
    js = list(j_values)
    for j in js:
        if family.transition(j) - guard_margin < grid.s_min:
            raise WindowGuardError(
                f"approximant j={j} transitions at s={family.transition(j):.2f}, "
                f"too close to the grid edge {grid.s_min}")
    if spec.a == 0:
        traj = run_flow(family.initial(js[0], grid), output_times, cfg, path)
        return MaximalFlowResult(traj, {js[0]: traj}, js[:1], {}, None, 0.0, True,
                                 region=region)
    if not hyp:
        times = [t for t in output_times if t < path.t_max]
    else:
        times = list(output_times)
    per_j: Dict[float, FlowTrajectory] = {}
    used = []
    for j in js:
        per_j[j] = run_flow(family.initial(j, grid), times, cfg, path)
        used.append(j)
        if hyp and limit_tol > 0 and len(used) >= 3:
            a, b = per_j[used[-2]], per_j[used[-1]]
            m = grid.mask(*region)
            diff = max(np.max(np.abs(x.u.values[m] - y.u.values[m]))
                       for x, y in zip(a.states, b.states))
            if diff < limit_tol / 4:
                break
    tr = [per_j[j] for j in used]
    viol = 0.0
    for lo, hi in zip(tr[:-1], tr[1:]):
        for x, y in zip(lo.states, hi.states):
            viol = max(viol, float(np.max(y.u.values - x.u.values)))
    times_out = tr[0].times
    if not hyp:
        k = grid.index_of(probe_s)
        vals = {float(t): [float(T.at(t).u.values[k]) for T in tr] for t in times_out}
        drop = {}
        divergent = False
        lj = np.log(np.asarray(used, dtype=float))
        for t, v in vals.items():
            if t <= 0 or len(v) < 3:
                continue
            rates = -np.diff(v) / np.diff(lj)
            drop[t] = float(rates[-1])
            flat = rates[-1] < 0.7 * rates[-2]
            if rates[-1] * np.log(2) > divergence_drop and not flat:
                divergent = True
        div = DivergenceReport(float(grid.nodes[k]), used, vals, drop, divergent)
        return MaximalFlowResult(None, per_j, used, {}, None, viol, False, div, region)
    ms = [family.offset(j) for j in used]
    states = []
    resid = {}
    observed = {}
    m = grid.mask(*region)
    for i, t in enumerate(times_out):
        us = [T.states[i].u.values for T in tr]
        Ls = [T.states[i].log_ratio for T in tr]
        u_lim = richardson(us, ms, extrapolation_order)
        L_lim = richardson(Ls, ms, extrapolation_order)
        observed[float(t)] = estimate_order([u[m] for u in us], ms)
        resid[float(t)] = float(np.max(np.abs(u_lim[m] - us[-1][m])))
        base = tr[-1].states[i].u
        states.append(FlowState(float(t), RadialProfile(grid, u_lim, spec.slope_minus,
                                                         base.slope_plus), L_lim))
    limit = FlowTrajectory(states, path, cfg, {"j_values": used}, region)
    return MaximalFlowResult(limit, per_j, used, resid, observed, viol, True, None, region)


# --- time reparametrisation --------------------------------------------------

@dataclass
class RescaledTrajectory:
    times: np.ndarray
    u: List[np.ndarray]
    residual: np.ndarray
    max_residual: float


def time_rescale(traj: FlowTrajectory, n: int = 1) -> RescaledTrajectory:
    """``u_t = e^t phi_{1-e^{-t}}`` and the residual of its evolution equation.

    The transformed equation is
    ``du/dt = u - n t + log[(omega + (e^t - 1) chi' + dd^c u)/omega]`` with
    ``chi' = omega + chi``. Its log term equals ``t + L`` at the matching
    original time, so the residual compares a centred time difference of
    ``u`` against ``u - n t + t + L``.
    """
    tau = traj.times
    if np.any(tau >= 1):
        raise OutsideExistenceWindowError("original times must be below 1")
    tp = -np.log1p(-tau)
    us = [np.exp(a) * st.u.values for a, st in zip(tp, traj.states)]
    res = np.full(len(tp), np.nan)
    for i in range(1, len(tp) - 1):
        du = (us[i + 1] - us[i - 1]) / (tp[i + 1] - tp[i - 1])
        rhs = us[i] - n * tp[i] + tp[i] + traj.states[i].log_ratio
        res[i] = float(np.max(np.abs(du - rhs)))
    mr = float(np.nanmax(res)) if len(tp) > 2 else 0.0
    return RescaledTrajectory(tp, us, res, mr)
