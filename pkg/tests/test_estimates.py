import numpy as np
import pytest

from krflab.estimates import (EstimateReport, check_c0_lower, check_c2, check_comparison,
                              check_derivative_upper, check_dot_lower, check_lower_5_3,
                              check_stability, check_upper_bound, check_zero_convergence,
                              dyadic_times, fit_two_time_constant, make_context,
                              normalization, skipped, slack, stable_pair)
from krflab.flow import FlowConfig, example_initial, maximal_flow, run_flow
from krflab.geometry import SGrid, compute_tmax, make_fubini_study, softplus_profile, zero_profile
from krflab.singular import GlueFamily, SingularitySpec

CFG = FlowConfig(dt_init=1e-3)


@pytest.fixture(scope="module")
def path():
    return compute_tmax(make_fubini_study(2.0, SGrid(-14.0, 10.0, 241)))


@pytest.mark.parametrize("c,expected", [(0.2, 0.4), (-0.5, 0.0), (0.0, 1e-3), (1e-4, 1.1e-3)])
def test_slack(c, expected):
    assert slack(c) == pytest.approx(expected)


@pytest.mark.parametrize("a,b,ok", [(1.0, 1.9, True), (1.0, 2.5, False), (0.0, 5e-4, True),
                                    (7.8, 7.81, True), (1.0, 0.1, True), (1.0, -1.5, False)])
def test_stable_pair(a, b, ok):
    assert stable_pair(a, b) is ok


def test_report_serialises():
    r = EstimateReport("x", "pass", np.float64(0.5), {"C": np.float64(np.inf)},
                       details={"arr": np.arange(2), "flag": np.bool_(True)})
    d = r.to_dict()
    assert d["margin"] == 0.5 and d["constants"]["C"] is None
    assert d["details"] == {"arr": [0, 1], "flag": True}
    assert skipped("y", "why").holds is None


@pytest.mark.parametrize("t_end,lam,full", [(0.3, 0.5, True), (0.9, 0.5, False)])
def test_normalization(path, t_end, lam, full):
    nz = normalization(path, t_end)
    assert nz.lam == pytest.approx(lam)
    assert nz.full_window is full


def test_comparison_holds_both_ways(path):
    low = run_flow(zero_profile(path.grid), [0.0, 0.2], CFG, path)
    high = run_flow(example_initial(10, path.grid), [0.0, 0.2], CFG, path)
    assert check_comparison(low, high).status == "pass"
    # swapping keeps max(u0 - v0) as reference, so it still holds
    assert check_comparison(high, low).holds


def test_comparison_witness_on_crossing(path):
    a = run_flow(zero_profile(path.grid), [0.0, 0.5], CFG, path)
    b = run_flow(example_initial(10, path.grid).shifted(3.0), [0.0, 0.5], CFG, path)
    # forge a crossing: the recorded start of b is lifted far above its true start
    b.states[0] = a.states[0].__class__(0.0, b.states[0].u.shifted(10.0), b.states[0].log_ratio)
    rep = check_comparison(a, b)
    assert rep.status == "fail" and rep.witness["t"] == pytest.approx(0.5)


@pytest.mark.parametrize("j", [1, 10, 100])
def test_upper_and_derivative_bounds_on_smooth_data(path, j):
    tr = run_flow(example_initial(j, path.grid), [0.0, 0.1, 0.4, 0.8], CFG, path)
    assert check_upper_bound(tr).holds
    assert check_derivative_upper(tr).holds


def test_derivative_bound_fails_on_forged_rhs(path):
    tr = run_flow(example_initial(10, path.grid), [0.0, 0.4], CFG, path)
    st = tr.states[1]
    tr.states[1] = st.__class__(st.t, st.u, st.log_ratio + 2.0)
    rep = check_derivative_upper(tr)
    assert rep.status == "fail" and rep.margin < -0.5


def test_context_guard_on_strong_pole(path):
    spec = SingularitySpec(2.0)
    ctx = make_context(spec.profile(path.grid), spec.nu, path, 0.25, 0.3, 0.04, 0.05)
    assert not ctx.valid and "1/(2c)" in ctx.reason
    tr = run_flow(example_initial(1.0, path.grid), [0.0, 0.1, 0.25], CFG, path)
    for check in (check_c0_lower, check_dot_lower, check_c2):
        rep = check(tr, ctx)
        assert rep.status == "skipped" and rep.reason


@pytest.mark.parametrize("T,S,eps0,eps,bad", [(0.15, 0.3, 0.04, 0.05, "1/(2c)"),
                                              (0.25, 0.3, 0.05, 0.04, "eps0"),
                                              (0.25, 0.9, 0.04, 0.05, "normalisation")])
def test_context_hypotheses(path, T, S, eps0, eps, bad):
    spec = SingularitySpec(0.2)
    ctx = make_context(spec.profile(path.grid), spec.nu, path, T, S, eps0, eps)
    assert not ctx.valid and bad in ctx.reason


@pytest.fixture(scope="module")
def pole_runs():
    res = []
    for k in (1, 2):
        g = SGrid(-70.0, 10.0, 800 * k + 1)
        p = compute_tmax(make_fubini_study(2.0, g))
        times = [0.0, 0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3]
        res.append((p, maximal_flow(GlueFamily(SingularitySpec(0.2)), [15, 30, 60], times,
                                    FlowConfig(dt_init=1e-3 / k), p)))
    return res


def test_fit_then_verify_suite(pole_runs):
    (pc, rc), (pf, rf) = pole_runs
    spec = SingularitySpec(0.2)
    ctx = make_context(spec.profile(pc.grid), spec.nu, pc, 0.25, 0.3, 0.04, 0.05, 2.0, 0.5)
    assert ctx.valid, ctx.reason
    for check in (check_c0_lower, check_dot_lower, check_c2):
        rep = check(rc.limit, ctx, rf.limit)
        assert rep.status == "pass", (rep.theorem, rep.constants, rep.details)
        assert rep.refinement_stable
        assert rep.constants["C_verify"] == pytest.approx(slack(rep.constants["C_fit"]))
    assert check_dot_lower(rc.limit, ctx).constants["A"] == pytest.approx(72.0)


def test_lower_bound_trend(pole_runs):
    (pc, rc), _ = pole_runs
    rep = check_lower_5_3(rc.limit, SingularitySpec(0.2).profile(pc.grid), 2.0)
    assert rep.holds
    assert check_lower_5_3(rc.limit, SingularitySpec(0.2).profile(pc.grid), 0.4).status \
        == "skipped"


def test_stability_on_vanishing_perturbation(path):
    g = path.grid
    phi0 = softplus_profile(g, [(0.8, 1.0, -1.0), (-0.8, 1.0, 0.0)])
    bump = softplus_profile(g, [(0.02, 1.0, 2.0), (-0.02, 1.0, 0.0)])
    limit = run_flow(phi0, [0.0, 0.5], CFG, path)
    trajs = {j: run_flow(phi0 + bump.scaled(1.0 / j), [0.0, 0.5], CFG, path)
             for j in (1, 4, 16, 64)}
    rep = check_stability(trajs, limit, 0.5)
    assert rep.holds and rep.details["monotone"]


def test_dyadic_times():
    assert dyadic_times(0.4, 2) == [0.4, 0.2, 0.1]


def test_zero_convergence_smooth_data(path):
    phi0 = softplus_profile(path.grid, [(0.5, 1.0, -1.0), (-0.5, 1.0, 0.0)])
    ts = [0.0] + dyadic_times(0.4, 6)
    tr = run_flow(phi0, ts, CFG, path)
    C = fit_two_time_constant(tr, dyadic_times(0.4, 6))
    assert C >= 0
    rep = check_zero_convergence(tr, phi0, (-10.0, 8.0), smooth=True)
    assert rep.holds, rep.details
    sups = [r["sup"] for r in rep.details["table"]]
    assert all(b < a for a, b in zip(sups, sups[1:]))
