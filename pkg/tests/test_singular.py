import numpy as np
import pytest

from krflab.errors import CompatibilityError, NotPlurisubharmonicError, WindowGuardError
from krflab.flow import example_initial
from krflab.geometry import SGrid, d2, make_fubini_study, softplus_profile, zero_profile
from krflab.singular import (GlueFamily, SingularitySpec, equisingular_approx, exp_integral,
                             integrability_index, lelong_number, normalize_density,
                             skoda_check, solve_ma_radial, supersolution)


@pytest.fixture(scope="module")
def grid():
    return SGrid(-40.0, 10.0, 1001)


@pytest.fixture(scope="module")
def bg(grid):
    return make_fubini_study(2.0, grid)


@pytest.mark.parametrize("a", [0.0, 0.2, 1.0, 2.0])
def test_lelong_of_pole(grid, a):
    # the window slope of a log(sigma) is a(1 - sigma), within e^-5 of a
    m = lelong_number(SingularitySpec(a).profile(grid))
    assert m.nu == pytest.approx(2 * a, rel=1e-2)
    assert m.nu <= 2 * a
    assert not m.low_confidence


def test_lelong_of_linear_profile(grid):
    p = softplus_profile(grid, [], linear=2.0)
    assert float(lelong_number(p)) == pytest.approx(4.0)


def test_lelong_of_smooth_data_vanishes(grid):
    m = lelong_number(example_initial(10, grid), window=(-30.0, -20.0))
    assert m.nu == pytest.approx(0.0, abs=1e-6)


@pytest.mark.parametrize("window", [(-5.0, 2.0), (-45.0, -30.0), (-5.0, -6.0)])
def test_lelong_window_guard(grid, window):
    with pytest.raises(WindowGuardError):
        lelong_number(zero_profile(grid), window)


def test_spec_constants():
    s = SingularitySpec(0.2)
    assert s.nu == pytest.approx(0.4)
    assert s.c == pytest.approx(2.5)
    assert s.half_inverse_index == pytest.approx(0.2)
    assert SingularitySpec(0.0).c == np.inf
    with pytest.raises(ValueError):
        SingularitySpec(-1.0)


@pytest.mark.parametrize("lam,divergent,boundary", [
    (0.24, False, False),
    (0.26, True, False),
    (0.25, False, True),
])
def test_skoda_threshold(grid, bg, lam, divergent, boundary):
    res = skoda_check(SingularitySpec(2.0).profile(grid), lam, bg)
    assert res.divergent == divergent
    assert res.boundary == boundary


def test_exp_integral_of_volume(bg):
    res = exp_integral(np.zeros(bg.grid.n_points), bg)
    assert res.value == pytest.approx(2.0, rel=1e-4)


def test_exp_integral_closed_form(grid, bg):
    # substituting sigma = e^s/(1+e^s) gives V int_0^1 sigma^(-2 lam a) d sigma
    a, lam = 1.0, 0.2
    res = skoda_check(SingularitySpec(a).profile(grid), lam, bg)
    assert res.value == pytest.approx(2.0 / (1 - 2 * lam * a), rel=1e-3)


def test_integrability_index(grid, bg):
    ix = integrability_index(SingularitySpec(1.0).profile(grid), bg)
    assert ix.c == pytest.approx(0.5, rel=1e-2)
    assert not ix.flagged


@pytest.mark.parametrize("a,eps,expected", [(2.0, 1.0, 1.75), (0.2, 0.05, 0.1875),
                                            (0.01, 1.0, 0.0)])
def test_equisingular(grid, bg, a, eps, expected):
    p = SingularitySpec(a).profile(grid)
    res = equisingular_approx(p, eps, bg)
    assert res.a_prime == pytest.approx(expected)
    assert np.all(res.psi.values >= p.values - 1e-12)
    assert lelong_number(res.psi).nu == pytest.approx(2 * expected, rel=1e-2, abs=1e-6)
    assert np.isfinite(res.certificate.value) and not res.certificate.divergent


def test_supersolution_formula(grid, bg):
    p = SingularitySpec(0.2).profile(grid)
    sup = supersolution(p, 5.0, 0.1, bg)
    e = np.exp(5.0 * p.values[1:-1])
    assert sup.C >= e.max()
    assert np.all(d2(p)[1:-1] <= sup.C * bg.omega_density[1:-1] / e * (1 + 1e-12))
    np.testing.assert_allclose(sup.profile.values, 0.5 * p.values + 0.1 * np.log(2 * sup.C))
    with pytest.raises(ValueError):
        supersolution(p, 5.0, 0.3, bg)


@pytest.mark.parametrize("j", [1.0, 10.0])
def test_solve_ma_recovers_example(grid, bg, j):
    phi = example_initial(j, grid)
    f = (bg.omega_density + d2(phi)) / bg.omega_density
    sol = solve_ma_radial(f, bg)
    ref = phi.values - phi.values.max()
    np.testing.assert_allclose(sol.u.values, ref, atol=1e-8)
    assert sol.u.values.max() == 0.0


def test_solve_ma_compatibility(bg):
    with pytest.raises(CompatibilityError):
        solve_ma_radial(np.full(bg.grid.n_points, 2.0), bg)
    with pytest.raises(NotPlurisubharmonicError):
        solve_ma_radial(-np.ones(bg.grid.n_points), bg)


def test_normalize_density(bg):
    f = normalize_density(np.full(bg.grid.n_points, 3.0), bg)
    assert np.dot(bg.grid.weights, f * bg.omega_density) == pytest.approx(2.0)


@pytest.mark.parametrize("power,rule", [(1.0, "linear"), (2.0, "linear"), (1.0, "log")])
def test_glue_family_is_decreasing(grid, power, rule):
    fam = GlueFamily(SingularitySpec(0.5), power, rule)
    prev = None
    for j in (2, 4, 8, 16):
        cur = fam.initial(j, grid)
        assert cur.slope_minus == 0.0
        assert np.all(cur.values >= SingularitySpec(0.5).profile(grid).values - 1e-12)
        if prev is not None:
            assert np.all(cur.values <= prev.values + 1e-12)
        prev = cur
