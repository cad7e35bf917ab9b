import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from krflab.capacity import (CapacityProblem, DecayFunction, cap_psi, kolodziej_extinction,
                             sublevel_nodes, synthetic_decay)
from krflab.errors import HypothesisError
from krflab.geometry import RadialProfile, SGrid, make_fubini_study, zero_profile


@pytest.fixture(scope="module")
def bg():
    return make_fubini_study(2.0, SGrid(-14.0, 10.0, 121))


@pytest.mark.parametrize("V", [0.5, 2.0, 3.0])
def test_full_capacity_is_total_mass(V):
    bg = make_fubini_study(V, SGrid(-14.0, 10.0, 121))
    res = cap_psi(CapacityProblem(zero_profile(bg.grid), np.arange(bg.grid.n_points), bg))
    assert res.value == pytest.approx(V, abs=1e-6)
    assert res.certificate["certified"]


def test_empty_set(bg):
    assert cap_psi(CapacityProblem(zero_profile(bg.grid), [], bg)).value == pytest.approx(0.0)


def test_candidate_is_admissible(bg):
    res = cap_psi(CapacityProblem(zero_profile(bg.grid), np.arange(30, 60), bg))
    assert np.all(res.u <= 1e-9) and np.all(res.u >= -1 - 1e-9)
    sm, sp = res.slopes
    h = bg.grid.spacing
    u = res.u
    rho = bg.omega_density.copy()
    rho[1:-1] += (u[2:] - 2 * u[1:-1] + u[:-2]) / h**2
    rho[0] += 2 * (u[1] - u[0] - h * sm) / h**2
    rho[-1] += 2 * (u[-2] - u[-1] + h * sp) / h**2
    assert rho.min() >= -1e-8
    mass = float(np.dot(bg.grid.weights[30:60], rho[30:60]))
    assert mass == pytest.approx(res.value, abs=1e-7)


def test_out_of_range_nodes(bg):
    with pytest.raises(IndexError):
        CapacityProblem(zero_profile(bg.grid), [bg.grid.n_points], bg)


def test_single_node_capacity_decays_toward_pole(bg):
    vals = [cap_psi(CapacityProblem(zero_profile(bg.grid), [bg.grid.index_of(s)], bg)).value
            for s in (0.0, -4.0, -8.0, -12.0)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] > 0


@settings(max_examples=15, deadline=None)
@given(data=st.data())
def test_monotone_in_set(bg, data):
    n = bg.grid.n_points
    big = data.draw(st.lists(st.integers(0, n - 1), min_size=2, max_size=40, unique=True))
    small = data.draw(st.lists(st.sampled_from(big), min_size=1, unique=True))
    psi = RadialProfile(bg.grid, -0.5 * np.log1p(np.logaddexp(0.0, -bg.grid.nodes)))
    a = cap_psi(CapacityProblem(psi, small, bg))
    b = cap_psi(CapacityProblem(psi, big, bg))
    assert a.value <= b.value + 1e-8
    assert a.certificate["certified"] and b.certificate["certified"]


def test_sublevel_nodes():
    phi = np.array([-3.0, -1.0, 0.0, -2.0])
    np.testing.assert_array_equal(sublevel_nodes(phi, np.zeros(4), 1.5), [0, 3])


class TestExtinction:
    @pytest.mark.parametrize("C,t0", [(1.0, 0.5), (2.0, 0.25), (0.5, 1.0)])
    def test_synthetic_family_dies_by_t0_plus_2(self, C, t0):
        res = kolodziej_extinction(synthetic_decay(C, t0), t0)
        assert res.verified and res.witness is None
        assert res.extinction_time <= t0 + 2.0

    def test_no_history_is_sharp(self):
        # without samples before t0 the sampled hypothesis is weaker than the
        # continuous one; extinction lands a few steps past t0 + 2
        d = synthetic_decay(2.0, 0.0, step=1e-3)
        res = kolodziej_extinction(d, 0.0)
        assert res.witness is None
        assert 2.0 < res.extinction_time <= 2.0 + 5e-3

    def test_exponential_gives_witness(self):
        t = np.linspace(0.0, 5.0, 501)
        res = kolodziej_extinction(DecayFunction(t, np.exp(-t), 0.1), 0.0)
        assert not res.verified
        w = res.witness
        assert w["lhs"] > w["rhs"]
        assert w["s"] * np.exp(-(w["t"] + w["s"])) == pytest.approx(w["lhs"])

    def test_increasing_rejected(self):
        t = np.linspace(0, 3, 31)
        with pytest.raises(HypothesisError):
            kolodziej_extinction(DecayFunction(t, t, 1.0), 0.0)

    def test_start_value_guard(self):
        t = np.linspace(0, 3, 31)
        with pytest.raises(HypothesisError):
            kolodziej_extinction(DecayFunction(t, np.ones(31), 1.0), 0.0)
