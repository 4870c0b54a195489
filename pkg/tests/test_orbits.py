import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lyapspec.errors import OrbitEscape, PreconditionError
from lyapspec.maps import RationalMap
from lyapspec.orbits import (OrbitTrace, backward_orbit, census_by_enumeration, conical_probe, hyperbolic_times,
                             pliss_bound, pullback_census, trace_orbit)
from lyapspec.selftest import brute_hyperbolic_times

LOG2, LOG4, LOG6 = np.log(2.0), np.log(4.0), np.log(6.0)


# -- traces -------------------------------------------------------------------------------


def test_trace_on_unit_circle(z2):
    tr = trace_orbit(z2, np.exp(1j * np.pi / 4), 10)
    np.testing.assert_allclose(tr.log_derivs, LOG2, atol=1e-12)
    assert tr.running_averages[-1] == pytest.approx(LOG2)


@pytest.mark.parametrize("c, x, val", [(-2, 2.0, LOG4), (-6, 3.0, LOG6)])
def test_trace_at_fixed_points(c, x, val):
    tr = trace_orbit(RationalMap.quadratic(c), x, 5)
    np.testing.assert_allclose(tr.log_derivs, val, atol=1e-14)


def test_escaping_orbit_raises_with_index(cantor):
    with pytest.raises(OrbitEscape) as info:
        trace_orbit(cantor, 10.0, 50)
    assert info.value.index > 0


def test_backward_orbit_shadows_forward_dynamics(cantor):
    tr = backward_orbit(cantor, 3.0, [0, 1, 1, 0, 1])
    np.testing.assert_allclose(cantor(tr.points[:-1]), tr.points[1:], atol=1e-10)
    assert tr.points[-1] == 3.0


def test_compressed_trace_matches_expanded():
    tr = OrbitTrace(0j, np.array([1.0, 2.0, 0.5]), repeats=np.array([3, 1, 4]))
    full = tr.expand()
    assert tr.n == full.n == 8
    for k in range(1, 9):
        assert tr.average_at(k) == pytest.approx(full.running_averages[k - 1])
    ends, sums = tr.run_boundaries()
    assert list(ends) == [3, 4, 8]
    np.testing.assert_allclose(sums, full.prefix_sums[[3, 4, 8]])


# -- hyperbolic times ---------------------------------------------------------------------


def test_constant_trace_every_time_is_hyperbolic():
    ht = hyperbolic_times(OrbitTrace(0j, np.full(20, LOG2)), 0.5)
    assert list(ht.times) == list(range(1, 21))
    assert ht.density == 1.0


def test_hand_computed_hyperbolic_times():
    ht = hyperbolic_times(OrbitTrace(0j, np.log([0.5, 4.0, 4.0])), LOG2)
    assert list(ht.times) == [3]


def test_no_hyperbolic_times_below_sigma():
    assert hyperbolic_times(OrbitTrace(0j, np.full(10, 0.1)), 0.2).times.size == 0


def test_sigma_must_be_positive():
    with pytest.raises(PreconditionError):
        hyperbolic_times(OrbitTrace(0j, np.ones(3)), 0.0)


traces = st.lists(st.floats(-3, 3, allow_nan=False), min_size=1, max_size=200)


@given(traces, st.floats(0.01, 2))
def test_hyperbolic_times_match_brute_force(vals, sigma):
    vals = np.array(vals)
    assert np.array_equal(hyperbolic_times(OrbitTrace(0j, vals), sigma).times, brute_hyperbolic_times(vals, sigma))


@given(traces, st.floats(0.01, 2))
def test_pliss_density_bound(vals, sigma):
    tr = OrbitTrace(0j, np.array(vals))
    if np.mean(tr.log_derivs) > sigma:
        assert hyperbolic_times(tr, sigma).density >= pliss_bound(tr, sigma) - 1e-12


# -- conical probe ------------------------------------------------------------------------


def test_conical_probe_on_circle(z2):
    hits = conical_probe(z2, np.exp(0.3j), 0.5, 20, 10.0)
    assert [n for n, _ in hits] == list(range(1, 21))
    # composite distortion of branches z -> sqrt on B(w, r), |w| = 1: ratio of |g'| bounded by sqrt((1+r)/(1-r))
    r = 0.5
    bound = np.sqrt((1 + r) / (1 - r)) ** 2
    assert max(rep.distortion for _, rep in hits) <= bound


def test_conical_probe_fails_at_critical_point(cheb):
    assert conical_probe(cheb, 0.0, 0.3, 10, 10.0) == []


def test_conical_probe_empty_horizon(z2):
    assert conical_probe(z2, 1.0, 0.2, 0, 5.0) == []


# -- census -------------------------------------------------------------------------------


def test_census_without_encounters(z2):
    cen = pullback_census(z2, 1.0, 4, 0.5)
    assert cen.N == 1 and cen.pairs == ((1.0, 0),)


def test_census_depth_zero(cantor):
    assert pullback_census(cantor, 3.0, 0, 0.2).pairs == ((3.0, 0),)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_census_matches_enumeration(cheb, n):
    assert pullback_census(cheb, 1.9, n, 0.3).pairs == census_by_enumeration(cheb, 1.9, n, 0.3).pairs


def test_census_chebyshev_counts_frozen(cheb):
    # frozen from the enumeration oracle: N = 2n - 1 for n >= 1 at y = 1.9, R = 0.3
    assert [pullback_census(cheb, 1.9, n, 0.3).N for n in range(1, 8)] == [1, 3, 5, 7, 9, 11, 13]


def test_census_precondition_on_postcritical_point(cheb):
    with pytest.raises(PreconditionError):
        pullback_census(cheb, 2.0, 3, 0.1)


@pytest.mark.parametrize("c, y", [(0.0, 1.0), (-6.0, 3.0)])
def test_census_growth_is_subexponential(c, y):
    f = RationalMap.quadratic(c)
    rates = [pullback_census(f, y, n, 0.5).growth_exponent for n in (10, 11, 12)]
    assert max(rates) < 0.1
    assert all(b <= a + 1e-12 for a, b in zip(rates, rates[1:]))
