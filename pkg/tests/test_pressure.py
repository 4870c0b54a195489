import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lyapspec.errors import PreconditionError
from lyapspec.maps import RationalMap
from lyapspec.pressure import (alpha_range, bowen_root, curve_from_function, default_base_point, duality_check,
                               equilibrium_stats, legendre_spectrum, periodic_points, periodic_pressure,
                               preimages, pressure_curve, spectrum_concavity_defect, tree_pressure)

LOG2, LOG4, LOG6 = np.log(2.0), np.log(4.0), np.log(6.0)


def two_branch(d):
    return float(np.log(6.0 ** -d + 4.0 ** -d))


def two_branch_root():
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if two_branch(mid) > 0 else (lo, mid)
    return 0.5 * (lo + hi)


# -- preimage trees -----------------------------------------------------------------------


def test_tree_leaves_are_roots_of_unity(z2):
    leaves = np.sort_complex(preimages(z2, 1.0, 3).points[3])
    roots = np.sort_complex(np.exp(2j * np.pi * np.arange(8) / 8))
    np.testing.assert_allclose(np.sort(np.angle(leaves)), np.sort(np.angle(roots)), atol=1e-12)


def test_tree_leaves_for_cantor_map(cantor):
    leaves = preimages(cantor, 3.0, 2).points[2]
    np.testing.assert_allclose(np.sort(leaves.real), [-3, -np.sqrt(3), np.sqrt(3), 3], atol=1e-12)
    np.testing.assert_allclose(leaves.imag, 0, atol=1e-12)


def test_tree_at_critical_value_is_flagged(z2):
    assert np.all(preimages(z2, 0.0, 1).flags[1])


# -- tree and periodic pressure -----------------------------------------------------------


@pytest.mark.parametrize("d, expected", [(1, 0.0), (0, LOG2), (2, -LOG2)])
def test_tree_pressure_closed_form(z2, d, expected):
    assert tree_pressure(z2, d, x=1.0, n=6) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("d, expected", [(1, np.log(31 / 32) / 5), (0, np.log(31) / 5)])
def test_periodic_pressure_closed_form(z2, d, expected):
    assert periodic_pressure(z2, d, 5) == pytest.approx(expected, abs=1e-12)


def test_chebyshev_entropy_from_periodic_points(cheb):
    pp = periodic_points(cheb, 8)
    assert pp.count == 2**8  # all periodic points of z^2 - 2 are repelling
    assert periodic_pressure(cheb, 0, 8) == pytest.approx(LOG2, abs=0.01)


def test_periodic_points_return_after_period(cantor):
    pp = periodic_points(cantor, 6)
    z = pp.points.copy()
    for _ in range(6):
        z = cantor(z)
    np.testing.assert_allclose(z, pp.points, atol=1e-8)
    assert pp.count == 64


def test_default_base_points(z2, cheb, cantor):
    assert default_base_point(cantor) == pytest.approx(3.0)
    assert default_base_point(cheb) == pytest.approx(-1.0)
    assert default_base_point(z2) == pytest.approx(1.0)


def test_tree_and_periodic_agree_on_hyperbolic_maps(cantor):
    ds = np.linspace(-2, 3, 11)
    tree = pressure_curve(cantor, ds, "tree", 10)
    per = pressure_curve(cantor, ds, "periodic", 10)
    assert np.all(np.abs(tree.P - per.P) <= 2 * (tree.errors + per.errors))


# -- pressure curves ----------------------------------------------------------------------


def test_curve_closed_form(z2):
    c = pressure_curve(z2, [-1, 0, 1, 2], "tree", 6)
    np.testing.assert_allclose(c.P, [2 * LOG2, LOG2, 0, -LOG2], atol=1e-12)


def test_chebyshev_pressure_zero_at_one(cheb):
    c = pressure_curve(cheb, [1.0], "periodic", 12)
    assert abs(c.P[0]) < 0.02


def test_empty_grid(cantor):
    assert len(pressure_curve(cantor, [], "tree", 6)) == 0


def test_unsorted_grid_rejected(cantor):
    with pytest.raises(PreconditionError):
        pressure_curve(cantor, [1, 0], "tree", 6)


@pytest.mark.parametrize("method", ["tree", "periodic"])
def test_curves_are_convex_with_bounded_slopes(cantor, method):
    c = pressure_curve(cantor, np.linspace(-2, 3, 26), method, 10)
    assert c.convexity_defect() <= 1e-6 * np.max(np.abs(c.P))
    s = c.slopes()
    assert np.all(-s >= LOG4 - 1e-9) and np.all(-s <= LOG6 + 1e-9)


def test_extrapolated_tree_pressure_frozen(cantor):
    # frozen: level-ratio tree estimate at depth 10; agrees with periodic sums to ~1e-6
    c = pressure_curve(cantor, [1.0], "tree", 10, extrapolate=True)
    assert c.P[0] == pytest.approx(-0.8314930, abs=2e-6)
    assert c.P[0] == pytest.approx(periodic_pressure(cantor, 1.0, 12), abs=1e-4)


# -- Legendre spectrum --------------------------------------------------------------------


def test_z2_spectrum_is_a_single_point(z2):
    c = pressure_curve(z2, np.linspace(-2, 3, 11), "tree", 8)
    sp = legendre_spectrum(c, [0.5, LOG2, 1.0])
    assert sp.F[1] == pytest.approx(1.0, abs=1e-9)
    assert sp.F[0] == -np.inf and sp.F[2] == -np.inf
    assert sp.alpha_minus == pytest.approx(LOG2) and sp.alpha_plus == pytest.approx(LOG2)
    assert sp.d0 == pytest.approx(1.0, abs=1e-8)


def test_chebyshev_interval(cheb):
    c = pressure_curve(cheb, np.linspace(-4, 4, 81), "periodic", 12)
    lo, hi = alpha_range(c)
    assert lo == pytest.approx(LOG2, abs=0.05)
    assert hi == pytest.approx(2 * LOG2, abs=0.05)


def test_piecewise_linear_curve_spectrum():
    """P(d) = |d| - d: inf_d (P + d alpha) = 0 for alpha in [0, 2], so F vanishes inside."""
    c = curve_from_function(lambda d: abs(d) - d, np.linspace(-3, 3, 61))
    alpha = np.linspace(0.1, 1.9, 19)
    sp = legendre_spectrum(c, alpha)
    np.testing.assert_allclose(alpha * sp.F, 0, atol=1e-12)
    assert legendre_spectrum(c, [2.5]).F[0] == -np.inf


def test_two_branch_spectrum_against_bisection_oracle():
    c = curve_from_function(two_branch, np.linspace(-8, 8, 801))
    lo, hi = alpha_range(c)
    sp = legendre_spectrum(c, np.linspace(lo, hi, 20001))
    assert sp.max_F == pytest.approx(two_branch_root(), abs=1e-4)
    assert sp.d0 == pytest.approx(two_branch_root(), abs=1e-8)
    assert duality_check(c, sp).residual < 1e-6


def test_two_branch_bowen_root_frozen():
    # 6^-d + 4^-d = 1, solved by bisection
    assert two_branch_root() == pytest.approx(0.4386942, abs=1e-7)


def test_equilibrium_stats_closed_forms(z2):
    c = pressure_curve(z2, np.linspace(-2, 3, 11), "tree", 8)
    for d in (0.0, 1.0):
        st_ = equilibrium_stats(c, d)
        assert st_.alpha == pytest.approx(LOG2, abs=1e-8)
        assert st_.h == pytest.approx(LOG2, abs=1e-8)
    two = curve_from_function(two_branch, np.linspace(-5, 5, 101))
    assert equilibrium_stats(two, 0.0).alpha == pytest.approx((LOG4 + LOG6) / 2, abs=1e-8)


def test_duality_exact_for_z2(z2):
    c = pressure_curve(z2, np.linspace(-2, 3, 11), "tree", 8)
    sp = legendre_spectrum(c, [LOG2])
    rep = duality_check(c, sp)
    assert not (rep.residual > 1e-9)


def test_duality_flags_mismatched_curves(cantor, cheb):
    c1 = pressure_curve(cantor, np.linspace(-3, 4, 71), "tree", 10)
    c2 = pressure_curve(cheb, np.linspace(-3, 4, 71), "periodic", 10)
    lo, hi = alpha_range(c2)
    rep = duality_check(c1, legendre_spectrum(c2, np.linspace(lo, hi, 501)))
    assert rep.flagged and rep.residual > 1e-2


def test_cantor_spectrum_shape(cantor):
    c = pressure_curve(cantor, np.linspace(-3, 4, 141), "tree", 10)
    sp = legendre_spectrum(c, np.linspace(1.3, 1.85, 2001))
    assert spectrum_concavity_defect(sp) < 1e-9
    assert sp.max_F == pytest.approx(sp.d0, abs=1e-3)
    assert sp.d0 == pytest.approx(bowen_root(c))


@given(st.lists(st.floats(0.2, 3.0), min_size=2, max_size=5), st.lists(st.floats(0.1, 2.0), min_size=5, max_size=5))
def test_legendre_involution_on_exponential_sums(logs, weights):
    """For P(d) = log sum w_i e^{-d l_i}, transforming twice recovers P inside the alpha range."""
    logs, w = np.array(logs), np.array(weights[: len(logs)])

    def P(d):
        return float(np.log(np.sum(w * np.exp(-d * logs))))

    if np.ptp(logs) < 0.05:
        return
    c = curve_from_function(P, np.linspace(-6, 6, 241))
    lo, hi = alpha_range(c)
    sp = legendre_spectrum(c, np.linspace(lo, hi, 4001))
    assert duality_check(c, sp).recovery_residual < 1e-2
    assert spectrum_concavity_defect(sp) < 1e-8
