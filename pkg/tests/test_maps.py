import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from lyapspec.errors import InvalidMapError
from lyapspec.maps import (INFINITY, RationalMap, chordal_distance, critical_points, detect_exceptional,
                           evaluate, fixed_points, is_infinite, log_deriv_modulus, preimages_with_flags,
                           satisfies_exceptional_condition)

LOG2, LOG4 = np.log(2.0), np.log(4.0)

coef = st.floats(-3, 3, allow_nan=False)
cplx = st.builds(complex, coef, coef)


def _has_point(points, target, tol=1e-8):
    pts = np.asarray(points)
    if is_infinite(target):
        return bool(np.any(~np.isfinite(pts)))
    return bool(np.any(np.abs(pts[np.isfinite(pts)] - target) < tol))


# -- evaluate -----------------------------------------------------------------------------


def test_evaluate_fixed_points(z2, cheb):
    assert evaluate(z2, 1.0) == 1
    assert evaluate(cheb, 2.0) == 2


def test_evaluate_infinity_is_fixed_for_polynomials(z2):
    assert is_infinite(evaluate(z2, INFINITY))


def test_evaluate_pole_maps_to_infinity():
    f = RationalMap((1.0, 0.0, 1.0), (-1.0, 0.0, 1.0))  # (z^2+1)/(z^2-1)
    assert is_infinite(f(1.0))
    assert f(INFINITY) == pytest.approx(1.0)


def test_evaluate_is_vectorised(cheb):
    z = np.array([0.0, 1.0, 2.0, 1j])
    np.testing.assert_allclose(cheb(z), z**2 - 2)


def test_rejects_common_root():
    with pytest.raises(InvalidMapError):
        RationalMap((-1.0, 0.0, 1.0), (-1.0, 1.0))  # (z^2-1)/(z-1)


def test_json_round_trip():
    f = RationalMap((1.0, 2j, 1.0), (-1.0, 0.0, 1.0))
    assert RationalMap.from_json_dict(f.to_json_dict()) == f


# -- log|f'| ------------------------------------------------------------------------------


def test_log_derivative_examples(z2, cheb):
    assert log_deriv_modulus(cheb, 2.0) == pytest.approx(LOG4, abs=1e-15)
    assert log_deriv_modulus(cheb, 0.0) == -np.inf
    circle = np.exp(1j * np.linspace(0, 2 * np.pi, 17))
    np.testing.assert_allclose(log_deriv_modulus(z2, circle), LOG2, atol=1e-14)


@given(st.floats(0, 2 * np.pi), st.integers(1, 8))
def test_chain_rule_birkhoff_sum(theta, n):
    """log|(f^n)'(x)| equals the Birkhoff sum of one-step values."""
    f = RationalMap.quadratic(-0.3 + 0.1j)
    x = 0.4 * np.exp(1j * theta)
    orbit = [x]
    for _ in range(n - 1):
        orbit.append(f(orbit[-1]))
    birkhoff = float(np.sum(f.log_abs_derivative(np.array(orbit))))
    # derivative of the composed polynomial, independently via numpy
    p = np.polynomial.Polynomial([-0.3 + 0.1j, 0, 1])
    comp = np.polynomial.Polynomial([0, 1])
    for _ in range(n):
        comp = p(comp)
    direct = np.log(abs(comp.deriv()(x)))
    assert birkhoff == pytest.approx(direct, rel=1e-10, abs=1e-10)


def test_spherical_metric_is_finite_near_infinity(z2):
    val = z2.log_abs_derivative(np.array([1e12]), metric="spherical")
    assert np.isfinite(val).all()


# -- critical points ----------------------------------------------------------------------


def test_critical_points_of_quadratics(z2, cantor):
    for f in (z2, cantor):
        crit = critical_points(f)
        assert len(crit) == 2
        assert _has_point(crit, 0.0) and _has_point(crit, INFINITY)


def test_critical_points_of_rational_map_against_symbolic_derivative():
    f = RationalMap((1.0, 0.0, 1.0), (-1.0, 0.0, 1.0))
    z = sympy.symbols("z")
    num = sympy.numer(sympy.together(sympy.diff((z**2 + 1) / (z**2 - 1), z)))
    finite = [complex(r) for r in sympy.solve(num, z)]
    crit = critical_points(f)
    assert len(crit) == 2
    for r in finite:
        assert _has_point(crit, r)
    assert _has_point(crit, INFINITY)


@given(st.lists(cplx, min_size=3, max_size=5), st.lists(cplx, min_size=1, max_size=4))
def test_critical_point_count_is_2d_minus_2(num, den):
    try:
        f = RationalMap(tuple(num), tuple(den))
    except InvalidMapError:
        return
    if f.degree < 2:
        return
    assert len(critical_points(f)) == 2 * f.degree - 2


# -- preimages ----------------------------------------------------------------------------


@given(cplx)
def test_generic_point_has_degree_preimages(c):
    f = RationalMap((0.5, c, 0.3, 1.0))  # cubic
    z = 0.7 - 0.2j
    roots, flags = preimages_with_flags(f, z)
    assert roots.shape == (3,)
    np.testing.assert_allclose(f(roots), z, atol=1e-8)


def test_preimages_of_critical_value_are_flagged(z2):
    _, flags = preimages_with_flags(z2, 0.0)
    assert np.all(flags)


def test_extended_precision_preimages_agree(cantor):
    a, _ = preimages_with_flags(cantor, 3.0)
    b, _ = preimages_with_flags(cantor, 3.0, precision="extended")
    np.testing.assert_allclose(a, b, atol=1e-14)


def test_fixed_points_include_infinity_for_polynomials(cheb):
    fp = fixed_points(cheb)
    assert _has_point(fp, 2.0) and _has_point(fp, -1.0) and _has_point(fp, INFINITY)


def test_chordal_distance_handles_huge_values():
    assert chordal_distance(1e200, 2e200) > 0
    assert chordal_distance(INFINITY, INFINITY) == 0


# -- exceptional sets ---------------------------------------------------------------------


def test_chebyshev_is_exceptional(cheb):
    rep = detect_exceptional(cheb)
    assert rep.is_exceptional
    assert sorted(np.real(rep.sigma)) == pytest.approx([-2.0, 2.0])


@pytest.mark.parametrize("c", [0.0, -6.0])
def test_hyperbolic_quadratics_are_not_exceptional(c):
    assert not detect_exceptional(RationalMap.quadratic(c)).is_exceptional


def test_exceptional_set_reverified_independently(cheb):
    """f^{-1}(Sigma) minus Crit equals Sigma, recomputed by hand-solving w^2 - 2 = s."""
    sigma = detect_exceptional(cheb).sigma
    pre = set()
    for s in sigma:
        for w in (np.sqrt(complex(s) + 2), -np.sqrt(complex(s) + 2)):
            if abs(w) > 1e-9:  # drop the critical point 0
                pre.add(round(w.real, 9) + 0.0)
    assert pre == {round(float(np.real(s)), 9) for s in sigma}
    assert satisfies_exceptional_condition(cheb, sigma)
