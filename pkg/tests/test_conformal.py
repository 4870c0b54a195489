import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lyapspec.conformal import (circle_arcs, estimate_conformal, jacobian_residual, negative_d_allowed,
                                pointwise_dim_bound)
from lyapspec.errors import PreconditionError
from lyapspec.gds import refine, two_disk_system
from lyapspec.maps import RationalMap
from lyapspec.pressure import bowen_root, pressure_curve

LOG2 = np.log(2.0)


def test_z2_atoms_are_uniform_roots_of_unity(z2):
    est = estimate_conformal(z2, 1.0, 1.0, 8, 0.0)
    assert est.atoms.size == 256
    np.testing.assert_allclose(est.weights, 2.0**-8, rtol=1e-12)
    np.testing.assert_allclose(est.atoms**256, 1.0, atol=1e-9)


def test_counting_measure_at_d0(z2):
    est = estimate_conformal(z2, 0.0, 1.0, 4, LOG2)
    np.testing.assert_allclose(est.weights, 1 / 16, rtol=1e-12)


def test_depth_zero_is_a_single_atom(cantor):
    est = estimate_conformal(cantor, 0.5, 3.0, 0, 0.0)
    assert est.atoms.tolist() == [3.0] and est.weights.tolist() == [1.0]


@given(st.integers(0, 11))
def test_z2_total_variation_from_uniform(n):
    est = estimate_conformal(RationalMap.quadratic(0), 1.0, 1.0, n, 0.0)
    assert 0.5 * np.sum(np.abs(est.weights - 1 / est.atoms.size)) < 1e-10


@given(st.floats(0.0, 2.0), st.integers(1, 6))
def test_weights_match_forward_iteration_oracle(d, n):
    """Weights depend on the atom only, not on branch labels: compare with |(f^n)'|^-d by forward iteration."""
    f = RationalMap.quadratic(-6)
    est = estimate_conformal(f, d, 3.0, n, 0.0)
    z = est.atoms.copy()
    logs = np.zeros(z.size)
    for _ in range(n):
        logs += np.log(np.abs(2 * z))
        z = f(z)
    w = np.exp(-d * logs)
    np.testing.assert_allclose(est.weights, w / w.sum(), rtol=1e-9)
    perm = np.random.default_rng(n).permutation(z.size)
    lookup = dict(zip(np.round(est.atoms, 12), est.weights))
    assert all(lookup[a] == pytest.approx(wt, rel=1e-9) for a, wt in zip(np.round(est.atoms[perm], 12),
                                                                        (w / w.sum())[perm]))


def test_push_forward_consistency(z2, cantor):
    est = estimate_conformal(z2, 1.0, 1.0, 6, 0.0)
    np.testing.assert_allclose(est.push_forward(z2).weights, estimate_conformal(z2, 1.0, 1.0, 5, 0.0).weights,
                               rtol=1e-12)
    d = 0.45
    deep = estimate_conformal(cantor, d, 3.0, 7, 0.0)
    shallow = estimate_conformal(cantor, d, 3.0, 6, 0.0)
    ratio = deep.push_forward(cantor).weights / shallow.weights
    # the extra level multiplies each parent by sum over children |f'(child)|^-d
    kids = np.sqrt(shallow.atoms[:, None] + 6.0) * np.array([1, -1])[None, :]
    level = np.sum(np.abs(2 * kids) ** -d, axis=1)
    assert ratio.max() / ratio.min() <= level.max() / level.min() * (1 + 1e-9)


def test_jacobian_residual_on_arcs(z2):
    est = estimate_conformal(z2, 1.0, 1.0, 8, 0.0)
    assert jacobian_residual(est, z2, circle_arcs(16, est.atoms.size)).residual < 1e-3


def test_jacobian_residual_empty(z2):
    est = estimate_conformal(z2, 1.0, 1.0, 4, 0.0)
    assert jacobian_residual(est, z2, []).residual == 0.0


def test_jacobian_residual_cantor_cylinders(cantor):
    curve = pressure_curve(cantor, np.linspace(0.3, 0.6, 7), "tree", 12, extrapolate=True)
    d0 = bowen_root(curve)
    est = estimate_conformal(cantor, d0, 3.0, 10, 0.0)
    cylinders = list(refine(two_disk_system(cantor), 3, cantor).vertices)
    assert jacobian_residual(est, cantor, cylinders).residual < 5e-2


def test_pointwise_bound_z2(z2):
    rep = pointwise_dim_bound(z2, 1.0, LOG2, 0.0, 1.0, 0.3, np.arange(1, 11))
    assert rep.bound == 1.0
    assert not rep.flags.any()
    assert np.all(np.abs(rep.normalized_ratios - 1) < 0.05)
    # raw ratios approach 1 slowly, from above
    assert np.all(np.diff(rep.raw_ratios) < 0) and rep.raw_ratios[-1] > 1


def test_pointwise_bound_is_d_independent_for_z2(z2):
    rep = pointwise_dim_bound(z2, 2.0, LOG2, -LOG2, 1.0, 0.3, [2, 4])
    assert rep.bound == pytest.approx(1.0)


def test_pointwise_bound_infinite_q(z2):
    assert pointwise_dim_bound(z2, 1.7, np.inf, 0.3, 1.0, 0.3, []).bound == 1.7


def test_negative_d_refused_on_exceptional_map(cheb):
    ok, why = negative_d_allowed(cheb)
    assert not ok
    with pytest.raises(PreconditionError):
        estimate_conformal(cheb, -1.0, 1.9, 3, 0.0)


def test_negative_d_allowed_on_cantor_map(cantor):
    est = estimate_conformal(cantor, -1.0, 3.0, 4, 0.0)
    assert est.weights.sum() == pytest.approx(1.0)


def test_atoms_near_reference_julia_sample(cantor):
    est = estimate_conformal(cantor, 0.45, 3.0, 8, 0.0)
    ref = estimate_conformal(cantor, 0.45, 3.0, 10, 0.0).atoms
    assert est.julia_distance(ref) < 1e-12  # nested trees: level-8 atoms are level-10 atoms of the same base
