import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lyapspec.errors import PreconditionError, SearchFailure
from lyapspec.gds import (Disk, Edge, GdsSystem, bridge, convergence_report, gds_from_sample, is_transitive,
                          loop_system, refine, sample_limit_set, subsystem_pressure, subsystem_spectrum,
                          system_bowen_root, system_from_disks, two_disk_system, validate_gds)
from lyapspec.pressure import periodic_points, pressure_curve

LOG4, LOG6 = np.log(4.0), np.log(6.0)


def _toy(n, pairs):
    verts = tuple(Disk(complex(3 * k), 1.0) for k in range(n))
    edges = tuple(Edge(a, b, (complex(3 * a), complex(3 * b)), 2.0) for a, b in pairs)
    return GdsSystem(verts, edges)


# -- validation and transitivity ----------------------------------------------------------


def test_two_disk_system_validates(cantor):
    s = two_disk_system(cantor)
    assert validate_gds(s, cantor).passed
    assert s.size == 2 and len(s.edges) == 4


def test_wider_disks_from_the_example_fail_containment(cantor):
    """D(+-2.55, 0.65) do not contain the branch images sqrt(z + 6) near +-1.73."""
    s = system_from_disks(cantor, [Disk(-2.55, 0.65), Disk(2.55, 0.65)], [-2.55, 2.55], prune=False)
    assert not validate_gds(s, cantor).passed


def test_overlapping_disks_fail_ssc(cantor):
    s = system_from_disks(cantor, [Disk(-2.4, 0.75), Disk(2.4, 0.75), Disk(2.0, 0.75)], [-2, 3, 2], prune=False)
    rep = validate_gds(s, cantor)
    assert not rep.ssc and not rep.passed


def test_sink_vertex_fails(cantor):
    s = two_disk_system(cantor)
    sink = GdsSystem(s.vertices + (Disk(10.0, 0.5),), s.edges + (Edge(0, 2, (3.0, 10.0), 6.0),))
    assert not validate_gds(sink, cantor).passed


def test_transitivity_examples():
    assert is_transitive(_toy(1, [(0, 0)]))
    assert not is_transitive(_toy(2, [(0, 1)]))
    assert is_transitive(_toy(2, [(0, 0), (0, 1), (1, 0), (1, 1)]))


# -- subsystem pressure -------------------------------------------------------------------


@given(st.floats(-3, 3))
def test_single_loop_pressure(d):
    s = loop_system(__import__("lyapspec").RationalMap.quadratic(-6), 3.0, 0.1)
    assert subsystem_pressure(s, d) == pytest.approx(-d * LOG6, abs=1e-10)


def test_two_disk_pressure_closed_form(cantor):
    s = two_disk_system(cantor)
    for d in np.linspace(-2, 3, 11):
        assert subsystem_pressure(s, d) == pytest.approx(np.log(6.0**-d + 4.0**-d), abs=1e-10)


def test_two_disk_bowen_root(cantor):
    # 6^-d + 4^-d = 1 by bisection: 0.4386942
    assert system_bowen_root(two_disk_system(cantor)) == pytest.approx(0.4386942, abs=1e-6)


def test_loop_spectrum(cantor):
    sp = subsystem_spectrum(loop_system(cantor, 3.0, 0.1), np.linspace(-2, 2, 41), [LOG6])
    assert sp.alpha_minus == pytest.approx(LOG6) and sp.alpha_plus == pytest.approx(LOG6)
    assert sp.spectrum.F[0] == pytest.approx(0.0, abs=1e-9)


def test_two_disk_spectrum(cantor):
    sp = subsystem_spectrum(two_disk_system(cantor), np.linspace(-12, 12, 481), np.linspace(1.4, 1.78, 381))
    assert sp.alpha_minus == pytest.approx(LOG4, abs=0.01)
    assert sp.alpha_plus == pytest.approx(LOG6, abs=0.01)
    assert sp.spectrum.max_F == pytest.approx(0.4386942, abs=1e-3)


def test_empty_grid_spectrum(cantor):
    sp = subsystem_spectrum(loop_system(cantor, 3.0, 0.1), [], [])
    assert sp.spectrum.alpha.size == 0


# -- sample-based construction ------------------------------------------------------------


def _components_1d(points, r):
    """Oracle: clusters of a real sample where consecutive gaps stay below 2r."""
    x = np.sort(np.real(points))
    return 1 + int(np.sum(np.diff(x) > 2 * r))


@pytest.mark.parametrize("r", [0.3, 0.4])
def test_sample_system_components(cantor, r):
    pts = np.concatenate([periodic_points(cantor, k).points for k in (1, 2, 3)])
    s = gds_from_sample(cantor, pts, r)
    assert s.size == _components_1d(pts, r)
    assert validate_gds(s, cantor).passed


def test_sample_system_overlapping_hulls_rejected(cantor):
    arc = 2.0 + np.exp(1j * np.linspace(np.pi / 3, 5 * np.pi / 3, 60))
    with pytest.raises(PreconditionError):
        gds_from_sample(cantor, np.append(arc, 2.0), 0.3)


def test_sample_fixed_point_gives_loop(cantor):
    s = gds_from_sample(cantor, [3.0], 0.1)
    assert s.size == 1 and [e.weight for e in s.edges] == pytest.approx([6.0])


# -- refinement ---------------------------------------------------------------------------


def test_refine_word_counts(cantor):
    s = two_disk_system(cantor)
    r2 = refine(s, 2, cantor)
    assert (r2.size, len(r2.edges)) == (4, 8)
    r3 = refine(s, 3, cantor)
    assert (r3.size, len(r3.edges)) == (8, 16)
    assert validate_gds(r3, cantor).passed


def test_refine_identity(cantor):
    s = two_disk_system(cantor)
    assert refine(s, 1, cantor) == s


def test_refined_loop_keeps_cycle_weight(cantor):
    r = refine(loop_system(cantor, 3.0, 0.1), 3, cantor)
    assert r.size == 1
    # three steps around the loop multiply to 6^3
    assert np.prod([r.edges[0].weight] * 3) == pytest.approx(6.0**3)


@pytest.mark.parametrize("m", [2, 3])
def test_refine_preserves_pressure_within_error_bar(cantor, m):
    s = two_disk_system(cantor)
    r = refine(s, m, cantor)
    for d in (0.0, 0.5, 1.0):
        p, err = subsystem_pressure(r, d, with_error=True)
        assert abs(p - subsystem_pressure(s, d)) <= err + 0.05


# -- limit set samples --------------------------------------------------------------------


def test_loop_limit_set(cantor):
    np.testing.assert_allclose(sample_limit_set(loop_system(cantor, 3.0, 0.1), 3, cantor), [3.0])


def test_two_disk_limit_set(cantor):
    s = two_disk_system(cantor)
    pts = sample_limit_set(s, 3, cantor)
    assert pts.size == 8
    assert len(np.unique(np.round(pts, 10))) == 8
    # sampled shadowing: forward orbits stay inside the vertex union
    z = pts.copy()
    for _ in range(3):
        assert np.all(np.any([v.contains(z) for v in s.vertices], axis=0))
        z = cantor(z)


def test_chain_limit_set_uses_admissible_words(cantor):
    l3 = loop_system(cantor, 3.0, 0.1)
    l2 = loop_system(cantor, -2.0, 0.1)
    merged = bridge(l3, l2, cantor)
    assert sample_limit_set(merged, 2, cantor).size == len(merged.edges)
    pairs = [1 for a in merged.edges for b in merged.edges if b.dst == a.src]
    assert sample_limit_set(merged, 3, cantor).size == len(pairs)


# -- bridges ------------------------------------------------------------------------------


def test_bridge_two_loops(cantor):
    l3 = loop_system(cantor, 3.0, 0.1)
    l2 = loop_system(cantor, -2.0, 0.1)
    merged = bridge(l3, l2, cantor)
    assert is_transitive(merged)
    assert validate_gds(merged, cantor).passed
    for d in np.linspace(0, 1, 11):
        assert subsystem_pressure(merged, d) >= max(subsystem_pressure(l3, d), subsystem_pressure(l2, d)) - 1e-9


def test_bridge_overlapping_domains_rejected(cantor):
    l3 = loop_system(cantor, 3.0, 0.1)
    with pytest.raises(PreconditionError):
        bridge(l3, l3, cantor)


def test_bridge_search_exhaustion(cantor):
    l3 = loop_system(cantor, 3.0, 0.1)
    l2 = loop_system(cantor, -2.0, 0.1)
    with pytest.raises(SearchFailure):
        bridge(l3, l2, cantor, search_depth=1)


def test_subsystem_root_below_ambient_dimension(cantor):
    d0 = 0.4518  # extrapolated tree Bowen root of z^2 - 6
    for s in (two_disk_system(cantor), bridge(loop_system(cantor, 3.0, 0.1), loop_system(cantor, -2.0, 0.1), cantor)):
        assert system_bowen_root(s) <= d0 + 1e-3


# -- convergence --------------------------------------------------------------------------


def test_convergence_of_refinements(cantor):
    ds = np.linspace(0, 1, 11)
    s = two_disk_system(cantor)
    rep = convergence_report([refine(s, m, cantor) for m in (1, 2, 3, 4)], cantor, ds)
    assert rep.sup_monotone
    assert rep.final_gap < 0.02
    assert np.all(np.diff(rep.gaps) <= 1e-12)
    assert np.all(rep.below_reference)


def test_convergence_single_system_is_plain_comparison(cantor):
    ds = np.linspace(0, 1, 5)
    s = two_disk_system(cantor)
    ref = pressure_curve(cantor, ds, "tree", 10, extrapolate=True)
    rep = convergence_report([s], cantor, ds, reference=ref)
    plain = np.max(np.abs(ref.P - np.array([subsystem_pressure(s, d) for d in ds])))
    assert rep.final_gap == pytest.approx(plain)


# -- serialisation ------------------------------------------------------------------------


def test_json_round_trip(cantor):
    s = refine(two_disk_system(cantor), 2, cantor)
    again = GdsSystem.from_json_dict(json.loads(json.dumps(s.to_json_dict())))
    assert again == s
