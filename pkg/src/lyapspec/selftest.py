"""Acceptance checks, usable from the CLI (``lyapspec selftest``) and from the test suite.

Each ``check_*`` function returns a :class:`CheckResult` with the measured
values; artifacts go to ``out`` when given. Nothing written depends on wall
time, so two runs with the same seed produce identical files.
"""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

LOG2, LOG4, LOG6 = np.log(2.0), np.log(4.0), np.log(6.0)


@dataclass
class CheckResult:
    name: str
    passed: bool
    values: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        shown = ", ".join(f"{k}={_short(v)}" for k, v in self.values.items() if np.isscalar(v))
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name} ({self.seconds:.1f} s) {shown}"


def _short(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6g}"
    return str(v)


def _quiet(fn, *args, **kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return fn(*args, **kwargs)


def check_z2(out: Optional[Path] = None) -> CheckResult:
    """Closed forms for z**2: P(d) = (1-d) log 2, a single spectrum point (log 2, 1)."""
    from .maps import RationalMap
    from .pressure import legendre_spectrum, pressure_curve, tree_pressure

    g = RationalMap.quadratic(0)
    ds = np.arange(-2, 4, dtype=float)
    err = max(abs(tree_pressure(g, d, n=8) - (1 - d) * LOG2) for d in ds)
    curve = _quiet(pressure_curve, g, np.linspace(-2, 3, 51), "tree", 8)
    spec = legendre_spectrum(curve, [LOG2])
    F = float(spec.F[0])
    v = dict(pressure_error=err, F_log2=F, alpha_minus=spec.alpha_minus, alpha_plus=spec.alpha_plus, d0=spec.d0)
    ok = (err < 1e-9 and abs(F - 1) < 1e-6 and abs(spec.alpha_minus - LOG2) < 1e-6
          and abs(spec.alpha_plus - LOG2) < 1e-6 and abs(spec.d0 - 1) < 1e-6)
    if out is not None:
        from .io import write_csv

        write_csv(out / "z2_pressure.csv", ("d", "P", "err"), zip(curve.d, curve.P, curve.errors))
        write_csv(out / "z2_spectrum.csv", ("alpha", "F"), zip(*spec.finite()))
    return CheckResult("1 z^2 analytic suite", ok, v)


def chebyshev_spectrum(period: int = 12):
    from .maps import RationalMap
    from .pressure import alpha_range, legendre_spectrum, pressure_curve

    g = RationalMap.quadratic(-2)
    curve = _quiet(pressure_curve, g, np.linspace(-4, 4, 81), "periodic", period)
    lo, hi = alpha_range(curve)
    return curve, legendre_spectrum(curve, np.linspace(lo, hi, 201))


def check_chebyshev(out: Optional[Path] = None, period: int = 12) -> CheckResult:
    """[alpha-, alpha+] = [log 2, 2 log 2] and d0 = 1 for z**2 - 2 from periodic sums."""
    curve, spec = chebyshev_spectrum(period)
    v = dict(period=period, alpha_minus=spec.alpha_minus, alpha_plus=spec.alpha_plus, d0=spec.d0)
    ok = (abs(spec.alpha_minus - LOG2) <= 0.05 and abs(spec.alpha_plus - 2 * LOG2) <= 0.05
          and abs(spec.d0 - 1) <= 0.02)
    if out is not None:
        from .io import write_csv

        write_csv(out / "chebyshev_spectrum.csv", ("alpha", "F"), zip(*spec.finite()))
    return CheckResult("2 Chebyshev interval", ok, v)


def cantor_spectrum(depth: int = 10):
    """Tree spectrum of z**2 - 6 on a wide d grid, so alpha+- approach the extreme exponents."""
    from .maps import RationalMap
    from .pressure import alpha_range, legendre_spectrum, pressure_curve

    g = RationalMap.quadratic(-6)
    curve = _quiet(pressure_curve, g, np.linspace(-12, 12, 481), "tree", depth)
    lo, hi = alpha_range(curve)
    return curve, legendre_spectrum(curve, np.linspace(lo, hi, 2001))


def check_duality(out: Optional[Path] = None) -> CheckResult:
    from .pressure import duality_check, spectrum_concavity_defect

    curve, spec = cantor_spectrum()
    dual = duality_check(curve, spec)
    concave = spectrum_concavity_defect(spec)
    v = dict(residual=dual.residual, recovery=dual.recovery_residual, concavity_defect=concave,
             max_F=spec.max_F, d0=spec.d0, alpha_minus=spec.alpha_minus, alpha_plus=spec.alpha_plus)
    ok = (dual.residual < 1e-4 and dual.recovery_residual < 1e-3 and concave <= 1e-9
          and abs(spec.max_F - spec.d0) <= 1e-3)
    if out is not None:
        from .io import write_json

        write_json(out / "cantor6_duality.json", v)
    return CheckResult("3 Legendre duality (z^2-6)", ok, v)


def check_gds(out: Optional[Path] = None, reference_depth: int = 14) -> CheckResult:
    from .gds import (bridge, convergence_report, is_transitive, loop_system, refine, subsystem_pressure,
                      system_bowen_root, two_disk_system, validate_gds)
    from .maps import RationalMap
    from .pressure import pressure_curve

    g = RationalMap.quadratic(-6)
    ds = np.linspace(0, 1, 11)
    base = two_disk_system(g)
    pe = [subsystem_pressure(base, d, with_error=True) for d in ds]
    closed = np.log(6.0 ** -ds + 4.0 ** -ds)
    closed_ok = all(abs(p - c) <= e + 1e-12 for (p, e), c in zip(pe, closed))
    root = system_bowen_root(base)
    l3, l2 = loop_system(g, 3, 0.1), loop_system(g, -2, 0.1)
    merged = bridge(l3, l2, g)
    parts = np.maximum([subsystem_pressure(l3, d) for d in ds], [subsystem_pressure(l2, d) for d in ds])
    bridged = np.array([subsystem_pressure(merged, d) for d in ds])
    ref = _quiet(pressure_curve, g, ds, "tree", reference_depth, extrapolate=True)
    systems = [refine(base, m, g) for m in (1, 2, 3, 4)]
    conv = convergence_report(systems, g, ds, reference=ref)
    v = dict(closed_form_ok=closed_ok, valid=validate_gds(base, g).passed, bowen_root=root,
             bridge_transitive=is_transitive(merged), bridge_margin=float(np.min(bridged - parts)),
             sup_monotone=conv.sup_monotone, final_gap=conv.final_gap)
    ok = (closed_ok and abs(root - 0.4435) <= 5e-3 and v["bridge_transitive"] and v["bridge_margin"] >= -1e-9
          and conv.sup_monotone and conv.final_gap < 0.02)
    if out is not None:
        from .io import write_json

        write_json(out / "gds_bridged.json", merged.to_json_dict())
        write_json(out / "gds_convergence.json", {"d": ds, "reference": conv.reference,
                                                  "running_sup": conv.running_sup, "gaps": conv.gaps})
    return CheckResult("4 GDS machinery", ok, v)


def check_conformal(out: Optional[Path] = None) -> CheckResult:
    from .conformal import circle_arcs, estimate_conformal, jacobian_residual, pointwise_dim_bound
    from .maps import RationalMap

    g = RationalMap.quadratic(0)
    est = estimate_conformal(g, 1.0, 1.0, 8, 0.0)
    jac = jacobian_residual(est, g, circle_arcs(16, est.atoms.size))
    rep = pointwise_dim_bound(g, 1.0, LOG2, 0.0, 1.0, 0.3, np.arange(1, 11))
    dev = float(np.max(np.abs(rep.normalized_ratios - 1)))
    v = dict(jacobian_residual=jac.residual, bound=rep.bound, ratio_deviation=dev,
             raw_ratio_last=float(rep.raw_ratios[-1]))
    ok = jac.residual < 1e-3 and abs(rep.bound - 1) < 1e-12 and dev <= 0.05 and not np.any(rep.flags)
    if out is not None:
        from .io import write_csv

        write_csv(out / "z2_atoms.csv", ("re", "im", "weight"), zip(est.atoms.real, est.atoms.imag, est.weights))
    return CheckResult("5 conformal measure (z^2)", ok, v)


def brute_hyperbolic_times(vals: np.ndarray, sigma: float, tol: float = 1e-9) -> np.ndarray:
    """O(n^2) oracle: n is a hyperbolic time when every suffix sum of the first n values beats k sigma."""
    out = []
    for n in range(1, len(vals) + 1):
        if all(np.sum(vals[n - k : n]) >= k * sigma - tol for k in range(1, n + 1)):
            out.append(n)
    return np.array(out, dtype=int)


def random_traces(rng: np.random.Generator, count: int, max_len: int = 200):
    for _ in range(count):
        n = int(rng.integers(1, max_len + 1))
        lo = rng.uniform(-2.0, 1.0)
        vals = rng.uniform(lo, lo + rng.uniform(0.5, 4.0), size=n)
        yield vals, float(rng.uniform(0.05, 1.5))


def check_hyperbolic(out: Optional[Path] = None, count: int = 1000, seed: int = 0) -> CheckResult:
    from .orbits import OrbitTrace, hyperbolic_times, pliss_bound

    rng = np.random.default_rng(seed)
    mismatches = pliss_fail = pliss_cases = 0
    for vals, sigma in random_traces(rng, count):
        tr = OrbitTrace(0j, vals)
        hs = hyperbolic_times(tr, sigma)
        if not np.array_equal(hs.times, brute_hyperbolic_times(vals, sigma)):
            mismatches += 1
        if np.mean(vals) > sigma:
            pliss_cases += 1
            if hs.density < pliss_bound(tr, sigma) - 1e-12:
                pliss_fail += 1
    v = dict(traces=count, mismatches=mismatches, pliss_cases=pliss_cases, pliss_failures=pliss_fail)
    if out is not None:
        from .io import write_json

        write_json(out / "hyperbolic.json", v)
    return CheckResult("6 hyperbolic times", mismatches == 0 and pliss_fail == 0, v)


def check_census(out: Optional[Path] = None, n_max: int = 10) -> CheckResult:
    from .maps import RationalMap
    from .orbits import census_by_enumeration, pullback_census

    cheb = RationalMap.quadratic(-2)
    counts, exact = [], True
    for n in range(1, n_max + 1):
        fast = pullback_census(cheb, 1.9, n, 0.3)
        slow = census_by_enumeration(cheb, 1.9, n, 0.3)
        exact &= fast.pairs == slow.pairs
        counts.append(fast.N)
    cantor = pullback_census(RationalMap.quadratic(-6), 3.0, 12, 0.5)
    v = dict(n_max=n_max, exact_match=exact, N_last=counts[-1], cantor_N=cantor.N,
             cantor_growth=cantor.growth_exponent)
    if out is not None:
        from .io import write_json

        write_json(out / "census.json", {"chebyshev_counts": counts, **v})
    return CheckResult("7 pullback census", exact and cantor.growth_exponent < 0.1, v)


def check_completeness(out: Optional[Path] = None, count: int = 100, length: int = 500, seed: int = 0,
                       spectrum=None) -> CheckResult:
    """Finite-time exponents of orbits on the z**2 - 6 Cantor set stay inside [alpha-, alpha+]."""
    from .maps import RationalMap
    from .orbits import random_backward_orbit

    spec = cantor_spectrum()[1] if spectrum is None else spectrum
    lo, hi = spec.alpha_minus - 0.05, spec.alpha_plus + 0.05
    g = RationalMap.quadratic(-6)
    rng = np.random.default_rng(seed)
    worst_lo, worst_hi = np.inf, -np.inf
    for _ in range(count):
        ell = random_backward_orbit(g, 3.0, length, rng).running_averages[99:]
        worst_lo, worst_hi = min(worst_lo, float(ell.min())), max(worst_hi, float(ell.max()))
    v = dict(orbits=count, min_ell=worst_lo, max_ell=worst_hi, lower=lo, upper=hi)
    if out is not None:
        from .io import write_json

        write_json(out / "completeness.json", v)
    return CheckResult("8 completeness of the spectrum", bool(lo <= worst_lo and worst_hi <= hi), v)


def check_wmeasure(out: Optional[Path] = None) -> CheckResult:
    from .gds import loop_system
    from .maps import RationalMap
    from .wmeasure import build_schedule, subsystem_stats, synthesize_trace, verify_oscillation

    g = RationalMap.quadratic(-6)
    subs = [subsystem_stats(loop_system(g, 3, 0.1)), subsystem_stats(loop_system(g, -2, 0.1))]
    sched = build_schedule(subs, g, 6)
    rep = verify_oscillation(synthesize_trace(sched, g), sched)
    short = build_schedule(subs, g, 6, enforce_predicate=False, block_lengths=[1, 2, 3, 4, 5, 6])
    neg = verify_oscillation(synthesize_trace(short, g), short)
    v = dict(all_checkpoints=rep.all_passed, liminf=rep.liminf, limsup=rep.limsup,
             control_failures=int(np.sum(~np.array(neg.passed))))
    ok = (rep.all_passed and abs(rep.liminf - LOG4) <= 0.02 and abs(rep.limsup - LOG6) <= 0.02
          and v["control_failures"] >= 1)
    if out is not None:
        from .io import write_json

        write_json(out / "wmeasure_report.json", rep.to_json_dict())
    return CheckResult("9 W-measure oscillation", ok, v)


CHECKS: dict[str, Callable] = {
    "z2": check_z2,
    "chebyshev": check_chebyshev,
    "duality": check_duality,
    "gds": check_gds,
    "conformal": check_conformal,
    "hyperbolic": check_hyperbolic,
    "census": check_census,
    "completeness": check_completeness,
    "wmeasure": check_wmeasure,
}


def run_selftest(out, seed: int = 0, quick: bool = True) -> dict:
    """Run every check, writing artifacts under ``out``. Quick mode shrinks the two slowest loops."""
    from .io import write_json

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    options = {
        "hyperbolic": dict(count=200 if quick else 1000, seed=seed),
        "census": dict(n_max=8 if quick else 10),
        "completeness": dict(seed=seed),
    }
    results = []
    for key, fn in CHECKS.items():
        t0 = time.perf_counter()
        try:
            res = fn(out, **options.get(key, {}))
        except Exception as exc:  # a crash is a failed check, reported with its type
            res = CheckResult(key, False, {"error": f"{type(exc).__name__}: {exc}"})
        res.seconds = time.perf_counter() - t0
        results.append(res)
    passed = all(r.passed for r in results)
    write_json(out / "selftest.json", {"seed": seed, "quick": quick, "passed": passed,
                                       "checks": [{"name": r.name, "passed": r.passed, "values": r.values}
                                                  for r in results]})
    return {"passed": passed, "lines": [r.line() for r in results], "results": results}
