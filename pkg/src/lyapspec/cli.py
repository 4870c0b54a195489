"""Command-line frontend: ``lyapspec <command> --config <path> [--threads N] [--out DIR] [--precision extended]``.

Exit codes: 0 ok, 2 configuration or precondition error, 3 numeric
degradation, 4 search failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import LyapspecError, NumericDegradation, SearchFailure

COMMANDS = ("pressure", "spectrum", "orbit", "gds", "conformal", "wmeasure", "selftest")
THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")

log = logging.getLogger("lyapspec")


def _complex_json(z: complex) -> list:
    return [float(np.real(z)), float(np.imag(z))]


# -- commands ---------------------------------------------------------------------------


def run_pressure(cfg, out: Path) -> dict:
    from .io import plot_pressure, write_csv, write_json
    from .pressure import bowen_root, pressure_curve

    s = cfg.section("pressure")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        curve = pressure_curve(cfg.map, s["d_grid"], s["method"], s["depth"], s["base"], s["extrapolate"],
                               precision=cfg.precision)
    write_csv(out / "pressure.csv", ("d", "P", "err"), zip(curve.d, curve.P, curve.errors))
    plot_pressure(out / "pressure.svg", curve.d, curve.P, curve.errors, title=f"pressure ({curve.method})")
    summary = {"method": curve.method, "depth": curve.depth, "bowen_root": bowen_root(curve),
               "convexity_defect": curve.convexity_defect(), "warnings": list(curve.warnings)}
    write_json(out / "pressure.json", summary)
    return summary


def spectrum_from_section(fmap, s: dict, precision: str = "double"):
    """Pressure curve, Legendre spectrum and duality report for a spectrum config section."""
    from .pressure import alpha_range, duality_check, legendre_spectrum, pressure_curve

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        curve = pressure_curve(fmap, s["d_grid"], s["method"], s["depth"], s["base"], s["extrapolate"],
                               precision=precision)
    alpha = s["alpha_grid"]
    if alpha is None:
        lo, hi = alpha_range(curve)
        alpha = np.array([lo]) if hi - lo < 1e-9 else np.linspace(lo, hi, s["alpha_points"])
    spec = legendre_spectrum(curve, alpha)
    dual = duality_check(curve, spec, s["duality_tol"])
    return curve, spec, dual


def run_spectrum(cfg, out: Path) -> dict:
    from .io import plot_spectrum, write_csv, write_json
    from .pressure import spectrum_concavity_defect

    curve, spec, dual = spectrum_from_section(cfg.map, cfg.section("spectrum"), cfg.precision)
    write_csv(out / "pressure.csv", ("d", "P", "err"), zip(curve.d, curve.P, curve.errors))
    a, F = spec.finite()
    write_csv(out / "spectrum.csv", ("alpha", "F"), zip(a, F))
    plot_spectrum(out / "spectrum.svg", spec.alpha, spec.F, spec.alpha_minus, spec.alpha_plus, spec.d0)
    summary = {
        "method": curve.method,
        "alpha_minus": spec.alpha_minus,
        "alpha_plus": spec.alpha_plus,
        "d0": spec.d0,
        "alpha_star": spec.alpha_star,
        "max_F": spec.max_F,
        "duality_residual": dual.residual,
        "recovery_residual": dual.recovery_residual,
        "duality_flagged": dual.flagged,
        "concavity_defect": spectrum_concavity_defect(spec),
        "warnings": list(curve.warnings) + list(spec.warnings),
    }
    write_json(out / "spectrum.json", summary)
    return summary


def run_orbit(cfg, out: Path) -> dict:
    from .io import write_csv, write_json
    from .orbits import conical_probe, hyperbolic_times, pliss_bound, pullback_census, random_backward_orbit, trace_orbit
    from .pressure import default_base_point

    s = cfg.section("orbit")
    fmap = cfg.map
    x = default_base_point(fmap) if s["x"] is None else s["x"]
    rng = np.random.default_rng(cfg.seed)
    orbits = []
    for i in range(s["count"]):
        if s["mode"] == "forward":
            start = x if i == 0 else x + 1e-6 * complex(*rng.standard_normal(2))
            tr = trace_orbit(fmap, start, s["n"])
        else:
            tr = random_backward_orbit(fmap, x, s["n"], rng)
        name = "trace.csv" if s["count"] == 1 else f"trace_{i:03d}.csv"
        write_csv(out / name, ("k", "log_deriv", "running_avg"), tr.to_rows())
        sigma = s["sigma"] if s["sigma"] is not None else 0.5 * float(np.mean(tr.log_derivs))
        info = {"x": _complex_json(tr.x), "n": tr.n, "exponent_bounds": list(tr.exponent_bounds()),
                "final_average": float(tr.running_averages[-1])}
        if sigma > 0:
            ht = hyperbolic_times(tr, sigma)
            info.update(sigma=sigma, hyperbolic_times=ht.times.tolist(), density=ht.density,
                        pliss_bound=pliss_bound(tr, sigma))
        orbits.append(info)
    summary: dict = {"orbits": orbits}
    if s["census"] is not None:
        c = s["census"]
        cen = pullback_census(fmap, c["y"], c["n"], c["R"])
        summary["census"] = {"y": _complex_json(cen.y), "n": cen.n, "R": cen.R, "N": cen.N,
                             "growth_exponent": cen.growth_exponent,
                             "pairs": [[_complex_json(p), k] for p, k in cen.pairs]}
    if s["conical"] is not None:
        c = s["conical"]
        hits = conical_probe(fmap, x, c["r"], c["n_max"], c["K_cap"])
        summary["conical"] = [{"n": n, "center": _complex_json(r.center), "radius": r.radius,
                               "distortion": r.distortion} for n, r in hits]
    write_json(out / "orbit.json", summary)
    return summary


def _build_systems(cfg) -> list:
    from .gds import Disk, GdsSystem, loop_system, system_from_disks

    base = cfg.source.parent if cfg.source is not None else Path.cwd()
    out = []
    for spec in cfg.section("gds")["systems"]:
        if spec["kind"] == "loop":
            out.append(loop_system(cfg.map, spec["p"], spec["r"]))
        elif spec["kind"] == "disks":
            disks = [Disk(d["c"], d["r"]) for d in spec["disks"]]
            out.append(system_from_disks(cfg.map, disks, spec["witnesses"]))
        else:
            p = Path(spec["file"])
            out.append(GdsSystem.from_json_dict(json.loads((p if p.is_absolute() else base / p).read_text())))
    return out


def _system_summary(system, fmap, d_grid) -> dict:
    from .gds import GdsSystem, is_transitive, subsystem_pressure, system_bowen_root, validate_gds

    rep = validate_gds(system, fmap)
    again = GdsSystem.from_json_dict(json.loads(json.dumps(system.to_json_dict())))
    P = [subsystem_pressure(system, float(d), with_error=True) for d in d_grid]
    return {
        "vertices": system.size,
        "edges": len(system.edges),
        "valid": rep.passed,
        "checks": {"ssc": rep.ssc, "containment": rep.containment, "unique": rep.unique,
                   "surjective": rep.surjective, "images_disjoint": rep.images_disjoint},
        "transitive": is_transitive(system),
        "round_trip_equal": again == system,
        "max_distortion": system.max_distortion(),
        "bowen_root": system_bowen_root(system),
        "pressure": [{"d": float(d), "P": p, "err": e} for d, (p, e) in zip(d_grid, P)],
    }


def run_gds(cfg, out: Path) -> dict:
    from .gds import bridge, convergence_report, refine
    from .io import write_json
    from .pressure import pressure_curve

    s = cfg.section("gds")
    fmap = cfg.map
    systems = _build_systems(cfg)
    if not systems:
        raise LyapspecError("gds: no systems configured")
    summary: dict = {"systems": []}
    for i, sy in enumerate(systems):
        write_json(out / f"system_{i}.json", sy.to_json_dict())
        summary["systems"].append(_system_summary(sy, fmap, s["d_grid"]))
    if s["bridge"] and len(systems) > 1:
        merged = systems[0]
        for other in systems[1:]:
            merged = bridge(merged, other, fmap, search_depth=s["search_depth"])
        write_json(out / "bridged.json", merged.to_json_dict())
        info = _system_summary(merged, fmap, s["d_grid"])
        parts = np.array([[p["P"] for p in sm["pressure"]] for sm in summary["systems"]])
        info["dominates_parts"] = bool(np.all(np.array([p["P"] for p in info["pressure"]])
                                              >= parts.max(axis=0) - 1e-9))
        summary["bridged"] = info
    if s["refine"]:
        refined = []
        for m in s["refine"]:
            r = refine(systems[0], m, fmap)
            refined.append(r)
            write_json(out / f"refined_{m}.json", r.to_json_dict())
        summary["refined"] = [dict(m=m, **_system_summary(r, fmap, s["d_grid"]))
                              for m, r in zip(s["refine"], refined)]
        if s["convergence"]:
            ref = pressure_curve(fmap, s["d_grid"], "tree", s["reference_depth"], extrapolate=True,
                                 precision=cfg.precision)
            rep = convergence_report(refined, fmap, s["d_grid"], reference=ref)
            summary["convergence"] = {"reference": rep.reference, "running_sup": rep.running_sup,
                                      "gaps": rep.gaps, "sup_monotone": rep.sup_monotone,
                                      "final_gap": rep.final_gap, "below_reference": rep.below_reference}
    write_json(out / "gds.json", summary)
    return summary


def run_conformal(cfg, out: Path) -> dict:
    from .conformal import circle_arcs, estimate_conformal, jacobian_residual, pointwise_dim_bound
    from .gds import Disk
    from .io import write_csv, write_json
    from .pressure import default_base_point, pressure_curve

    s = cfg.section("conformal")
    fmap = cfg.map
    x = default_base_point(fmap) if s["x"] is None else s["x"]
    P = s["P"]
    if P is None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            P = float(pressure_curve(fmap, [s["d"]], "tree", max(s["n"], 3), extrapolate=True,
                                     precision=cfg.precision).P[0])
    est = estimate_conformal(fmap, s["d"], x, s["n"], P)
    write_csv(out / "atoms.csv", ("re", "im", "weight"), zip(est.atoms.real, est.atoms.imag, est.weights))
    tests = circle_arcs(s["test_arcs"], est.atoms.size) if s["test_arcs"] else []
    tests += [Disk(t["c"], t["r"]) for t in s["test_disks"]]
    jac = jacobian_residual(est, fmap, tests)
    summary = {"d": est.d, "P": est.P, "x": _complex_json(est.x), "n": est.n, "atoms": int(est.atoms.size),
               "log_Z": est.log_Z, "jacobian_residual": jac.residual, "per_set": list(jac.per_set),
               "skipped": list(jac.skipped)}
    if s["pointwise"] is not None:
        pw = s["pointwise"]
        rep = pointwise_dim_bound(fmap, s["d"], pw["q"], P, x, pw["delta"], pw["n_list"],
                                  extra_depth=pw["extra_depth"])
        summary["pointwise"] = {"bound": rep.bound, "n": rep.n_list, "raw_ratios": rep.raw_ratios,
                                "normalized_ratios": rep.normalized_ratios, "masses": rep.masses,
                                "diameters": rep.diameters, "flags": rep.flags,
                                "empirical_liminf": rep.empirical_liminf}
    write_json(out / "conformal.json", summary)
    return summary


def wmeasure_from_section(fmap, s: dict):
    from .gds import loop_system
    from .wmeasure import build_schedule, subsystem_stats, synthesize_trace, verify_oscillation

    subs = [subsystem_stats(loop_system(fmap, lp["p"], lp["r"])) for lp in s["loops"]]
    sched = build_schedule(subs, fmap, s["depth"], eps_seed=s["eps_seed"], C=s["C"],
                           search_depth=s["search_depth"], enforce_predicate=s["truncate"] is None,
                           block_lengths=s["truncate"])
    trace = synthesize_trace(sched, fmap)
    return sched, trace, verify_oscillation(trace, sched)


def run_wmeasure(cfg, out: Path) -> dict:
    from .io import write_csv, write_json

    s = cfg.section("wmeasure")
    if not s["loops"]:
        raise LyapspecError("wmeasure: no loops configured")
    sched, trace, rep = wmeasure_from_section(cfg.map, s)
    ends, sums = trace.run_boundaries()
    reps = trace.repeats if trace.repeats is not None else np.ones(len(trace.log_derivs), dtype=int)
    write_csv(out / "trace.csv", ("k", "log_deriv", "running_avg", "repeats"),
              ((int(k), v, sm / float(k), int(r)) for k, v, sm, r in zip(ends, trace.log_derivs, sums, reps)))
    schedule = {
        "targets": list(sched.targets),
        "n": [int(v) for v in sched.n],
        "b": list(sched.b),
        "w": list(sched.w),
        "W": sched.W,
        "eps": list(sched.eps),
        "C": sched.C,
        "checkpoints": [int(m) for m in sched.checkpoints],
        "predicate_enforced": sched.predicate_enforced,
        "predicate_holds": sched.predicate_holds(),
        "terms": [{"carried": t.carried, "bridge": t.bridge, "distortion": t.distortion, "required": t.required}
                  for t in sched.terms],
        "bridges": [None if b is None else [_complex_json(p) for p in b.path] for b in sched.bridges],
    }
    write_json(out / "schedule.json", schedule)
    report = rep.to_json_dict()
    report["x"] = _complex_json(trace.x)
    write_json(out / "report.json", report)
    return {"all_passed": rep.all_passed, "liminf": rep.liminf, "limsup": rep.limsup,
            "certificate": list(rep.certificate)}


def run_selftest(cfg, out: Path) -> dict:
    from .selftest import run_selftest as _run

    return _run(out, seed=cfg.seed if cfg is not None else 0,
                quick=cfg.section("selftest")["quick"] if cfg is not None else True)


RUNNERS = {
    "pressure": run_pressure,
    "spectrum": run_spectrum,
    "orbit": run_orbit,
    "gds": run_gds,
    "conformal": run_conformal,
    "wmeasure": run_wmeasure,
    "selftest": run_selftest,
}


# -- entry point ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lyapspec", description="Lyapunov spectra of rational maps.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="experiment config (JSON); optional for selftest")
    p.add_argument("--threads", type=int, default=1, help="upper bound on worker threads")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--precision", choices=("double", "extended"), default=None,
                   help="override the config precision toggle")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _limit_threads(n: int):
    for var in THREAD_VARS:
        os.environ[var] = str(max(1, n))
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return
    threadpool_limits(max(1, n))


def run(command: str, cfg, out) -> dict:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return RUNNERS[command](cfg, out)


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.threads < 1:
        print("lyapspec: --threads must be positive", file=sys.stderr)
        return 2
    _limit_threads(args.threads)
    from .config import load_config

    try:
        cfg = None
        if args.config is not None:
            cfg = load_config(args.config)
            if args.precision is not None:
                cfg.precision = args.precision
        elif args.command != "selftest":
            print("lyapspec: --config is required for this command", file=sys.stderr)
            return 2
        summary = run(args.command, cfg, args.out)
    except LyapspecError as exc:
        print(f"lyapspec {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    if args.command == "selftest":
        for line in summary["lines"]:
            print(line)
        return 0 if summary["passed"] else 1
    brief = {k: v for k, v in summary.items() if not isinstance(v, (list, dict))}
    brief["files"] = sorted(p.name for p in Path(args.out).iterdir() if p.is_file())
    print(json.dumps(brief, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
