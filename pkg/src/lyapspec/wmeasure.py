"""Block schedules alternating between subsystems, and the orbit they produce.

A schedule cycles through subsystems with block lengths n_i chosen by an
explicit growth predicate. The distinguished point is built by backward
iteration along the concatenated branch word; once a block's backward orbit
has settled on its periodic cycle the rest of the block is stored as a single
run, so traces with astronomically many steps stay small.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import NumericDegradation, PreconditionError, SearchFailure
from .gds import BridgeSpec, GdsSystem, apply_edge, find_bridge, is_transitive, subsystem_spectrum, system_anchor
from .maps import RationalMap
from .orbits import OrbitTrace, pull_back

OVERFLOW_BOUND = 10**30
DEFAULT_C = 10.0


@dataclass(frozen=True, eq=False)
class SubsystemStats:
    system: GdsSystem
    chi: float
    h: float
    kind: str  # "loop" or "gds"

    @property
    def dim(self) -> float:
        return self.h / self.chi

    @property
    def a(self) -> int:
        return self.system.iterate

    @property
    def log_K(self) -> float:
        return float(np.log(self.system.max_distortion()))


def _is_cycle(system: GdsSystem) -> bool:
    return all(sum(1 for e in system.edges if e.src == k) == 1 for k in range(system.size))


def subsystem_stats(system: GdsSystem, d_grid=None, alpha_grid=None) -> SubsystemStats:
    """Exponent and entropy: loop multipliers for cycles, equilibrium at the Bowen root otherwise."""
    if not is_transitive(system):
        raise PreconditionError("subsystem must be transitive")
    if _is_cycle(system):
        chi = float(np.mean([np.log(e.weight) / e.steps for e in system.edges]))
        return SubsystemStats(system, chi, 0.0, "loop")
    d_grid = np.linspace(-2, 4, 121) if d_grid is None else d_grid
    sp = subsystem_spectrum(system, d_grid, [] if alpha_grid is None else alpha_grid)
    d0 = sp.spectrum.d0
    chi = sp.spectrum.alpha_star
    return SubsystemStats(system, float(chi), float(d0 * chi), "gds")


@dataclass(frozen=True)
class BlockTerms:
    """Per-block values entering the growth predicate (kept for re-checking)."""

    carried: float  # m_{i-1} (|chi_{i-1}| + 1)
    bridge: float  # b_i |log w_i|
    distortion: float  # log K_i
    required: float  # C * (sum) / (a_i eps_i)


@dataclass(frozen=True, eq=False)
class WSchedule:
    subsystems: tuple
    order: tuple  # subsystem index of every block
    n: tuple  # block lengths (python ints)
    b: tuple  # bridge length before every block (0 for the first)
    bridges: tuple  # BridgeSpec or None per block
    w: tuple  # smallest |f'| along each bridge (1.0 without bridge)
    W: float
    eps: tuple
    C: float
    terms: tuple
    predicate_enforced: bool = True

    @property
    def depth(self) -> int:
        return len(self.n)

    @property
    def checkpoints(self) -> tuple:
        out, m = [], 0
        for i, k in enumerate(self.order):
            m += self.subsystems[k].a * self.n[i] + self.b[i]
            out.append(m)
        return tuple(out)

    @property
    def targets(self) -> tuple:
        return tuple(self.subsystems[k].chi for k in self.order)

    def predicate_holds(self) -> list:
        """Re-evaluate a_i n_i eps_i >= C (...) for every block."""
        ok = []
        for i, k in enumerate(self.order):
            t = self.terms[i]
            lhs = self.subsystems[k].a * self.n[i] * self.eps[i]
            ok.append(lhs >= self.C * (t.carried + t.bridge + t.distortion) * (1 - 1e-12))
        return ok


def _bridge_for(fmap, prev: SubsystemStats, nxt: SubsystemStats, cache: dict, search_depth: int,
                given: Optional[dict], pair) -> BridgeSpec:
    if given is not None and pair in given:
        return given[pair]
    if pair not in cache:
        # forward motion prev -> nxt is a backward path from nxt's anchor landing in prev
        spec = find_bridge(fmap, nxt.system, prev.system, search_depth)
        if spec is None:
            raise SearchFailure(f"no bridge from subsystem {pair[0]} to subsystem {pair[1]}")
        cache[pair] = spec
    return cache[pair]


def build_schedule(subsystems: Sequence[SubsystemStats], fmap: RationalMap, depth: int,
                   eps_seed: float = 0.1, C: float = DEFAULT_C, bridges: Optional[dict] = None,
                   search_depth: int = 12, enforce_predicate: bool = True,
                   block_lengths: Optional[Sequence[int]] = None) -> WSchedule:
    """Minimal block lengths satisfying the growth predicate, cycling through ``subsystems``.

    ``eps_i = eps_seed / 2**i``. With ``enforce_predicate=False`` the given
    ``block_lengths`` are used verbatim (negative controls).
    """
    subs = tuple(subsystems)
    if not subs:
        raise PreconditionError("need at least one subsystem")
    order = tuple(i % len(subs) for i in range(depth))
    cache: dict = {}
    n, b, specs, w, eps, terms = [], [], [], [], [], []
    W = 1.0
    m_prev = 0
    for i, k in enumerate(order):
        e_i = eps_seed / 2 ** (i + 1)
        if i == 0 or len(subs) == 1:
            spec, b_i, w_i = None, 0, 1.0
        else:
            spec = _bridge_for(fmap, subs[order[i - 1]], subs[k], cache, search_depth, bridges,
                               (order[i - 1], k))
            b_i = spec.length
            derivs = np.abs(fmap.derivative(np.array(spec.path[1:])))
            w_i = float(np.min(derivs))
            W = max(W, float(np.max(derivs)))
        chi_prev = subs[order[i - 1]].chi if i else 0.0
        carried = m_prev * (abs(chi_prev) + 1)
        br = b_i * abs(math.log(w_i))
        dist = subs[k].log_K
        required = C * (carried + br + dist) / (subs[k].a * e_i)
        if enforce_predicate:
            n_i = max(math.ceil(required), (n[-1] + 1) if n else 1)
        else:
            if block_lengths is None:
                raise PreconditionError("block_lengths needed when the predicate is off")
            n_i = int(block_lengths[i])
        if n_i > OVERFLOW_BOUND:
            raise NumericDegradation(f"block {i + 1} needs n_i = {n_i:.3g} beyond the overflow bound")
        n.append(int(n_i))
        b.append(b_i)
        specs.append(spec)
        w.append(w_i)
        eps.append(e_i)
        terms.append(BlockTerms(carried, br, dist, required))
        m_prev += subs[k].a * n_i + b_i
    return WSchedule(subs, order, tuple(n), tuple(b), tuple(specs), tuple(w), W, tuple(eps), C,
                     tuple(terms), enforce_predicate)


def _cycle_step(fmap: RationalMap, system: GdsSystem, z: complex) -> complex:
    """One backward step of a cycle system from the vertex containing z."""
    for e in system.edges:
        if system.vertices[e.src].contains(z):
            return complex(apply_edge(fmap, e, np.array([z]))[0][0])
    raise NumericDegradation(f"point {z} left the subsystem domains")


def synthesize_trace(schedule: WSchedule, fmap: RationalMap, settle_limit: int = 10000) -> OrbitTrace:
    """Forward trace of the distinguished point, run-length compressed."""
    if schedule.depth == 0:
        return OrbitTrace(0j, np.zeros(0), repeats=np.zeros(0, dtype=object))
    vals: list = []  # (value, count) in backward time; reversed at the end
    last = schedule.subsystems[schedule.order[-1]]
    if last.kind != "loop":
        raise PreconditionError("trace synthesis supports cycle (loop) subsystems only")
    z, _ = system_anchor(last.system, fmap)
    for i in range(schedule.depth - 1, -1, -1):
        sub = schedule.subsystems[schedule.order[i]]
        if sub.kind != "loop":
            raise PreconditionError("trace synthesis supports cycle (loop) subsystems only")
        steps = sub.a * schedule.n[i]
        period = sub.system.size
        history = [z]
        taken = 0
        block: list = []
        while taken < steps:
            znew = _cycle_step(fmap, sub.system, z)
            block.append(float(fmap.log_abs_derivative(znew)))
            taken += 1
            history.append(znew)
            z = znew
            # settled once the cycle repeats to within a few ulps
            if len(history) > period and abs(history[-1] - history[-1 - period]) <= 4 * np.spacing(abs(znew)):
                break
            if taken > settle_limit:
                raise NumericDegradation("backward orbit did not settle on its cycle")
        rest = steps - taken
        vals.extend((v, 1) for v in block)
        if rest > 0:
            # settled: further backward steps cycle through the last ``period`` values
            pattern = block[-period:]
            full, extra = divmod(rest, period)
            if full:
                vals.append((float(np.mean(pattern)), full * period))
            vals.extend((v, 1) for v in pattern[:extra])
            for _ in range(extra):
                z = _cycle_step(fmap, sub.system, z)
        spec = schedule.bridges[i]
        if spec is not None:
            region = np.array([z])
            bridge_vals = []
            for a, bpt in zip(spec.path[:-1], spec.path[1:]):
                region, ok = pull_back(fmap, region, a, bpt)
                if not np.all(ok):
                    raise NumericDegradation("bridge continuation failed")
                bridge_vals.append(float(fmap.log_abs_derivative(region[0])))
            z = complex(region[0])
            vals.extend((v, 1) for v in bridge_vals)
    vals.reverse()
    values = np.array([v for v, _ in vals])
    counts = np.array([c for _, c in vals], dtype=object)
    return OrbitTrace(z, values, repeats=counts)


@dataclass(frozen=True, eq=False)
class OscillationReport:
    checkpoints: tuple
    averages: tuple
    targets: tuple
    residuals: tuple
    passed: tuple
    interpolation_residuals: tuple
    interpolation_passed: tuple
    liminf: float
    limsup: float
    certificate: tuple  # (liminf d_i, limsup d_i): lower bounds for Hausdorff / packing dimension
    note: str = ""

    @property
    def all_passed(self) -> bool:
        return all(self.passed)

    def to_json_dict(self) -> dict:
        return {
            "checkpoints": [str(m) for m in self.checkpoints],
            "averages": list(self.averages),
            "targets": list(self.targets),
            "residuals": list(self.residuals),
            "passed": list(self.passed),
            "interpolation_residuals": list(self.interpolation_residuals),
            "interpolation_passed": list(self.interpolation_passed),
            "liminf": self.liminf,
            "limsup": self.limsup,
            "certificate": {
                "hausdorff_lower_bound": self.certificate[0],
                "packing_lower_bound": self.certificate[1],
            },
            "note": self.note,
        }


def verify_oscillation(trace: OrbitTrace, schedule: WSchedule) -> OscillationReport:
    """Checkpoint residuals |ell_{m_i} - chi_i| < 2 eps_i and interpolation residuals between them.

    Averages are evaluated at run boundaries, exactly on compressed traces.
    The tail horizon for liminf/limsup is the second half of the checkpoints.
    """
    if schedule.depth == 0:
        return OscillationReport((), (), (), (), (), (), (), float("nan"), float("nan"), (0.0, 0.0),
                                 "empty schedule")
    ends, sums = trace.run_boundaries()
    ends_f = np.array([float(e) for e in ends])
    ends_i = [int(e) for e in ends]
    pos = {e: j for j, e in enumerate(ends_i)}
    cps = schedule.checkpoints
    avgs, res, ok = [], [], []
    for i, m in enumerate(cps):
        if m not in pos:
            raise PreconditionError(f"checkpoint {m} is not a run boundary of the trace")
        ell = float(sums[pos[m]] / m)
        avgs.append(ell)
        res.append(abs(ell - schedule.targets[i]))
        ok.append(res[-1] < 2 * schedule.eps[i])
    ires, iok = [], []
    for i in range(len(cps) - 1):
        lo, hi = cps[i], cps[i + 1]
        sel = (ends_f > lo) & (ends_f <= hi)
        if not np.any(sel):
            ires.append(0.0)
            iok.append(True)
            continue
        nn = ends_f[sel]
        ell = sums[sel] / nn
        interp = (lo / nn) * schedule.targets[i] + ((nn - lo) / nn) * schedule.targets[i + 1]
        r = float(np.max(np.abs(ell - interp)))
        ires.append(r)
        iok.append(r < 2 * (schedule.eps[i] + schedule.eps[i + 1]))
    tail = avgs[len(avgs) // 2 :] if len(avgs) > 1 else avgs
    dims = [schedule.subsystems[k].dim for k in schedule.order]
    tail_d = dims[len(dims) // 2 :] if len(dims) > 1 else dims
    return OscillationReport(tuple(cps), tuple(avgs), schedule.targets, tuple(res), tuple(ok),
                             tuple(ires), tuple(iok), float(min(tail)), float(max(tail)),
                             (float(min(tail_d)), float(max(tail_d))),
                             "certificate entries are dimension lower bounds, not measured dimensions")


def certificate(subsystems: Sequence[SubsystemStats]) -> tuple:
    """(liminf d_i, limsup d_i) for a schedule cycling through ``subsystems``."""
    dims = [s.dim for s in subsystems]
    return (min(dims), max(dims))
