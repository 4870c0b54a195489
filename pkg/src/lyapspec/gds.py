"""Graph-directed systems of inverse branches.

A system is a family of disks U_k with inverse branches g between them. Every
edge carries its own branch path: ``path[0]`` is a witness point in the
source disk and ``path[j+1]`` is the chosen preimage of ``path[j]``, so the
edge is a branch of f^{-steps} with ``steps = len(path) - 1``. Systems built
from one map usually have all steps equal (the iterate ``a``); bridged
systems mix lengths, and their pressure is then the root ``s`` of
rho(M(d, s)) = 1 with M(d, s)[k, l] = w^{-d} exp(-s * steps).
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import NumericDegradation, PreconditionError, SearchFailure
from .maps import POINT_TOL, RationalMap, critical_points
from .orbits import circle_samples, pull_back
from .pressure import (
    PressureCurve,
    SpectrumCurve,
    curve_from_function,
    legendre_spectrum,
    pressure_curve,
)

SAMPLES = 32
HULL_INFLATE = 1.1
BRIDGE_THICKEN = 1.05


@dataclass(frozen=True)
class Disk:
    center: complex
    radius: float

    def contains(self, z, margin: float = 0.0) -> np.ndarray:
        return np.abs(np.asarray(z) - self.center) < self.radius - margin

    def closure_disjoint(self, other: "Disk") -> bool:
        return abs(self.center - other.center) > self.radius + other.radius

    def boundary(self, count: int = SAMPLES) -> np.ndarray:
        return circle_samples(self.center, self.radius, count)

    def samples(self, count: int = SAMPLES) -> np.ndarray:
        return np.append(self.boundary(count), self.center)


def hull_disk(points: np.ndarray, inflate: float = HULL_INFLATE) -> Disk:
    c = complex(np.mean(points))
    return Disk(c, float(np.max(np.abs(points - c))) * inflate)


@dataclass(frozen=True)
class Edge:
    """Inverse branch g from vertex ``src`` (domain) into vertex ``dst``."""

    src: int
    dst: int
    path: tuple
    weight: float
    distortion: float = 1.0

    @property
    def witness(self) -> complex:
        return self.path[0]

    @property
    def image(self) -> complex:
        return self.path[-1]

    @property
    def steps(self) -> int:
        return len(self.path) - 1


@dataclass(frozen=True)
class GdsSystem:
    vertices: tuple
    edges: tuple
    iterate: int = 1

    @property
    def size(self) -> int:
        return len(self.vertices)

    @property
    def uniform(self) -> bool:
        return all(e.steps == self.iterate for e in self.edges)

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.size, self.size), dtype=int)
        for e in self.edges:
            A[e.dst, e.src] += 1
        return A

    def max_distortion(self) -> float:
        return max((e.distortion for e in self.edges), default=1.0)

    def to_json_dict(self) -> dict:
        return {
            "vertices": [{"c": [v.center.real, v.center.imag], "r": v.radius} for v in self.vertices],
            "edges": [
                {
                    "from": e.src,
                    "to": e.dst,
                    "witness": [e.witness.real, e.witness.imag],
                    "path": [[p.real, p.imag] for p in e.path],
                    "weight": e.weight,
                    "distortion": e.distortion,
                }
                for e in self.edges
            ],
            "iterate": self.iterate,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "GdsSystem":
        verts = tuple(Disk(complex(*v["c"]), float(v["r"])) for v in data["vertices"])
        edges = []
        for e in data["edges"]:
            path = e.get("path") or [e["witness"], e["image"]]
            edges.append(
                Edge(int(e["from"]), int(e["to"]), tuple(complex(*p) for p in path),
                     float(e["weight"]), float(e.get("distortion", 1.0)))
            )
        return cls(verts, tuple(edges), int(data.get("iterate", 1)))


# -- branch evaluation ----------------------------------------------------------------


def apply_edge(fmap: RationalMap, edge: Edge, z) -> tuple[np.ndarray, np.ndarray]:
    """g_edge(z) by continuation along the stored branch path; returns (points, ok)."""
    z = np.asarray(z, dtype=complex)
    ok = np.ones(z.shape, dtype=bool)
    for a, b in zip(edge.path[:-1], edge.path[1:]):
        z, good = pull_back(fmap, z, a, b)
        ok &= good
    return z, ok


def _crossing_critical(fmap: RationalMap, edge: Edge, disk: Disk, crit: np.ndarray) -> bool:
    region = disk.samples()
    for a, b in zip(edge.path[:-1], edge.path[1:]):
        region, _ = pull_back(fmap, region, a, b)
        if crit.size and np.any(hull_disk(region[:-1]).contains(crit)):
            return True
    return False


def _log_deriv_along(fmap: RationalMap, edge: Edge, pts: np.ndarray) -> np.ndarray:
    """log|(f^steps)'| at points of g_edge(U) (pts already pulled back)."""
    total = np.zeros(pts.shape)
    z = pts
    for _ in range(edge.steps):
        total += fmap.log_abs_derivative(z)
        z = fmap(z)
    return total


def make_edge(fmap: RationalMap, src: int, dst: int, path, domain: Disk) -> Edge:
    path = tuple(complex(p) for p in path)
    proto = Edge(src, dst, path, 1.0)
    weight = float(np.exp(_log_deriv_along(fmap, proto, np.array([path[-1]]))[0]))
    pts, _ = apply_edge(fmap, proto, domain.samples())
    logs = _log_deriv_along(fmap, proto, pts)
    return Edge(src, dst, path, weight, float(np.exp(np.max(logs) - np.min(logs))))


# -- validation --------------------------------------------------------------------


@dataclass(frozen=True)
class GdsReport:
    ssc: bool
    containment: bool
    unique: bool
    surjective: bool
    images_disjoint: bool
    details: tuple = ()

    @property
    def passed(self) -> bool:
        return self.ssc and self.containment and self.unique and self.surjective and self.images_disjoint


def validate_gds(system: GdsSystem, fmap: RationalMap) -> GdsReport:
    """Check disjoint closures, sampled containment g(closure U_l) in U_k, one edge per
    ordered pair, in/out degree >= 1 and disjoint images inside each target."""
    notes = []
    ssc = True
    for (i, u), (j, v) in itertools.combinations(enumerate(system.vertices), 2):
        if not u.closure_disjoint(v):
            ssc = False
            notes.append(f"closures of vertices {i} and {j} meet")
    crit = critical_points(fmap)
    crit = crit[np.isfinite(crit)]
    contain = True
    hulls = []
    for idx, e in enumerate(system.edges):
        dom = system.vertices[e.src]
        pts, ok = apply_edge(fmap, e, dom.samples())
        hulls.append(hull_disk(pts[:-1], 1.0) if np.all(ok) else None)
        if not np.all(ok) or not np.all(system.vertices[e.dst].contains(pts)):
            contain = False
            notes.append(f"edge {idx} ({e.src}->{e.dst}) does not map its domain into the target")
        elif _crossing_critical(fmap, e, dom, crit):
            contain = False
            notes.append(f"edge {idx} pullback meets a critical point")
    pairs = [(e.src, e.dst) for e in system.edges]
    unique = len(pairs) == len(set(pairs))
    if not unique:
        notes.append("more than one edge for an ordered pair")
    A = system.adjacency()
    surj = bool(system.size) and bool(np.all(A.sum(axis=0) >= 1) and np.all(A.sum(axis=1) >= 1))
    if not surj:
        notes.append("some vertex has in- or out-degree 0")
    disjoint = True
    for k in range(system.size):
        into = [h for h, e in zip(hulls, system.edges) if e.dst == k and h is not None]
        for h1, h2 in itertools.combinations(into, 2):
            if not h1.closure_disjoint(h2):
                disjoint = False
                notes.append(f"branch images inside vertex {k} overlap")
    return GdsReport(ssc, contain, unique, surj, disjoint, tuple(notes))


def is_transitive(system: GdsSystem) -> bool:
    if system.size == 0:
        return False
    n, _ = connected_components(csr_matrix(system.adjacency()), directed=True, connection="strong")
    return n == 1


# -- construction -----------------------------------------------------------------------


def system_from_disks(fmap: RationalMap, disks: Sequence[Disk], witnesses: Sequence[complex],
                      prune: bool = True) -> GdsSystem:
    """One-step system: edges from each disk along preimages of its witness that land in a disk."""
    disks = tuple(disks)
    edges = []
    for l, (dom, w) in enumerate(zip(disks, witnesses)):
        for q in fmap.preimages(complex(w)):
            for k, tgt in enumerate(disks):
                if tgt.contains(q):
                    e = make_edge(fmap, l, k, (w, q), dom)
                    pts, ok = apply_edge(fmap, e, dom.samples())
                    if np.all(ok) and np.all(tgt.contains(pts)):
                        edges.append(e)
    system = GdsSystem(disks, tuple(edges), 1)
    return prune_system(system) if prune else system


def prune_system(system: GdsSystem) -> GdsSystem:
    """Drop vertices of zero in- or out-degree until none remain."""
    keep = list(range(system.size))
    edges = list(system.edges)
    while True:
        ins = {k: 0 for k in keep}
        outs = {k: 0 for k in keep}
        for e in edges:
            outs[e.src] += 1
            ins[e.dst] += 1
        bad = {k for k in keep if ins[k] == 0 or outs[k] == 0}
        if not bad:
            break
        keep = [k for k in keep if k not in bad]
        edges = [e for e in edges if e.src in keep and e.dst in keep]
    remap = {old: new for new, old in enumerate(keep)}
    verts = tuple(system.vertices[k] for k in keep)
    edges = tuple(replace(e, src=remap[e.src], dst=remap[e.dst]) for e in edges)
    return GdsSystem(verts, edges, system.iterate)


def gds_from_sample(fmap: RationalMap, sample, r: float) -> GdsSystem:
    """System whose vertices are disk hulls of the components of the union of r-balls."""
    pts = np.unique(np.asarray(sample, dtype=complex).ravel())
    pts = pts[np.isfinite(pts)]
    if pts.size == 0:
        raise PreconditionError("empty sample")
    if np.min(np.abs(fmap.derivative(pts))) <= 1:
        raise PreconditionError("sample is not expanding (min |f'| <= 1)")
    tree = cKDTree(np.column_stack([pts.real, pts.imag]))
    pairs = np.array(sorted(tree.query_pairs(2 * r)), dtype=int).reshape(-1, 2)
    graph = csr_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(pts.size, pts.size))
    ncomp, labels = connected_components(graph, directed=False)
    disks, witnesses = [], []
    for c in range(ncomp):
        comp = pts[labels == c]
        centre = complex(np.mean(comp))
        disks.append(Disk(centre, float(np.max(np.abs(comp - centre))) + r))
        witnesses.append(comp[np.argmin(np.abs(comp - centre))])
    order = np.lexsort((np.imag(witnesses), np.real(witnesses)))
    disks = [disks[i] for i in order]
    witnesses = [witnesses[i] for i in order]
    for (i, u), (j, v) in itertools.combinations(enumerate(disks), 2):
        if not u.closure_disjoint(v):
            raise PreconditionError(f"components {i} and {j} overlap at radius {r}; use a smaller r")
    system = system_from_disks(fmap, disks, witnesses)
    if system.size == 0:
        raise SearchFailure("no invariant subsystem survives pruning")
    return system


def loop_system(fmap: RationalMap, p: complex, r: float) -> GdsSystem:
    """System on the periodic orbit of ``p`` with disks of radius r."""
    orbit = [complex(p)]
    for _ in range(64):
        q = fmap(orbit[-1])
        if abs(q - orbit[0]) < 1e-9 * (1 + abs(q)):
            break
        orbit.append(q)
    else:
        raise PreconditionError("point is not periodic with period <= 64")
    return gds_from_sample(fmap, orbit, r)


# -- refinement ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Word:
    edges: tuple  # edge indices e_1..e_{m-1}; composition g_{e_1} o ... o g_{e_{m-1}}
    last: int  # vertex the innermost branch starts from


def _words(system: GdsSystem, m: int) -> list:
    """Admissible compositions of m-1 edges, in lexicographic order."""
    words = [_Word((), k) for k in range(system.size)]
    for _ in range(m - 1):
        nxt = []
        for w in words:
            head = w.last if not w.edges else system.edges[w.edges[-1]].src
            for i, e in enumerate(system.edges):
                if e.dst == head:
                    nxt.append(_Word(w.edges + (i,), w.last))
        words = nxt
    return words


def _word_vertex(system: GdsSystem, w: _Word) -> int:
    return system.edges[w.edges[0]].dst if w.edges else w.last


def _word_source(system: GdsSystem, w: _Word) -> int:
    return system.edges[w.edges[-1]].src if w.edges else w.last


def _apply_word(fmap: RationalMap, system: GdsSystem, w: _Word, z) -> np.ndarray:
    for i in reversed(w.edges):
        z, _ = apply_edge(fmap, system.edges[i], z)
    return z


def refine(system: GdsSystem, m: int, fmap: RationalMap, inflate: float = HULL_INFLATE) -> GdsSystem:
    """Vertices become hulls of g_w(U) for admissible words w of m-1 edges.

    An edge e of the original system joins word w to the word e.w when that
    composition is admissible; its weight is re-measured at the image of the
    refined witness, so deeper refinements sample deeper points.
    """
    if m < 1:
        raise PreconditionError("m must be at least 1")
    if m == 1:
        return system
    words = _words(system, m)
    disks, witnesses = [], []
    for w in words:
        src = system.vertices[_word_source(system, w)]
        pts = _apply_word(fmap, system, w, src.samples())
        disks.append(hull_disk(pts[:-1], inflate))
        witness_src = system.edges[w.edges[-1]].witness if w.edges else src.center
        witnesses.append(complex(_apply_word(fmap, system, w, np.array([witness_src]))[0]))
    for (i, u), (j, v) in itertools.combinations(enumerate(disks), 2):
        if not u.closure_disjoint(v):
            raise NumericDegradation(
                f"refined vertices {i} and {j} overlap; refine deeper or shrink the hull inflation"
            )
    index = {w.edges: i for i, w in enumerate(words)}
    edges = []
    for i, w in enumerate(words):
        head = _word_vertex(system, w)
        for ei, e in enumerate(system.edges):
            if e.src != head:
                continue
            # g_e o G_w sits inside the word that drops the innermost edge of w
            j = index.get((ei,) + w.edges[:-1])
            if j is None:
                continue
            edges.append(make_edge(fmap, i, j, _branch_path(fmap, e, witnesses[i]), disks[i]))
    return prune_system(GdsSystem(tuple(disks), tuple(edges), system.iterate))


def _branch_path(fmap: RationalMap, edge: Edge, start: complex) -> list:
    """Branch path of ``edge`` re-anchored at ``start``."""
    pts = [complex(start)]
    z = np.array([complex(start)])
    for a, b in zip(edge.path[:-1], edge.path[1:]):
        z, _ = pull_back(fmap, z, a, b)
        pts.append(complex(z[0]))
    return pts


def sample_limit_set(system: GdsSystem, depth: int, fmap: RationalMap) -> np.ndarray:
    """Points g_w(witness) for every admissible word w of ``depth`` symbols (depth - 1 edges).

    Word length counts vertices, as in :func:`refine`.
    """
    if depth < 1:
        raise PreconditionError("depth must be at least 1")
    out = []
    for w in _words(system, depth):
        src = _word_source(system, w)
        out.append(complex(_apply_word(fmap, system, w, np.array([_vertex_witness(system, src)]))[0]))
    return np.array(out)


def _vertex_witness(system: GdsSystem, k: int) -> complex:
    for e in system.edges:
        if e.src == k:
            return e.witness
    return system.vertices[k].center


# -- pressure ---------------------------------------------------------------------------


def _perron_root(M: np.ndarray, tol: float = 1e-12, max_iter: int = 100000) -> float:
    """Spectral radius of a nonnegative matrix by shifted power iteration."""
    scale = float(np.max(M))
    if scale == 0:
        return 0.0
    A = M / scale + np.eye(len(M))
    v = np.ones(len(M)) / len(M)
    lam = 0.0
    for _ in range(max_iter):
        w = A @ v
        new = float(np.sum(w))
        w /= new
        if abs(new - lam) <= tol * new and np.max(np.abs(w - v)) <= tol:
            lam = new
            break
        v, lam = w, new
    return (lam - 1.0) * scale


def _dominant_component(system: GdsSystem) -> tuple[np.ndarray, bool]:
    n, labels = connected_components(csr_matrix(system.adjacency()), directed=True, connection="strong")
    return labels, n == 1


def _log_matrix(system: GdsSystem, d: float) -> np.ndarray:
    """Entries -d log w_e, combined per (dst, src) pair, -inf where there is no edge."""
    L = np.full((system.size, system.size), -np.inf)
    for e in system.edges:
        L[e.dst, e.src] = np.logaddexp(L[e.dst, e.src], -d * np.log(e.weight))
    return L


def _log_rho(L: np.ndarray, steps: Optional[np.ndarray] = None, s: float = 0.0) -> float:
    if steps is not None:
        L = L - s * steps
    top = np.max(L[np.isfinite(L)])
    return float(np.log(_perron_root(np.exp(L - top))) + top)


def subsystem_pressure(system: GdsSystem, d: float, with_error: bool = False):
    """Pressure of -d log|f'| on the limit set, per unit of time.

    Uniform systems use (1/a) log rho(M) with M[k, l] = w^{-d}; mixed step
    lengths solve rho(M(d, s)) = 1 for s. The error bar is
    (1/a_min) |d| log(max distortion).
    """
    if system.size == 0 or not system.edges:
        raise PreconditionError("empty system")
    labels, transitive = _dominant_component(system)
    L = _log_matrix(system, d)
    steps = np.zeros(L.shape)
    for e in system.edges:
        steps[e.dst, e.src] = e.steps
    if system.uniform:
        value = _log_rho(L) / system.iterate
    else:
        def g(s):
            return _log_rho(L, steps, s)

        lo, hi = -1.0, 1.0
        while g(lo) < 0:
            lo *= 2
        while g(hi) > 0:
            hi *= 2
        value = brentq(g, lo, hi, xtol=1e-14, rtol=1e-15)
    a_min = min(e.steps for e in system.edges)
    err = abs(d) * np.log(system.max_distortion()) / a_min
    return (float(value), float(err)) if with_error else float(value)


@dataclass(frozen=True, eq=False)
class SubsystemSpectrum:
    curve: PressureCurve
    spectrum: SpectrumCurve

    @property
    def alpha_minus(self) -> float:
        return self.spectrum.alpha_minus

    @property
    def alpha_plus(self) -> float:
        return self.spectrum.alpha_plus


def subsystem_curve(system: GdsSystem, d_grid) -> PressureCurve:
    d = np.asarray(d_grid, dtype=float)
    errs = [subsystem_pressure(system, x, with_error=True)[1] for x in d]
    return curve_from_function(lambda x: subsystem_pressure(system, x), d, method="gds",
                               depth=system.iterate, errors=errs)


def subsystem_spectrum(system: GdsSystem, d_grid, alpha_grid) -> SubsystemSpectrum:
    curve = subsystem_curve(system, d_grid)
    return SubsystemSpectrum(curve, legendre_spectrum(curve, alpha_grid))


def system_bowen_root(system: GdsSystem, lo: float = -10.0, hi: float = 10.0) -> float:
    return float(brentq(lambda d: subsystem_pressure(system, d), lo, hi, xtol=1e-12))


# -- bridges ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BridgeSpec:
    anchor: complex
    path: tuple  # y_0 = anchor, f(y_{t}) = y_{t-1}
    source: int
    target: int
    refinement: int

    @property
    def length(self) -> int:
        return len(self.path) - 1


def system_anchor(system: GdsSystem, fmap: RationalMap) -> tuple[complex, int]:
    """Periodic point of the system on the shortest cycle (ties: lowest vertex, edge order)."""
    best = None
    for start in range(system.size):
        # BFS over edges backwards in the branch direction: g_e maps src -> dst
        prev = {start: None}
        queue = deque([start])
        found = None
        while queue and found is None:
            v = queue.popleft()
            for i, e in enumerate(system.edges):
                if e.src != v:
                    continue
                if e.dst == start:
                    found = (v, i)
                    break
                if e.dst not in prev:
                    prev[e.dst] = (v, i)
                    queue.append(e.dst)
        if found is None:
            continue
        cycle = [found[1]]
        v = found[0]
        while prev[v] is not None:
            pv, pi = prev[v]
            cycle.append(pi)
            v = pv
        cycle.reverse()  # edges in application order starting from ``start``
        if best is None or len(cycle) < len(best[1]):
            best = (start, cycle)
    if best is None:
        raise PreconditionError("system has no cycle")
    start, cycle = best
    z = np.array([_vertex_witness(system, start)])
    for _ in range(200):
        prev_z = z.copy()
        for i in cycle:
            z, _ = apply_edge(fmap, system.edges[i], z)
        if abs(z[0] - prev_z[0]) < 1e-15 * (1 + abs(z[0])):
            break
    return complex(z[0]), start


def _in_union(z: complex, disks, thicken: float = BRIDGE_THICKEN) -> int:
    for i, u in enumerate(disks):
        if abs(z - u.center) <= u.radius * thicken:
            return i
    return -1


def _search_paths(fmap: RationalMap, anchor: complex, own, other, depth: int, crit, limit: int = 64):
    """Backward paths from ``anchor`` whose interior avoids both unions and whose end
    lands in ``other``; breadth first, preimages in sorted order."""
    queue = deque([(complex(anchor),)])
    found = []
    while queue and len(found) < limit:
        path = queue.popleft()
        if len(path) - 1 >= depth:
            continue
        for q in fmap.preimages(path[-1]):
            q = complex(q)
            if not np.isfinite(q) or (crit.size and np.min(np.abs(crit - q)) < 1e-6):
                continue
            k = _in_union(q, other, 1.0)
            if k >= 0:
                found.append((path + (q,), k))
                continue
            if _in_union(q, own) >= 0 or _in_union(q, other) >= 0:
                continue
            queue.append(path + (q,))
    return found


def _bridge_edge(fmap, src_sys, src_idx, path, dst_disks, dst_idx, all_disks, crit):
    """Edge along ``path`` from vertex src_idx, or None if the pulled-back disk misbehaves."""
    dom = src_sys.vertices[src_idx]
    region = dom.samples()
    for t, (a, b) in enumerate(zip(path[:-1], path[1:]), start=1):
        region, ok = pull_back(fmap, region, a, b)
        if not np.all(ok):
            return None
        hull = hull_disk(region[:-1], BRIDGE_THICKEN)
        if crit.size and np.any(hull.contains(crit)):
            return None
        if t < len(path) - 1 and any(not hull.closure_disjoint(u) for u in all_disks):
            return None
    if not np.all(dst_disks[dst_idx].contains(region)):
        return None
    return region


def find_bridge(fmap: RationalMap, sys1: GdsSystem, sys2: GdsSystem, search_depth: int = 12):
    """BridgeSpec from sys1 into sys2 (anchor in sys1, landing in a vertex of sys2)."""
    crit = critical_points(fmap)
    crit = crit[np.isfinite(crit)]
    anchor, _ = system_anchor(sys1, fmap)
    src_idx = _in_union(anchor, sys1.vertices, 1.0)
    all_disks = list(sys1.vertices) + list(sys2.vertices)
    for path, k in _search_paths(fmap, anchor, sys1.vertices, sys2.vertices, search_depth, crit):
        if _bridge_edge(fmap, sys1, src_idx, path, sys2.vertices, k, all_disks, crit) is not None:
            return BridgeSpec(anchor, path, src_idx, k, 1)
    return None


def _check_disjoint_unions(sys1: GdsSystem, sys2: GdsSystem):
    for u in sys1.vertices:
        for v in sys2.vertices:
            if not u.closure_disjoint(v):
                raise PreconditionError("domain unions of the two systems overlap")


def bridge(sys1: GdsSystem, sys2: GdsSystem, fmap: RationalMap, search_depth: int = 12,
           max_refinement: int = 4, return_specs: bool = False):
    """Merge two systems through backward-orbit bridges in both directions.

    Both systems are refined with the same m (m = 1, 2, ...) until bridges are
    found whose pulled-back disks avoid both domain unions and land inside a
    vertex of the other system; the merged system is re-validated.
    """
    for s in (sys1, sys2):
        if not is_transitive(s):
            raise PreconditionError("bridge needs transitive input systems")
    _check_disjoint_unions(sys1, sys2)
    for m in range(1, max_refinement + 1):
        try:
            a = refine(sys1, m, fmap)
            b = refine(sys2, m, fmap)
        except NumericDegradation:
            continue
        if a.iterate != b.iterate:
            raise PreconditionError("systems must share the iterate")
        fwd = find_bridge(fmap, a, b, search_depth)
        back = find_bridge(fmap, b, a, search_depth)
        if fwd is None or back is None:
            continue
        off = a.size
        vertices = a.vertices + b.vertices
        edges = list(a.edges) + [replace(e, src=e.src + off, dst=e.dst + off) for e in b.edges]
        edges.append(make_edge(fmap, fwd.source, fwd.target + off, fwd.path, a.vertices[fwd.source]))
        edges.append(make_edge(fmap, back.source + off, back.target, back.path, b.vertices[back.source]))
        merged = GdsSystem(vertices, tuple(edges), a.iterate)
        if validate_gds(merged, fmap).passed and is_transitive(merged):
            specs = (replace(fwd, refinement=m), replace(back, refinement=m))
            return (merged, specs) if return_specs else merged
    raise SearchFailure(
        f"no bridge found within search depth {search_depth} and refinement {max_refinement}"
        " (inconclusive, not a proof that none exists)"
    )


# -- convergence ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    d: np.ndarray
    reference: np.ndarray
    pressures: np.ndarray  # (systems, grid)
    errors: np.ndarray
    running_sup: np.ndarray
    gaps: np.ndarray  # reference - running sup, max over the grid per system
    raw_gaps: np.ndarray
    below_reference: np.ndarray  # per system: P_m <= P_ref + tol on the whole grid
    alpha_minus: np.ndarray
    alpha_plus: np.ndarray
    F_gaps: np.ndarray

    @property
    def sup_monotone(self) -> bool:
        return bool(np.all(np.diff(self.running_sup, axis=0) >= -1e-12))

    @property
    def final_gap(self) -> float:
        return float(self.gaps[-1])


def convergence_report(systems: Sequence[GdsSystem], fmap: RationalMap, d_grid,
                       reference: Optional[PressureCurve] = None, alpha_grid=None) -> ConvergenceReport:
    """Compare subsystem pressures against a reference curve of the whole map.

    The default reference is the level-ratio tree estimate at depth 14.
    """
    d = np.asarray(d_grid, dtype=float)
    if reference is None:
        reference = pressure_curve(fmap, d, method="tree", depth=14, extrapolate=True)
    ref = np.array([reference(x) for x in d])
    P = np.array([[subsystem_pressure(s, x) for x in d] for s in systems])
    E = np.array([[subsystem_pressure(s, x, with_error=True)[1] for x in d] for s in systems])
    sup = np.maximum.accumulate(P, axis=0)
    gaps = np.max(np.abs(ref[None, :] - sup), axis=1)
    raw = np.max(np.abs(ref[None, :] - P), axis=1)
    ref_err = np.asarray(reference.errors) if len(reference.errors) == len(d) else np.zeros(len(d))
    below = np.all(P <= ref[None, :] + E + ref_err[None, :] + 1e-9, axis=1)
    am, ap, fg = [], [], []
    alpha = np.asarray(alpha_grid if alpha_grid is not None else [], dtype=float)
    ref_spec = legendre_spectrum(reference, alpha) if alpha.size and len(d) >= 2 else None
    for s in systems:
        curve = curve_from_function(lambda x, _s=s: subsystem_pressure(_s, x), d, method="gds")
        sp = legendre_spectrum(curve, alpha)
        am.append(sp.alpha_minus)
        ap.append(sp.alpha_plus)
        if ref_spec is not None:
            both = np.isfinite(sp.F) & np.isfinite(ref_spec.F)
            fg.append(float(np.max(ref_spec.F[both] - sp.F[both])) if np.any(both) else np.nan)
        else:
            fg.append(np.nan)
    return ConvergenceReport(d, ref, P, E, sup, gaps, raw, below, np.array(am), np.array(ap), np.array(fg))


def two_disk_system(fmap: RationalMap, centers=(-2.4, 2.4), radius: float = 0.75,
                    witnesses=(-2.0, 3.0)) -> GdsSystem:
    """The full two-vertex system used for z**2 - 6."""
    return system_from_disks(fmap, [Disk(complex(c), radius) for c in centers], witnesses)
