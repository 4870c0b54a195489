"""Finite-orbit statistics: traces, hyperbolic times, conical probes and the pullback census."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericDegradation, OrbitEscape, PreconditionError
from .maps import POINT_TOL, RationalMap, chordal_distance, critical_points

ESCAPE_RADIUS = 1e8


@dataclass(frozen=True)
class OrbitTrace:
    """Per-step values log|f'(f^k x)| along an orbit of ``x``.

    ``repeats`` (optional) run-length encodes the trace: entry ``j`` of
    ``log_derivs`` stands for ``repeats[j]`` consecutive identical steps. Long
    synthetic traces are stored this way; everything else leaves it ``None``.
    """

    x: complex
    log_derivs: np.ndarray
    repeats: np.ndarray | None = None
    points: np.ndarray | None = None

    @property
    def n(self) -> int:
        if self.repeats is None:
            return len(self.log_derivs)
        return int(np.sum(self.repeats))

    def __len__(self):
        return self.n

    @property
    def is_compressed(self) -> bool:
        return self.repeats is not None

    def expand(self) -> "OrbitTrace":
        if self.repeats is None:
            return self
        if self.n > 10**8:
            raise PreconditionError(f"trace of {self.n} steps is too long to expand")
        return OrbitTrace(self.x, np.repeat(self.log_derivs, np.asarray(self.repeats, dtype=np.int64)))

    @property
    def prefix_sums(self) -> np.ndarray:
        """S_0 = 0, S_k = sum of the first k steps (uncompressed traces)."""
        vals = self.expand().log_derivs
        return np.concatenate([[0.0], np.cumsum(vals)])

    @property
    def running_averages(self) -> np.ndarray:
        """ell_k = S_k / k for k = 1..n."""
        s = self.prefix_sums
        return s[1:] / np.arange(1, len(s))

    def run_boundaries(self) -> tuple[np.ndarray, np.ndarray]:
        """(k, S_k) at the end of every run; for plain traces every step is a run."""
        reps = np.ones(len(self.log_derivs), dtype=np.int64) if self.repeats is None else self.repeats
        ends = np.cumsum(reps.astype(object)) if reps.size and reps.max() > 2**52 else np.cumsum(reps)
        sums = np.cumsum(self.log_derivs * reps.astype(float))
        return np.asarray(ends), sums

    def average_at(self, k: int) -> float:
        """ell_k for any 1 <= k <= n, also on compressed traces."""
        if not 1 <= k <= self.n:
            raise IndexError(k)
        if self.repeats is None:
            return float(np.sum(self.log_derivs[:k]) / k)
        total = 0.0
        left = k
        for v, r in zip(self.log_derivs, self.repeats):
            take = min(int(r), left)
            total += v * take
            left -= take
            if left == 0:
                break
        return total / k

    def exponent_bounds(self, tail_start: int = 1) -> tuple[float, float]:
        """(min, max) of ell_k over k >= tail_start: finite-horizon lower/upper exponents."""
        avg = self.running_averages[tail_start - 1 :]
        return float(np.min(avg)), float(np.max(avg))

    def to_rows(self):
        vals = self.expand().log_derivs
        avg = self.running_averages
        return [(k + 1, float(v), float(a)) for k, (v, a) in enumerate(zip(vals, avg))]


def trace_orbit(fmap: RationalMap, x: complex, n: int, metric: str = "euclidean") -> OrbitTrace:
    """Forward orbit of ``x`` for ``n`` steps with per-step log|f'|.

    Raises :class:`OrbitEscape` for polynomial maps once the orbit leaves the
    disk of radius ``ESCAPE_RADIUS``.
    """
    if n < 1:
        raise PreconditionError("trace length must be at least 1")
    pts = np.empty(n + 1, dtype=complex)
    pts[0] = x
    z = complex(x)
    for k in range(n):
        if fmap.is_polynomial and not abs(z) <= ESCAPE_RADIUS:
            raise OrbitEscape(f"orbit left |z| <= {ESCAPE_RADIUS:g} at step {k}", index=k)
        z = fmap(z)
        pts[k + 1] = z
    logs = fmap.log_abs_derivative(pts[:-1], metric=metric)
    return OrbitTrace(complex(x), np.asarray(logs, dtype=float), points=pts)


def backward_orbit(fmap: RationalMap, base: complex, branches) -> OrbitTrace:
    """Orbit obtained by walking backwards from ``base`` along a branch word.

    ``branches[j]`` picks the preimage (in sorted order) at step ``j``. The
    returned trace starts at the deepest point and its forward orbit is the
    stored sequence, which shadows a genuine orbit on repellers where direct
    forward iteration is numerically unstable.
    """
    branches = np.asarray(branches, dtype=int)
    n = len(branches)
    pts = np.empty(n + 1, dtype=complex)
    pts[n] = base
    z = complex(base)
    for j, b in enumerate(branches):
        z = fmap.preimages(z)[b % fmap.degree]
        pts[n - 1 - j] = z
    logs = fmap.log_abs_derivative(pts[:-1])
    return OrbitTrace(complex(pts[0]), np.asarray(logs, dtype=float), points=pts)


def random_backward_orbit(fmap: RationalMap, base: complex, n: int, rng: np.random.Generator) -> OrbitTrace:
    return backward_orbit(fmap, base, rng.integers(0, fmap.degree, size=n))


@dataclass(frozen=True)
class HyperbolicTimeSet:
    sigma: float
    times: np.ndarray
    density: float


def hyperbolic_times(trace: OrbitTrace, sigma: float, tol: float = 1e-9) -> HyperbolicTimeSet:
    """All n with sum_{j=n-k}^{n-1} lambda_j >= k*sigma for every 1 <= k <= n.

    With S_n the prefix sums of (lambda_j - sigma) this is S_n >= max_{i<n} S_i,
    so the scan is linear.
    """
    if not sigma > 0:
        raise PreconditionError("sigma must be positive")
    vals = trace.expand().log_derivs
    n = len(vals)
    if n == 0:
        return HyperbolicTimeSet(sigma, np.zeros(0, dtype=int), 0.0)
    with np.errstate(invalid="ignore"):
        s = np.concatenate([[0.0], np.cumsum(vals - sigma)])
    prev_max = np.maximum.accumulate(s[:-1])
    ok = s[1:] >= prev_max - tol
    times = np.nonzero(ok)[0] + 1
    return HyperbolicTimeSet(sigma, times, len(times) / n)


def pliss_bound(trace: OrbitTrace, sigma: float) -> float:
    """Guaranteed density (m - sigma)/(M - sigma) of hyperbolic times when m > sigma."""
    vals = trace.expand().log_derivs
    m = float(np.mean(vals))
    big = float(np.max(vals))
    if not m > sigma:
        return 0.0
    return (m - sigma) / (big - sigma)


# -- pullbacks -------------------------------------------------------------------


def pull_back(fmap: RationalMap, targets, anchor_target: complex, anchor_pre: complex,
              substeps: int = 12, newton_steps: int = 4):
    """Continue the inverse branch sending ``anchor_target`` to ``anchor_pre``.

    Each target is reached along the straight segment from the anchor; the
    preimage is tracked with Newton corrections. Returns ``(points, ok)``.
    """
    targets = np.asarray(targets, dtype=complex)
    anchor_target = np.asarray(anchor_target, dtype=complex)
    w = np.broadcast_to(np.asarray(anchor_pre, dtype=complex), targets.shape).copy()
    with np.errstate(all="ignore"):
        for t in np.linspace(0.0, 1.0, substeps + 1)[1:]:
            tgt = anchor_target + t * (targets - anchor_target)
            for _ in range(newton_steps):
                w = w - (fmap(w) - tgt) / fmap.derivative(w)
        resid = np.abs(fmap(w) - targets)
    ok = np.isfinite(w) & (resid <= 1e-8 * (1 + np.abs(targets)))
    return w, ok


def circle_samples(center: complex, radius: float, count: int = 32) -> np.ndarray:
    ang = 2 * np.pi * np.arange(count) / count
    return center + radius * np.exp(1j * ang)


def hull_contains(samples: np.ndarray, center: complex, points: np.ndarray, inflate: float = 1.1) -> np.ndarray:
    """Whether each point lies in the inflated disk hull of a pulled-back region."""
    hub = np.mean(samples)
    rad = np.max(np.abs(np.append(samples, center) - hub)) * inflate
    pts = np.asarray(points, dtype=complex)
    return np.isfinite(pts) & (np.abs(pts - hub) <= rad)


@dataclass(frozen=True)
class DistortionReport:
    branch: int
    center: complex
    radius: float
    distortion: float


def conical_probe(fmap: RationalMap, x: complex, r: float, n_max: int, K_cap: float,
                  samples: int = 32):
    """Times n <= n_max at which B(f^n x, r) pulls back along the orbit with bounded distortion.

    Returns a list of ``(n, DistortionReport)``; failures (critical point in the
    pulled-back hull, solver breakdown, distortion above ``K_cap``) are omitted.
    The report's disk is the hull of the pullback around ``x``.
    """
    if r <= 0 or K_cap <= 1:
        raise PreconditionError("conical_probe needs r > 0 and K_cap > 1")
    if n_max < 1:
        return []
    crit = critical_points(fmap)
    crit = crit[np.isfinite(crit)]
    orbit = np.empty(n_max + 1, dtype=complex)
    orbit[0] = x
    for k in range(n_max):
        orbit[k + 1] = fmap(orbit[k])
    out = []
    for n in range(1, n_max + 1):
        if crit.size and np.min(np.abs(orbit[:n, None] - crit[None, :])) < POINT_TOL:
            continue
        region = np.append(circle_samples(orbit[n], r, samples), orbit[n])
        failed = False
        for j in range(n, 0, -1):
            region, ok = pull_back(fmap, region, orbit[j], orbit[j - 1])
            if not np.all(ok) or (crit.size and np.any(hull_contains(region[:-1], region[-1], crit))):
                failed = True
                break
        if failed:
            continue
        logs = np.zeros(region.shape)
        z = region.copy()
        for _ in range(n):
            logs += fmap.log_abs_derivative(z)
            z = fmap(z)
        dist = float(np.exp(np.max(logs) - np.min(logs)))
        if dist <= K_cap:
            hub = complex(np.mean(region[:-1]))
            rad = float(np.max(np.abs(region - hub)))
            out.append((n, DistortionReport(n, hub, rad, dist)))
    return out


@dataclass(frozen=True)
class PullbackCensus:
    y: complex
    n: int
    R: float
    pairs: tuple = field(default=())

    @property
    def N(self) -> int:
        return len(self.pairs)

    @property
    def growth_exponent(self) -> float:
        return float(np.log(self.N) / self.n) if self.n > 0 else 0.0


def check_census_precondition(fmap: RationalMap, y: complex, n: int, tol: float = POINT_TOL):
    crit = critical_points(fmap)
    z = crit
    for i in range(1, n + 1):
        z = fmap(z)
        if np.any(chordal_distance(z, y) < tol):
            raise PreconditionError(f"base point lies on f^{i}(Crit)", index=i)


def _dedupe_pairs(points: np.ndarray, levels: np.ndarray) -> tuple:
    pairs = []
    for k in np.unique(levels):
        kept = []
        for p in points[levels == k]:
            if not kept or np.min(chordal_distance(np.array(kept), p)) >= POINT_TOL:
                kept.append(complex(p))
        pairs.extend((p, int(k)) for p in kept)
    pairs.sort(key=lambda t: (t[1], t[0].real, t[0].imag))
    return tuple(pairs)


def pullback_census(fmap: RationalMap, y: complex, n: int, R: float, samples: int = 32) -> PullbackCensus:
    """N(y, n, R): distinct (y_k, k) over all backward branches of length n.

    Along each branch the region B(y, R) is pulled back level by level; when the
    pulled-back region contains a critical point at level k the construction
    restarts from B(y_k, R). ``k`` is the last such level (0 when none occurs).
    Levels are processed breadth-first with all branches vectorised.
    """
    if R <= 0:
        raise PreconditionError("R must be positive")
    check_census_precondition(fmap, y, n)
    if n == 0:
        return PullbackCensus(complex(y), 0, R, ((complex(y), 0),))
    crit = critical_points(fmap)
    crit = crit[np.isfinite(crit)]
    d = fmap.degree
    centers = np.array([complex(y)])
    regions = circle_samples(complex(y), R, samples)[None, :]
    last_k = np.zeros(1, dtype=int)
    last_pt = centers.copy()
    for level in range(1, n + 1):
        pre = fmap.preimages(centers)  # (nodes, d)
        m = centers.size
        child_centers = pre.reshape(-1)
        parent = np.repeat(np.arange(m), d)
        tgt_regions = regions[parent]
        anchors = centers[parent]
        new_regions, _ = pull_back(fmap, tgt_regions, anchors[:, None], child_centers[:, None])
        new_k = last_k[parent].copy()
        new_pt = last_pt[parent].copy()
        if crit.size:
            hub = np.mean(new_regions, axis=1)
            rad = 1.1 * np.max(np.abs(np.concatenate([new_regions, child_centers[:, None]], axis=1)
                                      - hub[:, None]), axis=1)
            hit = np.any(np.abs(crit[None, :] - hub[:, None]) <= rad[:, None], axis=1)
            hit |= ~np.all(np.isfinite(new_regions), axis=1)
        else:
            hit = np.zeros(child_centers.size, dtype=bool)
        if np.any(hit):
            new_k[hit] = level
            new_pt[hit] = child_centers[hit]
            new_regions[hit] = child_centers[hit, None] + R * np.exp(
                2j * np.pi * np.arange(samples) / samples
            )[None, :]
        centers, regions, last_k, last_pt = child_centers, new_regions, new_k, new_pt
    return PullbackCensus(complex(y), n, R, _dedupe_pairs(last_pt, last_k))


def census_by_enumeration(fmap: RationalMap, y: complex, n: int, R: float, samples: int = 32) -> PullbackCensus:
    """Reference census: walks every branch word depth-first, one region at a time.

    Exponential in ``n``; meant as an oracle for :func:`pullback_census`.
    """
    check_census_precondition(fmap, y, n)
    crit = critical_points(fmap)
    crit = crit[np.isfinite(crit)]
    found_pts, found_k = [], []

    def walk(center, region, level, k, pt):
        if level == n:
            found_pts.append(pt)
            found_k.append(k)
            return
        for child in fmap.preimages(center):
            new, _ = pull_back(fmap, region, center, child)
            if not np.all(np.isfinite(new)) or (crit.size and np.any(hull_contains(new, child, crit))):
                walk(child, circle_samples(child, R, samples), level + 1, level + 1, child)
            else:
                walk(child, new, level + 1, k, pt)

    walk(complex(y), circle_samples(complex(y), R, samples), 0, 0, complex(y))
    return PullbackCensus(complex(y), n, R, _dedupe_pairs(np.array(found_pts), np.array(found_k)))
