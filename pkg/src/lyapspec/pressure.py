"""Pressure of the potentials -d log|f'|, Legendre spectra and duality checks.

Two estimators are provided: sums over the preimage tree of a base point and
sums over repelling periodic points. Both produce a :class:`PressureCurve`,
which the Legendre machinery turns into a :class:`SpectrumCurve`.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import logsumexp

from .errors import NumericDegradation, PreconditionError
from .maps import (
    POINT_TOL,
    RationalMap,
    chordal_distance,
    critical_points,
    critical_values,
    fixed_points,
    preimages_with_flags,
)

log = logging.getLogger(__name__)

REPELLING_MARGIN = 1e-6
DROPPED_MASS_TOL = 1e-6
CONVEXITY_TOL = 1e-6


# -- preimage trees ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PreimageTree:
    """Full backward tree of ``root``; level k holds degree**k nodes.

    ``path_sums[k][i]`` is log|(f^k)'| at node i of level k; ``flags`` marks
    nodes whose solve was ill-conditioned (or that descend from such nodes).
    """

    root: complex
    points: tuple
    parents: tuple
    log_derivs: tuple
    path_sums: tuple
    flags: tuple

    @property
    def depth(self) -> int:
        return len(self.points) - 1

    def level(self, k: int) -> np.ndarray:
        return self.points[k]


def preimage_tree(fmap: RationalMap, z: complex, depth: int, precision: str = "double") -> PreimageTree:
    """Build f^{-k}(z) for k <= depth with log|f'| at every node."""
    if depth < 0:
        raise PreconditionError("depth must be non-negative")
    pts = [np.array([complex(z)])]
    parents = [np.array([-1])]
    logd = [np.zeros(1)]
    sums = [np.zeros(1)]
    flags = [np.zeros(1, dtype=bool)]
    for _ in range(depth):
        roots, fl = preimages_with_flags(fmap, pts[-1], precision=precision)
        m = pts[-1].size
        child = roots.reshape(-1)
        par = np.repeat(np.arange(m), fmap.degree)
        ld = np.asarray(fmap.log_abs_derivative(child), dtype=float)
        pts.append(child)
        parents.append(par)
        logd.append(ld)
        sums.append(sums[-1][par] + ld)
        flags.append(fl.reshape(-1) | flags[-1][par] | ~np.isfinite(ld))
    return PreimageTree(complex(z), tuple(pts), tuple(parents), tuple(logd), tuple(sums), tuple(flags))


def preimages(fmap: RationalMap, z: complex, depth: int) -> PreimageTree:
    if depth < 1:
        raise PreconditionError("depth must be at least 1")
    return preimage_tree(fmap, z, depth)


@dataclass(frozen=True)
class TreeSum:
    value: float
    dropped_mass: float

    @property
    def degraded(self) -> bool:
        return self.dropped_mass > DROPPED_MASS_TOL


def tree_log_sum(tree: PreimageTree, d: float, n: int) -> TreeSum:
    """log sum over level n of |(f^n)'|^{-d}, flagged nodes dropped."""
    s = tree.path_sums[n]
    bad = tree.flags[n]
    terms = -d * s
    if np.all(bad):
        raise NumericDegradation(f"every node of level {n} is flagged")
    total = logsumexp(terms[np.isfinite(terms)]) if np.any(np.isfinite(terms)) else -np.inf
    kept = logsumexp(terms[~bad])
    dropped = 0.0 if not np.any(bad) else float(-np.expm1(kept - total))
    return TreeSum(float(kept), max(dropped, 0.0))


def tree_pressure(fmap: RationalMap, d: float, x: Optional[complex] = None, n: int = 10,
                  tree: Optional[PreimageTree] = None) -> float:
    """(1/n) log sum_{y in f^{-n}(x)} |(f^n)'(y)|^{-d}."""
    if n < 1:
        raise PreconditionError("n must be at least 1")
    if tree is None:
        tree = preimage_tree(fmap, default_base_point(fmap) if x is None else x, n)
    res = tree_log_sum(tree, d, n)
    if res.degraded:
        warnings.warn(f"tree pressure dropped mass {res.dropped_mass:.3g}", RuntimeWarning)
    return res.value / n


# -- base point and method selection ---------------------------------------------------


def postcritical_orbit(fmap: RationalMap, steps: int = 30) -> np.ndarray:
    z = critical_points(fmap)
    out = []
    for _ in range(steps):
        z = fmap(z)
        out.append(z)
    return np.concatenate(out)


def default_base_point(fmap: RationalMap) -> complex:
    """Repelling fixed point away from the postcritical set (largest multiplier first)."""
    fps = fixed_points(fmap)
    fps = fps[np.isfinite(fps)]
    mult = np.abs(fmap.derivative(fps))
    post = postcritical_orbit(fmap)
    for i in np.argsort(-mult):
        p = fps[i]
        if mult[i] > 1 + REPELLING_MARGIN and np.min(chordal_distance(post, p)) > 1e-6:
            return complex(p)
    # fall back to a preimage of a repelling fixed point
    for i in np.argsort(-mult):
        if mult[i] > 1 + REPELLING_MARGIN:
            for q in fmap.preimages(fps[i]):
                if np.min(chordal_distance(post, q)) > 1e-6:
                    return complex(q)
    raise PreconditionError("no repelling fixed point outside the postcritical set")


def critical_point_in_julia(fmap: RationalMap, steps: int = 400, max_period: int = 30) -> bool:
    """Heuristic: some critical orbit is bounded and not attracted to a cycle."""
    for c in critical_points(fmap):
        z = complex(c)
        escaped = False
        for _ in range(steps):
            z = fmap(z)
            if fmap.is_polynomial and not abs(z) < 1e8:
                escaped = True
                break
        if escaped:
            continue
        orbit = [z]
        for _ in range(max_period):
            orbit.append(fmap(orbit[-1]))
        orbit = np.array(orbit)
        dist = chordal_distance(orbit[1:], orbit[0])
        hits = np.nonzero(dist < 1e-6)[0]
        if hits.size:
            p = int(hits[0]) + 1
            logm = float(np.sum(fmap.log_abs_derivative(orbit[:p], metric="spherical")))
            if logm < 0:
                continue
        return True
    return False


# -- periodic points ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PeriodicPoints:
    """Repelling points of Fix(f^n) with log|(f^n)'|."""

    period: int
    points: np.ndarray
    log_multipliers: np.ndarray
    excluded: int
    expected: int

    @property
    def count(self) -> int:
        return len(self.points)


def _shoot(fmap: RationalMap, z: np.ndarray, iters: int = 40) -> tuple[np.ndarray, np.ndarray]:
    """Newton for the cyclic system f(z_i) = z_{i+1 mod n}; z has shape (seeds, n)."""
    n = z.shape[1]
    z = z.copy()
    with np.errstate(all="ignore"):
        for _ in range(iters):
            fz = fmap(z)
            F = fz - np.roll(z, -1, axis=1)
            dz = fmap.derivative(z)
            # delta_0 * (1 - Lambda) = sum_i (prod_{j>i} f'_j) F_i, divided through by Lambda
            cum = np.cumprod(dz, axis=1)
            c_over = np.sum(F / cum, axis=1)
            lam_inv = 1 / cum[:, -1]
            delta = np.empty_like(z)
            delta[:, 0] = c_over / (lam_inv - 1)
            nxt = delta[:, 0]
            for i in range(n - 1, -1, -1):
                cur = (nxt - F[:, i]) / dz[:, i]
                if i > 0:
                    delta[:, i] = cur
                nxt = cur
            z = z - (-delta)
            z = np.where(np.isfinite(z), z, np.nan)
            if np.nanmax(np.abs(F)) < 1e-14:
                break
        resid = np.max(np.abs(fmap(z) - np.roll(z, -1, axis=1)), axis=1)
    return z, resid


PERIODIC_MERGE_TOL = 1e-12


@lru_cache(maxsize=64)
def periodic_points(fmap: RationalMap, n: int, method: str = "shooting") -> PeriodicPoints:
    """Repelling periodic points of period dividing n.

    ``shooting`` seeds multiple-shooting Newton with the leaves of the preimage
    tree of a base point, so every point comes with its whole orbit solved
    simultaneously; ``direct`` takes roots of f^n(z) - z (small n only).
    """
    if n < 1:
        raise PreconditionError("period must be at least 1")
    expected = fmap.degree**n + 1
    if method == "direct":
        pts = _direct_fixed_points(fmap, n)
        pts = pts[np.isfinite(pts)]
        orbit = np.empty((pts.size, n), dtype=complex)
        if pts.size:
            orbit[:, 0] = pts
            for i in range(1, n):
                orbit[:, i] = fmap(orbit[:, i - 1])
    elif method == "shooting":
        orbit = _shooting_orbits(fmap, n)
        pts = orbit[:, 0]
    else:
        raise ValueError(f"unknown periodic-point method {method!r}")
    logm = np.sum(fmap.log_abs_derivative(orbit), axis=1) if pts.size else np.zeros(0)
    rep = logm > np.log1p(REPELLING_MARGIN)
    return PeriodicPoints(n, pts[rep], logm[rep], int(np.sum(~rep)), expected)


def _dedupe_index(points: np.ndarray, tol: float) -> np.ndarray:
    """Indices of a maximal subset of finite points pairwise further apart than tol*(1+|p|)."""
    idx = np.nonzero(np.isfinite(points))[0]
    if idx.size == 0:
        return idx
    pts = points[idx]
    tree = cKDTree(np.column_stack([pts.real, pts.imag]))
    keep = np.ones(pts.size, dtype=bool)
    for i, j in sorted(tree.query_pairs(tol * (1 + np.max(np.abs(pts))))):
        if keep[i] and keep[j]:
            keep[j] = False
    out = idx[keep]
    return out[np.lexsort((points[out].imag, points[out].real))]


def _dedupe(points: np.ndarray, tol: float = POINT_TOL) -> np.ndarray:
    return points[_dedupe_index(points, tol)]


def _leaf_paths(tree: PreimageTree, n: int) -> np.ndarray:
    """Rows (leaf, f(leaf), ..., f^{n-1}(leaf)) read off the tree."""
    leaves = tree.points[n].size
    seeds = np.empty((leaves, n), dtype=complex)
    idx = np.arange(leaves)
    for lvl in range(n, 0, -1):
        seeds[:, n - lvl] = tree.points[lvl][idx]
        idx = tree.parents[lvl][idx]
    return seeds


def _shooting_orbits(fmap: RationalMap, n: int) -> np.ndarray:
    base = default_base_point(fmap)
    # a second base (another preimage of the first) catches orbits whose seeds collapse
    other = [q for q in fmap.preimages(base) if abs(q - base) > 1e-6]
    found = np.zeros((0, n), dtype=complex)
    for b in [base] + other[:1]:
        z, resid = _shoot(fmap, _leaf_paths(preimage_tree(fmap, b, n), n))
        found = np.concatenate([found, z[resid < 1e-9]])
        keep = _dedupe_index(found[:, 0], PERIODIC_MERGE_TOL)
        found = found[keep]
        if found.shape[0] >= fmap.degree**n:
            break
    if found.shape[0] < fmap.degree**n:
        log.debug("period %d: %d of %d points found", n, found.shape[0], fmap.degree**n)
    return found


def _direct_fixed_points(fmap: RationalMap, n: int) -> np.ndarray:
    from numpy.polynomial import polynomial as npoly

    P, Q = np.array(fmap.num), np.array(fmap.den)
    num, den = P.copy(), Q.copy()
    for _ in range(n - 1):
        # compose: (num/den) -> f(num/den) = P(num/den)/Q(num/den) homogenised
        d = fmap.degree
        pn = np.zeros(1, dtype=complex)
        qn = np.zeros(1, dtype=complex)
        for j in range(d + 1):
            term = npoly.polymul(npoly.polypow(num, j), npoly.polypow(den, d - j))
            if j < len(P):
                pn = npoly.polyadd(pn, P[j] * term)
            if j < len(Q):
                qn = npoly.polyadd(qn, Q[j] * term)
        num, den = pn, qn
    g = npoly.polysub(num, npoly.polymul([0, 1], den))
    g = np.trim_zeros(np.atleast_1d(g), "b")
    roots = npoly.polyroots(g).astype(complex)
    # polish on f^n(z) - z directly
    with np.errstate(all="ignore"):
        for _ in range(5):
            z, dz = roots.copy(), np.ones_like(roots)
            for _ in range(n):
                dz = dz * fmap.derivative(z)
                z = fmap(z)
            step = (z - roots) / (dz - 1)
            roots = np.where(np.isfinite(step), roots - step, roots)
    return _dedupe(roots)


def periodic_pressure(fmap: RationalMap, d: float, n: int) -> float:
    """(1/n) log sum over repelling p in Fix(f^n) of |(f^n)'(p)|^{-d}."""
    pp = periodic_points(fmap, n)
    if pp.count == 0:
        raise NumericDegradation(f"no repelling periodic points of period {n}")
    return float(logsumexp(-d * pp.log_multipliers) / n)


# -- curves -------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PressureCurve:
    d: np.ndarray
    P: np.ndarray
    method: str
    depth: int
    errors: np.ndarray
    warnings: tuple = ()
    evaluator: Optional[Callable[[float], float]] = field(default=None, repr=False)

    def __len__(self):
        return len(self.d)

    def __call__(self, d: float) -> float:
        if self.evaluator is not None:
            return float(self.evaluator(d))
        return float(np.interp(d, self.d, self.P))

    @property
    def degraded(self) -> bool:
        return bool(self.warnings)

    def slopes(self) -> np.ndarray:
        return np.diff(self.P) / np.diff(self.d)

    def convexity_defect(self) -> float:
        """Largest decrease between consecutive chord slopes (0 for convex data)."""
        if len(self.d) < 3:
            return 0.0
        return float(max(0.0, -np.min(np.diff(self.slopes()))))


def _check_grid(d_grid) -> np.ndarray:
    d = np.asarray(d_grid, dtype=float).ravel()
    if d.size and np.any(np.diff(d) <= 0):
        raise PreconditionError("d grid must be strictly increasing")
    return d


def _finish_curve(d, P, method, depth, err, evaluator, extra_warnings=()) -> PressureCurve:
    msgs = list(extra_warnings)
    curve = PressureCurve(d, P, method, depth, err, (), evaluator)
    scale = max(1.0, float(np.max(np.abs(P)))) if P.size else 1.0
    defect = curve.convexity_defect()
    if defect > CONVEXITY_TOL * scale:
        msgs.append(f"convexity violated by {defect:.3g}")
    if msgs:
        for m in msgs:
            warnings.warn(m, RuntimeWarning)
    return PressureCurve(d, P, method, depth, err, tuple(msgs), evaluator)


def pressure_curve(fmap: RationalMap, d_grid, method: str = "auto", depth: int = 10,
                   base: Optional[complex] = None, extrapolate: bool = False,
                   precision: str = "double") -> PressureCurve:
    """Sample d -> P(-d log|f'|) on ``d_grid``.

    Errors are estimated from consecutive depths: ``|P_n - P_{n-1}|`` for
    periodic sums and ``(n-1)|P_n - P_{n-1}|`` for tree sums, whose bias
    decays like c/n. With ``extrapolate`` the tree estimate is replaced by
    the level ratio log(Z_n / Z_{n-1}), which cancels the c/n term.
    """
    d = _check_grid(d_grid)
    if method == "auto":
        method = "periodic" if critical_point_in_julia(fmap) else "tree"
    if d.size == 0:
        return PressureCurve(d, np.zeros(0), method, depth, np.zeros(0))
    if depth < 2:
        raise PreconditionError("depth must be at least 2 to estimate errors")
    msgs = []
    if method == "tree":
        tree = preimage_tree(fmap, default_base_point(fmap) if base is None else base, depth, precision)
        P = np.empty(d.size)
        Pm = np.empty(d.size)
        dropped = 0.0
        if extrapolate and depth < 3:
            raise PreconditionError("extrapolated tree pressure needs depth >= 3")

        def evaluator(x, _t=tree, _n=depth):
            if extrapolate:
                return tree_log_sum(_t, x, _n).value - tree_log_sum(_t, x, _n - 1).value
            return tree_log_sum(_t, x, _n).value / _n

        for i, di in enumerate(d):
            zs = [tree_log_sum(tree, di, k) for k in (depth - 2, depth - 1, depth)]
            if extrapolate:
                P[i] = zs[2].value - zs[1].value
                Pm[i] = zs[1].value - zs[0].value
            else:
                P[i] = zs[2].value / depth
                Pm[i] = zs[1].value / (depth - 1)
            dropped = max(dropped, zs[2].dropped_mass)
        if dropped > DROPPED_MASS_TOL:
            msgs.append(f"dropped mass {dropped:.3g} exceeds {DROPPED_MASS_TOL:g}")
        err = np.abs(P - Pm) if extrapolate else (depth - 1) * np.abs(P - Pm)
        method = "tree"

    elif method == "periodic":
        pp = periodic_points(fmap, depth)
        ppm = periodic_points(fmap, depth - 1)
        P = np.array([logsumexp(-di * pp.log_multipliers) / depth for di in d])
        Pm = np.array([logsumexp(-di * ppm.log_multipliers) / (depth - 1) for di in d])
        err = np.abs(P - Pm)
        if pp.count < 0.9 * (fmap.degree**depth):
            msgs.append(f"only {pp.count} repelling periodic points of period {depth}")

        def evaluator(x, _lm=pp.log_multipliers, _n=depth):
            return float(logsumexp(-x * _lm) / _n)

    else:
        raise PreconditionError(f"method {method!r} not available for maps (gds curves come from gds)")
    return _finish_curve(d, P, method, depth, err, evaluator, msgs)


def curve_from_function(func: Callable[[float], float], d_grid, method: str = "gds", depth: int = 1,
                        errors=None) -> PressureCurve:
    d = _check_grid(d_grid)
    P = np.array([func(x) for x in d], dtype=float)
    err = np.zeros(d.size) if errors is None else np.asarray(errors, dtype=float)
    return _finish_curve(d, P, method, depth, err, func)


# -- Legendre transform -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpectrumCurve:
    alpha: np.ndarray
    F: np.ndarray
    alpha_minus: float
    alpha_plus: float
    d0: float
    alpha_star: float
    unbracketed: np.ndarray
    warnings: tuple = ()

    def finite(self) -> tuple[np.ndarray, np.ndarray]:
        m = np.isfinite(self.F)
        return self.alpha[m], self.F[m]

    @property
    def max_F(self) -> float:
        _, f = self.finite()
        return float(np.max(f)) if f.size else -np.inf


def alpha_range(curve: PressureCurve) -> tuple[float, float]:
    """(alpha-, alpha+) as minus the last and first chord slopes."""
    s = curve.slopes()
    if s.size == 0:
        raise PreconditionError("need at least two grid points for the slope range")
    return float(-np.max(s)), float(-np.min(s))


def bowen_root(curve: PressureCurve, tol: float = 1e-8) -> float:
    """inf{d : P(d) = 0} by bisection on the first sign change (nan when P does not change sign)."""
    P = curve.P
    idx = np.nonzero((P[:-1] > 0) & (P[1:] <= 0))[0]
    if idx.size == 0:
        exact = np.nonzero(P == 0)[0]
        return float(curve.d[exact[0]]) if exact.size else float("nan")
    i = int(idx[0])
    lo, hi = float(curve.d[i]), float(curve.d[i + 1])
    if P[i + 1] == 0:
        return hi
    if curve.evaluator is None:
        return lo + (hi - lo) * P[i] / (P[i] - P[i + 1])
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if curve(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _derivative(curve: PressureCurve, d: float, h: float = 1e-4) -> tuple[float, float]:
    """(P'(d), error) by central differences; one-sided at the grid ends."""
    lo, hi = curve.d[0], curve.d[-1]
    if curve.evaluator is not None:
        if lo + h <= d <= hi - h:
            return (curve(d + h) - curve(d - h)) / (2 * h), h
        if d < lo + h:
            return (curve(d + h) - curve(d)) / h, 10 * h
        return (curve(d) - curve(d - h)) / h, 10 * h
    j = int(np.clip(np.searchsorted(curve.d, d), 1, len(curve.d) - 1))
    if 1 <= j < len(curve.d) - 1 and curve.d[j] == d:
        return (curve.P[j + 1] - curve.P[j - 1]) / (curve.d[j + 1] - curve.d[j - 1]), float(
            curve.d[j + 1] - curve.d[j - 1]
        )
    s = (curve.P[j] - curve.P[j - 1]) / (curve.d[j] - curve.d[j - 1])
    return float(s), float(curve.d[j] - curve.d[j - 1]) * 2


def legendre_spectrum(curve: PressureCurve, alpha_grid, tol: float = 1e-9) -> SpectrumCurve:
    """F(alpha) = (1/alpha) inf_d (P(d) + d alpha) over the sampled curve.

    Beyond the grid P is extended linearly with the extreme chord slopes, so
    the infimum is finite exactly for alpha in [alpha-, alpha+]; elsewhere
    F = -inf. ``unbracketed`` marks interior alphas whose minimiser sits on
    the grid boundary.
    """
    alpha = np.asarray(alpha_grid, dtype=float).ravel()
    if len(curve) < 2:
        nan = float("nan")
        return SpectrumCurve(alpha, np.full(alpha.shape, -np.inf), nan, nan, nan, nan,
                             np.zeros(alpha.shape, dtype=bool), ("curve has fewer than two points",))
    msgs = []
    if curve.convexity_defect() > CONVEXITY_TOL * max(1.0, float(np.max(np.abs(curve.P)))):
        msgs.append("pressure curve is not convex within tolerance")
    a_minus, a_plus = alpha_range(curve)
    d0 = bowen_root(curve)
    if np.isfinite(d0):
        slope, _ = _derivative(curve, d0)
        a_star = -slope
    else:
        a_star = float("nan")
    F = np.full(alpha.shape, -np.inf)
    unbr = np.zeros(alpha.shape, dtype=bool)
    span = tol * max(1.0, abs(a_plus))
    last = len(curve.d) - 1
    for i, a in enumerate(alpha):
        if a <= 0:
            if a == 0 and a_minus <= span and np.isfinite(d0):
                F[i] = d0
            continue
        if a < a_minus - span or a > a_plus + span:
            continue
        vals = curve.P + curve.d * a
        j = int(np.argmin(vals))
        F[i] = vals[j] / a
        if (j == 0 and a < a_plus - span) or (j == last and a > a_minus + span):
            unbr[i] = True
    if np.any(unbr):
        msgs.append(f"{int(np.sum(unbr))} alpha values not bracketed by the d grid")
    return SpectrumCurve(alpha, F, a_minus, a_plus, d0, a_star, unbr, tuple(msgs))


@dataclass(frozen=True)
class EquilibriumStats:
    d: float
    alpha: float
    h: float
    error: float


def equilibrium_stats(curve: PressureCurve, d: float) -> EquilibriumStats:
    slope, err = _derivative(curve, d)
    alpha = -slope
    P = curve(d)
    return EquilibriumStats(float(d), float(alpha), float(P + d * alpha), float(err))


@dataclass(frozen=True)
class DualityReport:
    residual: float
    recovery_residual: float
    flagged: bool
    points: int


def duality_check(curve: PressureCurve, spectrum: SpectrumCurve, tol: float = 1e-4) -> DualityReport:
    """Compare alpha F(alpha) with P(d) + d alpha(d), and recover P from alpha F by a second transform."""
    a_fin, f_fin = spectrum.finite()
    if a_fin.size < 2 or len(curve.d) < 3:
        return DualityReport(float("nan"), float("nan"), True, 0)
    aF = a_fin * f_fin
    res = 0.0
    rec = 0.0
    used = 0
    for d in curve.d[1:-1]:
        st = equilibrium_stats(curve, d)
        if not a_fin[0] < st.alpha < a_fin[-1]:
            continue
        used += 1
        lhs = float(np.interp(st.alpha, a_fin, aF))
        res = max(res, abs(lhs - (curve(d) + d * st.alpha)))
        recovered = float(np.max(aF - d * a_fin))
        rec = max(rec, abs(recovered - curve(d)))
    if used == 0:
        return DualityReport(float("inf"), float("inf"), True, 0)
    return DualityReport(res, rec, bool(res > tol), used)


def spectrum_concavity_defect(spectrum: SpectrumCurve) -> float:
    """Largest increase of consecutive chord slopes of alpha -> alpha F(alpha) (0 if concave)."""
    a, f = spectrum.finite()
    if a.size < 3:
        return 0.0
    s = np.diff(a * f) / np.diff(a)
    return float(max(0.0, np.max(np.diff(s))))
