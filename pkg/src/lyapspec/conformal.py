"""Atomic conformal measures on preimage trees.

The measure with Jacobian exp(P - phi_d) is approximated by atoms at
f^{-n}(x) with weights proportional to exp(-nP) |(f^n)'(y)|^{-d}. P is an
input so that residuals measure conformality alone.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from matplotlib.path import Path
from scipy.spatial import cKDTree
from scipy.special import logsumexp

from .errors import PreconditionError
from .gds import Disk
from .maps import RationalMap, chordal_distance, detect_exceptional
from .orbits import circle_samples, pull_back
from .pressure import critical_point_in_julia, preimage_tree


@dataclass(frozen=True, eq=False)
class ConformalEstimate:
    d: float
    P: float
    x: complex
    n: int
    atoms: np.ndarray
    weights: np.ndarray
    log_Z: float
    flags: np.ndarray

    @property
    def Z(self) -> float:
        return float(np.exp(self.log_Z))

    def mass(self, mask) -> float:
        return float(np.sum(self.weights[mask]))

    def mass_in_disk(self, disk: Disk) -> float:
        return self.mass(disk.contains(self.atoms))

    def julia_distance(self, reference) -> float:
        """Largest distance from an atom to the nearest point of a reference J sample."""
        ref = np.asarray(reference, dtype=complex)
        tree = cKDTree(np.column_stack([ref.real, ref.imag]))
        dist, _ = tree.query(np.column_stack([self.atoms.real, self.atoms.imag]))
        return float(np.max(dist))

    def push_forward(self, fmap: RationalMap) -> "ConformalEstimate":
        """Image measure on level n-1: each parent collects its children's weights."""
        if self.n == 0:
            raise PreconditionError("cannot push a depth-0 estimate forward")
        tree = self._tree
        parents = tree.parents[self.n]
        w = np.bincount(parents, weights=self.weights, minlength=tree.points[self.n - 1].size)
        return ConformalEstimate(self.d, self.P, self.x, self.n - 1, tree.points[self.n - 1], w,
                                 float("nan"), tree.flags[self.n - 1])


def _point_in_julia(fmap: RationalMap, z: complex, steps: int = 200) -> bool:
    """Heuristic: the orbit of z is bounded and not attracted to a cycle."""
    w = complex(z)
    for _ in range(steps):
        w = fmap(w)
        if fmap.is_polynomial and not abs(w) < 1e8:
            return False
    orbit = [w]
    for _ in range(30):
        orbit.append(fmap(orbit[-1]))
    orbit = np.array(orbit)
    hits = np.nonzero(chordal_distance(orbit[1:], orbit[0]) < 1e-6)[0]
    if hits.size:
        p = int(hits[0]) + 1
        return float(np.sum(fmap.log_abs_derivative(orbit[:p], metric="spherical"))) >= 0
    return True


def negative_d_allowed(fmap: RationalMap) -> tuple[bool, str]:
    rep = detect_exceptional(fmap)
    if not rep.is_exceptional:
        return True, "map is not exceptional"
    in_j = [s for s in rep.sigma if np.isfinite(s) and _point_in_julia(fmap, s)]
    if not in_j:
        return True, "exceptional set misses the Julia set"
    return False, f"exceptional set {rep.sigma} meets the Julia set"


def estimate_conformal(fmap: RationalMap, d: float, x: complex, n: int, P: float,
                       check_exceptional: bool = True) -> ConformalEstimate:
    """Atoms on f^{-n}(x) with weights proportional to exp(-nP) |(f^n)'|^{-d}, normalised."""
    if n < 0:
        raise PreconditionError("depth must be non-negative")
    if d < 0 and check_exceptional:
        ok, why = negative_d_allowed(fmap)
        if not ok:
            raise PreconditionError(f"refusing d < 0: {why}")
    tree = preimage_tree(fmap, x, n)
    logw = -n * P - d * tree.path_sums[n]
    log_Z = float(logsumexp(logw))
    w = np.exp(logw - log_Z)
    est = ConformalEstimate(float(d), float(P), complex(x), n, tree.points[n], w, log_Z, tree.flags[n])
    object.__setattr__(est, "_tree", tree)
    return est


@dataclass(frozen=True)
class JacobianReport:
    residual: float
    per_set: tuple
    skipped: tuple


def jacobian_residual(est: ConformalEstimate, fmap: RationalMap, test_sets: Sequence[Disk]) -> JacobianReport:
    """max over A of |nu(f(A)) - sum_{a in A} exp(P) |f'(a)|^d nu(a)| / nu(A).

    nu(f(A)) counts atoms having some preimage in A. Sets on which f is not
    injective (two atoms with the same image) are skipped.
    """
    if not test_sets:
        return JacobianReport(0.0, (), ())
    pre = fmap.preimages(est.atoms)  # (atoms, degree)
    images = fmap(est.atoms)
    logd = np.asarray(fmap.log_abs_derivative(est.atoms), dtype=float)
    jac = np.exp(est.P + est.d * logd)
    res, skipped = [], []
    for i, A in enumerate(test_sets):
        inside = A.contains(est.atoms)
        if not np.any(inside):
            res.append(0.0)
            continue
        img = images[inside]
        if img.size > 1:
            tree = cKDTree(np.column_stack([img.real, img.imag]))
            if tree.query_pairs(1e-12):
                skipped.append(i)
                continue
        nu_A = float(np.sum(est.weights[inside]))
        nu_fA = float(np.sum(est.weights[np.any(A.contains(pre), axis=1)]))
        pushed = float(np.sum(jac[inside] * est.weights[inside]))
        res.append(abs(nu_fA - pushed) / nu_A)
    return JacobianReport(float(max(res, default=0.0)), tuple(res), tuple(skipped))


def circle_arcs(count: int, n_atoms: int, offset_fraction: float = 0.01) -> list:
    """Disks cutting the unit circle in ``count`` equal arcs, offset so no atom of the
    n_atoms-th roots of unity sits on an arc end."""
    delta = 2 * np.pi / n_atoms
    arc = 2 * np.pi / count
    out = []
    for j in range(count):
        start = j * arc - delta / 2 - offset_fraction * delta
        mid = start + arc / 2
        out.append(Disk(complex(np.exp(1j * mid)), float(2 * np.sin(arc / 4))))
    return out


@dataclass(frozen=True, eq=False)
class PointwiseDimReport:
    bound: float
    n_list: np.ndarray
    raw_ratios: np.ndarray
    normalized_ratios: np.ndarray
    masses: np.ndarray
    diameters: np.ndarray
    flags: np.ndarray

    @property
    def empirical_liminf(self) -> float:
        ok = ~self.flags
        return float(np.min(self.normalized_ratios[ok])) if np.any(ok) else float("nan")

    def within_bound(self, tol: float = 0.05) -> bool:
        return bool(self.empirical_liminf <= self.bound + tol)


def pointwise_dim_bound(fmap: RationalMap, d: float, q: float, P: float, x: complex, delta: float,
                        n_list, estimate: Optional[ConformalEstimate] = None, extra_depth: int = 8,
                        samples: int = 64) -> PointwiseDimReport:
    """Bound P/q + d on the lower pointwise dimension, with the empirical ratios.

    For each n the ball B(f^n x, delta) is pulled back along the orbit of x to
    a polygon U_n. ``raw_ratios`` are log nu(U_n) / log diam U_n;
    ``normalized_ratios`` divide out the ball itself,
    log(nu(U_n)/nu(B)) / log(diam U_n / diam B), which removes the O(1/n)
    offset of the raw ratio.
    """
    n_list = np.asarray(n_list, dtype=int)
    bound = float(P / q + d) if np.isfinite(q) else float(d)
    if n_list.size == 0:
        empty = np.zeros(0)
        return PointwiseDimReport(bound, n_list, empty, empty, empty, empty, np.zeros(0, dtype=bool))
    if estimate is None:
        estimate = estimate_conformal(fmap, d, x, int(n_list.max()) + extra_depth, P)
    atoms = np.column_stack([estimate.atoms.real, estimate.atoms.imag])
    orbit = [complex(x)]
    for _ in range(int(n_list.max())):
        orbit.append(fmap(orbit[-1]))
    raw, norm, masses, diams, flags = [], [], [], [], []
    for n in n_list:
        ball = circle_samples(orbit[n], delta, samples)
        nu_B = float(np.sum(estimate.weights[np.abs(estimate.atoms - orbit[n]) < delta]))
        region = ball
        ok = True
        for j in range(n, 0, -1):
            region, good = pull_back(fmap, region, orbit[j], orbit[j - 1])
            ok &= bool(np.all(good))
        poly = Path(np.column_stack([region.real, region.imag]))
        nu_U = float(np.sum(estimate.weights[poly.contains_points(atoms)]))
        diam = float(np.max(np.abs(region[:, None] - region[None, :])))
        flag = not ok or nu_U <= 0 or nu_B <= 0 or n == 0
        masses.append(nu_U)
        diams.append(diam)
        with np.errstate(divide="ignore", invalid="ignore"):
            raw.append(np.log(nu_U) / np.log(diam) if not flag else np.nan)
            norm.append(np.log(nu_U / nu_B) / np.log(diam / (2 * delta)) if not flag else np.nan)
        flags.append(flag)
    return PointwiseDimReport(bound, n_list, np.array(raw), np.array(norm), np.array(masses),
                              np.array(diams), np.array(flags))
