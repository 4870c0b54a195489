"""Rational maps of the Riemann sphere.

Points of the sphere are plain Python/numpy complex numbers; the point at
infinity is the single value :data:`INFINITY` (any non-finite complex value is
normalised to it). Coefficient lists are in ascending degree order.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import InvalidMapError, NumericDegradation, PreconditionError

INFINITY = complex(math.inf, 0.0)

#: Points with modulus above this are handled in the spherical metric.
PLANAR_BOUND = 1e6

#: Chordal tolerance used when comparing sphere points.
POINT_TOL = 1e-8

RESULTANT_TOL = 1e-12
SOLVER_RESIDUAL_TOL = 1e-9


def is_infinite(z):
    return ~np.isfinite(np.asarray(z, dtype=complex))


def normalize_points(z):
    """Return a complex array with every non-finite entry replaced by INFINITY."""
    z = np.array(z, dtype=complex)
    bad = ~np.isfinite(z)
    if np.any(bad):
        z[bad] = INFINITY
    return z


def chordal_distance(z, w):
    """Chordal distance, scaled so that d(0, inf) = 2."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    z, w = np.broadcast_arrays(z, w)
    zi = ~np.isfinite(z)
    wi = ~np.isfinite(w)
    out = np.zeros(z.shape, dtype=float)
    both = zi & wi
    only_z = zi & ~wi
    only_w = wi & ~zi
    fin = ~zi & ~wi
    with np.errstate(over="ignore", invalid="ignore"):
        zf, wf = z[fin], w[fin]
        out[fin] = 2 * (np.abs(zf - wf) / np.hypot(1, np.abs(zf))) / np.hypot(1, np.abs(wf))
        out[only_z] = 2 / np.hypot(1, np.abs(w[only_z]))
        out[only_w] = 2 / np.hypot(1, np.abs(z[only_w]))
    out[both] = 0.0
    return out


def unique_points(points, tol=POINT_TOL):
    """Deduplicate sphere points up to chordal distance ``tol`` (first occurrence wins)."""
    kept: list[complex] = []
    for p in np.asarray(points, dtype=complex).ravel():
        if not kept or np.all(chordal_distance(np.array(kept), p) > tol):
            kept.append(complex(p))
    return np.array(kept, dtype=complex)


def _as_coeffs(values) -> tuple[complex, ...]:
    coeffs = [complex(c) for c in values]
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    return tuple(coeffs)


def _pad(c: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(n, dtype=complex)
    out[: len(c)] = c
    return out


def _sylvester_resultant(p: np.ndarray, q: np.ndarray) -> complex:
    """Resultant of two polynomials (ascending coefficients) after scaling each to unit max-norm."""
    p = p / np.max(np.abs(p))
    q = q / np.max(np.abs(q))
    m, k = len(p) - 1, len(q) - 1
    if m == 0:
        return p[0] ** k
    if k == 0:
        return q[0] ** m
    size = m + k
    syl = np.zeros((size, size), dtype=complex)
    for i in range(k):
        syl[i, i : i + m + 1] = p[::-1]
    for i in range(m):
        syl[k + i, i : i + k + 1] = q[::-1]
    return complex(np.linalg.det(syl))


@dataclass(frozen=True)
class RationalMap:
    """f = num / den with ascending complex coefficients.

    Construction validates degree >= 2 and coprimality (normalised resultant
    above ``RESULTANT_TOL``); instances are immutable and hashable.
    """

    num: tuple[complex, ...]
    den: tuple[complex, ...] = (1.0 + 0j,)
    degree: int = field(init=False)

    def __post_init__(self):
        num = _as_coeffs(self.num)
        den = _as_coeffs(self.den)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)
        if not all(np.isfinite(c) for c in num + den):
            raise InvalidMapError("coefficients must be finite")
        if den == (0j,):
            raise InvalidMapError("denominator is identically zero")
        if num == (0j,):
            raise InvalidMapError("numerator is identically zero")
        degree = max(len(num), len(den)) - 1
        if degree < 2:
            raise InvalidMapError(f"degree must be at least 2, got {degree}")
        res = _sylvester_resultant(np.array(num), np.array(den))
        if abs(res) <= RESULTANT_TOL:
            raise InvalidMapError(
                f"numerator and denominator share a root (normalised resultant {abs(res):.3g})"
            )
        object.__setattr__(self, "degree", degree)

    # -- construction helpers -------------------------------------------------

    @classmethod
    def polynomial(cls, coeffs: Sequence[complex]) -> "RationalMap":
        return cls(tuple(coeffs), (1.0,))

    @classmethod
    def quadratic(cls, c: complex) -> "RationalMap":
        """z**2 + c."""
        return cls((c, 0.0, 1.0), (1.0,))

    @classmethod
    def from_json_dict(cls, data: dict) -> "RationalMap":
        try:
            num = [complex(re, im) for re, im in data["num"]]
            den = [complex(re, im) for re, im in data.get("den", [[1.0, 0.0]])]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidMapError(f"malformed map specification: {exc}") from exc
        return cls(tuple(num), tuple(den))

    def to_json_dict(self) -> dict:
        return {
            "num": [[c.real, c.imag] for c in self.num],
            "den": [[c.real, c.imag] for c in self.den],
        }

    # -- cached coefficient arrays ----------------------------------------------

    @property
    def is_polynomial(self) -> bool:
        return len(self.den) == 1

    @property
    def _p(self) -> np.ndarray:
        return np.array(self.num, dtype=complex)

    @property
    def _q(self) -> np.ndarray:
        return np.array(self.den, dtype=complex)

    @property
    def _padded(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.degree + 1
        return _pad(self._p, n), _pad(self._q, n)

    def __repr__(self):
        def fmt(cs):
            return "[" + ", ".join(f"{c.real:g}{c.imag:+g}j" for c in cs) + "]"

        return f"RationalMap(num={fmt(self.num)}, den={fmt(self.den)})"

    # -- evaluation ---------------------------------------------------------------

    def __call__(self, z):
        scalar = np.ndim(z) == 0
        out = self._evaluate(np.atleast_1d(np.asarray(z, dtype=complex)))
        return complex(out[0]) if scalar else out

    def _evaluate(self, z: np.ndarray) -> np.ndarray:
        out = np.empty(z.shape, dtype=complex)
        fin = np.isfinite(z)
        P, Q = self._padded
        with np.errstate(all="ignore"):
            if self.is_polynomial:
                out[fin] = npoly.polyval(z[fin], self._p) / self._q[0]
            else:
                near = fin & (np.abs(z) <= 1)
                far = fin & (np.abs(z) > 1)
                out[near] = npoly.polyval(z[near], self._p) / npoly.polyval(z[near], self._q)
                w = 1 / z[far]
                out[far] = npoly.polyval(w, P[::-1]) / npoly.polyval(w, Q[::-1])
            if np.any(~fin):
                out[~fin] = P[-1] / Q[-1] if Q[-1] != 0 else INFINITY
        return normalize_points(out)

    def derivative(self, z):
        """Euclidean f'(z) at finite points (INFINITY at poles)."""
        z = np.asarray(z, dtype=complex)
        p, q = self._p, self._q
        with np.errstate(all="ignore"):
            qz = npoly.polyval(z, q)
            w = npoly.polyval(z, npoly.polysub(npoly.polymul(npoly.polyder(p), q),
                                                npoly.polymul(p, npoly.polyder(q))))
            out = w / qz**2
        return normalize_points(out) if np.ndim(out) else complex(normalize_points([out])[0])

    def wronskian(self) -> np.ndarray:
        """Coefficients of P'Q - PQ' (trimmed)."""
        p, q = self._p, self._q
        w = npoly.polysub(npoly.polymul(npoly.polyder(p), q), npoly.polymul(p, npoly.polyder(q)))
        w = np.atleast_1d(w).astype(complex)
        scale = np.max(np.abs(w))
        while len(w) > 1 and abs(w[-1]) <= 1e-14 * scale:
            w = w[:-1]
        return w

    def log_abs_derivative(self, z, metric: str = "euclidean"):
        """log|f'(z)|; spherical metric for 'spherical' or when z or f(z) is far from the plane."""
        scalar = np.ndim(z) == 0
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        fz = self._evaluate(z)
        if metric == "spherical":
            sph = np.ones(z.shape, dtype=bool)
        elif metric == "euclidean":
            with np.errstate(invalid="ignore"):
                sph = ~np.isfinite(z) | ~np.isfinite(fz) | (np.abs(z) > PLANAR_BOUND) | (
                    np.abs(fz) > PLANAR_BOUND
                )
        else:
            raise ValueError(f"unknown metric {metric!r}")
        out = np.empty(z.shape, dtype=float)
        if np.any(~sph):
            out[~sph] = self._log_abs_euclidean(z[~sph])
        if np.any(sph):
            out[sph] = self._log_abs_spherical(z[sph])
        return float(out[0]) if scalar else out

    def _log_abs_euclidean(self, z: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if self.is_polynomial:
                return np.log(np.abs(npoly.polyval(z, npoly.polyder(self._p)))) - np.log(
                    abs(self._q[0])
                )
            w = self.wronskian()
            return np.log(np.abs(npoly.polyval(z, w))) - 2 * np.log(
                np.abs(npoly.polyval(z, self._q))
            )

    def _log_abs_spherical(self, z: np.ndarray) -> np.ndarray:
        P, Q = self._padded
        Pr, Qr = P[::-1], Q[::-1]
        out = np.empty(z.shape, dtype=float)
        fin = np.isfinite(z)
        with np.errstate(all="ignore"):
            flip_src = ~fin | (np.abs(z) > 1)
            u = np.where(flip_src, 0j, z)
            u[flip_src & fin] = 1 / z[flip_src & fin]
            fz = self._evaluate(z)
            flip_dst = ~np.isfinite(fz) | (np.abs(fz) > 1)
            for s, t in itertools.product((False, True), repeat=2):
                mask = (flip_src == s) & (flip_dst == t)
                if not np.any(mask):
                    continue
                num, den = (Pr, Qr) if s else (P, Q)
                if t:
                    num, den = den, num
                uu = u[mask]
                n_u = npoly.polyval(uu, num)
                d_u = npoly.polyval(uu, den)
                wr = npoly.polyval(uu, npoly.polyder(num)) * d_u - n_u * npoly.polyval(
                    uu, npoly.polyder(den)
                )
                val = n_u / d_u
                out[mask] = (
                    np.log(np.abs(wr))
                    - 2 * np.log(np.abs(d_u))
                    + np.log1p(np.abs(uu) ** 2)
                    - np.log1p(np.abs(val) ** 2)
                )
        return out

    # -- inverse images ------------------------------------------------------------

    def preimages(self, z) -> np.ndarray:
        roots, _ = preimages_with_flags(self, z)
        return roots


def evaluate(fmap: RationalMap, z):
    return fmap(z)


def log_deriv_modulus(fmap: RationalMap, z, metric: str = "euclidean"):
    """Single-step factor log|f'(z)|; -inf exactly at critical points."""
    return fmap.log_abs_derivative(z, metric=metric)


def _polish_roots(coeffs: np.ndarray, roots: np.ndarray, steps: int = 3) -> np.ndarray:
    d1 = npoly.polyder(coeffs)
    r = roots.copy()
    with np.errstate(all="ignore"):
        for _ in range(steps):
            fr = npoly.polyval(r, coeffs)
            dr = npoly.polyval(r, d1)
            step = np.where(np.abs(dr) > 1e-300, fr / dr, 0)
            cand = r - step
            better = np.abs(npoly.polyval(cand, coeffs)) <= np.abs(fr)
            r = np.where(better & np.isfinite(cand), cand, r)
    return r


def _relative_residual(coeffs: np.ndarray, roots: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        scale = npoly.polyval(np.abs(roots), np.abs(coeffs))
        return np.abs(npoly.polyval(roots, coeffs)) / np.where(scale > 0, scale, 1.0)


def critical_points(fmap: RationalMap, return_residuals: bool = False):
    """All critical points with multiplicity (2*degree - 2 entries, INFINITY included)."""
    w = fmap.wronskian()
    if len(w) > 1:
        roots = npoly.polyroots(w).astype(complex)
        roots = _polish_roots(w, roots)
        residuals = _relative_residual(w, roots)
    else:
        roots = np.zeros(0, dtype=complex)
        residuals = np.zeros(0)
    at_infinity = 2 * fmap.degree - 2 - (len(w) - 1)
    pts = np.concatenate([roots, np.full(at_infinity, INFINITY)])
    res = np.concatenate([residuals, np.zeros(at_infinity)])
    if np.any(res > 1e-6):
        raise NumericDegradation(f"critical point solver residuals {res.max():.3g}")
    return (pts, res) if return_residuals else pts


def critical_values(fmap: RationalMap) -> np.ndarray:
    return fmap(critical_points(fmap))


def fixed_points(fmap: RationalMap) -> np.ndarray:
    """Fixed points with multiplicity (degree + 1 entries on the sphere)."""
    g = npoly.polysub(fmap._p, npoly.polymul([0, 1], fmap._q))
    g = np.atleast_1d(g).astype(complex)
    scale = np.max(np.abs(g))
    while len(g) > 1 and abs(g[-1]) <= 1e-14 * scale:
        g = g[:-1]
    roots = npoly.polyroots(g).astype(complex) if len(g) > 1 else np.zeros(0, dtype=complex)
    roots = _polish_roots(g, roots)
    at_infinity = fmap.degree + 1 - (len(g) - 1)
    return np.concatenate([roots, np.full(at_infinity, INFINITY)])


def preimages_with_flags(fmap: RationalMap, z, precision: str = "double"):
    """Solve f(w) = z for every entry of z.

    Returns ``(roots, flags)`` of shape ``z.shape + (degree,)``. Roots of each
    row are sorted lexicographically by (real, imag), INFINITY last. A row is
    flagged when its target lies within ``POINT_TOL`` of a critical value
    (multiple root) or a root's relative residual exceeds ``SOLVER_RESIDUAL_TOL``.
    """
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    t = z.ravel()
    d = fmap.degree
    P, Q = fmap._padded
    roots = np.full((t.size, d), INFINITY, dtype=complex)
    flags = np.zeros((t.size, d), dtype=bool)
    fin = np.isfinite(t)
    with np.errstate(all="ignore"):
        coeffs = P[None, :] - t[:, None] * Q[None, :]
    coeffs[~fin] = Q[None, :]
    lead = coeffs[:, -1]
    scale = np.max(np.abs(coeffs), axis=1)
    full = np.abs(lead) > 1e-13 * scale
    idx_full = np.nonzero(full)[0]
    if idx_full.size:
        c = coeffs[idx_full] / lead[idx_full, None]
        if precision == "extended":
            r = _extended_roots(c)
        elif d == 2:
            b, c0 = c[:, 1], c[:, 0]
            disc = np.sqrt(b * b - 4 * c0)
            # avoid cancellation: pick the larger-modulus root first
            s = np.where(np.real(np.conj(b) * disc) >= 0, 1.0, -1.0)
            r1 = (-b - s * disc) / 2
            with np.errstate(all="ignore"):
                r2 = np.where(np.abs(r1) > 0, c0 / r1, -b - r1)
            r = np.stack([r1, r2], axis=1)
        else:
            comp = np.zeros((idx_full.size, d, d), dtype=complex)
            comp[:, np.arange(1, d), np.arange(d - 1)] = 1.0
            comp[:, :, -1] = -c[:, :-1]
            r = np.linalg.eigvals(comp)
        r = _polish_rows(c, r)
        roots[idx_full] = r
    for i in np.nonzero(~full)[0]:
        row = coeffs[i]
        s = np.max(np.abs(row))
        trimmed = row.copy()
        while len(trimmed) > 1 and abs(trimmed[-1]) <= 1e-13 * s:
            trimmed = trimmed[:-1]
        r = npoly.polyroots(trimmed).astype(complex) if len(trimmed) > 1 else np.zeros(0, complex)
        r = _polish_roots(trimmed, r)
        roots[i, : len(r)] = r
    # residual check on finite roots
    finite_roots = np.isfinite(roots)
    with np.errstate(all="ignore"):
        rr = np.where(finite_roots, roots, 0)
        val = np.zeros(roots.shape, dtype=complex)
        mag = np.zeros(roots.shape, dtype=float)
        for j in range(d + 1):
            val += coeffs[:, j, None] * rr**j
            mag += np.abs(coeffs[:, j, None]) * np.abs(rr) ** j
        resid = np.abs(val) / np.where(mag > 0, mag, 1.0)
    flags |= finite_roots & ~(resid <= SOLVER_RESIDUAL_TOL)
    cv = critical_values(fmap)
    near_cv = np.zeros(t.size, dtype=bool)
    for v in cv:
        near_cv |= chordal_distance(t, v) < POINT_TOL
    flags |= near_cv[:, None]
    order = np.lexsort((np.nan_to_num(roots.imag, posinf=np.inf), roots.real), axis=-1)
    roots = np.take_along_axis(roots, order, axis=-1)
    flags = np.take_along_axis(flags, order, axis=-1)
    return roots.reshape(shape + (d,)), flags.reshape(shape + (d,))


def _polish_rows(monic: np.ndarray, r: np.ndarray, steps: int = 2) -> np.ndarray:
    d = monic.shape[1] - 1
    with np.errstate(all="ignore"):
        for _ in range(steps):
            val = np.zeros(r.shape, dtype=complex)
            der = np.zeros(r.shape, dtype=complex)
            for j in range(d, -1, -1):
                der = der * r + val
                val = val * r + monic[:, j, None]
            step = np.where(np.abs(der) > 1e-300, val / der, 0)
            cand = r - step
            r = np.where(np.isfinite(cand), cand, r)
    return r


def _extended_roots(monic: np.ndarray, dps: int = 40) -> np.ndarray:
    try:
        import mpmath
    except ImportError as exc:
        raise PreconditionError("extended precision needs mpmath (pip install artifact[extended])") from exc

    out = np.empty((monic.shape[0], monic.shape[1] - 1), dtype=complex)
    with mpmath.workdps(dps):
        for i, row in enumerate(monic):
            coeffs = [mpmath.mpc(c.real, c.imag) for c in row[::-1]]
            out[i] = [complex(r) for r in mpmath.polyroots(coeffs, maxsteps=200, extraprec=dps)]
    return out


def preimage_set(fmap: RationalMap, points) -> np.ndarray:
    """f^{-1}(points) as a flat array with multiplicity."""
    pts = np.asarray(points, dtype=complex).ravel()
    if pts.size == 0:
        return pts
    return fmap.preimages(pts).ravel()


@dataclass(frozen=True)
class ExceptionalReport:
    is_exceptional: bool
    sigma: tuple[complex, ...]
    search_depth: int
    pool_size: int
    pool_truncated: bool
    note: str = ""


def _same_set(a, b, tol=POINT_TOL) -> bool:
    a = unique_points(a, tol)
    b = unique_points(b, tol)
    if len(a) != len(b):
        return False
    return all(np.min(chordal_distance(b, p)) < tol for p in a)


def _minus(points, remove, tol=POINT_TOL):
    pts = unique_points(points, tol)
    rem = np.asarray(remove, dtype=complex)
    if rem.size == 0:
        return pts
    keep = [p for p in pts if np.min(chordal_distance(rem, p)) >= tol]
    return np.array(keep, dtype=complex)


def satisfies_exceptional_condition(fmap: RationalMap, sigma) -> bool:
    """f^{-1}(sigma) minus Crit equals sigma (as sets, chordal tolerance)."""
    sigma = unique_points(sigma)
    if sigma.size == 0:
        return False
    pre = preimage_set(fmap, sigma)
    return _same_set(_minus(pre, critical_points(fmap)), sigma)


def detect_exceptional(fmap: RationalMap, depth: int = 4, pool_bound: int = 24) -> ExceptionalReport:
    """Exhaustive search for a finite set with f^{-1}(S) minus Crit = S, |S| <= 4.

    The candidate pool is the forward orbit of the critical points to ``depth``
    plus the fixed points; this is a heuristic completeness bound.
    """
    crit = critical_points(fmap)
    pool = list(crit)
    front = crit
    for _ in range(depth):
        front = fmap(front)
        pool.extend(front)
    pool.extend(fixed_points(fmap))
    pool = unique_points(pool)
    truncated = len(pool) > pool_bound
    if truncated:
        pool = pool[:pool_bound]
    found = []
    for size in range(1, 5):
        for combo in itertools.combinations(range(len(pool)), size):
            cand = pool[list(combo)]
            if satisfies_exceptional_condition(fmap, cand):
                found.append(cand)
    if not found:
        return ExceptionalReport(False, (), depth, len(pool), truncated)
    union = unique_points(np.concatenate(found))
    note = ""
    if len(union) <= 4 and satisfies_exceptional_condition(fmap, union):
        sigma = union
    else:
        sigma = max(found, key=len)
        note = "union of admissible sets violates the defining equality; largest single set returned"
    sigma = tuple(complex(s) for s in sorted(sigma, key=lambda s: (s.real, s.imag)))
    return ExceptionalReport(True, sigma, depth, len(pool), truncated, note)
