"""Zeros of Z^(k)(t) on an interval and the gap / distance statistics built on them.

Zeros are found by sign changes on a uniform grid followed by vectorized
bisection. Only sign changes are detected: a zero of even multiplicity (a
tangential touch) is invisible to the scan.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, GridTooCoarseWarning, InsufficientDataError
from .zfunc import T_MAX, T_MIN, theta_derivatives, z_derivatives

DEFAULT_REFINE_TOL = 1e-9
DEFAULT_QUANTILES = (0.1, 0.25, 0.5, 0.75, 0.9)


@dataclass(frozen=True)
class ZeroList:
    k: int
    interval: tuple[float, float]
    ordinates: np.ndarray
    refine_tol: float
    grid_step: float | None = None
    refined_cells: int = 0

    def __len__(self) -> int:
        return len(self.ordinates)


@dataclass(frozen=True)
class GapStats:
    max_normalized_gap: float
    argmax_pair: tuple[float, float]
    mean_normalized_gap: float
    histogram: tuple[np.ndarray, np.ndarray]
    normalized_gaps: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class DistanceStats:
    min_normalized_distance: float
    argmin: tuple[float, float]
    quantiles: list[tuple[float, float]]
    n_used: int
    normalized_distances: np.ndarray = field(repr=False)
    exploratory: bool = False

    @property
    def median(self) -> float:
        return float(np.median(self.normalized_distances))


def default_grid_step(b: float) -> float:
    """A quarter of the mean spacing 2 pi / log b."""
    return 0.25 / math.log(b)


def theta_count(a: float, b: float) -> float:
    """Expected number of zeros of Z in [a, b] from the smooth counting term."""
    th = theta_derivatives([a, b], 0)[:, 0]
    return float((th[1] - th[0]) / np.pi)


def _default_workers() -> int:
    env = os.environ.get("ZGAPS_THREADS")
    return max(1, int(env)) if env else 1


def _values(t: np.ndarray, k: int, extra: int = 0) -> np.ndarray:
    vals, _ = z_derivatives(t, k + extra)
    return vals[:, k:]


def _bisect(k: int, lo: np.ndarray, hi: np.ndarray, flo: np.ndarray, tol: float) -> np.ndarray:
    lo, hi, flo = lo.copy(), hi.copy(), flo.copy()
    while lo.size and np.max(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        fm = _values(mid, k)[:, 0]
        left = np.sign(fm) == np.sign(flo)
        exact = fm == 0.0
        lo = np.where(left, mid, lo)
        flo = np.where(left, fm, flo)
        hi = np.where(left, hi, mid)
        lo = np.where(exact, mid, lo)
        hi = np.where(exact, mid, hi)
    return 0.5 * (lo + hi)


def _hidden_pair_cells(t: np.ndarray, f: np.ndarray, df: np.ndarray) -> np.ndarray:
    """Cells without a sign change of f where the cubic Hermite interpolant dips through zero."""
    h = np.diff(t)
    same = np.sign(f[:-1]) == np.sign(f[1:])
    turns = np.sign(df[:-1]) != np.sign(df[1:])
    cand = np.nonzero(same & turns)[0]
    if cand.size == 0:
        return cand
    s = np.linspace(0.0, 1.0, 33)[None, :]
    i = cand[:, None]
    hh = h[cand][:, None]
    h00 = 2 * s**3 - 3 * s**2 + 1
    h10 = s**3 - 2 * s**2 + s
    h01 = -2 * s**3 + 3 * s**2
    h11 = s**3 - s**2
    p = h00 * f[i] + h10 * hh * df[i] + h01 * f[i + 1] + h11 * hh * df[i + 1]
    flips = np.any(np.sign(p) != np.sign(f[i]), axis=1)
    return cand[flips]


def _scan_chunk(k: int, grid: np.ndarray, tol: float, depth: int = 0) -> tuple[list[np.ndarray], int]:
    vals = _values(grid, k, extra=1)
    f, df = vals[:, 0], vals[:, 1]
    found = []
    refined = 0
    zero_pts = grid[f == 0.0]
    if zero_pts.size:
        found.append(zero_pts)
    brackets = np.nonzero((np.sign(f[:-1]) * np.sign(f[1:])) < 0)[0]
    if brackets.size:
        found.append(_bisect(k, grid[brackets], grid[brackets + 1], f[brackets], tol))
    hidden = _hidden_pair_cells(grid, f, df)
    if hidden.size and depth < 3:
        warnings.warn(
            f"{hidden.size} scan cell(s) near t={grid[hidden[0]]:.6f} may hide a pair of zeros; refining",
            GridTooCoarseWarning,
            stacklevel=3,
        )
        for i in hidden:
            sub = np.linspace(grid[i], grid[i + 1], 9)
            more, r = _scan_chunk(k, sub, tol, depth + 1)
            found.extend(more)
            refined += 1 + r
    return found, refined


def find_zeros(
    k: int,
    interval: tuple[float, float],
    grid_step: float | None = None,
    refine_tol: float = DEFAULT_REFINE_TOL,
    workers: int | None = None,
) -> ZeroList:
    """All sign-change zeros of Z^(k) in ``interval``.

    The grid is fixed by ``interval`` and ``grid_step`` alone, so splitting
    the scan across ``workers`` threads does not change the result.
    """
    a, b = float(interval[0]), float(interval[1])
    if not (T_MIN <= a < b <= T_MAX):
        raise DomainError(f"interval must satisfy {T_MIN} <= a < b <= {T_MAX:g}, got [{a}, {b}]")
    if grid_step is None:
        grid_step = default_grid_step(b)
    if not (0 < grid_step <= 0.5 / math.log(b)):
        raise DomainError(f"grid_step must lie in (0, 0.5/log b] = (0, {0.5 / math.log(b):.4g}]")
    n_cells = int(math.ceil((b - a) / grid_step))
    grid = np.linspace(a, b, n_cells + 1)

    workers = workers or _default_workers()
    n_chunks = max(1, min(workers * 4, n_cells // 64))
    edges = np.linspace(0, n_cells, n_chunks + 1).astype(int)
    chunks = [grid[edges[i] : edges[i + 1] + 1] for i in range(n_chunks)]
    if workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda g: _scan_chunk(k, g, refine_tol), chunks))
    else:
        results = [_scan_chunk(k, g, refine_tol) for g in chunks]

    parts = [z for found, _ in results for z in found]
    refined = sum(r for _, r in results)
    zeros = np.sort(np.concatenate(parts)) if parts else np.empty(0)
    if zeros.size > 1:
        keep = np.concatenate([[True], np.diff(zeros) > 2 * refine_tol])
        zeros = zeros[keep]
    return ZeroList(k, (a, b), zeros, refine_tol, grid_step, refined)


NORMALIZATIONS = ("density", "log")


def _normalizer(t: np.ndarray, normalization: str) -> np.ndarray:
    """Scale turning distances near t into units of the mean zero spacing.

    "density" uses the local spacing 2 pi / log(t / 2 pi), so normalized gaps
    average 1 at every height; "log" uses 2 pi / log t, which agrees only as
    t grows (the mean is about 1.27 near t = 5000).
    """
    if normalization == "density":
        return np.log(t / (2 * np.pi)) / (2 * np.pi)
    if normalization == "log":
        return np.log(t) / (2 * np.pi)
    raise DomainError(f"normalization must be one of {NORMALIZATIONS}, got {normalization!r}")


def max_normalized_gap(
    zeros: ZeroList, bins: int = 40, hist_range: tuple[float, float] = (0.0, 4.0), normalization: str = "density"
) -> GapStats:
    t = zeros.ordinates
    if t.size < 2:
        raise InsufficientDataError("need at least two zeros to form a gap")
    gaps = np.diff(t) * _normalizer(t[:-1], normalization)
    i = int(np.argmax(gaps))
    hist = np.histogram(gaps, bins=bins, range=hist_range)
    return GapStats(float(gaps[i]), (float(t[i]), float(t[i + 1])), float(gaps.mean()), hist, gaps)


def _nearest_distances(base: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    idx = np.searchsorted(target, base)
    left = target[np.clip(idx - 1, 0, target.size - 1)]
    right = target[np.clip(idx, 0, target.size - 1)]
    dl, dr = np.abs(base - left), np.abs(right - base)
    nearest = np.where(dl <= dr, left, right)
    return np.minimum(dl, dr), nearest


def _distance_stats(
    base: ZeroList, target: ZeroList, quantiles, trim: bool, normalization: str, exploratory: bool = False
) -> DistanceStats:
    if len(base) == 0 or len(target) == 0:
        raise InsufficientDataError("distance statistics need non-empty zero lists")
    a, b = base.interval
    t = base.ordinates
    if trim:
        # one mean gap at each end, so edge zeros are not censored
        lo = a + 2 * np.pi / math.log(a)
        hi = b - 2 * np.pi / math.log(b)
        t = t[(t >= lo) & (t <= hi)]
        if t.size == 0:
            raise InsufficientDataError("no zeros left after boundary trim")
    d, nearest = _nearest_distances(t, target.ordinates)
    nd = d * _normalizer(t, normalization)
    i = int(np.argmin(nd))
    qs = [(float(q), float(v)) for q, v in zip(quantiles, np.quantile(nd, quantiles))]
    return DistanceStats(float(nd[i]), (float(t[i]), float(nearest[i])), qs, int(t.size), nd, exploratory)


def min_normalized_distance(
    base: ZeroList, target: ZeroList, quantiles=DEFAULT_QUANTILES, trim: bool = True, normalization: str = "density"
) -> DistanceStats:
    """Normalized distance from each zero of ``base`` to the nearest zero of ``target``."""
    return _distance_stats(base, target, quantiles, trim, normalization)


def pair_table(
    k: int,
    l: int,
    interval: tuple[float, float],
    grid_step: float | None = None,
    quantiles=DEFAULT_QUANTILES,
    workers: int | None = None,
) -> DistanceStats:
    """Distances from zeros of Z^(k) to zeros of Z^(l).

    Report-only. Mixed parities are allowed but flagged as exploratory.
    """
    zk = find_zeros(k, interval, grid_step, workers=workers)
    zl = zk if l == k else find_zeros(l, interval, grid_step, workers=workers)
    return _distance_stats(zk, zl, quantiles, True, "density", exploratory=(k - l) % 2 != 0)


@dataclass(frozen=True)
class Census:
    count: int
    fraction: float
    n_zeros: int
    ordinates: np.ndarray = field(repr=False)


def sign_change_census(
    k: int,
    interval: tuple[float, float],
    mu: float,
    zeros: ZeroList | None = None,
    workers: int | None = None,
) -> Census:
    """Zeros gamma of Z with Z^(2k)(gamma - w) Z^(2k)(gamma + w) < 0, w = 2 pi mu / log gamma."""
    if not (0.0 < mu < 1.0):
        raise DomainError(f"mu must lie in (0, 1), got {mu}")
    if zeros is None:
        zeros = find_zeros(0, interval, workers=workers)
    gam = zeros.ordinates
    if gam.size == 0:
        return Census(0, 0.0, 0, gam)
    w = 2 * np.pi * mu / np.log(gam)
    pts = np.concatenate([gam - w, gam + w])
    if pts.min() < T_MIN:
        raise DomainError("census window extends below the evaluation floor")
    vals = _values(pts, 2 * k)[:, 0]
    left, right = vals[: gam.size], vals[gam.size :]
    hit = left * right < 0
    return Census(int(hit.sum()), float(hit.mean()), int(gam.size), gam[hit])


def emit_plot_series(orders, interval: tuple[float, float], step: float) -> np.ndarray:
    """Columns t, Z^(k1)(t), Z^(k2)(t), ... on a uniform grid including both ends."""
    a, b = float(interval[0]), float(interval[1])
    if not b > a or step <= 0:
        raise DomainError("need a < b and step > 0")
    n = int(round((b - a) / step)) + 1
    t = np.linspace(a, b, n)
    orders = [int(o) for o in orders]
    vals, _ = z_derivatives(t, max(orders))
    return np.column_stack([t] + [vals[:, o] for o in orders])
