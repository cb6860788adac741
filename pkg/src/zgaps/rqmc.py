"""Randomized QMC plumbing: replicate seeding, simplex maps, Gauss-Legendre rules."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.stats import qmc

from .errors import BudgetError

MIN_POINTS = 1 << 10
MIN_REPLICATES = 8
SCHEMES = ("tensor", "cube")


@dataclass(frozen=True)
class QuadratureBudget:
    """Points per replicate, replicate count and master seed.

    ``scheme="tensor"`` spends ``n_points`` on the five simplex coordinates
    and integrates the four interpolation variables by Gauss-Legendre;
    ``scheme="cube"`` spends them on the whole unit 9-cube with an indicator.
    """

    n_points: int = 1 << 12
    n_replicates: int = 16
    seed: int = 20240101
    scheme: str = "tensor"
    gauss_order: int | None = None

    def __post_init__(self):
        n = self.n_points
        if n < MIN_POINTS or n & (n - 1):
            raise BudgetError(f"n_points must be a power of two >= {MIN_POINTS}, got {n}")
        if self.n_replicates < MIN_REPLICATES:
            raise BudgetError(f"n_replicates must be >= {MIN_REPLICATES}, got {self.n_replicates}")
        if self.scheme not in SCHEMES:
            raise BudgetError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not 0 <= self.seed < 2**64:
            raise BudgetError("seed must be a 64-bit unsigned integer")
        if self.gauss_order is not None and self.gauss_order < 2:
            raise BudgetError("gauss_order must be >= 2")

    def halved(self) -> QuadratureBudget:
        return QuadratureBudget(self.n_points // 2, self.n_replicates, self.seed, self.scheme, self.gauss_order)

    def doubled(self) -> QuadratureBudget:
        return QuadratureBudget(self.n_points * 2, self.n_replicates, self.seed, self.scheme, self.gauss_order)


@dataclass(frozen=True)
class MomentEstimate:
    value: complex
    stderr: float
    n_effective: int
    replicates: np.ndarray = field(repr=False)

    @classmethod
    def from_replicates(cls, reps: np.ndarray, n_effective: int) -> MomentEstimate:
        reps = np.asarray(reps, dtype=complex)
        mean = complex(reps.mean())
        spread = np.sum(np.abs(reps - mean) ** 2) / (reps.size - 1)
        return cls(mean, float(np.sqrt(spread / reps.size)), n_effective, reps)


@lru_cache(maxsize=None)
def gauss_legendre01(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1) / 2, w / 2


_SHIFT_BITS = 52


class DigitalShiftSobol:
    """Unscrambled Sobol points XOR-ed with one random 52-bit vector per coordinate.

    Each point is uniform on [0, 1)^dim, so the mean over any prefix is an
    unbiased estimate. Points are returned at cell centres, which keeps them
    strictly inside the cube.
    """

    def __init__(self, dim: int, rng: np.random.Generator):
        self._net = qmc.Sobol(dim, scramble=False, bits=_SHIFT_BITS)
        self.shift = rng.integers(0, 1 << _SHIFT_BITS, size=dim, dtype=np.uint64)

    def random(self, n: int) -> np.ndarray:
        ints = (self._net.random(n) * 2.0**_SHIFT_BITS).astype(np.uint64)
        return ((ints ^ self.shift).astype(float) + 0.5) / 2.0**_SHIFT_BITS


def replicate_engines(dim: int, n_replicates: int, seed: int) -> list[DigitalShiftSobol]:
    """One independently shifted copy of the Sobol net per replicate, seeded from ``seed``."""
    children = np.random.SeedSequence(seed).spawn(n_replicates)
    return [DigitalShiftSobol(dim, np.random.default_rng(c)) for c in children]


def simplex_pair_map(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map the unit 5-cube onto {x + x1 + x2 <= 1, x + x3 + x4 <= 1}.

    Returns the five coordinates (columns x, x1, x2, x3, x4) and the Jacobian.
    """
    u0, u1, u2, u3, u4 = u.T
    w = 1.0 - u0
    x1 = w * u1
    x2 = w * (1.0 - u1) * u2
    x3 = w * u3
    x4 = w * (1.0 - u3) * u4
    jac = w**4 * (1.0 - u1) * (1.0 - u3)
    return np.column_stack([u0, x1, x2, x3, x4]), jac


def default_threads() -> int:
    env = os.environ.get("ZGAPS_THREADS")
    return max(1, int(env)) if env else 1


def map_replicates(fn, items, threads: int | None = None) -> list:
    """``[fn(i) for i in items]``, optionally on a thread pool; order is preserved."""
    threads = threads or default_threads()
    if threads <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
