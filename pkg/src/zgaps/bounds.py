"""Closed-form and tabulated large-gap bounds, and Wirtinger inequality checks.

A(k) = sqrt((2k+3)/(2k+1)) is the bound that follows from the L2 Wirtinger
inequality. B(k) (quartic Wirtinger plus fourth moments) and C(k) (the
amplified second moment) are stored as published; C(k) can be recomputed
with ``momentkernel.scan_lambda``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .rqmc import gauss_legendre01

B_TABLE = {
    1: 1.5462, 2: 1.3609, 3: 1.2653, 4: 1.2099, 5: 1.1735,
    6: 1.1479, 7: 1.1288, 8: 1.1141, 9: 1.1024, 10: 1.0929,
    14: 1.0677, 18: 1.0533, 22: 1.0439, 26: 1.0373, 30: 1.0325,
}  # fmt: skip

# k = 1 is the first-derivative large-gap constant; 2..10 from the amplified moment
C_TABLE = {
    1: 1.9, 2: 1.606, 3: 1.451, 4: 1.365, 5: 1.306,
    6: 1.265, 7: 1.231, 8: 1.205, 9: 1.184, 10: 1.167,
}  # fmt: skip

# published (B-1)/(A-1) and (C-1)/(A-1)
RATIO_TABLE = {
    1: (1.8773, 3.0928), 2: (1.9702, 3.3075), 3: (1.9818, 3.3683), 4: (1.9888, 3.4583),
    5: (1.9924, 3.5126), 6: (1.9944, 3.5727), 7: (1.9958, 3.5768), 8: (1.9967, 3.5846),
    9: (1.9973, 3.5856), 10: (1.9978, 3.5886), 14: (1.9988, None), 18: (1.9993, None),
    22: (1.9995, None), 26: (1.9996, None), 30: (1.9997, None),
}  # fmt: skip

# (k, lambda_k, P coefficients, published excess of h_k over 1) with theta1 = 0.2499, v = 0.2, eta = 0.5.
# The k = 3 entry is printed as "> 0.001"; only h_3 > 1 is meaningful there.
H_TABLE = [
    (2, 1.606, (1.0, -2.0), 0.003),
    (3, 1.451, (1.0, -1.8), None),
    (4, 1.365, (1.0, -1.7), 0.01),
    (5, 1.306, (1.0, -1.5), 0.001),
    (6, 1.265, (1.0, -1.4), 0.005),
    (7, 1.232, (1.0, -1.5), 0.008),
    (8, 1.205, (1.0, -1.0), 0.001),
    (9, 1.184, (1.0, -1.2), 0.01),
    (10, 1.167, (1.0, -1.0), 0.009),
]


def a_of_k(k: int) -> float:
    if k < 0:
        raise DomainError(f"k must be >= 0, got {k}")
    return math.sqrt((2 * k + 3) / (2 * k + 1))


@dataclass(frozen=True)
class BoundTable:
    k: int
    A: float
    B: float | None
    C: float | None
    ratio_B: float | None
    ratio_C: float | None
    printed_ratio_B: float | None
    printed_ratio_C: float | None

    @property
    def absent(self) -> bool:
        return self.B is None and self.C is None


def ratio_table(k_range) -> list[BoundTable]:
    """Recompute (B-1)/(A-1) and (C-1)/(A-1); missing data come back as None."""
    rows = []
    for k in k_range:
        A = a_of_k(k)
        B, C = B_TABLE.get(k), C_TABLE.get(k)
        rb = (B - 1) / (A - 1) if B is not None else None
        rc = (C - 1) / (A - 1) if C is not None else None
        pb, pc = RATIO_TABLE.get(k, (None, None))
        rows.append(BoundTable(k, A, B, C, rb, rc, pb, pc))
    return rows


def b_excess_exponent() -> float:
    """Least-squares slope of log(B(k) - 1) against log k.

    A slope near -1 is consistent with B(k) = 1 + 1/k + o(1/k); this is a
    diagnostic only.
    """
    ks = np.array(sorted(B_TABLE))
    ex = np.array([B_TABLE[k] - 1 for k in ks])
    return float(np.polyfit(np.log(ks), np.log(ex), 1)[0])


@dataclass(frozen=True)
class TestFunction:
    """f(x) = sum_n coeffs[n-1] sin(n pi (x - a) / (b - a)) on [a, b]."""

    a: float
    b: float
    coeffs: tuple[float, ...]

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if not self.b > self.a:
            raise DomainError("need b > a")
        if len(self.coeffs) > 20:
            raise DomainError("trig degree must be <= 20")

    @classmethod
    def random(cls, rng: np.random.Generator, degree: int | None = None, a: float = 0.0, b: float = 1.0):
        n = degree or int(rng.integers(1, 21))
        c = rng.normal(size=n) / np.arange(1, n + 1)
        return cls(a, b, tuple(float(v) for v in c))

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    def _s(self, x):
        return (np.asarray(x, dtype=float) - self.a) / (self.b - self.a)

    def __call__(self, x):
        s = self._s(x)
        out = np.zeros_like(s)
        for n, c in enumerate(self.coeffs, start=1):
            # reflect s > 1/2 so that f(b) is an exact zero
            far = s > 0.5
            val = np.where(far, (-1) ** (n + 1) * np.sin(n * np.pi * (1 - s)), np.sin(n * np.pi * s))
            out = out + c * val
        return out

    def deriv(self, x):
        s = self._s(x)
        out = np.zeros_like(s)
        scale = np.pi / (self.b - self.a)
        for n, c in enumerate(self.coeffs, start=1):
            out = out + c * n * scale * np.cos(n * np.pi * s)
        return out


def _quadrature(f: TestFunction):
    order = max(64, 8 * f.degree + 32)
    x, w = gauss_legendre01(order)
    t = f.a + (f.b - f.a) * x
    return f(t), f.deriv(t), w * (f.b - f.a)


# slack for rounding; relative above 1 because the sine case is an exact equality
SLACK = 1e-12


def _holds(lhs: float, rhs: float) -> bool:
    return lhs <= rhs + SLACK * max(1.0, abs(rhs))


@dataclass(frozen=True)
class InequalityCheck:
    lhs: float
    rhs: float
    holds: bool


def l2_wirtinger_check(f: TestFunction) -> InequalityCheck:
    """int f^2 <= ((b - a)/pi)^2 int f'^2."""
    v, d, w = _quadrature(f)
    lhs = float(np.sum(w * v * v))
    rhs = ((f.b - f.a) / np.pi) ** 2 * float(np.sum(w * d * d))
    return InequalityCheck(lhs, rhs, _holds(lhs, rhs))


def quartic_wirtinger_check(f: TestFunction, nu: float) -> InequalityCheck:
    """(3/8)(1 + 4nu + sqrt(1 + 8nu)) int f^4 <= L^4 int f'^4 + 6 nu L^2 int (f f')^2, L = (b - a)/pi."""
    if nu < 0:
        raise DomainError(f"nu must be >= 0, got {nu}")
    v, d, w = _quadrature(f)
    L = (f.b - f.a) / np.pi
    lhs = 3 / 8 * (1 + 4 * nu + math.sqrt(1 + 8 * nu)) * float(np.sum(w * v**4))
    rhs = L**4 * float(np.sum(w * d**4)) + 6 * nu * L**2 * float(np.sum(w * (v * d) ** 2))
    return InequalityCheck(lhs, rhs, _holds(lhs, rhs))
