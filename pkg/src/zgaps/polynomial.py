from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

MAX_DEGREE = 8  # for user-chosen amplifier and mollifier polynomials
_HARD_DEGREE = 64


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial with ascending coefficients ``coeffs[i] * x**i``."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        c = tuple(float(v) for v in self.coeffs)
        if not c:
            c = (0.0,)
        if len(c) - 1 > _HARD_DEGREE:
            raise ValueError(f"degree {len(c) - 1} exceeds {_HARD_DEGREE}")
        if not all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def parse(cls, text: str) -> Polynomial:
        """Parse ``"c0,c1,..."`` (ascending order)."""
        parts = [p.strip() for p in text.split(",") if p.strip()]
        if not parts:
            raise ValueError("empty polynomial specification")
        if len(parts) - 1 > MAX_DEGREE:
            raise ValueError(f"degree {len(parts) - 1} exceeds {MAX_DEGREE}")
        return cls(tuple(float(p) for p in parts))

    @classmethod
    def power_of_linear(cls, c0: float, c1: float, n: int) -> Polynomial:
        """Return ``(c0 + c1 x)**n``."""
        return cls(tuple(npoly.polypow([c0, c1], n)))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return all(c == 0.0 for c in self.coeffs)

    def __call__(self, x):
        return npoly.polyval(x, self.coeffs)

    def deriv(self, m: int = 1) -> Polynomial:
        if self.degree < m:
            return Polynomial((0.0,))
        return Polynomial(tuple(npoly.polyder(self.coeffs, m)))

    def scaled(self, factor: float) -> Polynomial:
        return Polynomial(tuple(factor * c for c in self.coeffs))

    def __str__(self) -> str:
        return ",".join(repr(c) for c in self.coeffs)
