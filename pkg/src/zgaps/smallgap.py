"""Leading constant of the mollified discrete product behind small distances.

For a zero gamma of Z, the quantity Z^(2k)(gamma + w) Z^(2k)(-gamma + w),
w = 2 pi mu / log T, summed against |M(1/2 + i gamma)|^2, has a leading term
e^{2 pi i mu} J(2 pi i mu, 2 pi i mu). J is the mixed derivative at u = v = 0
of

    (1/theta2 int P_u P_v + int P_u int P_v) (int T_u T_v - int T_u int T_v)
        + int P_u int P_v (Q(0) - int T_u) (Q(0) - int T_v),

where P_u(x) = P(x + u), T_u(x) = exp(-a (x + theta2 u)) Q(-x - theta2 u)
(T_v likewise with b) and every integral runs over x in [0, 1]. r = -Re of the
leading term; r > 0 means the product is negative on average, so Z^(2k)
changes sign within w of many zeros.

The mixed derivative is exact: each integral is carried as a bivariate
first-order jet (value, d/du, d/dv, d2/dudv) and the brace is assembled with
jet arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import DomainError, InvalidMollifierError, NumericalConsistencyError
from .polynomial import MAX_DEGREE, Polynomial
from .rqmc import gauss_legendre01

GAUSS_ORDER = 64
IMAG_RTOL = 1e-8


@dataclass(frozen=True)
class MollifierSpec:
    theta2: float
    P: Polynomial

    def __post_init__(self):
        if not 0.0 < self.theta2 < 0.5:
            raise DomainError(f"theta2 must lie in (0, 0.5), got {self.theta2}")
        if self.P.degree > MAX_DEGREE:
            raise DomainError(f"mollifier degree must be <= {MAX_DEGREE}")
        if self.P.coeffs[0] != 0.0:
            raise InvalidMollifierError(f"mollifier needs P(0) = 0, got P(0) = {self.P.coeffs[0]}")


@dataclass(frozen=True)
class SmallGapParams:
    k: int
    mu: float = 0.0

    def __post_init__(self):
        if self.k < 0:
            raise DomainError(f"k must be >= 0, got {self.k}")
        if self.mu < 0:
            raise DomainError(f"mu must be >= 0, got {self.mu}")

    @property
    def Q(self) -> Polynomial:
        """(1/2 + x)^(2k)."""
        return Polynomial.power_of_linear(0.5, 1.0, 2 * self.k)


@dataclass(frozen=True)
class LeadingTerm:
    j_value: complex
    r: float
    imag_residue: float


class Jet:
    """First-order jet in two variables u, v, keeping the mixed term.

    Components: value, d/du, d/dv, d2/dudv. Products drop u^2 and v^2 terms,
    which never reach the mixed derivative.
    """

    __slots__ = ("c",)

    def __init__(self, c0=0.0, cu=0.0, cv=0.0, cuv=0.0):
        self.c = np.array([c0, cu, cv, cuv], dtype=complex)

    @classmethod
    def _wrap(cls, arr):
        out = cls.__new__(cls)
        out.c = arr
        return out

    def __add__(self, other):
        other = other if isinstance(other, Jet) else Jet(other)
        return Jet._wrap(self.c + other.c)

    __radd__ = __add__

    def __sub__(self, other):
        other = other if isinstance(other, Jet) else Jet(other)
        return Jet._wrap(self.c - other.c)

    def __rsub__(self, other):
        return Jet(other) - self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet._wrap(self.c * other)
        a, b = self.c, other.c
        return Jet._wrap(
            np.array([a[0] * b[0], a[0] * b[1] + a[1] * b[0], a[0] * b[2] + a[2] * b[0],
                      a[0] * b[3] + a[1] * b[2] + a[2] * b[1] + a[3] * b[0]])
        )

    __rmul__ = __mul__

    @property
    def mixed(self) -> complex:
        return complex(self.c[3])


def _integral(f, w):
    return complex(np.sum(w * f))


def j_leading(a: complex, b: complex, moll: MollifierSpec, gp: SmallGapParams) -> complex:
    """Mixed u, v derivative of the brace at u = v = 0, by jets of Gauss-Legendre integrals."""
    if abs(a) > 10 or abs(b) > 10:
        raise DomainError("|a| and |b| must be <= 10")
    x, w = gauss_legendre01(GAUSS_ORDER)
    th, P, Q = moll.theta2, moll.P, gp.Q
    Px, dPx = P(x), P.deriv()(x)
    Qm, dQm = Q(-x), Q.deriv()(-x)

    # int P_u P_v and its u, v, uv derivatives
    pp = Jet(_integral(Px * Px, w), _integral(dPx * Px, w), _integral(Px * dPx, w), _integral(dPx * dPx, w))
    pu = Jet(_integral(Px, w), _integral(dPx, w), 0, 0)
    pv = Jet(_integral(Px, w), 0, _integral(dPx, w), 0)

    ga = np.exp(-a * x) * Qm
    da = -th * np.exp(-a * x) * (a * Qm + dQm)
    gb = np.exp(-b * x) * Qm
    db = -th * np.exp(-b * x) * (b * Qm + dQm)
    tu = Jet(_integral(ga, w), _integral(da, w), 0, 0)
    tv = Jet(_integral(gb, w), 0, _integral(db, w), 0)
    tt = Jet(_integral(ga * gb, w), _integral(da * gb, w), _integral(ga * db, w), _integral(da * db, w))
    q0 = Q.coeffs[0]

    brace = (pp * (1 / th) + pu * pv) * (tt - tu * tv) + pu * pv * (q0 - tu) * (q0 - tv)
    return brace.mixed


def brace_value(a: complex, b: complex, u: float, v: float, moll: MollifierSpec, gp: SmallGapParams,
                order: int = GAUSS_ORDER) -> complex:
    """The brace itself at finite (u, v); used as a finite-difference check on ``j_leading``."""
    x, w = gauss_legendre01(order)
    th, P, Q = moll.theta2, moll.P, gp.Q
    Pu, Pv = P(x + u), P(x + v)
    Tu = np.exp(-a * (x + th * u)) * Q(-x - th * u)
    Tv = np.exp(-b * (x + th * v)) * Q(-x - th * v)
    ip, iq, itu, itv = _integral(Pu, w), _integral(Pv, w), _integral(Tu, w), _integral(Tv, w)
    q0 = Q(0.0)
    return (_integral(Pu * Pv, w) / th + ip * iq) * (_integral(Tu * Tv, w) - itu * itv) + ip * iq * (q0 - itu) * (
        q0 - itv
    )


def r_of_mu(k: int, mu: float, moll: MollifierSpec) -> LeadingTerm:
    """r_k(mu) = -Re(e^{2 pi i mu} J(2 pi i mu, 2 pi i mu))."""
    if not 0.0 <= mu < 1.0:
        raise DomainError(f"mu must lie in [0, 1), got {mu}")
    a = 2j * np.pi * mu
    jv = j_leading(a, a, moll, SmallGapParams(k, mu))
    lead = np.exp(2j * np.pi * mu) * jv
    residue = abs(lead.imag)
    if residue > IMAG_RTOL * max(1.0, abs(jv)):
        raise NumericalConsistencyError(f"imaginary residue {residue:.3e} of the leading term is not negligible")
    return LeadingTerm(jv, float(-lead.real), float(residue))


@dataclass(frozen=True)
class MuScan:
    """``best_mu`` is the smallest grid mu with r > 0, i.e. the sharpest certified distance."""

    best_mu: float | None
    largest_mu: float | None
    table: list[tuple[float, float]]

    @property
    def found(self) -> bool:
        return self.best_mu is not None


def mu_grid(lo: float, hi: float, step: float) -> np.ndarray:
    if step <= 0:
        raise DomainError("step must be positive")
    if hi < lo:
        return np.empty(0)
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(n), 12)


def mu_scan(k: int, moll: MollifierSpec, grid) -> MuScan:
    """Smallest (and largest) grid mu with r_k(mu) > 0, plus the r-versus-mu table."""
    mus = np.asarray(grid, dtype=float)
    if mus.size and (mus.min() < 0 or mus.max() >= 1):
        raise DomainError("mu grid must lie in [0, 1)")
    table = [(float(m), r_of_mu(k, float(m), moll).r) for m in mus]
    positive = [m for m, r in table if r > 0]
    if not positive:
        return MuScan(None, None, table)
    return MuScan(min(positive), max(positive), table)


def optimize_mollifier(k: int, mu: float, degree: int, start: MollifierSpec, maxiter: int = 400) -> MollifierSpec:
    """Maximize r_k(mu) over P = sum_{i=1..degree} c_i x^i with P(1) = 1.

    r is quadratic in P, so the overall scale is fixed by P(1) = 1 and the
    search runs over c_2..c_degree (c_1 = 1 - sum of the rest). Deterministic.
    """
    if not 1 <= degree <= 4:
        raise DomainError(f"degree must be in 1..4, got {degree}")
    if degree == 1:
        return MollifierSpec(start.theta2, Polynomial((0.0, 1.0)))
    c = np.zeros(degree + 1)
    sc = np.array(start.P.coeffs[: degree + 1])
    c[: sc.size] = sc
    total = c.sum()
    if total == 0:
        raise DomainError("starting mollifier must have P(1) != 0")
    c /= total

    def build(tail):
        return Polynomial((0.0, 1.0 - float(np.sum(tail)), *tail))

    def objective(tail):
        return -r_of_mu(k, mu, MollifierSpec(start.theta2, build(tail))).r

    res = optimize.minimize(objective, c[2:], method="Nelder-Mead",
                            options={"maxiter": maxiter, "xatol": 1e-10, "fatol": 1e-14})
    best = res.x if res.fun <= objective(c[2:]) else c[2:]
    return MollifierSpec(start.theta2, build(best))
