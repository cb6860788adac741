"""Leading constants of the amplified shifted fourth moment of zeta.

The central object is a nine-dimensional integral over

    x, x1, x2, x3, x4, t1, t2, t3, t4 in [0, 1],  x + x1 + x2 <= 1,  x + x3 + x4 <= 1

whose integrand carries six complex shifts (a1, a2, a3, b1, b2, b3), each
already multiplied by log T. Three integrands are provided:

``general_integrand``
    the shifted constant c(a, b) itself;
``operator_integrand``
    c(a, b) after the derivative operators Q(d/da1) Q(d/da2) Q(d/db1) Q(d/db2)
    and R(d/da1 + d/da2 + d/da3)^j R(d/db1 + d/db2 + d/db3)^j. The exponent is
    a linear form in the shifts, so each operator acts as multiplication by
    Q or R at the matching coefficient of that form;
``printed_integrand``
    the closed form of the same quantity at a1 = b1 = 0, a2 = -b2 = i pi lambda,
    as usually written. It carries no eta, whereas the operator route keeps
    a phase exp(-2 pi i eta theta1 (x1 + x2 - x3 - x4)) from a3 and b3. The two
    agree exactly when eta = 0.

The default ``tensor`` scheme draws randomized Sobol points on the two
simplices through ``simplex_pair_map`` and integrates t1..t4 by
Gauss-Legendre. The t3 and t4 integrals factor out of the integrand, which
keeps the cost per outer point at O(n^2 (n3 + n4)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats
from scipy.special import zeta as _riemann_zeta

from .errors import BracketError, DomainError, IndeterminateRatioError, ToleranceNotMetError
from .polynomial import MAX_DEGREE, Polynomial
from .rqmc import (
    MomentEstimate,
    QuadratureBudget,
    gauss_legendre01,
    map_replicates,
    replicate_engines,
    simplex_pair_map,
)

SHIFT_WINDOW = 20.0
FORMS = ("printed", "derived")
_CHUNK_ELEMENTS = 1 << 19


@dataclass(frozen=True)
class AmplifierSpec:
    theta1: float
    P: Polynomial

    def __post_init__(self):
        if not 0.0 < self.theta1 < 0.25:
            raise DomainError(f"theta1 must lie in (0, 0.25), got {self.theta1}")
        if self.P.degree > MAX_DEGREE:
            raise DomainError(f"amplifier degree must be <= {MAX_DEGREE}")


@dataclass(frozen=True)
class ScaledShifts:
    a1: complex = 0j
    a2: complex = 0j
    a3: complex = 0j
    b1: complex = 0j
    b2: complex = 0j
    b3: complex = 0j

    def __post_init__(self):
        for name in ("a1", "a2", "a3", "b1", "b2", "b3"):
            val = complex(getattr(self, name))
            if not abs(val) <= SHIFT_WINDOW:
                raise DomainError(f"|{name}| must be <= {SHIFT_WINDOW}, got {abs(val):.4g}")
            object.__setattr__(self, name, val)

    @classmethod
    def gap_point(cls, lam: float, eta: float) -> ScaledShifts:
        """Shift point of the large-gap argument: a2 = -b2 = i pi lam, a3 = -b3 = 2 pi i eta."""
        return cls(0j, 1j * np.pi * lam, 2j * np.pi * eta, 0j, -1j * np.pi * lam, -2j * np.pi * eta)

    def swapped(self) -> ScaledShifts:
        return ScaledShifts(self.b1, self.b2, self.b3, self.a1, self.a2, self.a3)

    def conjugated(self) -> ScaledShifts:
        c = np.conj
        return ScaledShifts(c(self.a1), c(self.a2), c(self.a3), c(self.b1), c(self.b2), c(self.b3))


@dataclass(frozen=True)
class GapParams:
    """k is the derivative order; k = 0 makes every Q factor identically 1."""

    k: int
    lam: float
    v: float = 0.2
    eta: float = 0.5
    j: int = 0

    def __post_init__(self):
        if self.k < 0:
            raise DomainError(f"k must be >= 0, got {self.k}")
        if self.j not in (0, 1):
            raise DomainError(f"j must be 0 or 1, got {self.j}")
        if not self.lam >= 0:
            raise DomainError(f"lambda must be >= 0, got {self.lam}")

    @property
    def Q(self) -> Polynomial:
        return Polynomial.power_of_linear(0.5, 1.0, self.k)

    @property
    def R(self) -> Polynomial:
        return Polynomial((self.v + 1.0, 1.0))

    def with_j(self, j: int) -> GapParams:
        return GapParams(self.k, self.lam, self.v, self.eta, j)


# --------------------------------------------------------------------------
# literal integrands on points of the unit 9-cube (last axis ordered as
# x, x1, x2, x3, x4, t1, t2, t3, t4)


def _unpack(pts):
    pts = np.asarray(pts, dtype=float)
    return [pts[..., i] for i in range(9)]


def in_region(pts) -> np.ndarray:
    x, x1, x2, x3, x4, *_ = _unpack(pts)
    return (x + x1 + x2 <= 1.0) & (x + x3 + x4 <= 1.0)


def linear_form(pts, theta1: float) -> dict[str, np.ndarray]:
    """Coefficient of each scaled shift in the integrand's exponent."""
    x, x1, x2, x3, x4, t1, t2, t3, t4 = _unpack(pts)
    th = theta1
    L1 = 1 - th * (x1 + x3)
    L2 = 1 - th * (x2 + x4)
    return {
        "a1": -th * x3 + th * (x3 - x4) * t3 - L1 * t1 * (1 - t3) - L2 * t2 * t3,
        "a2": -th * x4 - th * (x3 - x4) * t3 - L1 * t1 * t3 - L2 * t2 * (1 - t3),
        "a3": -th * (x + x1 + x2),
        "b1": -th * x1 + th * (x1 - x2) * t4 - L1 * t1 * (1 - t4) - L2 * t2 * t4,
        "b2": -th * x2 - th * (x1 - x2) * t4 - L1 * t1 * t4 - L2 * t2 * (1 - t4),
        "b3": -th * (x + x3 + x4),
    }


def shift_exponent(pts, s: ScaledShifts, theta1: float) -> np.ndarray:
    """Exponent of the shift factors, written out term by term."""
    x, x1, x2, x3, x4, t1, t2, t3, t4 = _unpack(pts)
    th = theta1
    y1 = -(
        (s.a3 + s.b3) * x
        + s.a3 * (x1 + x2)
        + s.b3 * (x3 + x4)
        + s.b1 * x1
        + s.b2 * x2
        + s.a1 * x3
        + s.a2 * x4
        + (s.a2 - s.a1) * (x3 - x4) * t3
        + (s.b2 - s.b1) * (x1 - x2) * t4
    )
    e13 = -(s.a1 + s.b1) * t1 - (s.a2 - s.a1) * t1 * t3 - (s.b2 - s.b1) * t1 * t4
    e24 = -(s.a2 + s.b2) * t2 + (s.a2 - s.a1) * t2 * t3 + (s.b2 - s.b1) * t2 * t4
    # log y1 = theta1 log T, and log(T y1^{-xi-xj}) = (1 - theta1 (xi + xj)) log T
    return th * y1 + (1 - th * (x1 + x3)) * e13 + (1 - th * (x2 + x4)) * e24


def _polynomial_part(pts, amp: AmplifierSpec) -> np.ndarray:
    x, x1, x2, x3, x4, t1, t2, t3, t4 = _unpack(pts)
    th = amp.theta1
    L1 = 1 - th * (x1 + x3)
    L2 = 1 - th * (x2 + x4)
    bracket_b = th * (x1 - x2) + L1 * t1 - L2 * t2
    bracket_a = th * (x3 - x4) + L1 * t1 - L2 * t2
    return L1 * L2 * bracket_b * bracket_a * amp.P(1 - x - x1 - x2) * amp.P(1 - x - x3 - x4)


def general_integrand(pts, s: ScaledShifts, amp: AmplifierSpec) -> np.ndarray:
    """Integrand of c(a, b); zero outside the region."""
    return np.where(in_region(pts), np.exp(shift_exponent(pts, s, amp.theta1)) * _polynomial_part(pts, amp), 0.0)


def operator_integrand(pts, s: ScaledShifts, gp: GapParams, amp: AmplifierSpec) -> np.ndarray:
    """Integrand of the Q/R-operated c(a, b) at arbitrary shifts."""
    c = linear_form(pts, amp.theta1)
    Q, R = gp.Q, gp.R
    ops = Q(c["a1"]) * Q(c["a2"]) * Q(c["b1"]) * Q(c["b2"])
    if gp.j:
        ops = ops * (R(c["a1"] + c["a2"] + c["a3"]) * R(c["b1"] + c["b2"] + c["b3"])) ** gp.j
    return general_integrand(pts, s, amp) * ops


def printed_integrand(pts, gp: GapParams, amp: AmplifierSpec) -> np.ndarray:
    """Closed-form integrand of c_{k,j}(lambda, v, eta); eta does not enter."""
    x, x1, x2, x3, x4, t1, t2, t3, t4 = _unpack(pts)
    th, lam, k = amp.theta1, gp.lam, gp.k
    L1 = 1 - th * (x1 + x3)
    L2 = 1 - th * (x2 + x4)
    phase = th * lam * np.pi * (x2 - x4 - (x3 - x4) * t3 + (x1 - x2) * t4) - lam * np.pi * (L1 * t1 - L2 * t2) * (
        t3 - t4
    )
    qa1 = 0.5 - th * x3 + th * (x3 - x4) * t3 - L1 * t1 * (1 - t3) - L2 * t2 * t3
    qa2 = 0.5 - th * x4 - th * (x3 - x4) * t3 - L1 * t1 * t3 - L2 * t2 * (1 - t3)
    qb1 = 0.5 - th * x1 + th * (x1 - x2) * t4 - L1 * t1 * (1 - t4) - L2 * t2 * t4
    qb2 = 0.5 - th * x2 - th * (x1 - x2) * t4 - L1 * t1 * t4 - L2 * t2 * (1 - t4)
    r = gp.v + 1 - th * (x + x1 + x2 + x3 + x4) - L1 * t1 - L2 * t2
    val = (np.cos(phase) + 1j * np.sin(phase)) * _polynomial_part(pts, amp) * (qa1 * qa2 * qb1 * qb2) ** k
    val = val * r ** (2 * gp.j)
    return np.where(in_region(pts), val, 0.0)


# --------------------------------------------------------------------------
# factorized tensor evaluation: outer simplex points times Gauss-Legendre
# over t1, t2 with the t3 and t4 integrals done separately


@dataclass(frozen=True)
class _Kernel:
    """What the tensor evaluator needs; one instance per (form, parameters)."""

    theta1: float
    P: Polynomial
    Q: Polynomial | None
    R: Polynomial | None
    shifts: ScaledShifts
    printed_k: int | None = None
    orders: tuple[int, int] = (16, 16)


def _gauss_orders(deg12: int, freq12: float, deg3: int, freq3: float, override: int | None) -> tuple[int, int]:
    if override is not None:
        return override, override
    # empirical: high-degree coefficients in t1, t2 are small, so a quarter of
    # the degree suffices there; node-doubling puts the error near 1e-9
    n12 = math.ceil(deg12 / 4 + 0.5 * freq12) + 4
    n3 = math.ceil(deg3 / 2 + 0.5 * freq3) + 4
    return n12, n3


def _orders_for(s: ScaledShifts, theta1: float, P: Polynomial, qdeg: int, rdeg: int, override) -> tuple[int, int]:
    freq12 = abs(s.a1 + s.b1) + abs(s.a2 + s.b2) + abs(s.a2 - s.a1) + abs(s.b2 - s.b1)
    freq3 = max(abs(s.a2 - s.a1), abs(s.b2 - s.b1)) * (1 + theta1)
    return _gauss_orders(2 + 4 * qdeg + 2 * rdeg, freq12, 2 * qdeg, freq3, override)


def _tensor_values(xs: np.ndarray, jac: np.ndarray, ker: _Kernel) -> np.ndarray:
    """Per outer point: integral over t1..t4 for R-power 0 and R-power 2, shape (n, 2)."""
    n12, n3 = ker.orders
    g12, w12 = gauss_legendre01(n12)
    g3, w3 = gauss_legendre01(n3)
    th = ker.theta1
    s = ker.shifts
    out = np.empty((xs.shape[0], 2), dtype=complex)
    step = max(1, _CHUNK_ELEMENTS // (n12 * n12 * n3))
    W = w12[:, None] * w12[None, :]
    t1 = g12[None, :, None]
    t2 = g12[None, None, :]
    tt = g3[None, None, None, :]
    for lo in range(0, xs.shape[0], step):
        blk = xs[lo : lo + step]
        x, x1, x2, x3, x4 = (blk[:, i][:, None, None] for i in range(5))
        L1 = 1 - th * (x1 + x3)
        L2 = 1 - th * (x2 + x4)
        D = L1 * t1 - L2 * t2
        Ea = th * (x3 - x4) + D
        Eb = th * (x1 - x2) + D
        ca1 = -th * x3 - L1 * t1
        ca2 = -th * x4 - L2 * t2
        cb1 = -th * x1 - L1 * t1
        cb2 = -th * x2 - L2 * t2
        racc = -th * (x + x1 + x2 + x3 + x4) - L1 * t1 - L2 * t2
        poly = L1 * L2 * Ea * Eb * ker.P(1 - x - x1 - x2) * ker.P(1 - x - x3 - x4)
        Ea4, Eb4 = Ea[..., None], Eb[..., None]
        if ker.printed_k is not None:
            k = ker.printed_k
            lam_pi = (s.a2 - s.a1).imag
            base_phase = th * lam_pi * (x2 - x4)
            base = np.cos(base_phase) + 1j * np.sin(base_phase)
            pa = -lam_pi * Ea4 * tt
            pb = lam_pi * Eb4 * tt
            fa = (np.cos(pa) + 1j * np.sin(pa)) * ((0.5 + ca1[..., None] + Ea4 * tt) * (0.5 + ca2[..., None] - Ea4 * tt)) ** k
            fb = (np.cos(pb) + 1j * np.sin(pb)) * ((0.5 + cb1[..., None] + Eb4 * tt) * (0.5 + cb2[..., None] - Eb4 * tt)) ** k
            rr = ker.R(racc) ** 2 if ker.R is not None else None
        else:
            e0 = -th * (
                (s.a3 + s.b3) * x + s.a3 * (x1 + x2) + s.b3 * (x3 + x4) + s.b1 * x1 + s.b2 * x2 + s.a1 * x3 + s.a2 * x4
            ) - L1 * (s.a1 + s.b1) * t1 - L2 * (s.a2 + s.b2) * t2
            base = np.exp(e0)
            fa = np.exp(-(s.a2 - s.a1) * Ea4 * tt)
            fb = np.exp(-(s.b2 - s.b1) * Eb4 * tt)
            if ker.Q is not None:
                Q = ker.Q
                fa = fa * Q(ca1[..., None] + Ea4 * tt) * Q(ca2[..., None] - Ea4 * tt)
                fb = fb * Q(cb1[..., None] + Eb4 * tt) * Q(cb2[..., None] - Eb4 * tt)
            rr = None
            if ker.R is not None:
                # the t3 and t4 terms cancel inside each R argument
                rr = ker.R(ca1 + ca2 - th * (x + x1 + x2)) * ker.R(cb1 + cb2 - th * (x + x3 + x4))
        Fa = np.einsum("bijk,k->bij", fa, w3)
        Fb = np.einsum("bijk,k->bij", fb, w3)
        core = base * poly * Fa * Fb
        v0 = np.einsum("bij,ij->b", core, W)
        v1 = np.einsum("bij,ij->b", core * rr, W) if rr is not None else np.full_like(v0, np.nan)
        out[lo : lo + step, 0] = v0 * jac[lo : lo + step]
        out[lo : lo + step, 1] = v1 * jac[lo : lo + step]
    return out


# --------------------------------------------------------------------------
# replicate engine

_CUBE_CHUNK = 1 << 15


def _run(ker: _Kernel, literal, budget: QuadratureBudget, threads: int | None) -> tuple[MomentEstimate, MomentEstimate]:
    """Estimate the R-power-0 and R-power-2 integrals on shared points."""
    n = budget.n_points
    if budget.scheme == "tensor":
        engines = replicate_engines(5, budget.n_replicates, budget.seed)

        def one(engine):
            xs, jac = simplex_pair_map(engine.random(n))
            return _tensor_values(xs, jac, ker).sum(axis=0) / n

        n_eff = n * ker.orders[0] ** 2 * ker.orders[1] * 2
    else:
        engines = replicate_engines(9, budget.n_replicates, budget.seed)

        def one(engine):
            acc = np.zeros(2, dtype=complex)
            for _ in range(0, n, _CUBE_CHUNK):
                acc += literal(engine.random(min(_CUBE_CHUNK, n))).sum(axis=0)
            return acc / n

        n_eff = n
    reps = np.array(map_replicates(one, engines, threads))
    return MomentEstimate.from_replicates(reps[:, 0], n_eff), MomentEstimate.from_replicates(reps[:, 1], n_eff)


def _general_kernel(s: ScaledShifts, amp: AmplifierSpec, budget: QuadratureBudget) -> _Kernel:
    orders = _orders_for(s, amp.theta1, amp.P, 0, 0, budget.gauss_order)
    return _Kernel(amp.theta1, amp.P, None, None, s, None, orders)


def _operator_kernel(s: ScaledShifts, gp: GapParams, amp: AmplifierSpec, budget: QuadratureBudget) -> _Kernel:
    orders = _orders_for(s, amp.theta1, amp.P, gp.k, 1, budget.gauss_order)
    return _Kernel(amp.theta1, amp.P, gp.Q, gp.R, s, None, orders)


def _printed_kernel(gp: GapParams, amp: AmplifierSpec, budget: QuadratureBudget) -> _Kernel:
    s = ScaledShifts.gap_point(gp.lam, 0.0)
    orders = _orders_for(s, amp.theta1, amp.P, gp.k, 1, budget.gauss_order)
    return _Kernel(amp.theta1, amp.P, None, gp.R, s, gp.k, orders)


def c_general(
    shifts: ScaledShifts, amp: AmplifierSpec, budget: QuadratureBudget, threads: int | None = None
) -> MomentEstimate:
    """QMC estimate of c(a, b) at scaled shifts (Lebesgue measure on the 9-cube)."""

    def literal(pts):
        return np.stack([general_integrand(pts, shifts, amp), np.zeros(pts.shape[0])], axis=1)

    return _run(_general_kernel(shifts, amp, budget), literal, budget, threads)[0]


def moment_pair(
    gp: GapParams,
    amp: AmplifierSpec,
    budget: QuadratureBudget,
    form: str = "printed",
    threads: int | None = None,
    shifts: ScaledShifts | None = None,
) -> tuple[MomentEstimate, MomentEstimate]:
    """c_{k,0} and c_{k,1} on identical points.

    ``form="printed"`` uses the closed-form integrand, ``form="derived"`` the
    operator route at ``shifts`` (default: the gap point for ``gp.lam``, ``gp.eta``).
    """
    if form == "printed":
        if shifts is not None:
            raise DomainError("the printed form is tied to the gap shift point")
        ker = _printed_kernel(gp, amp, budget)

        def literal(pts):
            return np.stack([printed_integrand(pts, gp.with_j(j), amp) for j in (0, 1)], axis=1)

    elif form == "derived":
        s = shifts or ScaledShifts.gap_point(gp.lam, gp.eta)
        ker = _operator_kernel(s, gp, amp, budget)

        def literal(pts):
            return np.stack([operator_integrand(pts, s, gp.with_j(j), amp) for j in (0, 1)], axis=1)

    else:
        raise DomainError(f"form must be one of {FORMS}, got {form!r}")
    return _run(ker, literal, budget, threads)


def apply_shift_operators(
    gp: GapParams,
    amp: AmplifierSpec,
    budget: QuadratureBudget,
    shifts: ScaledShifts | None = None,
    threads: int | None = None,
) -> MomentEstimate:
    """Q/R operators applied to c(a, b) through the linear form, then evaluated at the shifts."""
    return moment_pair(gp, amp, budget, "derived", threads, shifts)[gp.j]


def c_kj(gp: GapParams, amp: AmplifierSpec, budget: QuadratureBudget, threads: int | None = None) -> MomentEstimate:
    """c_{k,j}(lambda, v, eta) from the closed-form integrand."""
    return moment_pair(gp, amp, budget, "printed", threads)[gp.j]


# --------------------------------------------------------------------------
# the ratio h_k and what is built on it


@dataclass(frozen=True)
class HRatio:
    estimate: float
    ci95: tuple[float, float]
    stderr: float
    delta_ci95: tuple[float, float]
    c_k0: MomentEstimate
    c_k1: MomentEstimate
    replicate_ratios: np.ndarray = field(repr=False)

    def excludes(self, value: float) -> bool:
        return not self.ci95[0] <= value <= self.ci95[1]


def ratio_from_pair(c0: MomentEstimate, c1: MomentEstimate, lam: float) -> HRatio:
    """h = Re c0 / (lam^2 Re c1) with a replicate-ratio CI and a delta-method cross-check."""
    r0 = c0.replicates.real
    r1 = c1.replicates.real
    n = r0.size
    tq = float(stats.t.ppf(0.975, n - 1))
    m0, m1 = r0.mean(), r1.mean()
    s1 = r1.std(ddof=1) / math.sqrt(n)
    if m1 - tq * s1 <= 0.0 <= m1 + tq * s1:
        raise IndeterminateRatioError(f"c_k1 = {m1:.4g} +- {tq * s1:.3g} straddles zero")
    est = m0 / (lam**2 * m1)
    ratios = r0 / (lam**2 * r1)
    se = float(ratios.std(ddof=1) / math.sqrt(n))
    cov = np.cov(r0, r1, ddof=1)
    dvar = est**2 * (cov[0, 0] / m0**2 + cov[1, 1] / m1**2 - 2 * cov[0, 1] / (m0 * m1)) / n if m0 else 0.0
    dse = math.sqrt(max(dvar, 0.0))
    return HRatio(
        float(est),
        (float(est - tq * se), float(est + tq * se)),
        se,
        (float(est - tq * dse), float(est + tq * dse)),
        c0,
        c1,
        ratios,
    )


def h_ratio(
    k: int,
    lam: float,
    v: float,
    eta: float,
    amp: AmplifierSpec,
    budget: QuadratureBudget,
    form: str = "printed",
    threads: int | None = None,
) -> HRatio:
    """h_k = c_{k,0} / (lam^2 c_{k,1}); values above 1 certify a large gap of size lam."""
    if not lam > 0:
        raise DomainError(f"lambda must be > 0, got {lam}")
    gp = GapParams(k, lam, v, eta)
    c0, c1 = moment_pair(gp, amp, budget, form, threads)
    return ratio_from_pair(c0, c1, lam)


@dataclass(frozen=True)
class LambdaScan:
    lambda_star: float
    h_at_star: HRatio
    history: list[tuple[float, float, float, float]]


def scan_lambda(
    k: int,
    v: float,
    eta: float,
    amp: AmplifierSpec,
    budget: QuadratureBudget,
    bracket: tuple[float, float],
    form: str = "printed",
    xtol: float = 1e-3,
    threads: int | None = None,
) -> LambdaScan:
    """Largest lambda with h_k(lambda) > 1, by bisection on common random numbers.

    Stops once the bracket is narrower than ``xtol`` or the CI at the
    midpoint contains 1. The returned lambda_star is the lower end of the
    final bracket, so h(lambda_star) > 1 with its CI clear of 1 unless the
    stop was CI-limited.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not 0 < lo < hi:
        raise BracketError(f"bracket must satisfy 0 < lo < hi, got [{lo}, {hi}]")

    def h(lam):
        return h_ratio(k, lam, v, eta, amp, budget, form, threads)

    h_lo, h_hi = h(lo), h(hi)
    history = [(lo, h_lo.estimate, *h_lo.ci95), (hi, h_hi.estimate, *h_hi.ci95)]
    if not (h_lo.ci95[0] > 1.0 and h_hi.ci95[1] < 1.0):
        raise BracketError(
            f"need h(lo) > 1 > h(hi) with CI separation; got h({lo})={h_lo.estimate:.5f}, h({hi})={h_hi.estimate:.5f}"
        )
    best = h_lo
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        hm = h(mid)
        history.append((mid, hm.estimate, *hm.ci95))
        if hm.ci95[0] > 1.0:
            lo, best = mid, hm
        elif hm.ci95[1] < 1.0:
            hi = mid
        else:
            # CI-limited: the crossing is within noise of mid
            return LambdaScan(mid, hm, history)
    return LambdaScan(lo, best, history)


def optimize_amplifier(
    k: int,
    lam: float,
    v: float,
    eta: float,
    degree: int,
    amp0: AmplifierSpec,
    budget: QuadratureBudget,
    restarts: int = 2,
    form: str = "printed",
    maxiter: int = 60,
    threads: int | None = None,
) -> AmplifierSpec:
    """Nelder-Mead search over P with P(0) fixed to 1 (h is invariant under P -> cP).

    Every evaluation reuses the same seed, so the objective is a smooth
    function of the coefficients. Only a local optimum is returned.
    """
    if not 0 <= degree <= 4:
        raise DomainError(f"degree must be in 0..4, got {degree}")
    c0 = amp0.P.coeffs[0]
    if c0 == 0.0:
        raise DomainError("starting polynomial must have P(0) != 0")
    if degree == 0:
        return AmplifierSpec(amp0.theta1, Polynomial((1.0,)))
    start = np.zeros(degree)
    tail = np.array(amp0.P.coeffs[1 : degree + 1]) / c0
    start[: tail.size] = tail

    def objective(c):
        P = Polynomial((1.0, *c))
        try:
            return -h_ratio(k, lam, v, eta, AmplifierSpec(amp0.theta1, P), budget, form, threads).estimate
        except IndeterminateRatioError:
            return np.inf

    best_x, best_f = start, objective(start)
    x = start
    for _ in range(restarts + 1):
        res = optimize.minimize(
            objective, x, method="Nelder-Mead", options={"maxiter": maxiter, "xatol": 1e-3, "fatol": 1e-6}
        )
        if res.fun < best_f:
            best_x, best_f = res.x, res.fun
        x = best_x
    return AmplifierSpec(amp0.theta1, Polynomial((1.0, *best_x)))


# --------------------------------------------------------------------------
# arithmetic constant


def d3_prime_power(j: int) -> int:
    """Number of ways to write p^j as an ordered product of three factors."""
    return (j + 1) * (j + 2) // 2


def local_factor(p: float, rtol: float = 1e-15) -> float:
    """(1 - 1/p)^9 sum_j d3(p^j)^2 / p^j, summed until the next term is below rtol."""
    x = 1.0 / p
    total, j, xj = 0.0, 0, 1.0
    while True:
        term = d3_prime_power(j) ** 2 * xj
        total += term
        if term < rtol * total * (1 - x):
            break
        j += 1
        xj *= x
    return (1 - x) ** 9 * total


def local_factor_closed(p: float) -> float:
    """Closed form (1 - x)^4 (1 + 4x + x^2) of the local factor, x = 1/p."""
    x = 1.0 / p
    return (1 - x) ** 4 * (1 + 4 * x + x * x)


def _log_factor_coeffs(n_max: int) -> np.ndarray:
    """Coefficients c_n of log((1 - x)^4 (1 + 4x + x^2)) = sum c_n x^n, n = 0..n_max."""
    c = np.zeros(n_max + 1)
    s_prev, s = 2.0, 4.0  # power sums of the roots 2 +- sqrt 3
    for n in range(1, n_max + 1):
        if n > 1:
            s_prev, s = s, 4 * s - s_prev
        c[n] = (-4.0 + (-1) ** (n + 1) * s) / n
    return c


def zeta_factor_exponents(m_max: int) -> np.ndarray:
    """e_m with (1 - x)^4 (1 + 4x + x^2) = prod_m (1 - x^m)^{e_m} as formal power series."""
    c = _log_factor_coeffs(m_max)
    e = np.zeros(m_max + 1)
    for n in range(1, m_max + 1):
        e[n] = -n * c[n] - sum(m * e[m] for m in range(1, n) if n % m == 0)
        e[n] /= n
    return np.rint(e)


def primes_upto(n: int) -> np.ndarray:
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for i in range(2, math.isqrt(n) + 1):
        if sieve[i]:
            sieve[i * i :: i] = False
    return np.nonzero(sieve)[0]


@dataclass(frozen=True)
class EulerConstant:
    value: float
    tail_bound: float
    prime_cutoff: int
    zeta_terms: int


def _tail_bound(e: np.ndarray, m_used: int, cutoff: int) -> float:
    """Bound on |log of the neglected product over p > cutoff| after removing zeta factors up to m_used."""
    n_max = m_used + 60
    c = _log_factor_coeffs(n_max)
    me = sum(m * abs(e[m]) for m in range(2, m_used + 1))
    tot = 0.0
    for n in range(m_used + 1, n_max + 1):
        bn = abs(c[n]) + me / n
        term = bn * float(cutoff) ** (1 - n) / (n - 1)
        tot += term
        if term < 1e-30 * max(tot, 1e-300):
            break
    return tot


def euler_constant_C(prime_cutoff: int, tol: float = 1e-8, accelerate: bool = True) -> EulerConstant:
    """prod_p (1 - 1/p)^9 sum_j d3(p^j)^2 / p^j with a certified tail bound.

    Primes up to the cutoff enter directly. Beyond it, the local factor is
    written as prod_m (1 - p^-m)^{e_m} times a remainder that is
    1 + O(p^-(M+1)); the first part is summed exactly through zeta(m) and the
    remainder is bounded. ``accelerate=False`` uses M = 1, the plain product.
    """
    if prime_cutoff < 1000:
        raise DomainError(f"prime_cutoff must be >= 1000, got {prime_cutoff}")
    ps = primes_upto(int(prime_cutoff)).astype(float)
    log_head = math.fsum(np.log(local_factor_closed(ps)))
    # the series form is the definition; spot-check it against the closed form
    for p in ps[:5]:
        if abs(local_factor(p) / local_factor_closed(p) - 1) > 1e-13:
            raise ToleranceNotMetError("local factor series disagrees with its closed form", math.inf)
    m_max = 12
    e = zeta_factor_exponents(m_max)
    m_used = 1
    if accelerate:
        for m in range(2, m_max + 1):
            m_used = m
            if _tail_bound(e, m, prime_cutoff) < tol / 100:
                break
    log_zeta_tail = 0.0
    for m in range(2, m_used + 1):
        # log of prod_{p > cutoff} (1 - p^-m)^-1
        lz = math.log(float(_riemann_zeta(m, 1))) + math.fsum(np.log1p(-(ps**-m)))
        log_zeta_tail += -e[m] * lz
    tau = _tail_bound(e, m_used, prime_cutoff)
    value = math.exp(log_head + log_zeta_tail)
    bound = value * math.expm1(tau)
    if bound > tol:
        raise ToleranceNotMetError(f"tail bound {bound:.3e} exceeds tolerance {tol:.1e}", bound)
    return EulerConstant(value, bound, int(prime_cutoff), m_used)
