"""Riemann-Siegel theta, zeta on the critical line, and Hardy's Z with derivatives.

Every evaluator works on Taylor jets: arrays whose column ``m`` holds the
``m``-th Taylor coefficient (or derivative) at the evaluation point.

* theta is evaluated from its Stirling-type asymptotic series, differentiated
  term by term.
* zeta(s) and its s-derivatives come from Euler-Maclaurin summation in which
  every ingredient (n^-s, 1/(s-1), the rising factorials) is carried as a
  truncated power series in s.
* Z^(j)(t) follows from Z = exp(i theta) zeta(1/2 + it): the exponential of the
  theta jet (Faa di Bruno, in recurrence form) times the zeta jet along t.

Z is even, Z(-t) = Z(t); only t > 0 is evaluated and callers that need the
reflection use that identity directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import bernoulli

from .errors import DomainError, NumericalConsistencyError, UnsupportedOrderError

T_MIN = 10.0
T_MAX = 1.0e5
MAX_THETA_ORDER = 12
MAX_ZETA_ORDER = 12
MAX_Z_ORDER = 10
IMAG_RESIDUE_RTOL = 1e-8

# theta(t) ~ (t/2) log(t/2pi) - t/2 - pi/8 + sum_n THETA_COEFFS[n-1] t^(1-2n).
# The 10th term is below 1e-19 at t = 10.
_N_THETA_TERMS = 10
_B = bernoulli(2 * 60)
THETA_COEFFS = np.array(
    [(1 - 2.0 ** (1 - 2 * n)) * abs(_B[2 * n]) / (4 * n * (2 * n - 1)) for n in range(1, _N_THETA_TERMS + 1)]
)
# B_{2j} / (2j)! for the Euler-Maclaurin correction terms.
_EM_COEFFS = np.array([_B[2 * j] / math.factorial(2 * j) for j in range(1, 61)])

# |theta^(j)(t)| <= THETA_DERIV_BOUND[j] * t^(1-j) for t >= 10, j >= 2.
THETA_DERIV_BOUND = {j: float(math.factorial(j - 2)) for j in range(2, MAX_THETA_ORDER + 1)}


@dataclass(frozen=True)
class ThetaJet:
    t: float
    derivs: np.ndarray


@dataclass(frozen=True)
class ZetaJet:
    """zeta^(m)(1/2 + it) for m = 0..K (derivatives with respect to s)."""

    t: float
    derivs: np.ndarray


@dataclass(frozen=True)
class ZJet:
    t: float
    derivs: np.ndarray
    imag_residue: float


def _check_order(K: int, kmax: int) -> None:
    if K < 0:
        raise DomainError(f"derivative order must be >= 0, got {K}")
    if K > kmax:
        raise UnsupportedOrderError(f"derivative order {K} exceeds supported maximum {kmax}")


def _as_heights(t, tmax: float | None) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(~np.isfinite(t)) or np.any(t < T_MIN):
        raise DomainError(f"heights must satisfy t >= {T_MIN}")
    if tmax is not None and np.any(t > tmax):
        raise DomainError(f"heights must satisfy t <= {tmax:g}")
    return t


def _falling(p: float, j: int) -> float:
    out = 1.0
    for i in range(j):
        out *= p - i
    return out


def theta_derivatives(t, K: int) -> np.ndarray:
    """Return theta^(j)(t) for j = 0..K as an array of shape (len(t), K+1)."""
    _check_order(K, MAX_THETA_ORDER)
    t = _as_heights(t, None)
    out = np.zeros((t.size, K + 1))
    logt = np.log(t / (2 * np.pi))
    out[:, 0] = 0.5 * t * logt - 0.5 * t - np.pi / 8
    if K >= 1:
        out[:, 1] = 0.5 * logt
    for j in range(2, K + 1):
        out[:, j] = 0.5 * (-1) ** j * math.factorial(j - 2) * t ** (1 - j)
    for n, c in enumerate(THETA_COEFFS, start=1):
        p = 1 - 2 * n
        for j in range(K + 1):
            out[:, j] += c * _falling(p, j) * t ** (p - j)
    return out


def theta_jet(t: float, K: int = 0) -> ThetaJet:
    """theta(t) and its first K derivatives; absolute error below 1e-10 for t >= 10."""
    return ThetaJet(float(t), theta_derivatives(t, K)[0])


def _jet_mul_linear(jet: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Multiply a power series in h by (c + h), truncating at the jet length."""
    out = jet * c[:, None]
    out[:, 1:] += jet[:, :-1]
    return out


def _exp_log_jet(logx: float, K: int) -> np.ndarray:
    """Taylor coefficients of x^-h: (-log x)^m / m!."""
    return np.array([(-logx) ** m / math.factorial(m) for m in range(K + 1)])


def _em_length(tmax: float) -> int:
    # keeps |s| / (2 pi N) <= 0.4 so the Bernoulli corrections converge fast
    return int(math.ceil(tmax / (2 * np.pi * 0.4))) + 30


def _zeta_taylor_batch(t: np.ndarray, K: int) -> np.ndarray:
    N = _em_length(float(t.max()))
    s0 = 0.5 + 1j * t
    n = np.arange(1, N)
    if t.max() > 1.0e4:
        # t log n reaches 1e6; reduce the phase in extended precision
        tl = t.astype(np.longdouble)[:, None] * np.log(n.astype(np.longdouble))[None, :]
        phase = np.asarray(np.fmod(tl, 2 * np.pi), dtype=float)
    else:
        phase = t[:, None] * np.log(n)[None, :]
    terms = (np.cos(phase) - 1j * np.sin(phase)) * (n ** -0.5)[None, :]
    logn = np.log(n)
    lpow = np.stack([(-logn) ** m / math.factorial(m) for m in range(K + 1)], axis=1)
    out = np.einsum("bn,nm->bm", terms, lpow)

    # N^{-s} as a jet in h
    logN = math.log(N)
    if t.max() > 1.0e4:
        ph = np.asarray(np.fmod(t.astype(np.longdouble) * np.longdouble(logN), 2 * np.pi), dtype=float)
    else:
        ph = t * logN
    n_pow = (N ** -0.5) * (np.cos(ph) - 1j * np.sin(ph))
    n_jet = n_pow[:, None] * _exp_log_jet(logN, K)[None, :]

    # N^{1-s}/(s-1): geometric jet for 1/(s0 - 1 + h)
    inv = np.stack([(-1) ** m / (s0 - 1) ** (m + 1) for m in range(K + 1)], axis=1)
    out += N * _cauchy(n_jet, inv)
    out += 0.5 * n_jet

    # sum_j B_2j/(2j)! (s)_{2j-1} N^{-s-2j+1}, rising factorial scaled by N^{-(2j-1)}
    rising = np.zeros_like(n_jet)
    rising[:, 0] = 1.0
    rising = _jet_mul_linear(rising, s0) / N
    for j in range(1, len(_EM_COEFFS) + 1):
        if j > 1:
            rising = _jet_mul_linear(rising, s0 + (2 * j - 3)) / N
            rising = _jet_mul_linear(rising, s0 + (2 * j - 2)) / N
        term = _EM_COEFFS[j - 1] * _cauchy(rising, n_jet)
        out += term
        if np.max(np.abs(term)) < 1e-18:
            break
    else:
        raise NumericalConsistencyError("Euler-Maclaurin corrections did not converge")
    return out


def _cauchy(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Truncated product of two batches of power series."""
    K = a.shape[1] - 1
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=np.result_type(a, b))
    for m in range(K + 1):
        for i in range(m + 1):
            out[:, m] += a[:, i] * b[:, m - i]
    return out


def zeta_taylor(t, K: int) -> np.ndarray:
    """Taylor coefficients zeta^(m)(1/2+it)/m!, shape (len(t), K+1)."""
    _check_order(K, MAX_ZETA_ORDER)
    t = _as_heights(t, T_MAX)
    order = np.argsort(t, kind="stable")
    ts = t[order]
    out = np.empty((t.size, K + 1), dtype=complex)
    N = _em_length(float(ts[-1]))
    batch = max(1, (1 << 21) // N)
    for lo in range(0, ts.size, batch):
        out[order[lo : lo + batch]] = _zeta_taylor_batch(ts[lo : lo + batch], K)
    return out


def zeta_derivatives(t, K: int) -> np.ndarray:
    """zeta^(m)(1/2+it) for m = 0..K, shape (len(t), K+1)."""
    fact = np.array([math.factorial(m) for m in range(K + 1)], dtype=float)
    return zeta_taylor(t, K) * fact[None, :]


def zeta_jet(t: float, K: int = 0) -> ZetaJet:
    """zeta and its s-derivatives at 1/2 + it for 10 <= t <= 1e5."""
    return ZetaJet(float(t), zeta_derivatives(t, K)[0])


def z_derivatives_complex(t, K: int) -> np.ndarray:
    """Z^(j)(t) before realification, shape (len(t), K+1)."""
    _check_order(K, MAX_Z_ORDER)
    t = _as_heights(t, T_MAX)
    th = theta_derivatives(t, K)
    fact = np.array([math.factorial(m) for m in range(K + 1)], dtype=float)
    g = 1j * th / fact[None, :]

    # exp of the theta series: e_n = (1/n) sum_j j g_j e_{n-j}
    e = np.zeros((t.size, K + 1), dtype=complex)
    e[:, 0] = np.exp(g[:, 0])
    for m in range(1, K + 1):
        acc = np.zeros(t.size, dtype=complex)
        for j in range(1, m + 1):
            acc += j * g[:, j] * e[:, m - j]
        e[:, m] = acc / m

    # d/dt zeta(1/2+it) = i zeta'(s)
    z = zeta_taylor(t, K) * (1j ** np.arange(K + 1))[None, :]
    return _cauchy(e, z) * fact[None, :]


def z_derivatives(t, K: int, check: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Real Z^(j)(t), j = 0..K, and the per-height discarded imaginary residue."""
    zc = z_derivatives_complex(t, K)
    residue = np.max(np.abs(zc.imag), axis=1)
    if check:
        scale = np.maximum(1.0, np.max(np.abs(zc.real), axis=1))
        bad = residue > IMAG_RESIDUE_RTOL * scale
        if np.any(bad):
            i = int(np.argmax(bad))
            raise NumericalConsistencyError(
                f"imaginary residue {residue[i]:.3e} at t={np.atleast_1d(t)[i]} exceeds tolerance"
            )
    return zc.real, residue


def z_jet(t: float, K: int = 0) -> ZJet:
    """Z(t) and its first K derivatives, realified, with the discarded residue."""
    vals, res = z_derivatives(t, K)
    return ZJet(float(t), vals[0], float(res[0]))
