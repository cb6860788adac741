import math

import mpmath as mp
import numpy as np
import pytest

from zgaps import zfunc
from zgaps.errors import DomainError, UnsupportedOrderError

FIRST_ZERO = 14.134725141734693


@pytest.mark.parametrize("t", [10.0, 17.8, 100.0, 523.7, 5000.0, 99999.0])
def test_theta_matches_mpmath(t):
    got = zfunc.theta_derivatives(np.array([t]), 3)[0]
    want = [float(mp.siegeltheta(t, derivative=d)) for d in range(4)]
    np.testing.assert_allclose(got[0], want[0], rtol=0, atol=1e-10 * max(1.0, abs(want[0])))
    np.testing.assert_allclose(got[1:], want[1:], rtol=1e-10, atol=1e-13)


def test_theta_prime_asymptotic_and_richardson():
    t, h = 1000.0, 1e-3
    th = lambda s: zfunc.theta_jet(s).derivs[0]  # noqa: E731
    d1 = (th(t + h) - th(t - h)) / (2 * h)
    d2 = (th(t + h / 2) - th(t - h / 2)) / h
    rich = (4 * d2 - d1) / 3
    jet = zfunc.theta_jet(t, 1).derivs[1]
    assert abs(jet - rich) < 1e-6
    assert abs(jet - 0.5 * math.log(t / (2 * math.pi))) < 1e-4
    assert abs(jet - 0.5 * math.log(t / (2 * math.pi))) <= 1 / (4 * t**2)


def test_theta_second_derivative_bound():
    d2 = zfunc.theta_jet(100.0, 2).derivs[2]
    assert 0 < d2 <= zfunc.THETA_DERIV_BOUND[2] / 100


def test_theta_gram_root_near_17_8():
    from scipy.optimize import brentq

    root = brentq(lambda s: zfunc.theta_jet(s).derivs[0], 15.0, 20.0, xtol=1e-12)
    assert abs(root - 17.8) < 0.1
    assert abs(root - float(mp.findroot(mp.siegeltheta, 17.8))) < 1e-9


def test_theta_prime_increasing_on_grid():
    t = np.linspace(10, 1e5, 10_000)
    d1 = zfunc.theta_derivatives(t, 1)[:, 1]
    assert np.all(np.diff(d1) > 0)


@pytest.mark.parametrize("t", [14.0, 100.0, 500.0, 4321.5, 30000.0])
def test_zeta_matches_mpmath(t):
    got = zfunc.zeta_derivatives(np.array([t]), 3)[0]
    s = mp.mpc(0.5, t)
    for m in range(4):
        want = complex(mp.zeta(s, derivative=m))
        # absolute 1e-9 for the value, relative to magnitude for higher derivatives
        assert abs(got[m] - want) < 1e-9 * max(1.0, abs(want)), (m, got[m], want)


def test_zeta_first_zero_and_conjugation():
    v = zfunc.zeta_jet(14.1347251417, 0).derivs[0]
    assert abs(v) < 1e-6
    # Schwarz reflection: the jet at -t is the conjugate, checked against mpmath
    jet = zfunc.zeta_jet(250.0, 2).derivs
    for m in range(3):
        below = complex(mp.zeta(mp.mpc(0.5, -250.0), derivative=m))
        assert abs(jet[m].conjugate() - below) < 1e-9 * max(1.0, abs(below))


def test_zeta_derivative_finite_difference():
    t, h = 500.0, 1e-4
    f = lambda s: zfunc.zeta_jet(s).derivs[0]  # noqa: E731
    # d/dt zeta(1/2 + it) = i zeta'(1/2 + it)
    fd = (f(t + h) - f(t - h)) / (2 * h)
    assert abs(1j * zfunc.zeta_jet(t, 1).derivs[1] - fd) < 1e-6


@pytest.mark.parametrize("t", [20.0, 505.0, 2000.0])
def test_z_matches_mpmath(t):
    vals, _ = zfunc.z_derivatives(np.array([t]), 4)
    want = [float(mp.siegelz(t, derivative=d)) for d in range(5)]
    np.testing.assert_allclose(vals[0], want, rtol=1e-9, atol=1e-9)


def test_z_modulus_equals_zeta_modulus_random():
    rng = np.random.default_rng(3)
    t = rng.uniform(100, 1e4, 1000)
    z = zfunc.z_derivatives(t, 0)[0][:, 0]
    zeta = zfunc.zeta_derivatives(t, 0)[:, 0]
    scale = np.maximum(np.abs(zeta), 1e-3)
    assert np.max(np.abs(np.abs(z) - np.abs(zeta)) / scale) < 1e-10


def test_z_squared_identity_at_523_7():
    z = zfunc.z_jet(523.7).derivs[0]
    zeta = zfunc.zeta_jet(523.7).derivs[0]
    assert abs(z**2 - abs(zeta) ** 2) <= 1e-10 * abs(zeta) ** 2


def test_z_second_derivative_five_point_stencil():
    t, h = 505.0, 1e-3
    f = lambda s: zfunc.z_jet(s).derivs[0]  # noqa: E731
    fd = (-f(t + 2 * h) + 16 * f(t + h) - 30 * f(t) + 16 * f(t - h) - f(t - 2 * h)) / (12 * h * h)
    assert abs(zfunc.z_jet(505.0, 2).derivs[2] - fd) < 1e-4


def test_z_sign_change_at_first_zero():
    assert zfunc.z_jet(FIRST_ZERO - 1e-3).derivs[0] * zfunc.z_jet(FIRST_ZERO + 1e-3).derivs[0] < 0


def test_z_imag_residue_small():
    jet = zfunc.z_jet(777.7, 10)
    assert jet.imag_residue <= 1e-8 * max(1.0, np.max(np.abs(jet.derivs)))


def test_domain_errors():
    with pytest.raises(DomainError):
        zfunc.z_jet(9.9)
    with pytest.raises(DomainError):
        zfunc.zeta_jet(1.1e5)
    with pytest.raises(DomainError):
        zfunc.theta_jet(5.0)
    with pytest.raises(UnsupportedOrderError):
        zfunc.theta_jet(100.0, 13)
    with pytest.raises(UnsupportedOrderError):
        zfunc.z_jet(100.0, 11)
    # domain errors are exit code 2 at the command line
    assert UnsupportedOrderError.exit_code == 2
