import math

import mpmath as mp
import numpy as np
import pytest

from semitrace import specfun as sf
from semitrace.geometry import DomainError


def F_mp(s, x):
    s, x = mp.mpf(s), mp.mpf(x)
    return -(x * mp.log(s / x) + (1 - x) * mp.log((1 - s) / (1 - x)))


def test_beta_against_gamma():
    for a, b in [(1, 1), (2.5, 0.5), (7, 3.25)]:
        ref = math.gamma(a) * math.gamma(b) / math.gamma(a + b)
        assert sf.beta(a, b) == pytest.approx(ref, rel=1e-14)


def test_f_kernel_hand_value():
    assert float(sf.f_kernel(0.25, 0.5)) == pytest.approx(0.1438410, abs=5e-8)


def test_f_kernel_near_diagonal_against_mpmath():
    # the closed form cancels catastrophically here; the oracle uses 50 digits
    mp.mp.dps = 50
    for s, x in [(0.3, 0.3 + 1e-7), (0.5, 0.5 + 1e-4), (0.9, 0.9 + 3e-6)]:
        ref = float(F_mp(s, x))
        assert float(sf.f_kernel(s, x)) == pytest.approx(ref, rel=1e-9)
    mp.mp.dps = 15


def test_f_kernel_domain():
    with pytest.raises(DomainError):
        sf.f_kernel(0.6, 0.5)
    assert float(sf.f_kernel(0.4, 0.4)) == 0.0


@pytest.mark.parametrize("m,t", [(1, 0.0), (2, 1.5), (3, -0.5), (3, -0.9), (4, 3.0)])
def test_transform_F_constant_profile(m, t):
    for s in (0.0, 0.2, 0.7, 0.99, 0.999):
        ref = float(mp.betainc(m, t + 1, s, 1))
        assert sf.transform_F(m, t, 1.0, s) == pytest.approx(ref, rel=1e-11)


def test_transform_F_log_profile():
    prof = sf.RadialProfile(lambda x: -np.log(np.asarray(x)), (0.0, 0.0), "log")
    ref = float(mp.quad(lambda x: x * (1 - x) ** 2 * -mp.log(x), [0.1, 1]))
    assert sf.transform_F(2, 2.0, prof, 0.1) == pytest.approx(ref, rel=1e-11)


@pytest.mark.parametrize("t", [0.0, 1.5])
def test_rho_disk_against_double_integral(t):
    for s in (0.05, 0.4, 0.8):
        inner = mp.quad(lambda x: (1 - x) ** t / x * F_mp(s, x), [s, (s + 1) / 2, 1])
        ref = float((t + 1) / (16 * mp.pi**2) * inner)
        assert sf.rho_disk(t, s) == pytest.approx(ref, rel=1e-9)
        assert sf.rho_disk(t, s, cached=False) == pytest.approx(ref, rel=1e-10)


def test_rho_disk_log_singularity():
    # rho_t(s) / ln(1/s) tends to a positive constant as s -> 0
    r = [sf.rho_disk(0.0, s) / math.log(1 / s) for s in (1e-6, 1e-8, 1e-10)]
    assert all(v > 0 for v in r)
    assert abs(r[2] - r[1]) < abs(r[1] - r[0])


def test_rho_ball_reduces_to_disk():
    s = np.linspace(0.05, 0.95, 9)
    for t in (0.0, 3.0):
        a = s**2 * np.asarray(sf.rho_ball(1, t, s)) / 16
        assert np.allclose(a, sf.rho_disk(t, s), rtol=1e-9)


def test_profile_cache_consistency():
    assert sf.rho_disk_cache(1.0).consistency() < 1e-9
    assert sf.rho_ball_cache(2, 3.0).consistency() < 1e-9


def test_sum_series_zeta2():
    val, used, est = sf.sum_series(lambda j: 1.0 / (j + 1.0) ** 2)
    assert val == pytest.approx(math.pi**2 / 6, rel=1e-10)
    assert est > 0


def test_f_phi_zero_methods_agree():
    for n in (1, 2):
        for t in (0.0, 2.5):
            a = sf.f_phi_zero(n, t, "series")
            b = sf.f_phi_zero(n, t, "integral")
            c = sf.f_phi_zero(n, t, "profile")
            assert a == pytest.approx(b, rel=1e-10)
            assert c == pytest.approx(b, rel=1e-8)


def test_a_coeff_phase():
    for n in (1, 2):
        v = sf.a_coeff(n, 1.0) * (2j * math.pi) ** n
        assert abs(v.imag) < 1e-15 and v.real > 0


def test_d_matrix_against_sphere_average():
    z = np.array([0.3 + 0.2j, -0.4 + 0.1j])
    D = sf.d_matrix(z)
    E = np.eye(2, dtype=int)
    Dq = np.array([[sf.d_coeff(E[i], E[j], z) for j in range(2)] for i in range(2)])
    assert np.allclose(D, Dq, atol=1e-13)


def test_transform_shift_series_matches_definition():
    # sum_j F_{m+k+j} 1(0)/(k+j) with F_p 1(0) = B(p, t+1)
    m, k, t = 2, 1, 0.5
    # terms decay like j^{-5/2}; the default nsum extrapolation is too loose for that
    ref = float(mp.nsum(lambda j: mp.beta(m + k + j, t + 1) / (k + j), [0, mp.inf],
                        method="euler-maclaurin"))
    assert sf.transform_shift_series(m, k, t, 1.0) == pytest.approx(ref, rel=1e-9)
