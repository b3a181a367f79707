import math

import mpmath as mp
import numpy as np
import pytest

from semitrace.geometry import SpaceParams
from semitrace.quadrature import (ResourceError, ball_rule, disk_rule, mc_rule_ball2_pair,
                                  product_rule, rudin_forelli_envelope, rudin_forelli_integral,
                                  rudin_forelli_ratios, sphere_rule)
from semitrace.specfun import beta


@pytest.mark.parametrize("t", [0.0, 1.5, -0.5])
def test_disk_rule_moments(t):
    # int |z|^{2k} d lambda_t = (t+1) B(k+1, t+1)
    rule = disk_rule(t, 24, 16)
    assert rule.total_weight == pytest.approx(1.0, rel=1e-13)
    for k in (1, 3, 7):
        got = rule.integrate(lambda z: np.abs(z[:, 0]) ** (2 * k))
        assert got == pytest.approx((t + 1) * beta(k + 1, t + 1), rel=1e-12)
    # a nonzero angular frequency integrates to zero
    assert abs(rule.integrate(lambda z: z[:, 0] ** 3 * np.conj(z[:, 0]))) < 1e-15


def test_disk_rule_lebesgue_area():
    rule = disk_rule(0.0, 8, 8, measure="lebesgue")
    assert rule.total_weight == pytest.approx(math.pi, rel=1e-14)
    with pytest.raises(ValueError):
        disk_rule(0.0, measure="haar")
    with pytest.raises(ValueError):
        disk_rule(-1.0)


def test_sphere_rule_moments():
    # normalized sphere moments: E|zeta_1|^{2a}|zeta_2|^{2b} = a! b! (n-1)! / (n-1+a+b)!
    rule = sphere_rule(2, 10)
    for a, b in [(0, 0), (1, 0), (2, 1), (3, 3)]:
        got = rule.integrate(lambda z: np.abs(z[:, 0]) ** (2 * a) * np.abs(z[:, 1]) ** (2 * b))
        ref = math.factorial(a) * math.factorial(b) / math.factorial(1 + a + b)
        assert got == pytest.approx(ref, rel=1e-13)
    raw = sphere_rule(2, 4, normalized=False)
    assert raw.total_weight == pytest.approx(2 * math.pi**2, rel=1e-14)
    with pytest.raises(NotImplementedError):
        sphere_rule(3)


def test_ball_rule_volume_and_density():
    vol = ball_rule(SpaceParams(2, 0.0), 8, 4, measure="lebesgue").total_weight
    assert vol == pytest.approx(math.pi**2 / 2, rel=1e-14)
    for t in (0.0, 2.0):
        rule = ball_rule(SpaceParams(2, t), 16, 6)
        assert rule.total_weight == pytest.approx(1.0, rel=1e-13)
        # E|z_1|^2 under lambda_t on B_2 is (1/2) E|z|^2 = (1/2) * 2/(t+3)
        got = rule.integrate(lambda z: np.abs(z[:, 0]) ** 2)
        assert got == pytest.approx(1.0 / (t + 3), rel=1e-12)


def test_product_rule_shape_and_cap():
    base = disk_rule(0.0, 4, 4)
    prod = product_rule(base)
    assert prod.nodes.shape == (256, 2, 1)
    assert prod.total_weight == pytest.approx(1.0, rel=1e-13)
    got = prod.integrate(lambda zw: np.abs(zw[:, 0, 0]) ** 2 * np.abs(zw[:, 1, 0]) ** 4)
    assert got == pytest.approx(0.5 * (1 / 3), rel=1e-13)
    with pytest.raises(ResourceError):
        product_rule(base, node_cap=100)


def test_monte_carlo_pair_rule():
    rule = mc_rule_ball2_pair(1 << 14, seed=3)
    vol, err = rule.estimate(lambda z, w: np.ones(len(z)))
    assert vol == pytest.approx((math.pi**2 / 2) ** 2, rel=1e-14)
    assert err == pytest.approx(0.0, abs=1e-9)
    # E|z|^2 = 2/3 under the uniform law on B_2, so the integral is vol * 4/9
    est, err = rule.estimate(lambda z, w: np.sum(np.abs(z) ** 2, 1) * np.sum(np.abs(w) ** 2, 1))
    assert abs(est - (math.pi**2 / 2) ** 2 * 4 / 9) < 5 * err + 1e-3
    again, _ = mc_rule_ball2_pair(1 << 14, seed=3).estimate(
        lambda z, w: np.sum(np.abs(z) ** 2, 1) * np.sum(np.abs(w) ** 2, 1))
    assert again == est
    with pytest.raises(ValueError):
        mc_rule_ball2_pair(0)


@pytest.mark.parametrize("t,c,depth", [(0.0, 0.5, 0.3), (1.0, -0.5, 0.1), (0.5, 0.0, 0.2)])
def test_rudin_forelli_disk_against_polar_quadrature(t, c, depth):
    r0 = math.sqrt(1 - depth)
    p = 2 + t + c
    f = lambda r, th: r * (1 - r * r) ** t / abs(1 - r0 * r * mp.expj(th)) ** p
    ref = float(mp.quad(f, [0, 0.5, 0.9, 0.99, 1], [-mp.pi, -0.1, 0, 0.1, mp.pi]))
    assert rudin_forelli_integral(1, t, c, depth) == pytest.approx(ref, rel=1e-8)


def test_rudin_forelli_at_origin_is_weighted_volume():
    for n, t in [(1, 0.0), (2, 1.5)]:
        ref = math.pi**n / math.factorial(n - 1) * beta(n, t + 1)
        assert rudin_forelli_integral(n, t, 0.7, 1.0) == pytest.approx(ref, rel=1e-12)


def test_rudin_forelli_envelope_ratios_bounded():
    assert rudin_forelli_envelope(0.5, 1e-4) == pytest.approx(100.0)
    assert rudin_forelli_envelope(0.0, math.exp(-3)) == pytest.approx(3.0)
    assert rudin_forelli_envelope(-0.5, 1e-4) == 1.0
    for n in (1, 2):
        for c in (-0.5, 0.0, 0.5):
            r = rudin_forelli_ratios(n, 1.0, c)
            assert np.all(r > 0) and np.all(np.diff(r) > 0)
            # the ratio levels off: growth over the last decade of depth is small
            assert r[-1] / r[-2] < 1.1
