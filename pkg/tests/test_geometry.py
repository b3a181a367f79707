import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semitrace.geometry import (DomainError, SpaceParams, frame, inner, kernel, mobius,
                                norm_sq, one_minus_phi_sq, pseudo_hyperbolic, sphere_area)


def _point(rng, n, rmax=0.95):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v) * rmax * rng.random() ** (1 / (2 * n))


@st.composite
def ball_pair(draw, n=2):
    seed = draw(st.integers(0, 10_000))
    rng = np.random.default_rng(seed)
    return _point(rng, n), _point(rng, n)


def test_space_params_domain():
    with pytest.raises(DomainError):
        SpaceParams(0, 0.0)
    with pytest.raises(DomainError):
        SpaceParams(1, -1.0)
    # (n-1)!/(pi^n B(n, t+1)) at n=1, t=0 is 1/pi
    assert SpaceParams(1, 0.0).norm_const == pytest.approx(1 / math.pi, rel=1e-15)


def test_sphere_area():
    assert sphere_area(1) == pytest.approx(2 * math.pi)
    assert sphere_area(2) == pytest.approx(2 * math.pi**2)


@settings(max_examples=50, deadline=None)
@given(ball_pair())
def test_mobius_involution_and_swap(pair):
    z, w = pair
    assert np.allclose(mobius(z, mobius(z, w)), w, atol=1e-12)
    assert np.allclose(mobius(z, np.zeros(2)), z, atol=1e-14)
    assert np.allclose(mobius(z, z), 0, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(ball_pair())
def test_one_minus_phi_identity(pair):
    z, w = pair
    # 1 - |phi_z(w)|^2 = (1-|z|^2)(1-|w|^2)/|1-<z,w>|^2
    ref = (1 - norm_sq(z)) * (1 - norm_sq(w)) / abs(1 - inner(z, w)) ** 2
    assert one_minus_phi_sq(z, w) == pytest.approx(ref, rel=1e-12)
    assert 1 - norm_sq(mobius(z, w)) == pytest.approx(ref, rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(ball_pair())
def test_frame_matrix_identity(pair):
    z, zeta = pair
    fr = frame(z)
    lhs = z - mobius(z, zeta)
    rhs = fr.apply_a(zeta) / (1 - inner(zeta, z))
    assert np.allclose(lhs, rhs, atol=1e-12)
    # A_z A_z^* = (1-|z|^2)^2 P + (1-|z|^2) Q
    r = 1 - norm_sq(z)
    assert np.allclose(fr.a_matrix @ fr.a_matrix.conj().T, r**2 * fr.P + r * fr.Q, atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(ball_pair())
def test_pseudo_hyperbolic_symmetric(pair):
    z, w = pair
    assert pseudo_hyperbolic(z, w) == pytest.approx(pseudo_hyperbolic(w, z), abs=1e-12)


def test_kernel_reproduces_monomial():
    # <z^2, K_w> = w^2 for the weighted Bergman inner product, disk t=1.5
    from semitrace.quadrature import disk_rule
    params = SpaceParams(1, 1.5)
    rule = disk_rule(1.5, 40, 80)
    w = np.array([0.3 - 0.4j])
    z = rule.nodes
    K = kernel(params, z, w)
    val = np.sum(rule.weights * z[:, 0] ** 2 * np.conj(K))
    assert val == pytest.approx(w[0] ** 2, abs=1e-12)


def test_mobius_rejects_exterior():
    with pytest.raises(DomainError):
        mobius(np.array([1.0 + 0j]), np.array([0.0 + 0j]))


def test_mobius_jacobian_matches_finite_difference():
    from semitrace.geometry import mobius_jacobian
    z = np.array([0.4 + 0.3j])
    w = np.array([-0.2 + 0.5j])
    h = 1e-6
    # phi_z is holomorphic on the disk, so the real Jacobian is |phi_z'(w)|^2
    d = (mobius(z, w + h) - mobius(z, w - h)) / (2 * h)
    assert mobius_jacobian(z, w) == pytest.approx(abs(d[0]) ** 2, rel=1e-8)
