import math

import mpmath as mp
import numpy as np
import pytest

from semitrace import _kernels
from semitrace.geometry import SpaceParams
from semitrace.operators import (BasisIndexer, TorusGrid, hankel_hs_norm, monomial_norm,
                                 richardson_table, semicommutator_diagonal, semicommutator_trace,
                                 smooth_matrix, smooth_semicommutator_trace, toeplitz_entry,
                                 toeplitz_matrix)
from semitrace.symbols import parse_symbol


def test_basis_order_and_slices():
    idx = BasisIndexer(2, 3)
    assert len(idx) == 10
    assert [tuple(a) for a in idx.items[:3]] == [(0, 0), (1, 0), (0, 1)]
    assert [tuple(a) for a in idx.items[idx.degree_slice(2)]] == [(2, 0), (1, 1), (0, 2)]
    assert idx.index((0, 3)) == 9 and (4, 0) not in idx


@pytest.mark.parametrize("alpha,t", [((3,), 0.0), ((5,), 2.5), ((1, 2), 0.0), ((2, 2), 1.5)])
def test_monomial_norm_against_integral(alpha, t):
    # polar coordinates: |z_1|^2 = s u, |z_2|^2 = s (1-u)
    n = len(alpha)
    c = SpaceParams(n, t).norm_const
    if n == 1:
        ref = c * mp.pi * mp.quad(lambda s: s ** alpha[0] * (1 - s) ** t, [0, 1])
    else:
        ref = c * mp.pi**2 * mp.quad(
            lambda s, u: (1 - s) ** t * s ** (1 + sum(alpha)) * u ** alpha[0] * (1 - u) ** alpha[1],
            [0, 1], [0, 1])
    assert monomial_norm(SpaceParams(n, t), alpha) == pytest.approx(float(ref), rel=1e-12)
    with pytest.raises(ValueError):
        monomial_norm(SpaceParams(n, t), (1, 1, 1))


@pytest.mark.parametrize("t", [0.0, 0.5, 7.0])
def test_disk_diagonal_closed_form(t):
    # <(T_z T_zbar - T_{|z|^2}) e_k, e_k> = -(t+1)/((k+t+1)(k+t+2))
    p = SpaceParams(1, t)
    f, g = parse_symbol("z", 1), parse_symbol("zbar", 1)
    for k in (0, 1, 4, 30):
        ref = -(t + 1) / ((k + t + 1) * (k + t + 2))
        assert semicommutator_diagonal(p, f, g, (k,)) == pytest.approx(ref, rel=1e-13)


@pytest.mark.parametrize("t", [0.0, 3.0, 40.0])
def test_trace_and_hankel_norm_z_zbar(t):
    # the diagonals telescope: the trace is -1 and ||H_zbar||^2 = 1 for every t
    p = SpaceParams(1, t)
    val, info = semicommutator_trace(p, parse_symbol("z", 1), parse_symbol("zbar", 1))
    assert val == pytest.approx(-1.0, abs=1e-9)
    # the reported error estimate is conservative
    assert info.method == "richardson" and info.error_estimate >= abs(val + 1)
    h, _ = hankel_hs_norm(p, parse_symbol("zbar", 1))
    assert h == pytest.approx(1.0, abs=1e-9)
    assert hankel_hs_norm(p, parse_symbol("z^2 + 1", 1))[0] == 0.0


def test_trace_abs_squared_large_t_against_closed_form():
    # f = g = |z|^2: the diagonal is -(t+1)(k+1)/((k+a)^2 (k+a+1)) with a = t+2, and
    # partial fractions sum it to -(t+1)(1 - (t+1) psi'(a))
    t = 50.0
    ref = float(-(t + 1) * (1 - (t + 1) * mp.psi(1, t + 2)))
    f = parse_symbol("|z|^2", 1)
    val, info = semicommutator_trace(SpaceParams(1, t), f, f)
    assert val == pytest.approx(ref, abs=5e-9)
    assert info.error_estimate >= abs(val - ref)


def test_constant_symbol_gives_exact_zero():
    val, info = semicommutator_trace(SpaceParams(2, 0.0), parse_symbol("3", 2),
                                     parse_symbol("z1bar", 2))
    assert val == 0 and info.method == "exact"


def test_matrix_of_real_symbol_is_hermitian():
    f = parse_symbol("|z1|^2 + z1*z2bar + z2*z1bar - 2*z2^2*z2bar^2", 2)
    M = toeplitz_matrix(SpaceParams(2, 1.0), f, 5)
    assert M.hermiticity_defect() < 1e-15
    assert M.matrix[M.indexer.index((1, 0)), M.indexer.index((0, 1))] == pytest.approx(
        toeplitz_entry(SpaceParams(2, 1.0), f, (0, 1), (1, 0)))


def test_diagonal_matches_matrix_products():
    p = SpaceParams(2, 0.5)
    f = parse_symbol("z1 + 2*z2bar*z1", 2)
    g = parse_symbol("z1bar + i*|z2|^2", 2)
    N = 6
    # degree N+2 is enough for the inner sums of rows up to degree N
    big = N + 2
    Mf = toeplitz_matrix(p, f, big).matrix
    Mg = toeplitz_matrix(p, g, big).matrix
    Mfg = toeplitz_matrix(p, f * g, big).matrix
    D = np.diag(Mf @ Mg - Mfg)
    idx = BasisIndexer(2, N)
    for i, beta in enumerate(idx.items):
        assert semicommutator_diagonal(p, f, g, beta) == pytest.approx(D[i], abs=1e-14)


def test_richardson_on_zeta2():
    # partial sums of sum 1/j^2 have an error expansion in powers of 1/N
    part = [sum(1.0 / j**2 for j in range(1, N + 1)) for N in (16, 32, 64, 128, 256)]
    R = richardson_table(part)
    assert abs(part[-1] - math.pi**2 / 6) > 1e-3
    assert abs(R[-1, -1] - math.pi**2 / 6) < 1e-10


@pytest.mark.parametrize("n,t", [(1, 0.0), (2, 1.0)])
def test_smooth_matrix_matches_exact_entries(n, t):
    p = SpaceParams(n, t)
    f = parse_symbol("z*zbar^2 + 0.5*z" if n == 1 else "z1*z2bar + |z1|^2 - z2", n)
    rows, cols = BasisIndexer(n, 4), BasisIndexer(n, 5)
    grid = TorusGrid.build(n, 1.0, 24, 24, 16)
    S = smooth_matrix(p, f, rows, cols, grid)
    for i, gamma in enumerate(cols.items):
        for j, beta in enumerate(rows.items):
            assert S[i, j] == pytest.approx(toeplitz_entry(p, f, beta, gamma), abs=1e-12)


def test_smooth_trace_truncation_exact():
    # the truncated sum over k <= N is -1 + (t+1)/(N+t+2)
    t, N = 1.0, 10
    val, info = smooth_semicommutator_trace(SpaceParams(1, t), parse_symbol("z", 1),
                                            parse_symbol("zbar", 1), max_degree=N)
    assert val == pytest.approx(-1 + (t + 1) / (N + t + 2), abs=1e-12)
    assert info.method == "truncated"


@pytest.mark.parametrize("n", [1, 2])
def test_kernel_backends_agree(n):
    rng = np.random.default_rng(1)
    rows, cols = BasisIndexer(n, 5).array, BasisIndexer(n, 7).array
    span = 13
    C = rng.normal(size=(30,) + (span,) * n) + 1j * rng.normal(size=(30,) + (span,) * n)
    W = rng.random(30)
    PB, PG = rng.random((len(rows), 30)), rng.random((len(cols), 30))
    ref = _kernels.smooth_matrix_contract_numpy(C, W, PB, PG, rows, cols, n, 5)
    got = _kernels.smooth_matrix_contract(C, W, PB, PG, rows, cols, n, 5)
    assert np.allclose(got, ref, rtol=0, atol=1e-12)
