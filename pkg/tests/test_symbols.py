import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semitrace.geometry import DomainError
from semitrace.symbols import (PolySymbol, SymbolSyntaxError, as_smooth, bump, condition_ratio,
                               cone_pair, parse_symbol, product)


def wirtinger_fd(fun, z, i, h=1e-6):
    """(d/dz_i, d/dzbar_i) of fun at z by central differences in x and y."""
    e = np.zeros_like(z)
    e[i] = 1.0
    fx = (fun(z + h * e) - fun(z - h * e)) / (2 * h)
    fy = (fun(z + 1j * h * e) - fun(z - 1j * h * e)) / (2 * h)
    return 0.5 * (fx - 1j * fy), 0.5 * (fx + 1j * fy)


@pytest.mark.parametrize("text,n,point,value", [
    ("z", 1, [0.3 + 0.1j], 0.3 + 0.1j),
    ("zbar", 1, [0.3 + 0.1j], 0.3 - 0.1j),
    ("|z|^2", 1, [0.3 + 0.4j], 0.25),
    ("z1*z2bar", 2, [0.5j, 0.2], 0.1j),
    ("|z1|^2 + |z2|^2", 2, [0.3, 0.4j], 0.25),
    ("2*z^3 - i*zbar", 1, [0.5], 0.25 - 0.5j),
    ("(1 + z)*(1 - z)", 1, [0.5], 0.75),
    ("|z|^2", 2, [0.6, 0.8j], 1.0),
    ("|z2|^4 - |z|^0", 2, [0.1, 0.5j], -0.9375),
])
def test_parse_and_evaluate(text, n, point, value):
    sym = parse_symbol(text, n)
    assert complex(sym.value(np.array([point]))[0]) == pytest.approx(value, abs=1e-15)


@pytest.mark.parametrize("bad", ["", "z**", "bar(z)", "z3", "(z", "z +", "bump:c=0", "[1,2]", "|z|^3",
                                 '[{"a": [1], "b": [0], "c": 1}]', '[{"a": [1], "b": [0, 1]}]'])
def test_parse_rejects(bad):
    n = 2 if bad == "z3" else 1
    with pytest.raises(SymbolSyntaxError):
        parse_symbol(bad, n)


def test_plain_z_needs_disk():
    with pytest.raises(SymbolSyntaxError):
        parse_symbol("z", 2)


def test_text_and_json_round_trip():
    p = parse_symbol("2*z1*z2bar - 0.1*i*|z2|^2 + 3", 2)
    assert parse_symbol(p.to_text(), 2).terms == p.terms
    assert PolySymbol.from_json(p.to_json()).terms == p.terms


@st.composite
def poly2(draw):
    terms = {}
    for _ in range(draw(st.integers(1, 4))):
        a = tuple(draw(st.integers(0, 2)) for _ in range(2))
        b = tuple(draw(st.integers(0, 2)) for _ in range(2))
        terms[(a, b)] = complex(draw(st.floats(-2, 2)), draw(st.floats(-2, 2)))
    return PolySymbol(2, terms)


@settings(max_examples=40, deadline=None)
@given(poly2(), poly2())
def test_polynomial_derivatives_match_finite_differences(f, g):
    z = np.array([0.3 - 0.2j, -0.1 + 0.4j])
    h = f * g
    fun = lambda w: complex(h.value(w[None])[0])
    for i in range(2):
        d, db = wirtinger_fd(fun, z, i)
        assert complex(h.grad(z[None])[0, i]) == pytest.approx(d, abs=1e-6)
        assert complex(h.grad_bar(z[None])[0, i]) == pytest.approx(db, abs=1e-6)


@settings(max_examples=40, deadline=None)
@given(poly2())
def test_conj_and_laplacian(f):
    z = np.array([[0.2 + 0.1j, -0.3j]])
    assert np.allclose(f.conj().value(z), np.conj(f.value(z)))
    # Laplacian = 4 sum d_i dbar_i
    lap = complex(f.laplacian().value(z)[0])
    assert lap == pytest.approx(complex(as_smooth(f).laplacian_value(z)[0]), abs=1e-12)


def test_bump_derivatives_and_support():
    b = bump(2, 0.5, [0.1, -0.2j])
    z = np.array([0.25 + 0.1j, -0.1j])
    fun = lambda w: complex(b.value(w[None])[0])
    for i in range(2):
        d, db = wirtinger_fd(fun, z, i)
        assert complex(b.grad(z[None])[0, i]) == pytest.approx(d, abs=1e-7)
        assert complex(b.grad_bar(z[None])[0, i]) == pytest.approx(db, abs=1e-7)
    # mixed second partials from the first-derivative callables
    H = b.mixed_hessian(z[None])[0]
    for j in range(2):
        fd = wirtinger_fd(lambda w: complex(b.grad(w[None])[0, 0]), z, j)[1]
        assert H[0, j] == pytest.approx(fd, abs=1e-6)
    assert b.value(np.array([[0.7, 0.0]]))[0] == 0
    with pytest.raises(DomainError):
        bump(1, 0.6, [0.5])


def test_bump_parse():
    b = parse_symbol("bump:r0=0.5,c=0.1+0.2i", 1)
    assert b.support[1] == 0.5
    assert complex(b.value(np.array([[0.1 + 0.2j]]))[0]) == pytest.approx(1.0)


def test_product_rule_for_smooth_symbols():
    f = bump(1, 0.6, [0.1])
    g = parse_symbol("z*zbar + z", 1)
    fg = product(f, g)
    z = np.array([0.2 - 0.1j])
    d, db = wirtinger_fd(lambda w: complex(fg.value(w[None])[0]), z, 0)
    assert complex(fg.grad(z[None])[0, 0]) == pytest.approx(d, abs=1e-7)
    assert complex(fg.grad_bar(z[None])[0, 0]) == pytest.approx(db, abs=1e-7)


def test_condition_ratio_order_matters():
    # the first-order ratio pairs df with dbar g, so an antiholomorphic f gives zero
    a, b = parse_symbol("z1bar", 2), parse_symbol("z1", 2)
    z = np.array([[0.5, 0.1j]])
    w = np.array([[0.4j, -0.2]])
    assert condition_ratio(a, b, 0.5, z, w)[0] == 0
    assert condition_ratio(b, a, 0.5, z, w)[0] > 0


def test_cone_pair_disjoint_supports():
    f, g = cone_pair(0.5)
    z = np.array([[0.6, 0.2], [0.1, 0.7j]])
    assert np.all(f.value(z) * g.value(z) == 0)
