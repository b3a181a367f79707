"""Symbols on the closed ball: exact polynomials in z and conj(z), smooth bumps.

Every symbol exposes the same evaluation surface:

* ``value(z)``          f at points of shape (..., n)
* ``grad(z)``           holomorphic gradient, d_i f, shape (..., n)
* ``grad_bar(z)``       anti-holomorphic gradient, dbar_i f
* ``mixed_hessian(z)``  d_i dbar_j f, shape (..., n, n); absent for C^1 symbols

The Laplacian convention is Delta = 4 sum_i d_i dbar_i.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .geometry import (DomainError, UnsupportedOperation, as_point, frame, inner,
                       mobius, norm_sq)


class MultiIndex(tuple):
    """Tuple of nonnegative integers with degree and factorial."""

    def __new__(cls, entries):
        entries = tuple(int(e) for e in entries)
        if any(e < 0 for e in entries):
            raise ValueError("multi-index entries must be nonnegative")
        return super().__new__(cls, entries)

    @property
    def degree(self) -> int:
        return sum(self)

    @property
    def factorial(self) -> int:
        return math.prod(math.factorial(e) for e in self)

    @staticmethod
    def unit(n: int, i: int) -> "MultiIndex":
        return MultiIndex(1 if k == i else 0 for k in range(n))

    @staticmethod
    def zero(n: int) -> "MultiIndex":
        return MultiIndex((0,) * n)

    def __add__(self, other):
        return MultiIndex(a + b for a, b in zip(self, other))


def _monomials(z: np.ndarray, a, b) -> np.ndarray:
    out = np.ones(z.shape[:-1], dtype=complex)
    zc = np.conj(z)
    for i, (ai, bi) in enumerate(zip(a, b)):
        if ai:
            out = out * z[..., i] ** ai
        if bi:
            out = out * zc[..., i] ** bi
    return out


class PolySymbol:
    """sum c_{ab} z^a conj(z)^b, stored as a map (a, b) -> c."""

    def __init__(self, n: int, terms: Mapping | None = None):
        self.n = int(n)
        clean = {}
        for (a, b), c in (terms or {}).items():
            a, b = MultiIndex(a), MultiIndex(b)
            if len(a) != self.n or len(b) != self.n:
                raise ValueError("multi-index length does not match dimension")
            c = complex(c)
            if c != 0:
                clean[(a, b)] = clean.get((a, b), 0) + c
        self.terms = {k: v for k, v in clean.items() if v != 0}

    # construction helpers
    @classmethod
    def constant(cls, n: int, c: complex = 1.0) -> "PolySymbol":
        z0 = MultiIndex.zero(n)
        return cls(n, {(z0, z0): c})

    @classmethod
    def coord(cls, n: int, i: int, conjugate: bool = False) -> "PolySymbol":
        e, z0 = MultiIndex.unit(n, i), MultiIndex.zero(n)
        return cls(n, {(z0, e) if conjugate else (e, z0): 1.0})

    @classmethod
    def norm_squared(cls, n: int) -> "PolySymbol":
        out = cls(n)
        for i in range(n):
            out = out + cls.coord(n, i) * cls.coord(n, i, conjugate=True)
        return out

    # algebra
    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, 0) + v
        return PolySymbol(self.n, terms)

    __radd__ = __add__

    def __neg__(self):
        return PolySymbol(self.n, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return PolySymbol(self.n, {k: v * other for k, v in self.terms.items()})
        if not isinstance(other, PolySymbol):
            return NotImplemented
        terms: dict = {}
        for (a1, b1), c1 in self.terms.items():
            for (a2, b2), c2 in other.terms.items():
                key = (a1 + a2, b1 + b2)
                terms[key] = terms.get(key, 0) + c1 * c2
        return PolySymbol(self.n, terms)

    __rmul__ = __mul__

    def _coerce(self, other) -> "PolySymbol":
        if isinstance(other, PolySymbol):
            if other.n != self.n:
                raise ValueError("dimension mismatch")
            return other
        return PolySymbol.constant(self.n, other)

    def conj(self) -> "PolySymbol":
        return PolySymbol(self.n, {(b, a): np.conj(c) for (a, b), c in self.terms.items()})

    def __eq__(self, other):
        return isinstance(other, PolySymbol) and other.n == self.n and other.terms == self.terms

    def __hash__(self):
        return hash((self.n, frozenset(self.terms.items())))

    def __repr__(self):
        return f"PolySymbol(n={self.n}, terms={self.to_json()})"

    @property
    def degree(self) -> int:
        return max((a.degree + b.degree for a, b in self.terms), default=0)

    @property
    def is_constant(self) -> bool:
        return all(a.degree + b.degree == 0 for a, b in self.terms)

    @property
    def is_real(self) -> bool:
        return self == self.conj()

    # calculus
    def differentiate(self, kind: str, i: int) -> "PolySymbol":
        """Exact d_i (kind='holo') or dbar_i (kind='anti')."""
        terms = {}
        for (a, b), c in self.terms.items():
            if kind == "holo":
                if a[i] == 0:
                    continue
                a2 = list(a)
                a2[i] -= 1
                terms[(MultiIndex(a2), b)] = c * a[i]
            elif kind == "anti":
                if b[i] == 0:
                    continue
                b2 = list(b)
                b2[i] -= 1
                terms[(a, MultiIndex(b2))] = c * b[i]
            else:
                raise ValueError("kind must be 'holo' or 'anti'")
        return PolySymbol(self.n, terms)

    def laplacian(self) -> "PolySymbol":
        out = PolySymbol(self.n)
        for i in range(self.n):
            out = out + self.differentiate("holo", i).differentiate("anti", i)
        return 4 * out

    def radial(self) -> "PolySymbol":
        """R f = sum z_i d_i f."""
        out = PolySymbol(self.n)
        for i in range(self.n):
            out = out + PolySymbol.coord(self.n, i) * self.differentiate("holo", i)
        return out

    # evaluation
    def value(self, z) -> np.ndarray:
        z = as_point(z, self.n)
        out = np.zeros(z.shape[:-1], dtype=complex)
        for (a, b), c in self.terms.items():
            out = out + c * _monomials(z, a, b)
        return out

    __call__ = value

    def grad(self, z) -> np.ndarray:
        return np.stack([self.differentiate("holo", i).value(z) for i in range(self.n)], axis=-1)

    def grad_bar(self, z) -> np.ndarray:
        return np.stack([self.differentiate("anti", i).value(z) for i in range(self.n)], axis=-1)

    def mixed_hessian(self, z) -> np.ndarray:
        rows = []
        for i in range(self.n):
            di = self.differentiate("holo", i)
            rows.append(np.stack([di.differentiate("anti", j).value(z) for j in range(self.n)],
                                 axis=-1))
        return np.stack(rows, axis=-2)

    def to_smooth(self) -> "SmoothSymbol":
        return SmoothSymbol(self.n, self.value, self.grad, self.grad_bar, self.mixed_hessian,
                            support=None, name=self.to_text())

    # serialization
    def to_json(self) -> list:
        out = []
        for (a, b), c in sorted(self.terms.items()):
            out.append({"a": list(a), "b": list(b), "re": float(c.real), "im": float(c.imag)})
        return out

    @classmethod
    def from_json(cls, data, n: int | None = None) -> "PolySymbol":
        if isinstance(data, str):
            data = json.loads(data)
        if not isinstance(data, list) or not data:
            raise ValueError("symbol term list must be a non-empty list")
        terms = {}
        for item in data:
            if not isinstance(item, dict):
                raise ValueError("each term must be an object with keys a, b, re, im")
            extra = set(item) - {"a", "b", "re", "im"}
            if extra:
                raise ValueError(f"unknown term keys {sorted(extra)}")
            a, b = item["a"], item["b"]
            if n is None:
                n = len(a)
            if len(a) != n or len(b) != n:
                raise ValueError("multi-index lengths disagree")
            c = complex(float(item.get("re", 0.0)), float(item.get("im", 0.0)))
            key = (MultiIndex(a), MultiIndex(b))
            terms[key] = terms.get(key, 0) + c
        return cls(n, terms)

    def to_text(self) -> str:
        """Text in the command-line grammar; parse_symbol(to_text()) is exact."""
        parts = []
        for (a, b), c in sorted(self.terms.items()):
            fac = []
            for i in range(self.n):
                name = "z" if self.n == 1 else f"z{i + 1}"
                fac += [name] * a[i] + [name + "bar"] * b[i]
            coef = f"({c.real:.17g}{c.imag:+.17g}*i)"
            parts.append(coef + "".join("*" + x for x in fac))
        return " + ".join(parts) or "0"


# ---------------------------------------------------------------------------
# smooth symbols

@dataclass(frozen=True)
class SmoothSymbol:
    """A C^1 or C^2 symbol given by callables.

    ``support`` is None for full support, or (center, radius) for a closed
    ball |z - center| <= radius contained in the open unit ball.
    """

    n: int
    value: Callable
    grad: Callable
    grad_bar: Callable
    mixed_hessian: Callable | None = None
    support: tuple | None = None
    name: str = "smooth"

    def __call__(self, z):
        return self.value(z)

    def __mul__(self, other):
        if isinstance(other, PolySymbol):
            other = other.to_smooth()
        if isinstance(other, (int, float, complex)):
            c = other
            return SmoothSymbol(self.n, lambda z: c * self.value(z), lambda z: c * self.grad(z),
                                lambda z: c * self.grad_bar(z),
                                None if self.mixed_hessian is None
                                else (lambda z: c * self.mixed_hessian(z)),
                                self.support, f"{c}*{self.name}")
        return product(self, other)

    __rmul__ = __mul__

    def conj(self) -> "SmoothSymbol":
        h = self.mixed_hessian
        return SmoothSymbol(
            self.n, lambda z: np.conj(self.value(z)),
            lambda z: np.conj(self.grad_bar(z)), lambda z: np.conj(self.grad(z)),
            None if h is None else (lambda z: np.conj(np.swapaxes(h(z), -1, -2))),
            self.support, f"conj({self.name})")

    def laplacian_value(self, z) -> np.ndarray:
        if self.mixed_hessian is None:
            raise UnsupportedOperation("symbol has no second derivatives")
        return 4.0 * np.trace(self.mixed_hessian(z), axis1=-2, axis2=-1)


def as_smooth(f) -> SmoothSymbol:
    if isinstance(f, SmoothSymbol):
        return f
    if isinstance(f, PolySymbol):
        return f.to_smooth()
    raise TypeError(f"not a symbol: {f!r}")


def _support_product(s1, s2):
    if s1 is None:
        return s2
    if s2 is None:
        return s1
    # keep the smaller ball as a valid (if loose) descriptor
    return s1 if s1[1] <= s2[1] else s2


def product(f, g) -> SmoothSymbol:
    f, g = as_smooth(f), as_smooth(g)
    if f.n != g.n:
        raise ValueError("dimension mismatch")

    def value(z):
        return f.value(z) * g.value(z)

    def grad(z):
        return f.grad(z) * g.value(z)[..., None] + f.value(z)[..., None] * g.grad(z)

    def grad_bar(z):
        return f.grad_bar(z) * g.value(z)[..., None] + f.value(z)[..., None] * g.grad_bar(z)

    hess = None
    if f.mixed_hessian is not None and g.mixed_hessian is not None:
        def hess(z):
            fv, gv = f.value(z)[..., None, None], g.value(z)[..., None, None]
            return (f.mixed_hessian(z) * gv + fv * g.mixed_hessian(z)
                    + f.grad(z)[..., :, None] * g.grad_bar(z)[..., None, :]
                    + g.grad(z)[..., :, None] * f.grad_bar(z)[..., None, :])

    return SmoothSymbol(f.n, value, grad, grad_bar, hess, _support_product(f.support, g.support),
                        f"({f.name})*({g.name})")


def bump(n: int, r0: float, center=None, amplitude: float = 1.0) -> SmoothSymbol:
    """exp(1 - 1/(1 - |z-c|^2/r0^2)) inside the ball |z-c| < r0, zero outside."""
    c = np.zeros(n, dtype=complex) if center is None else as_point(center, n)
    if not r0 > 0 or math.sqrt(float(norm_sq(c))) + r0 >= 1.0:
        raise DomainError("bump support must lie inside the open unit ball")
    k = 1.0 / r0**2

    def parts(z):
        z = as_point(z, n)
        d = z - c
        u = norm_sq(d) * k
        inside = u < 1.0
        um = np.where(inside, u, 0.0)
        one = 1.0 - um
        B = np.where(inside, amplitude * np.exp(1.0 - 1.0 / one), 0.0)
        B1 = -B / one**2
        B2 = B / one**4 - 2.0 * B / one**3
        return d, B, B1, B2

    def value(z):
        # value only: skips the derivative factors computed by parts()
        z = as_point(z, n)
        u = norm_sq(z - c) * k
        inside = u < 1.0
        out = np.zeros(u.shape, dtype=complex)
        out[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - u[inside]))
        return out

    def grad(z):
        d, B, B1, _ = parts(z)
        return (B1 * k)[..., None] * np.conj(d)

    def grad_bar(z):
        d, B, B1, _ = parts(z)
        return (B1 * k)[..., None] * d

    def hess(z):
        d, B, B1, B2 = parts(z)
        outer = np.conj(d)[..., :, None] * d[..., None, :]
        return ((B2 * k * k)[..., None, None] * outer
                + (B1 * k)[..., None, None] * np.eye(n))

    return SmoothSymbol(n, value, grad, grad_bar, hess, (c, float(r0)),
                        f"bump(r0={r0},c={np.round(c, 6).tolist()})")


def cone_pair(epsilon: float) -> tuple[SmoothSymbol, SmoothSymbol]:
    """f = psi(|z1|^2 - |z2|^2), g = psi(|z2|^2 - |z1|^2) on B_2.

    psi(s) = max(s, 0)^{2+eps} / (2+eps), so psi'(s) = max(s, 0)^{1+eps}.
    Only first derivatives are provided.
    """
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    p = 2.0 + epsilon

    def make(sign):
        def u_of(z):
            z = as_point(z, 2)
            return sign * (np.abs(z[..., 0]) ** 2 - np.abs(z[..., 1]) ** 2), z

        def value(z):
            u, _ = u_of(z)
            return (np.maximum(u, 0.0) ** p / p).astype(complex)

        def grad(z):
            u, z = u_of(z)
            dpsi = np.maximum(u, 0.0) ** (p - 1.0)
            du = sign * np.stack([np.conj(z[..., 0]), -np.conj(z[..., 1])], axis=-1)
            return dpsi[..., None] * du

        def grad_bar(z):
            return np.conj(grad(z))

        return SmoothSymbol(2, value, grad, grad_bar, None, None,
                            f"psi({'+' if sign > 0 else '-'}(|z1|^2-|z2|^2)), eps={epsilon}")

    return make(1.0), make(-1.0)


# ---------------------------------------------------------------------------
# separation conditions on symbol pairs

def _levi(sym, z, v):
    if sym.mixed_hessian is None:
        raise UnsupportedOperation("order-2 ratios need second derivatives")
    H = sym.mixed_hessian(z)
    return np.einsum("...ij,...i,...j->...", H, v, np.conj(v))


def condition_ratio(f, g, epsilon: float, z, w, order: int = 1):
    """First-order separation ratio, or the largest of the three second-order ratios.

    Vectorized over leading axes of ``z`` and ``w``.
    """
    f, g = as_smooth(f), as_smooth(g)
    z = as_point(z, f.n)
    w = as_point(w, f.n)
    d = z - w
    if np.any(norm_sq(d) == 0):
        raise DomainError("condition ratios need distinct points")
    phi2 = norm_sq(mobius_batch(z, w))
    base = np.abs(1.0 - inner(z, w)) ** (f.n + epsilon)
    A = np.sum(f.grad(z) * d, axis=-1)              # <d_z f, conj(z-w)>
    B = np.sum(g.grad_bar(w) * np.conj(d), axis=-1)  # <dbar_w g, z-w>
    if order == 1:
        return np.abs(A * B) / (phi2 * base)
    if order == 2:
        Lf = _levi(f, z, d)
        Lg = _levi(g, w, d)
        r1 = np.abs(A * Lg) / (phi2**1.5 * base)
        r2 = np.abs(Lf * B) / (phi2**1.5 * base)
        r3 = np.abs(Lf * Lg) / (phi2**2 * base)
        return np.maximum(np.maximum(r1, r2), r3)
    raise ValueError("order must be 1 or 2")


def mobius_batch(z, w):
    """phi_z(w) for matched batches of z and w."""
    z = np.asarray(z)
    w = np.asarray(w)
    r2 = norm_sq(z)[..., None]
    wz = inner(w, z)[..., None]
    safe = np.where(r2 > 0, r2, 1.0)
    Pw = np.where(r2 > 0, wz * z / safe, 0.0)
    Qw = w - Pw
    return (z - Pw - np.sqrt(1.0 - r2) * Qw) / (1.0 - wz)


@dataclass
class SupEstimate:
    value: float
    argmax: tuple
    samples: int
    min_depth: float
    seed: int


def sample_pairs(n: int, samples: int, seed: int = 0, min_depth: float = 1e-6):
    """Pairs (z, w) concentrated near the sphere and near the diagonal.

    1-|z|^2 is log-uniform on [min_depth, 1]; w = phi_z(zeta) with |zeta|
    log-uniform on [1e-3, 1) and uniform direction, so the pseudo-hyperbolic
    distance is controlled directly.  A Sobol sequence drives both.
    """
    import warnings

    from scipy.special import ndtri
    from scipy.stats import qmc

    eng = qmc.Sobol(d=4 * n + 2, scramble=True, seed=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        u = eng.random(samples)
    u = np.clip(u, 1e-15, 1 - 1e-15)

    def direction(block):
        g = ndtri(block)
        v = g[:, :n] + 1j * g[:, n:]
        return v / np.sqrt(norm_sq(v))[:, None]

    depth = np.exp(np.log(min_depth) * u[:, 0])
    z = np.sqrt(1.0 - depth)[:, None] * direction(u[:, 1:2 * n + 1])
    rho = np.exp(np.log(1e-3) * u[:, 2 * n + 1])
    zeta = rho[:, None] * direction(u[:, 2 * n + 2:])
    w = mobius_batch(z, zeta)
    return z, w


def condition_sup_estimate(f, g, epsilon: float, samples: int = 100_000, order: int = 1,
                           seed: int = 0, min_depth: float = 1e-6) -> SupEstimate:
    """Empirical supremum of the Condition ratio with its arg-max pair."""
    if samples < 1:
        raise ValueError("samples must be positive")
    f, g = as_smooth(f), as_smooth(g)
    z, w = sample_pairs(f.n, samples, seed, min_depth)
    keep = norm_sq(z - w) > 0
    z, w = z[keep], w[keep]
    r = condition_ratio(f, g, epsilon, z, w, order)
    r = np.where(np.isfinite(r), r, np.inf)
    i = int(np.argmax(r))
    return SupEstimate(float(r[i]), (z[i], w[i]), samples, min_depth, seed)


# ---------------------------------------------------------------------------
# symbol micro-syntax

_TOKEN = re.compile(r"\s*(\|z(\d*)\|\^(\d+)|z(\d*)(bar)?(?:\^(\d+))?|\d+\.?\d*(?:[eE][-+]?\d+)?|i|[*+\-()])")


class SymbolSyntaxError(ValueError):
    """Malformed symbol specification."""


def parse_symbol(text: str, n: int = 1):
    """Parse the command-line symbol grammar.

    Grammar (explicit '*' between factors)::

        symbol := term (('+' | '-') term)*
        term   := ['-'] factor ('*' factor)*
        factor := number | 'i' | 'z' [k] ['bar'] ['^' p] | '|z' [k] '|^' q | '(' symbol ')'

    ``z`` without an index means z1 and is only allowed when n = 1.
    ``|z|^2`` is the full squared norm; the power q must be even.  ``bump:r0=0.6[,c=x+yi;...]`` and a
    JSON term list are also accepted.
    """
    text = text.strip()
    if not text:
        raise SymbolSyntaxError("empty symbol")
    if text.startswith("["):
        try:
            sym = PolySymbol.from_json(text)
        except (ValueError, KeyError, TypeError) as exc:
            raise SymbolSyntaxError(f"bad JSON term list: {exc}") from exc
        if sym.n != n:
            raise SymbolSyntaxError(f"term list has dimension {sym.n}, expected {n}")
        return sym
    if text.startswith("bump:"):
        return _parse_bump(text[5:], n)
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise SymbolSyntaxError(f"unexpected input at {text[pos:]!r}")
        tokens.append(m)
        pos = m.end()
    parser = _Parser(tokens, n)
    out = parser.symbol()
    if parser.i != len(tokens):
        raise SymbolSyntaxError(f"trailing input in {text!r}")
    return out


class _Parser:
    def __init__(self, tokens, n):
        self.toks = tokens
        self.i = 0
        self.n = n

    def peek(self):
        return self.toks[self.i].group(1) if self.i < len(self.toks) else None

    def take(self):
        m = self.toks[self.i]
        self.i += 1
        return m

    def symbol(self):
        out = self.term()
        while self.peek() in ("+", "-"):
            op = self.take().group(1)
            t = self.term()
            out = out + t if op == "+" else out - t
        return out

    def term(self):
        sign = 1
        if self.peek() == "-":
            self.take()
            sign = -1
        out = self.factor()
        while self.peek() == "*":
            self.take()
            out = out * self.factor()
        return out * sign

    def _index(self, digits):
        if digits:
            k = int(digits) - 1
            if not 0 <= k < self.n:
                raise SymbolSyntaxError(f"coordinate z{digits} out of range for n={self.n}")
            return k
        if self.n != 1:
            raise SymbolSyntaxError("bare 'z' needs an index when n > 1")
        return 0

    def factor(self):
        tok = self.peek()
        if tok is None:
            raise SymbolSyntaxError("unexpected end of symbol")
        if tok == "(":
            self.take()
            out = self.symbol()
            if self.peek() != ")":
                raise SymbolSyntaxError("missing ')'")
            self.take()
            return out
        m = self.take()
        if tok == "i":
            return PolySymbol.constant(self.n, 1j)
        if tok.startswith("|z"):
            q = int(m.group(3))
            if q % 2:
                raise SymbolSyntaxError(f"odd power of a modulus is not polynomial: {tok!r}")
            if m.group(2):
                k = self._index(m.group(2))
                base = PolySymbol.coord(self.n, k) * PolySymbol.coord(self.n, k, True)
            else:
                base = PolySymbol.norm_squared(self.n)
            out = PolySymbol.constant(self.n, 1.0)
            for _ in range(q // 2):
                out = out * base
            return out
        if tok.startswith("z"):
            k = self._index(m.group(4))
            base = PolySymbol.coord(self.n, k, conjugate=bool(m.group(5)))
            p = int(m.group(6)) if m.group(6) else 1
            out = PolySymbol.constant(self.n, 1.0)
            for _ in range(p):
                out = out * base
            return out
        if tok in "*+-)":
            raise SymbolSyntaxError(f"unexpected {tok!r}")
        return PolySymbol.constant(self.n, float(tok))


def _parse_bump(spec: str, n: int) -> SmoothSymbol:
    params = {}
    for part in spec.split(","):
        if "=" not in part:
            raise SymbolSyntaxError(f"bad bump parameter {part!r}")
        k, v = part.split("=", 1)
        params[k.strip()] = v.strip()
    unknown = set(params) - {"r0", "c", "amp"}
    if unknown or "r0" not in params:
        raise SymbolSyntaxError("bump needs r0 and accepts only r0, c, amp")
    try:
        r0 = float(params["r0"])
        center = None
        if "c" in params:
            center = [complex(x.replace("i", "j")) for x in params["c"].split(";")]
            if len(center) != n:
                raise SymbolSyntaxError("bump center has the wrong dimension")
        amp = float(params.get("amp", 1.0))
        return bump(n, r0, center, amp)
    except (ValueError, DomainError) as exc:
        raise SymbolSyntaxError(str(exc)) from exc
