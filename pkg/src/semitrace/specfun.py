"""Scalar special functions and radial-profile transforms.

Radial profiles live on (0, 1) and typically carry a power or logarithmic
singularity at 0 and a power zero at 1.  All one-dimensional integrals over
[s, 1] go through :func:`tail_rule`, a composite Gauss rule whose panels are
graded dyadically toward 0 and toward 1, so that both kinds of endpoint
behaviour are integrated to near machine precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import betaln, gammaln, roots_jacobi, roots_legendre

from .geometry import DomainError, SpaceParams, as_point, frame, norm_sq

SERIES_RTOL = 1e-14
SERIES_CAP = 10**6

_LEFT_LEVELS = 48
_RIGHT_LEVELS = 40
_ORDER = 12
_RIGHT_FLOOR = 2.0**-44


def log_beta(a, b):
    return betaln(a, b)


def beta(a, b):
    return np.exp(betaln(a, b))


# ---------------------------------------------------------------------------
# the kernel F(s, x)

_GL10 = roots_legendre(10)


def f_kernel(s, x, check: bool = True):
    """F(s,x) = -[x ln(s/x) + (1-x) ln((1-s)/(1-x))] for 0 < s <= x < 1.

    Near the diagonal the closed form cancels to O((x-s)^2); there the
    equivalent integral  int_s^x (x-u) / (u(1-u)) du  is used instead.
    """
    s = np.asarray(s, dtype=float)
    x = np.asarray(x, dtype=float)
    if check and (np.any(s <= 0) or np.any(x >= 1) or np.any(s > x)):
        raise DomainError("f_kernel needs 0 < s <= x < 1")
    s, x = np.broadcast_arrays(s, x)
    d = x - s
    closed = x * np.log(x / s) - (1.0 - x) * np.log1p(d / (1.0 - x))
    near = d < 0.1 * np.minimum(s, 1.0 - x)
    if np.any(near):
        sn, xn = s[near], x[near]
        dn = xn - sn
        nodes, weights = _GL10
        u = sn[..., None] + 0.5 * dn[..., None] * (nodes + 1.0)
        vals = (xn[..., None] - u) / (u * (1.0 - u))
        closed = np.array(closed, copy=True)
        closed[near] = 0.5 * dn * np.sum(vals * weights, axis=-1)
    return np.maximum(closed, 0.0)


# ---------------------------------------------------------------------------
# composite rule on [s, 1]

@lru_cache(maxsize=64)
def _panel_templates(q: float, order: int):
    gx, gw = roots_legendre(order)
    gx = 0.5 * (gx + 1.0)
    gw = 0.5 * gw
    jx, jw = roots_jacobi(order, q, 0.0)
    jx = 0.5 * (jx + 1.0)
    jw = jw * 2.0 ** (-(q + 1.0))
    return gx, gw, jx, jw


def tail_rule(s, q: float, order: int = _ORDER, left: int = _LEFT_LEVELS,
              right: int = _RIGHT_LEVELS):
    """Nodes and weights for  int_s^1 h(x) (1-x)^q dx ~ sum w h(x).

    Returns ``(x, w, panel)`` where ``x`` and ``w`` have shape
    ``s.shape + (N,)`` and ``panel`` labels nodes by panel: label 0 is the
    innermost piece [s, 2^{-left-1}] (empty unless s is tiny), labels
    1..left are dyadic panels counted outward from 0, larger labels sit
    on the right half.
    """
    s = np.asarray(s, dtype=float)
    gx, gw, jx, jw = _panel_templates(float(q), order)
    sc = s[..., None]
    # left breakpoints: 2^{-left-1}, 2^{-left}, ..., 1/2 clipped below by s
    dy = 2.0 ** -np.arange(left + 1, 0, -1)
    lb = np.maximum(sc, np.concatenate([[0.0], dy]))
    a_l = lb[..., :-1]
    b_l = lb[..., 1:]
    mid = np.maximum(sc, 0.5)
    # right breakpoints 1 - (1-mid) 2^{-k}, kept resolvable in double precision
    k = np.arange(right + 1)
    # distances to 1 are kept separately: 1 - x loses digits on the small right panels
    dr = np.maximum((1.0 - mid) * 2.0 ** -k, np.minimum(1.0 - mid, _RIGHT_FLOOR))
    rb = 1.0 - dr
    a = np.concatenate([a_l, rb[..., :-1]], axis=-1)
    h = np.concatenate([b_l - a_l, dr[..., :-1] - dr[..., 1:]], axis=-1)
    dist = np.concatenate([1.0 - a_l, dr[..., :-1]], axis=-1)
    x_gl = a[..., None] + h[..., None] * gx
    w_gl = h[..., None] * gw * (dist[..., None] - h[..., None] * gx) ** q
    hl = dr[..., -1:]
    x_j = rb[..., -1:] + hl * jx
    w_j = hl ** (q + 1.0) * jw
    npan = a.shape[-1]
    x = np.concatenate([x_gl.reshape(x_gl.shape[:-2] + (-1,)), x_j], axis=-1)
    w = np.concatenate([w_gl.reshape(w_gl.shape[:-2] + (-1,)), w_j], axis=-1)
    panel = np.concatenate([np.repeat(np.arange(npan), order), np.full(order, npan)])
    return x, w, panel


def _integrate_tail(values, w, panel, s, left: int = _LEFT_LEVELS):
    """Sum a tail-rule integrand; at s = 0 the innermost piece is extrapolated.

    At s = 0 the piece [0, 2^{-left-1}] contains the singular endpoint.
    Its contribution is replaced by the geometric continuation of the two
    adjacent dyadic panels, and a non-decaying panel sequence signals a
    divergent integral (reported as +inf).
    """
    prod = values * w
    total = np.sum(prod[..., panel != 0], axis=-1)
    s = np.asarray(s, dtype=float)
    zero = s == 0
    if np.any(zero):
        c1 = np.sum(prod[..., panel == 1], axis=-1)
        c2 = np.sum(prod[..., panel == 2], axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(c2 != 0, c1 / c2, 0.0)
            tail = np.where(r < 1.0 - 1e-9, c1 * r / (1.0 - r), np.inf)
        tail = np.where(c1 == 0, 0.0, tail)
        total = np.where(zero, total + tail, total + np.sum(prod[..., panel == 0], axis=-1))
    else:
        total = total + np.sum(prod[..., panel == 0], axis=-1)
    return total


# ---------------------------------------------------------------------------
# radial profiles and cached tables

@dataclass(frozen=True)
class RadialProfile:
    """A nonnegative function on (0,1) with a growth hint.

    ``hint = (a, b)`` declares  phi(s) <~ s^{-a} (1-s)^b.
    """

    func: Callable
    hint: tuple = (0.0, 0.0)
    name: str = "profile"

    def __call__(self, s):
        return self.func(np.asarray(s, dtype=float))

    def envelope_ratio(self, s):
        s = np.asarray(s, dtype=float)
        a, b = self.hint
        return self(s) * s**a * (1.0 - s) ** (-b)


def constant_profile(c: float = 1.0) -> RadialProfile:
    return RadialProfile(lambda s: np.full_like(np.asarray(s, dtype=float), c), (0.0, 0.0),
                         f"const({c})")


def as_profile(phi) -> RadialProfile:
    if isinstance(phi, RadialProfile):
        return phi
    if callable(phi):
        return RadialProfile(lambda s: np.asarray(phi(s), dtype=float))
    return constant_profile(float(phi))


_CHEB_ORDER = 20
_CACHE_LEVELS = 46


def _cheb_nodes(m: int):
    j = np.arange(m)
    x = np.cos((2 * j + 1) * np.pi / (2 * m))
    bw = (-1.0) ** j * np.sin((2 * j + 1) * np.pi / (2 * m))
    return x, bw


class ProfileCache:
    """Piecewise Chebyshev table of a radial function.

    Panels are dyadic toward 0 ([2^{-k-1}, 2^{-k}] for k = 1..levels) which
    resolves the logarithmic and power behaviour at the origin, plus three
    panels on [1/2, 1].  The tabulated quantity is f(s) / (1-s)^b, which is
    analytic at s = 1 for the profiles used here.  Queries below the
    smallest panel fall back to ``direct``.
    """

    def __init__(self, direct: Callable, right_exponent: float = 0.0,
                 order: int = _CHEB_ORDER, levels: int = _CACHE_LEVELS, name: str = "cache"):
        self.direct = direct
        self.b = float(right_exponent)
        self.name = name
        left = 2.0 ** -np.arange(levels + 1, 0, -1)
        self.edges = np.concatenate([left, [0.75, 0.875, 1.0]])
        self.s_min = self.edges[0]
        xc, self._bw = _cheb_nodes(order)
        lo = self.edges[:-1, None]
        hi = self.edges[1:, None]
        self.nodes = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xc[None, :]
        vals = np.asarray(direct(self.nodes.reshape(-1)), dtype=float).reshape(self.nodes.shape)
        self.values = vals / (1.0 - self.nodes) ** self.b

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.empty(s.shape)
        flat = s.reshape(-1)
        res = out.reshape(-1)
        inside = (flat >= self.s_min) & (flat < 1.0)
        if np.any(inside):
            res[inside] = self._interp(flat[inside])
        at_one = flat >= 1.0
        if np.any(at_one):
            res[at_one] = 0.0 if self.b > 0 else self._interp(np.full(at_one.sum(), 1.0 - 1e-16))
        below = ~(inside | at_one)
        if np.any(below):
            res[below] = self.direct(flat[below])
        return out

    def _interp(self, s):
        idx = np.clip(np.searchsorted(self.edges, s, side="right") - 1, 0, len(self.edges) - 2)
        nodes = self.nodes[idx]
        vals = self.values[idx]
        diff = s[:, None] - nodes
        exact = diff == 0
        diff = np.where(exact, 1.0, diff)
        c = self._bw[None, :] / diff
        interp = np.sum(c * vals, axis=1) / np.sum(c, axis=1)
        hit = exact.any(axis=1)
        if np.any(hit):
            interp[hit] = vals[hit][exact[hit]]
        return interp * (1.0 - s) ** self.b

    def consistency(self, samples: int = 64, seed: int = 0) -> float:
        """Max relative deviation between table and direct evaluation at random points."""
        rng = np.random.default_rng(seed)
        s = np.sort(np.exp(rng.uniform(np.log(self.s_min * 4), np.log(0.999), samples)))
        ref = np.asarray(self.direct(s), dtype=float)
        got = self(s)
        return float(np.max(np.abs(got - ref) / np.maximum(np.abs(ref), 1e-300)))


# ---------------------------------------------------------------------------
# transforms

def transform_F(m: int, t: float, phi, s):
    """F_m phi(s) = int_s^1 r^{m-1} phi(r) (1-r)^t dr; divergence gives +inf."""
    if m < 1 or not t > -1:
        raise DomainError("transform needs m >= 1 and t > -1")
    phi = as_profile(phi)
    s = np.asarray(s, dtype=float)
    if np.any((s < 0) | (s >= 1)):
        raise DomainError("transform evaluated outside [0, 1)")
    x, w, panel = tail_rule(s, t)
    vals = x ** (m - 1) * phi(x)
    out = _integrate_tail(vals, w, panel, s)
    return out if out.ndim else float(out)


def transform_G(m: int, t: float, phi, s):
    """G_m phi(s) = F_m phi(s) / (s^m (1-s)^{t+1})."""
    s = np.asarray(s, dtype=float)
    F = np.asarray(transform_F(m, t, phi, s))
    with np.errstate(divide="ignore"):
        out = np.where(s == 0, np.where(F > 0, np.inf, 0.0), F / (s**m * (1.0 - s) ** (t + 1)))
    return out if out.ndim else float(out)


def transform_G_profile(m: int, t: float, phi, hint=None) -> RadialProfile:
    phi = as_profile(phi)
    if hint is None:
        a, b = phi.hint
        hint = (max(a, m), b)
    return RadialProfile(lambda s: transform_G(m, t, phi, s), hint, f"G{m}[{phi.name}]")


def times_one_minus(phi) -> RadialProfile:
    """The multiplication operator M_{1-s}."""
    phi = as_profile(phi)
    a, b = phi.hint
    return RadialProfile(lambda s: (1.0 - np.asarray(s)) * phi(s), (a, b + 1), f"(1-s){phi.name}")


@lru_cache(maxsize=32)
def phi_profile(n: int, k: int, t: float) -> RadialProfile:
    """Phi_{n,k} = M_{1-s} G_{n+k-1}^2 ... M_{1-s} G_n^2 1, tabulated level by level.

    The singularity hint is (n + k - 1/2, k).
    """
    if n < 1 or k < 0 or not t > -1:
        raise DomainError("phi_profile needs n >= 1, k >= 0, t > -1")
    if k == 0:
        return RadialProfile(constant_profile(1.0).func, (0.0, 0.0), f"Phi[{n},0]")
    prev = phi_profile(n, k - 1, t)
    m = n + k - 1
    inner = ProfileCache(lambda s: transform_G(m, t, prev, s), right_exponent=k - 1,
                         name=f"G{m}Phi[{n},{k - 1}]")
    outer = ProfileCache(lambda s: (1.0 - s) * transform_G(m, t, inner, s),
                         right_exponent=k, name=f"Phi[{n},{k}]")
    return RadialProfile(outer, (n + k - 0.5, float(k)), f"Phi[{n},{k}]")


# ---------------------------------------------------------------------------
# correction-term profiles

def _kernel_moment(s, p: float, q: float):
    """int_s^1 F(s,x) x^p (1-x)^q dx."""
    s = np.asarray(s, dtype=float)
    x, w, panel = tail_rule(s, q)
    vals = f_kernel(s[..., None], x, check=False) * x**p
    return _integrate_tail(vals, w, panel, s)


def rho_disk_direct(t: float, s):
    """(t+1)/(16 pi^2) int_s^1 (1-x)^t x^{-1} F(s,x) dx by direct quadrature."""
    s = np.asarray(s, dtype=float)
    return (t + 1.0) / (16.0 * math.pi**2) * _kernel_moment(s, -1.0, t)


def _rho_ball_coeffs(n: int, t: float):
    out = []
    for k in range(1, n + 1):
        lc = (gammaln(n) + 2 * gammaln(n + t + 1) - gammaln(n - k + 1)
              - gammaln(t + 1 + k) - gammaln(t + 1) - 2 * n * math.log(math.pi))
        out.append((k, math.exp(lc)))
    return out


def rho_ball_direct(n: int, t: float, s):
    """s^{-n-1} sum_k c_k int_s^1 F(s,x) x^{n-k-1} (1-x)^{t+k-1} dx."""
    s = np.asarray(s, dtype=float)
    total = 0.0
    for k, c in _rho_ball_coeffs(n, t):
        total = total + c * _kernel_moment(s, n - k - 1.0, t + k - 1.0)
    return total * s ** (-n - 1.0)


def _check_st(t, s):
    if not t > -1:
        raise DomainError("weight must satisfy t > -1")
    s = np.asarray(s, dtype=float)
    if np.any((s <= 0) | (s >= 1)):
        raise DomainError("profiles are evaluated on (0, 1)")
    return s


@lru_cache(maxsize=64)
def rho_disk_cache(t: float) -> ProfileCache:
    return ProfileCache(lambda s: rho_disk_direct(t, s), right_exponent=t + 2.0,
                        name=f"rho_disk[t={t}]")


@lru_cache(maxsize=64)
def rho_ball_cache(n: int, t: float) -> ProfileCache:
    return ProfileCache(lambda s: rho_ball_direct(n, t, s), right_exponent=t + 2.0,
                        name=f"rho_ball[n={n},t={t}]")


def rho_disk(t: float, s, cached: bool = True):
    """The disk correction profile; strictly positive, ~ ln(1/s) at 0."""
    s = _check_st(t, s)
    out = rho_disk_cache(float(t))(s) if cached else rho_disk_direct(t, s)
    return out if np.ndim(out) else float(out)


def rho_ball(n: int, t: float, s, cached: bool = True):
    if n < 1:
        raise DomainError("n must be positive")
    s = _check_st(t, s)
    out = rho_ball_cache(int(n), float(t))(s) if cached else rho_ball_direct(n, t, s)
    return out if np.ndim(out) else float(out)


def phi_n2_closed(n: int, t: float, s):
    """Closed form of Phi_{n,2} as a sum of F-moments."""
    s = _check_st(t, s)
    total = 0.0
    for k in range(1, n + 1):
        c = math.exp(gammaln(n) + gammaln(t + 1) - gammaln(n - k + 1) - gammaln(t + 1 + k))
        total = total + c * _kernel_moment(s, n - k - 1.0, t + k - 1.0)
    out = (1.0 - s) ** (-t) * s ** (-n - 1.0) * total
    return out if np.ndim(out) else float(out)


def psi1(t: float, s):
    """int_s^1 r^{-1}(1-r)^t dr / ((t+1)(1-s)^t)."""
    s = np.asarray(s, dtype=float)
    x, w, panel = tail_rule(s, t)
    return _integrate_tail(1.0 / x, w, panel, s) / ((t + 1.0) * (1.0 - s) ** t)


# ---------------------------------------------------------------------------
# series

def sum_series(term: Callable, start: int = 0, rtol: float = SERIES_RTOL,
               cap: int = SERIES_CAP, block: int = 4096, tail: bool = True):
    """Sum term(j) for j >= start until term < rtol * partial sum or ``cap`` terms.

    ``term`` must accept a float array and be smooth in j.  Algebraically
    decaying terms leave a remainder far above the stopping threshold, so
    the remainder is estimated by Euler-Maclaurin: the integral of the term
    function over [J, inf) plus the first two boundary corrections.
    Returns (value, terms_used, tail_estimate).
    """
    total = 0.0
    j = start
    used = 0
    while used < cap:
        m = min(block, cap - used)
        js = np.arange(j, j + m, dtype=float)
        vals = np.asarray(term(js), dtype=float)
        total += math.fsum(vals)
        used += m
        j += m
        if abs(vals[-1]) < rtol * abs(total):
            break
        block = min(block * 2, 1 << 18)
    if not tail:
        return total, used, 0.0
    J = float(j)
    # int_J^inf term(x) dx with x = J/u, on the graded rule over (0, 1)
    u, wu, pan = tail_rule(np.array(0.0), 0.0)
    vals = J * np.asarray(term(J / u), dtype=float) / u**2
    integral = float(_integrate_tail(vals, wu, pan, np.array(0.0)))
    edge = np.asarray(term(np.array([J - 1.0, J, J + 1.0])), dtype=float)
    est = integral + 0.5 * edge[1] - (edge[2] - edge[0]) / 24.0
    return total + est, used, est


def f_phi_zero(n: int, t: float, method: str = "series"):
    """F_{n+1} Phi_{n,1}(0), by its Beta series or by its log-moment integral."""
    if n < 1 or not t > -1:
        raise DomainError("needs n >= 1 and t > -1")
    if method == "series":
        term = lambda j: np.exp(betaln(n + 1 + j, t + 1) - np.log1p(j))
        val, _, _ = sum_series(term)
        return val
    if method == "integral":
        val, _ = integrate.quad(lambda s: -(1.0 - s) ** (n - 1), 0.0, 1.0, weight="alg-loga",
                                wvar=(t, 0.0), epsabs=0.0, epsrel=1e-13, limit=200)
        return val
    if method == "profile":
        return transform_F(n + 1, t, phi_profile(n, 1, t), 0.0)
    raise ValueError(f"unknown method {method!r}")


def a_coeff(n: int, t: float) -> complex:
    """Coefficient of the boundary term; a * (2 pi i)^n is real and positive."""
    num = f_phi_zero(n, t, method="integral")
    denom = math.exp(2 * betaln(n, t + 1)) * n * (2j * math.pi) ** n
    return num / denom


def transform_shift_series(m: int, k: int, t: float, phi, cap: int = 20000):
    """sum_{j>=0} F_{m+k+j} phi(0) / (k+j)."""
    phi = as_profile(phi)
    x, w, panel = tail_rule(np.array(0.0), t)
    keep = panel != 0
    x, w = x[keep], w[keep]
    wp = w * phi(x)
    lx = np.log(x)

    def term(j):
        p = (m + k + np.asarray(j)[:, None] - 1.0)
        return np.exp(p * lx[None, :]) @ wp / (k + np.asarray(j))

    val, _, _ = sum_series(term, cap=cap, block=2048)
    return val


# ---------------------------------------------------------------------------
# sphere moments

def d_coeff_axis(alpha, beta_, z) -> complex:
    """d_{alpha,beta} at z = (z1, 0, ..., 0) in closed form."""
    alpha = tuple(int(a) for a in alpha)
    beta_ = tuple(int(b) for b in beta_)
    z = as_point(z)
    if np.any(z[1:] != 0):
        raise DomainError("closed form holds only on the first axis")
    if alpha != beta_:
        return 0.0
    n = len(alpha)
    na = sum(alpha)
    r2 = float(norm_sq(z))
    log_fact = sum(math.lgamma(a + 1) for a in alpha)
    val = math.exp(math.lgamma(n) + log_fact - math.lgamma(n + na))
    return (1.0 - r2) ** (alpha[0] + na) * val


def d_coeff(alpha, beta_, z, resolution: int | None = None) -> complex:
    """Sphere average of (A_z zeta)^alpha conj(A_z zeta)^beta (n in {1, 2})."""
    from .quadrature import sphere_rule

    alpha = np.asarray(alpha, dtype=int)
    beta_ = np.asarray(beta_, dtype=int)
    z = as_point(z, len(alpha))
    n = len(alpha)
    if resolution is None:
        resolution = int(alpha.sum() + beta_.sum()) // 2 + 4
    rule = sphere_rule(n, resolution, normalized=True)
    fr = frame(z)
    v = fr.apply_a(rule.nodes)
    vals = np.prod(v**alpha, axis=-1) * np.prod(np.conj(v) ** beta_, axis=-1)
    return complex(np.sum(vals * rule.weights))


def d_matrix(z) -> np.ndarray:
    """[d_{e_i, e_j}(z)] = A_z A_z^* / n."""
    fr = frame(z)
    n = len(fr.base)
    return fr.a_matrix @ fr.a_matrix.conj().T / n


# ---------------------------------------------------------------------------
# property helpers

def f_kernel_moment_ratio(x: float, eps: float) -> float:
    """int_0^x (1-s)^{-eps} F(s,x) ds / x^2."""
    if not 0 < x < 1:
        raise DomainError("x must lie in (0, 1)")

    def integrand(v):
        s = x * v
        return (1.0 - s) ** (-eps) * float(f_kernel(s, x)) * x

    val, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=0.0, epsrel=1e-11, limit=200,
                            points=[0.5])
    return val / x**2


def rho_decay_integral(t: float) -> float:
    """int_0^1 rho_t(s) (1-s)^{-1/2} ds."""
    x, w, panel = tail_rule(np.array(0.0), -0.5)
    keep = panel != 0
    return float(np.sum(w[keep] * rho_disk(t, x[keep])))
