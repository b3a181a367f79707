"""Toeplitz and Hankel operators in the normalized monomial basis.

For polynomial symbols every matrix element is a finite combination of
monomial norms, so diagonal entries of T_f T_g - T_{fg} are exact and the
only approximation in a trace is the tail of the sum over basis vectors.
Smooth symbols (n <= 2) get their matrix elements from a quadrature rule
that integrates the angular variables by FFT.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, roots_legendre

from .geometry import SpaceParams
from .symbols import MultiIndex, PolySymbol, SmoothSymbol, as_smooth, product
from . import _kernels


# ---------------------------------------------------------------------------
# basis bookkeeping

class BasisIndexer:
    """Multi-indices with |alpha| <= max_degree in graded lexicographic order.

    Within a degree, indices are ordered lexicographically descending, so
    for n = 2 degree 1 reads (1,0), (0,1).
    """

    def __init__(self, n: int, max_degree: int):
        self.n = int(n)
        self.max_degree = int(max_degree)
        items = []
        for d in range(self.max_degree + 1):
            items.extend(_degree_shell(self.n, d))
        self.items = [MultiIndex(a) for a in items]
        self._lookup = {a: i for i, a in enumerate(self.items)}
        self.array = np.array(self.items, dtype=np.int64).reshape(len(self.items), self.n)

    def __len__(self):
        return len(self.items)

    def __getitem__(self, i):
        return self.items[i]

    def index(self, alpha) -> int:
        return self._lookup[MultiIndex(alpha)]

    def __contains__(self, alpha):
        return MultiIndex(alpha) in self._lookup

    def degree_slice(self, d: int) -> slice:
        start = sum(_shell_size(self.n, k) for k in range(d))
        return slice(start, start + _shell_size(self.n, d))


def _shell_size(n: int, d: int) -> int:
    return math.comb(d + n - 1, n - 1)


def _degree_shell(n: int, d: int):
    """All multi-indices of length n and degree d, lexicographically descending."""
    if n == 1:
        return [(d,)]
    out = []
    for first in range(d, -1, -1):
        for rest in _degree_shell(n - 1, d - first):
            out.append((first,) + rest)
    return out


def shell_array(n: int, d: int) -> np.ndarray:
    return np.array(_degree_shell(n, d), dtype=np.int64).reshape(-1, n)


# ---------------------------------------------------------------------------
# monomial norms and matrix elements

def log_monomial_norm(params: SpaceParams, alpha) -> np.ndarray:
    """log ||z^alpha||^2 for an array of (possibly real) multi-indices."""
    a = np.asarray(alpha, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1)
    s = params.n + params.t + 1.0
    return (np.sum(gammaln(a + 1.0), axis=-1) + gammaln(s) - gammaln(s + np.sum(a, axis=-1)))


def monomial_norm(params: SpaceParams, alpha) -> float:
    """||z^alpha||^2 = alpha! Gamma(n+t+1) / Gamma(n+t+1+|alpha|)."""
    alpha = np.atleast_1d(np.asarray(alpha))
    if alpha.shape[-1] != params.n:
        raise ValueError("multi-index length does not match dimension")
    return float(np.exp(log_monomial_norm(params, alpha)))


def _entry_array(params: SpaceParams, f: PolySymbol, beta: np.ndarray, gamma: np.ndarray):
    """<T_f e_beta, e_gamma> for matched arrays of multi-indices (rows of beta, gamma)."""
    beta = np.asarray(beta, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    lb = log_monomial_norm(params, beta)
    lg = log_monomial_norm(params, gamma)
    out = np.zeros(np.broadcast(lb, lg).shape, dtype=complex)
    for (a, b), c in f.terms.items():
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        hit = np.all(a + beta == b + gamma, axis=-1)
        if np.any(hit):
            la = log_monomial_norm(params, a + beta)
            out = out + np.where(hit, c * np.exp(la - 0.5 * (lb + lg)), 0.0)
    return out


def toeplitz_entry(params: SpaceParams, f: PolySymbol, beta, gamma) -> complex:
    """<T_f e_beta, e_gamma> in the normalized monomial basis (exact)."""
    beta = np.atleast_1d(np.asarray(beta))[None, :]
    gamma = np.atleast_1d(np.asarray(gamma))[None, :]
    return complex(_entry_array(params, f, beta, gamma)[0])


@dataclass(frozen=True)
class TruncatedOperator:
    indexer: BasisIndexer
    matrix: np.ndarray
    params: SpaceParams
    provenance: str = ""

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))


def toeplitz_matrix(params: SpaceParams, f: PolySymbol, max_degree: int) -> TruncatedOperator:
    """Matrix M with M[gamma, beta] = <T_f e_beta, e_gamma>, |beta|, |gamma| <= max_degree."""
    idx = BasisIndexer(params.n, max_degree)
    A = idx.array
    B = np.repeat(A[None, :, :], len(idx), axis=0)   # beta varies along columns
    G = np.repeat(A[:, None, :], len(idx), axis=1)   # gamma varies along rows
    M = _entry_array(params, f, B, G)
    return TruncatedOperator(idx, M, params, f.to_text())


# ---------------------------------------------------------------------------
# semi-commutator diagonals

def _diag_array(params: SpaceParams, f: PolySymbol, g: PolySymbol, beta: np.ndarray):
    """<(T_f T_g - T_{fg}) e_beta, e_beta> for an array of (possibly real) indices.

    T_g e_beta has components only at gamma = beta + a - b for the terms
    (a, b) of g, so the inner sum over gamma is finite.
    """
    beta = np.asarray(beta, dtype=float)
    out = np.zeros(beta.shape[:-1], dtype=complex)
    shifts = {tuple(np.subtract(a, b)) for (a, b) in g.terms}
    for shift in shifts:
        gamma = beta + np.asarray(shift, dtype=float)
        valid = np.all(gamma >= 0, axis=-1)
        gsafe = np.where(valid[..., None], gamma, 0.0)
        tg = _entry_array(params, g, beta, gsafe)      # <T_g e_beta, e_gamma>
        tf = _entry_array(params, f, gsafe, beta)      # <T_f e_gamma, e_beta>
        out = out + np.where(valid, tg * tf, 0.0)
    out = out - _entry_array(params, f * g, beta, beta)
    return out


def semicommutator_diagonal(params: SpaceParams, f: PolySymbol, g: PolySymbol, beta) -> complex:
    beta = np.atleast_1d(np.asarray(beta))[None, :]
    return complex(_diag_array(params, f, g, beta)[0])


def hankel_inner_diagonal(params: SpaceParams, f: PolySymbol, g: PolySymbol, beta) -> complex:
    """<H_g e_beta, H_{conj f} e_beta> = <g e_beta, conj(f) e_beta> - <P(g e_beta), P(conj(f) e_beta)>."""
    beta = np.atleast_1d(np.asarray(beta, dtype=float))[None, :]
    fb = f.conj()
    full = _entry_array(params, f * g, beta, beta)
    proj = 0.0
    gammas = {tuple(np.subtract(a, b)) for (a, b) in g.terms} & \
        {tuple(np.subtract(a, b)) for (a, b) in fb.terms}
    for shift in gammas:
        gamma = beta + np.asarray(shift, dtype=float)
        if np.any(gamma < 0):
            continue
        proj = proj + _entry_array(params, g, beta, gamma) * np.conj(
            _entry_array(params, fb, beta, gamma))
    return complex((full - proj)[0])


@dataclass
class ConvergenceInfo:
    method: str
    max_degree: int
    partial_sums: dict = field(default_factory=dict)
    estimate: complex = 0.0
    error_estimate: float = 0.0
    tol: float = 0.0
    converged: bool = True
    note: str = ""

    def as_dict(self):
        return {
            "method": self.method, "max_degree": self.max_degree,
            "partial_sums": {str(k): [v.real, v.imag] for k, v in self.partial_sums.items()},
            "estimate": [self.estimate.real, self.estimate.imag],
            "error_estimate": self.error_estimate, "tol": self.tol,
            "converged": self.converged, "note": self.note,
        }


def _shell_sums(params, diag_fn, max_degree: int) -> np.ndarray:
    """Sum of diagonal entries over each degree shell 0..max_degree."""
    n = params.n
    if n == 1:
        k = np.arange(max_degree + 1, dtype=float)[:, None]
        return np.asarray(diag_fn(k))
    out = np.zeros(max_degree + 1, dtype=complex)
    for d in range(max_degree + 1):
        out[d] = np.sum(diag_fn(shell_array(n, d)))
    return out


def richardson_table(partial: list) -> np.ndarray:
    """Extrapolate partial sums at N, 2N, 4N, ... to N = infinity.

    The error of a partial sum of a smooth algebraically decaying series
    has an expansion c_1/N + c_2/N^2 + ...; column m of the table removes
    the first m terms.
    """
    L = len(partial)
    R = np.zeros((L, L), dtype=complex)
    R[:, 0] = partial
    for m in range(1, L):
        for j in range(m, L):
            R[j, m] = (2**m * R[j, m - 1] - R[j - 1, m - 1]) / (2**m - 1)
    return R


def _trace_with_tail(params, diag_fn, max_degree: int, tol: float, method: str,
                     levels: int = 4):
    """Sum diagonal entries over |beta| <= max_degree and extrapolate the tail.

    ``richardson`` compares partial sums at max_degree / 2^levels, ..., max_degree
    and reports the difference of the last two diagonal table entries as its
    error estimate.  ``none`` returns the raw partial sum.
    """
    N = int(max_degree)
    shells = _shell_sums(params, diag_fn, N)
    if method in ("auto", "richardson"):
        levels = max(1, min(int(levels), int(math.log2(max(N, 2))) - 2))
        degs = [N >> (levels - j) for j in range(levels + 1)]
        cums = np.cumsum(shells)
        S = [complex(cums[d]) for d in degs]
        R = richardson_table(S)
        est = complex(R[-1, -1])
        err = float(abs(R[-1, -1] - R[-2, -2]))
        info = ConvergenceInfo("richardson", N, dict(zip(degs, S)), est, err, tol,
                               bool(err <= tol),
                               f"partial sums at degrees {degs}, error modelled as a series in 1/N")
        return est, info
    if method == "none":
        s = complex(np.sum(shells))
        return s, ConvergenceInfo(method, N, {N: s}, s, float("nan"), tol, True, "raw partial sum")
    raise ValueError(f"unknown tail method {method!r}")


def default_degree(params: SpaceParams) -> int:
    """Truncation degree for the polynomial trace paths.

    Diagonal entries only settle into their 1/k tail once k >> t, so on the
    disk the degree grows with t.  Shell sums on the disk cost O(N).
    """
    if params.n == 1:
        return max(1024, 1 << math.ceil(math.log2(256 * (params.t + 2))))
    return 1024


def semicommutator_trace(params: SpaceParams, f, g, max_degree: int | None = None, tol: float = 1e-8,
                         method: str = "auto", levels: int = 4, **smooth_kw):
    """Tr(T_f T_g - T_{fg}) with tail control; returns (value, ConvergenceInfo).

    Polynomial symbols use exact diagonals.  Smooth symbols (n <= 2) use
    quadrature-built matrices truncated at ``max_degree`` with no tail model.
    """
    if isinstance(f, PolySymbol) and isinstance(g, PolySymbol):
        if f.is_constant or g.is_constant:
            return 0.0 + 0.0j, ConvergenceInfo("exact", 0, {}, 0.0, 0.0, tol, True,
                                               "constant symbol")
        return _trace_with_tail(params, lambda b: _diag_array(params, f, g, b),
                                max_degree or default_degree(params), tol, method, levels)
    return smooth_semicommutator_trace(params, f, g, max_degree or 20, **smooth_kw)


def hankel_hs_norm(params: SpaceParams, g: PolySymbol, max_degree: int | None = None, tol: float = 1e-8,
                   method: str = "auto", levels: int = 4):
    """||H_g||_{S^2}^2 = sum_beta (||g e_beta||^2 - ||P(g e_beta)||^2)."""
    if g.is_constant or all(b.degree == 0 for (a, b) in g.terms):
        return 0.0, ConvergenceInfo("exact", 0, {}, 0.0, 0.0, tol, True, "holomorphic symbol")
    gb = g.conj()
    shifts = {tuple(np.subtract(a, b)) for (a, b) in g.terms}

    def diag(beta):
        beta = np.asarray(beta, dtype=float)
        full = _entry_array(params, gb * g, beta, beta).real
        proj = 0.0
        for shift in shifts:
            gamma = beta + np.asarray(shift, dtype=float)
            valid = np.all(gamma >= 0, axis=-1)
            gs = np.where(valid[..., None], gamma, 0.0)
            proj = proj + np.where(valid, np.abs(_entry_array(params, g, beta, gs)) ** 2, 0.0)
        return full - proj

    val, info = _trace_with_tail(params, diag, max_degree or default_degree(params), tol, method,
                                 levels)
    return float(np.real(val)), info


# ---------------------------------------------------------------------------
# smooth symbols: quadrature-built matrices

@dataclass(frozen=True)
class TorusGrid:
    """Quadrature on B_n (n <= 2) in s = |z|^2, u = |z_1|^2/|z|^2 and phases.

    Angular integrals are done by FFT, so a matrix element costs one dot
    product over the (s, u) nodes.
    """

    n: int
    s: np.ndarray
    ws: np.ndarray
    u: np.ndarray
    wu: np.ndarray
    n_angle: int

    @classmethod
    def build(cls, n: int, s_max: float = 1.0, n_s: int = 48, n_u: int = 48, n_angle: int = 64):
        if n not in (1, 2):
            raise NotImplementedError("quadrature matrices are provided for n <= 2")
        x, w = roots_legendre(n_s)
        s = 0.5 * s_max * (x + 1.0)
        ws = 0.5 * s_max * w
        if n == 2:
            x, w = roots_legendre(n_u)
            u = 0.5 * (x + 1.0)
            wu = 0.5 * w
        else:
            u = np.ones(1)
            wu = np.ones(1)
        return cls(n, s, ws, u, wu, n_angle)

    def points(self, i_s: int) -> np.ndarray:
        """Points of the grid at one radial node: shape (n_u, M, ..., n)."""
        M = self.n_angle
        ph = 2.0 * math.pi * np.arange(M) / M
        s = self.s[i_s]
        if self.n == 1:
            return (math.sqrt(s) * np.exp(1j * ph))[None, :, None]
        r1 = np.sqrt(s * self.u)[:, None, None]
        r2 = np.sqrt(s * (1.0 - self.u))[:, None, None]
        z1 = r1 * np.exp(1j * ph)[None, :, None] * np.ones((1, 1, M))
        z2 = r2 * np.exp(1j * ph)[None, None, :] * np.ones((1, M, 1))
        return np.stack([z1, z2], axis=-1)

    def fourier(self, func, lo: int, hi: int) -> np.ndarray:
        """Angular Fourier coefficients hat{F}_k(s, u) = mean F e^{-i k . phi} for lo <= k_i <= hi.

        Mode k is stored at index k - lo along each angular axis.
        """
        M = self.n_angle
        if hi - lo >= M:
            raise ValueError("angular grid too coarse for the requested modes")
        modes = np.arange(lo, hi + 1) % M
        out = []
        for i in range(len(self.s)):
            vals = np.asarray(func(self.points(i)), dtype=complex)
            if self.n == 1:
                out.append((np.fft.fft(vals, axis=-1) / M)[..., modes])
            else:
                F = np.fft.fft2(vals, axes=(-2, -1)) / (M * M)
                out.append(F[:, modes][:, :, modes])
        return np.stack(out, axis=0)   # (n_s, n_u, K[, K])


def smooth_matrix(params: SpaceParams, f, rows: BasisIndexer, cols: BasisIndexer,
                  grid: TorusGrid, coeffs: np.ndarray | None = None) -> np.ndarray:
    """M[gamma, beta] = int f e_beta conj(e_gamma) d lambda_t for beta in rows, gamma in cols.

    With z_1 = sqrt(s u) e^{i phi_1}, z_2 = sqrt(s (1-u)) e^{i phi_2} one has
    d lambda_t = c (1-s)^t s^{n-1} (1/2)^n ds du dphi, so the angular integral
    of f z^beta conj(z)^gamma is (2 pi)^n times the Fourier coefficient of f
    at gamma - beta.
    """
    n, t = params.n, params.t
    lo = -rows.max_degree
    hi = cols.max_degree
    if coeffs is None:
        coeffs = grid.fourier(as_smooth(f).value, lo, hi)
    s = grid.s[:, None]
    u = grid.u[None, :]
    W = (params.norm_const * (1.0 - s) ** t * s ** (n - 1) * 0.5**n * (2 * math.pi) ** n
         * grid.ws[:, None] * grid.wu[None, :])                    # (n_s, n_u)
    if n == 1:
        radial = [np.sqrt(s) * np.ones_like(u)]
    else:
        radial = [np.sqrt(s * u), np.sqrt(s * (1.0 - u))]
    B = rows.array
    G = cols.array
    logr = [np.log(np.maximum(r, 1e-300)) for r in radial]
    lnb = log_monomial_norm(params, B)
    lng = log_monomial_norm(params, G)
    flatW = W.reshape(-1)
    # powers r_i^{beta_i}, r_i^{gamma_i} on the (s, u) nodes
    PB = np.exp(sum(B[:, i, None] * logr[i].reshape(1, -1) for i in range(n)))  # (nb, nsu)
    PG = np.exp(sum(G[:, i, None] * logr[i].reshape(1, -1) for i in range(n)))  # (ng, nsu)
    C = coeffs.reshape(coeffs.shape[0] * coeffs.shape[1], *coeffs.shape[2:])    # (nsu, M[, M])
    out = _kernels.smooth_matrix_contract(C, flatW, PB, PG, B, G, n, -lo)
    return out * np.exp(-0.5 * (lnb[None, :] + lng[:, None]))


def _support_radius(sym) -> float:
    sup = getattr(sym, "support", None)
    if sup is None:
        return 1.0
    c, r = sup
    return min(1.0, float(np.sqrt(np.sum(np.abs(c) ** 2))) + r)


def smooth_semicommutator_trace(params: SpaceParams, f, g, max_degree: int = 20,
                                inner_degree: int | None = None, n_s: int = 48, n_u: int = 48,
                                n_angle: int | None = None):
    """Truncated trace sum_{|beta|<=N} [sum_{|gamma|<=N'} G[gamma,beta] F[beta,gamma] - FG[beta,beta]]."""
    f, g = as_smooth(f), as_smooth(g)
    N = int(max_degree)
    Ni = int(inner_degree if inner_degree is not None else 2 * N)
    if n_angle is None:
        n_angle = 1 << int(math.ceil(math.log2(N + Ni + 24)))
    rmax = max(_support_radius(f), _support_radius(g))
    grid = TorusGrid.build(params.n, min(1.0, rmax**2), n_s, n_u, n_angle)
    rows = BasisIndexer(params.n, N)
    cols = BasisIndexer(params.n, Ni)
    Mg = smooth_matrix(params, g, rows, cols, grid)              # <T_g e_beta, e_gamma>
    Mf_t = smooth_matrix(params, f.conj(), rows, cols, grid)     # conj <T_f e_gamma, e_beta>
    fg = product(f, g)
    Mfg = smooth_matrix(params, fg, rows, rows, grid)
    diag = np.sum(Mg * np.conj(Mf_t), axis=0) - np.diag(Mfg)
    val = complex(np.sum(diag))
    shells = [complex(np.sum(diag[rows.degree_slice(d)])) for d in range(N + 1)]
    info = ConvergenceInfo("truncated", N, {N: val}, val, abs(shells[-1]), 0.0, True,
                           f"inner degree {Ni}; error estimate is the last shell")
    return val, info
