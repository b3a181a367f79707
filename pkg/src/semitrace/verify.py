"""Both sides of the semi-commutator trace formulas, scans and identity checks.

The right-hand side has a boundary term (a single integral of first
derivatives) and a correction term (a double integral weighted by a radial
profile of the pseudo-hyperbolic distance).  The correction term is
computed after the substitution w = phi_z(zeta), which moves the
singularity of the profile to zeta = 0 for every z.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .geometry import DomainError, SpaceParams, frame, inner, norm_sq, sphere_area
from .operators import hankel_hs_norm, semicommutator_trace
from .quadrature import (MonteCarloRule, ball_rule, disk_rule, gauss_legendre01, gauss_jacobi01,
                         sphere_rule, _sobol)
from .specfun import (a_coeff, constant_profile, d_matrix, transform_shift_series, rho_ball, rho_ball_cache,
                      rho_disk, rho_disk_cache, transform_F, transform_G, beta as beta_fn)
from .symbols import PolySymbol, as_smooth, mobius_batch


# ---------------------------------------------------------------------------
# reports

@dataclass
class TermPair:
    """The two summands of the right-hand side."""

    wedge_term: complex
    correction_term: complex
    meta: dict = field(default_factory=dict)

    @property
    def total(self) -> complex:
        return self.wedge_term + self.correction_term


@dataclass
class VerificationReport:
    check_id: str
    params: dict
    lhs: complex
    rhs_terms: list
    tol: float
    seed: int | None = None
    budgets: dict = field(default_factory=dict)
    wall_time_ms: float = 0.0
    details: dict = field(default_factory=dict)
    tol_kind: str = "abs"

    @property
    def rhs(self) -> complex:
        return complex(sum(self.rhs_terms))

    @property
    def abs_err(self) -> float:
        return float(abs(self.lhs - self.rhs))

    @property
    def rel_err(self) -> float:
        scale = max(abs(self.lhs), abs(self.rhs))
        return self.abs_err / scale if scale > 0 else 0.0

    @property
    def passed(self) -> bool:
        err = self.abs_err if self.tol_kind == "abs" else self.rel_err
        return bool(np.isfinite(err) and err <= self.tol)

    def as_dict(self) -> dict:
        cplx = lambda v: [float(np.real(v)), float(np.imag(v))]
        return {
            "check_id": self.check_id,
            "params": self.params,
            "lhs": cplx(self.lhs),
            "rhs_terms": [cplx(v) for v in self.rhs_terms],
            "abs_err": self.abs_err,
            "rel_err": self.rel_err,
            "tol": self.tol,
            "tol_kind": self.tol_kind,
            "pass": self.passed,
            "seed": self.seed,
            "budgets": self.budgets,
            "wall_time_ms": self.wall_time_ms,
            "details": _jsonable(self.details),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        terms = "  ".join(f"{complex(v):.10g}" for v in self.rhs_terms)
        flag = "PASS" if self.passed else "FAIL"
        return (f"{flag}  {self.check_id:<24} lhs={complex(self.lhs):.12g}  rhs=[{terms}]  "
                f"abs_err={self.abs_err:.3e}  rel_err={self.rel_err:.3e}  "
                f"tol={self.tol:.1e} ({self.tol_kind})")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def _timed(check_id, params, tol, fn, seed=None, budgets=None, tol_kind="abs"):
    t0 = time.perf_counter()
    lhs, rhs_terms, details = fn()
    ms = 1000.0 * (time.perf_counter() - t0)
    return VerificationReport(check_id, params, complex(lhs), [complex(v) for v in rhs_terms], tol,
                              seed, budgets or {}, ms, details, tol_kind)


@dataclass(frozen=True)
class Budget:
    """Node counts and sample sizes for the right-hand side."""

    outer_radial: int = 24
    outer_angular: int = 48
    inner_order: int = 8
    inner_left_levels: int = 30
    inner_right_levels: int = 20
    inner_angular: int = 64
    mc_samples: int = 1_000_000
    seed: int = 0
    max_degree: int | None = None
    smooth_degree: int = 20
    smooth_inner_degree: int = 30
    smooth_nodes: int = 48

    def as_dict(self):
        return asdict(self)


# ---------------------------------------------------------------------------
# one-dimensional rules used by the correction term

def graded_unit_rule(order: int = 8, left: int = 30, right: int = 20):
    """Composite Gauss rule on (0, 1) with dyadic panels toward both ends.

    Resolves integrands with a logarithmic singularity at 0 and a
    boundary layer at 1.
    """
    lb = [0.0] + [2.0 ** -k for k in range(left, 0, -1)]
    rb = [1.0 - 2.0 ** -k for k in range(2, right + 1)] + [1.0]
    edges = np.array(lb + rb)
    x, w = gauss_legendre01(order)
    a, b = edges[:-1, None], edges[1:, None]
    return (a + (b - a) * x[None, :]).ravel(), ((b - a) * w[None, :]).ravel()


def _circle_map(c, m: int):
    """Angles clustered at 0 by the circle automorphism with parameter c.

    e^{i theta} = (e^{i psi} + c)/(1 + c e^{i psi}) on a uniform psi grid.
    Returns (theta, weights) with weights = (2 pi / m) d theta / d psi.
    Under this map (1 - c e^{i theta}) = (1 - c^2)/(1 + c e^{i psi}), so
    Poisson-type peaks of width 1 - c become smooth in psi.
    """
    c = np.asarray(c, dtype=float)[..., None]
    psi = 2.0 * math.pi * (np.arange(m) + 0.5) / m
    e = np.exp(1j * psi)
    q = (e + c) / (1.0 + c * e)
    theta = np.angle(q)
    jac = (1.0 - c * c) / np.abs(1.0 + c * e) ** 2
    return theta, (2.0 * math.pi / m) * jac


# ---------------------------------------------------------------------------
# disk

def _term1_disk(f, g, budget: Budget) -> complex:
    """-(1/pi) int_D d f dbar g dm."""
    rule = disk_rule(0.0, max(budget.outer_radial, 8), max(budget.outer_angular, 16),
                     measure="lebesgue")
    val = rule.integrate(lambda z: f.grad(z)[..., 0] * g.grad_bar(z)[..., 0])
    return -complex(val) / math.pi


def _correction_disk(t: float, f, g, budget: Budget, kernel: str = "laplacian") -> complex:
    """int_{D x D} varrho_t(|phi_z(w)|^2) Lap f(z) Lap g(w) dm(z) dm(w).

    After w = phi_z(zeta), dm(w) = (1-|z|^2)^2 / |1 - conj(z) zeta|^4 dm(zeta).
    ``kernel="levi"`` evaluates the same quantity through the Levi-form
    integrand and the ball profile rho_{1,t}; the two agree algebraically.
    """
    orule = disk_rule(0.0, budget.outer_radial, budget.outer_angular, measure="lebesgue")
    z_all = orule.nodes[:, 0]
    wz_all = orule.weights
    s, ws = graded_unit_rule(budget.inner_order, budget.inner_left_levels,
                             budget.inner_right_levels)
    if kernel == "laplacian":
        prof = np.asarray(rho_disk(t, s))
    elif kernel == "levi":
        prof = np.asarray(rho_ball(1, t, s))
    else:
        raise ValueError(f"unknown kernel {kernel!r}")
    if kernel == "laplacian":
        lap_f = f.laplacian_value(z_all[:, None])
    rs = np.sqrt(s)
    M = budget.inner_angular
    total = 0.0 + 0.0j
    chunk = max(1, (1 << 19) // (len(s) * M))
    for lo in range(0, len(z_all), chunk):
        z = z_all[lo:lo + chunk][:, None, None]                  # (c, 1, 1)
        az = np.abs(z)
        one_z = 1.0 - az * az
        theta, wth = _circle_map(az[:, :, 0] * rs[None, :], M)  # (c, ns, M)
        zeta = rs[None, :, None] * np.exp(1j * (np.angle(z) + theta))
        q = 1.0 - np.conj(z) * zeta
        denom = (q.real * q.real + q.imag * q.imag) ** 2
        w = ((z - zeta) / q)[..., None]                      # phi_z(zeta) at n = 1
        if kernel == "laplacian":
            core = lap_f[lo:lo + chunk, None, None] * g.laplacian_value(w) * one_z**2 / denom
        else:
            xi = (one_z * zeta)[..., None]                     # A_z zeta at n = 1
            Hf = f.mixed_hessian(z[:, 0, :])[:, 0, 0][:, None, None]
            Lf = Hf * np.abs(xi[..., 0]) ** 2
            Lg = g.mixed_hessian(w)[..., 0, 0] * np.abs(xi[..., 0]) ** 2
            core = Lf * Lg / (denom * one_z**2)
        inner_val = 0.5 * np.sum(ws[None, :, None] * wth * prof[None, :, None] * core, axis=(1, 2))
        total += np.sum(wz_all[lo:lo + chunk] * inner_val)
    return complex(total)


def rhs_disk(t: float, f, g, budget: Budget | None = None) -> TermPair:
    """Boundary term and correction term of the one-dimensional trace formula."""
    if not t > -1:
        raise DomainError("weight must satisfy t > -1")
    budget = budget or Budget()
    flat = _pluriharmonic(f) or _pluriharmonic(g)
    f, g = as_smooth(f), as_smooth(g)
    if f.n != 1 or g.n != 1:
        raise DomainError("rhs_disk needs symbols in one variable")
    t0 = time.perf_counter()
    term1 = _term1_disk(f, g, budget)
    if flat:
        term2 = 0.0j
    else:
        term2 = _correction_disk(t, f, g, budget)
    return TermPair(term1, term2, {"budget": budget.as_dict(),
                                   "wall_time_ms": 1000 * (time.perf_counter() - t0)})


def _pluriharmonic(sym) -> bool:
    """True when the Levi form vanishes identically (decided for polynomials only)."""
    if isinstance(sym, PolySymbol):
        return all(a.degree == 0 or b.degree == 0 for (a, b) in sym.terms)
    return False


# ---------------------------------------------------------------------------
# ball

def exterior_wedge_coefficient(df, dbg, omega):
    """Coefficient c with df ^ dbar g ^ omega^{n-1} = c dw_1 ^ dwbar_1 ^ ... ^ dw_n ^ dwbar_n.

    ``df`` and ``dbg`` are (..., n) coefficient arrays of the (1,0) and (0,1)
    forms; ``omega`` is the (..., n, n) coefficient array of a (1,1)-form
    sum omega_ij dw_i ^ dwbar_j.  Computed by expanding the wedge product
    over basis one-forms with permutation signs.
    """
    n = df.shape[-1]
    # basis one-forms: 2i is dw_i, 2i+1 is dwbar_i; forms stored as {sorted tuple: coeff}
    form = {}
    for i in range(n):
        for j in range(n):
            _acc(form, (2 * i, 2 * j + 1), df[..., i] * dbg[..., j])
    for _ in range(n - 1):
        new = {}
        for idx, c in form.items():
            for i in range(n):
                for j in range(n):
                    _acc(new, idx + (2 * i, 2 * j + 1), c * omega[..., i, j])
        form = new
    target = tuple(range(2 * n))
    return form.get(target, 0.0)


def _acc(store, idx, coeff):
    if len(set(idx)) < len(idx):
        return
    order = sorted(range(len(idx)), key=lambda k: idx[k])
    sign = _perm_sign(order)
    key = tuple(sorted(idx))
    store[key] = store.get(key, 0.0) + sign * coeff


def _perm_sign(p) -> int:
    p = list(p)
    sign = 1
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


def ddbar_log_form(w) -> np.ndarray:
    """Coefficients of d dbar log(1 - |w|^2) as an (..., n, n) array."""
    w = np.asarray(w)
    n = w.shape[-1]
    one = (1.0 - norm_sq(w))[..., None, None]
    return -(np.conj(w)[..., :, None] * w[..., None, :] / one**2 + np.eye(n) / one)


def wedge_integrand(f, g, w) -> np.ndarray:
    """Density against dm of df ^ dbar g ^ [d dbar log(1-|w|^2)]^{n-1}.

    Uses dw_1 ^ dwbar_1 ^ ... ^ dw_n ^ dwbar_n = (-2i)^n dm.
    """
    n = w.shape[-1]
    c = exterior_wedge_coefficient(f.grad(w), g.grad_bar(w), ddbar_log_form(w))
    return c * (-2j) ** n


def radial_integrand(f, g, w) -> np.ndarray:
    """(sum_i d_i f dbar_i g - R f Rbar g) / (1 - |w|^2)^n."""
    n = w.shape[-1]
    df, dbg = f.grad(w), g.grad_bar(w)
    Rf = np.sum(w * df, axis=-1)
    Rbg = np.sum(np.conj(w) * dbg, axis=-1)
    return (np.sum(df * dbg, axis=-1) - Rf * Rbg) / (1.0 - norm_sq(w)) ** n


def dcoeff_integrand(f, g, w) -> np.ndarray:
    """sum_ij d_{e_i,e_j}(w) d_i f dbar_j g / (1 - |w|^2)^{n+1}, d from the A_w matrix."""
    n = w.shape[-1]
    flat = w.reshape(-1, n)
    D = np.stack([d_matrix(p) for p in flat]).reshape(w.shape[:-1] + (n, n))
    val = np.einsum("...ij,...i,...j->...", D, f.grad(w), g.grad_bar(w))
    return val / (1.0 - norm_sq(w)) ** (n + 1)


def local_ball_rule(n: int, center, radius: float, n_radial: int, resolution: int):
    """Lebesgue rule on the Euclidean ball B(center, radius) in C^n (n <= 2)."""
    base = ball_rule(SpaceParams(n, 0.0), n_radial, resolution, measure="lebesgue")
    c = np.asarray(center, dtype=complex).reshape(1, n)
    return c + radius * base.nodes, base.weights * radius ** (2 * n)


def _symbol_region(f, g, n):
    """A Euclidean ball containing supp(df) and supp(dg), or the unit ball."""
    sf, sg = getattr(f, "support", None), getattr(g, "support", None)
    if sf is not None:
        return sf
    if sg is not None:
        return sg
    return (np.zeros(n, dtype=complex), 1.0)


def term1_ball(n: int, t: float, f, g, budget: Budget, form: str = "radial") -> complex:
    """a_{n,t} times the boundary integral, in the wedge or radial-derivative form."""
    f, g = as_smooth(f), as_smooth(g)
    a = a_coeff(n, t)
    c, r = _symbol_region(f, g, n)
    if r < 1.0 or np.any(np.abs(c) > 0):
        nodes, weights = local_ball_rule(n, c, r, budget.outer_radial, budget.outer_angular // 4)
        keep = norm_sq(nodes) < 1.0
        nodes, weights = nodes[keep], weights[keep]
    else:
        rule = ball_rule(SpaceParams(n, 0.0), budget.outer_radial, budget.outer_angular // 4,
                         measure="lebesgue")
        nodes, weights = rule.nodes, rule.weights
    if form == "wedge":
        val = np.sum(weights * wedge_integrand(f, g, nodes))
        return complex(a * val)
    if form == "radial":
        val = np.sum(weights * radial_integrand(f, g, nodes))
        return complex(-(2j) ** n * math.factorial(n - 1) * a * val)
    raise ValueError(f"unknown form {form!r}")


def _ball_correction_integrand(params, f, g, z, zeta, prof):
    """rho(|zeta|^2) L_z f(A_z zeta) L_w g(A_z zeta) / (|1-<zeta,z>|^4 (1-|z|^2)^{n+1}), w = phi_z(zeta).

    Batched over matched rows of z and zeta.
    """
    n = params.n
    r2 = norm_sq(z)[..., None, None]
    safe = np.where(r2 > 0, r2, 1.0)
    P = np.where(r2 > 0, z[..., :, None] * np.conj(z)[..., None, :] / safe, 0.0)
    Q = np.eye(n) - P
    A = (1.0 - r2) * P + np.sqrt(1.0 - r2) * Q
    xi = np.einsum("...ij,...j->...i", A, zeta)
    w = mobius_batch(z, zeta)
    Lf = np.einsum("...ij,...i,...j->...", f.mixed_hessian(z), xi, np.conj(xi))
    Lg = np.einsum("...ij,...i,...j->...", g.mixed_hessian(w), xi, np.conj(xi))
    d = np.abs(1.0 - inner(zeta, z)) ** 4 * (1.0 - norm_sq(z)) ** (n + 1)
    return prof * Lf * Lg / d


def correction_ball_mc(params: SpaceParams, f, g, samples: int, seed: int = 0,
                       chunk: int = 1 << 17):
    """Quasi-Monte Carlo estimate of the correction term at n = 2.

    z is drawn uniformly from a Euclidean ball containing supp(Levi f);
    zeta = sqrt(s) eta with s uniform on (0,1) and eta uniform on the
    sphere, so dm(zeta) = (sigma_3 / 2) s ds d sigma(eta)/sigma_3.
    Returns (estimate, standard error).
    """
    n = params.n
    if n != 2:
        raise NotImplementedError("Monte Carlo correction term is implemented for n = 2")
    f, g = as_smooth(f), as_smooth(g)
    c, r = (f.support if f.support is not None else (np.zeros(n, dtype=complex), 1.0))
    c = np.asarray(c, dtype=complex)
    vol_z = math.pi**2 / 2.0 * r**4
    cache = rho_ball_cache(n, float(params.t))
    u_all = _sobol(8, samples, seed)
    total = 0.0 + 0.0j
    total_sq = 0.0
    for lo in range(0, samples, chunk):
        u = u_all[lo:lo + chunk]
        rz = u[:, 0] ** 0.25
        a = np.sqrt(u[:, 1])
        b = np.sqrt(1.0 - u[:, 1])
        z = c + r * np.stack([rz * a * np.exp(2j * math.pi * u[:, 2]),
                              rz * b * np.exp(2j * math.pi * u[:, 3])], axis=-1)
        s = np.clip(u[:, 4], 1e-300, 1.0 - 1e-16)
        e1 = np.sqrt(u[:, 5])
        e2 = np.sqrt(1.0 - u[:, 5])
        eta = np.stack([e1 * np.exp(2j * math.pi * u[:, 6]), e2 * np.exp(2j * math.pi * u[:, 7])],
                       axis=-1)
        zeta = np.sqrt(s)[:, None] * eta
        inside = norm_sq(z) < 1.0
        val = np.zeros(len(s), dtype=complex)
        if np.any(inside):
            zi, zti, si = z[inside], zeta[inside], s[inside]
            prof = cache(si)
            val[inside] = _ball_correction_integrand(params, f, g, zi, zti, prof) * si
        total += np.sum(val)
        total_sq += float(np.sum(np.abs(val) ** 2))
    scale = vol_z * sphere_area(n) / 2.0
    mean = total / samples
    var = max(total_sq / samples - abs(mean) ** 2, 0.0)
    return complex(scale * mean), scale * math.sqrt(var / samples)


def rhs_ball(n: int, t: float, f, g, budget: Budget | None = None, form: str = "radial") -> TermPair:
    """Boundary term and correction term of the trace formula on B_n.

    n = 1 runs the deterministic Moebius-substituted rule with the Levi-form
    integrand; n = 2 uses quasi-Monte Carlo for the correction term.
    """
    budget = budget or Budget()
    params = SpaceParams(n, t)
    flat = _pluriharmonic(f) or _pluriharmonic(g)
    f, g = as_smooth(f), as_smooth(g)
    t0 = time.perf_counter()
    if n == 1:
        term1 = _term1_disk(f, g, budget) if form == "radial" else term1_ball(1, t, f, g, budget,
                                                                              "wedge")
        term2 = _correction_disk(t, f, g, budget, kernel="levi")
        meta = {}
    elif n == 2:
        term1 = term1_ball(n, t, f, g, budget, form)
        if flat:
            term2, err = 0.0j, 0.0
        else:
            term2, err = correction_ball_mc(params, f, g, budget.mc_samples, budget.seed)
        meta = {"mc_stderr": err}
    else:
        raise NotImplementedError("rhs_ball supports n in {1, 2}")
    meta.update(budget=budget.as_dict(), form=form,
                wall_time_ms=1000 * (time.perf_counter() - t0))
    return TermPair(term1, term2, meta)


# ---------------------------------------------------------------------------
# both sides

def _is_constant(sym) -> bool:
    return isinstance(sym, PolySymbol) and sym.is_constant


class UnsupportedSymbolError(ValueError):
    """The operator trace does not exist for this symbol pair."""


def _trivially_zero(f, g) -> bool:
    """T_f T_g = T_{fg} exactly when g is holomorphic or f is antiholomorphic."""
    if _is_constant(f) or _is_constant(g):
        return True
    return (isinstance(g, PolySymbol) and all(b.degree == 0 for (_, b) in g.terms)) or \
        (isinstance(f, PolySymbol) and all(a.degree == 0 for (a, _) in f.terms))


def check_trace_class(n: int, f, g) -> None:
    """Reject pairs whose semi-commutator is not trace class.

    For n >= 2 the semi-commutator of two polynomial symbols is in general
    only in Schatten classes S^p with p > n; its partial traces over degree
    shells grow without bound.  Compactly supported smooth symbols are fine.
    """
    if n >= 2 and isinstance(f, PolySymbol) and isinstance(g, PolySymbol) \
            and not _trivially_zero(f, g):
        raise UnsupportedSymbolError(
            "for n >= 2 the operator trace needs compactly supported symbols (e.g. bump:...); "
            "polynomial pairs have divergent partial traces")


def operator_side(params: SpaceParams, f, g, budget: Budget, tol: float = 1e-8):
    """Tr(T_f T_g - T_{fg}) and its convergence record."""
    if isinstance(f, PolySymbol) and isinstance(g, PolySymbol):
        return semicommutator_trace(params, f, g, max_degree=budget.max_degree, tol=tol)
    return semicommutator_trace(params, f, g, max_degree=budget.smooth_degree,
                                inner_degree=budget.smooth_inner_degree,
                                n_s=budget.smooth_nodes, n_u=budget.smooth_nodes)


def verify_identity(params: SpaceParams, f, g, budget: Budget | None = None, tol: float = 1e-7,
                    form: str = "radial", check_id: str | None = None) -> VerificationReport:
    """Operator trace against boundary term plus correction term."""
    budget = budget or Budget()
    n, t = params.n, params.t
    check_trace_class(n, f, g)
    check_id = check_id or f"identity-n{n}"
    sym_text = lambda h: h.to_text() if isinstance(h, PolySymbol) else getattr(h, "name", "smooth")
    pdict = {"n": n, "t": t, "f": sym_text(f), "g": sym_text(g)}

    def run():
        if _is_constant(f) or _is_constant(g):
            return 0.0, [0.0, 0.0], {"note": "constant symbol"}
        lhs, info = operator_side(params, f, g, budget)
        if n == 1:
            tp = rhs_disk(t, f, g, budget)
        else:
            tp = rhs_ball(n, t, f, g, budget, form)
        details = {"lhs_convergence": info.as_dict(), "rhs_meta": tp.meta}
        return lhs, [tp.wedge_term, tp.correction_term], details

    return _timed(check_id, pdict, tol, run, budget.seed, budget.as_dict())


@dataclass
class ScanRow:
    t: float
    lhs: complex
    term1: complex
    term2: complex
    slope_running: float | None


def fit_loglog_slope(ts, vals) -> float:
    x = np.log(np.asarray(ts, dtype=float))
    y = np.log(np.abs(np.asarray(vals)))
    return float(np.polyfit(x, y, 1)[0])


def scan_asymptotic(n: int, ts, f, g, budget: Budget | None = None, with_lhs: bool = True):
    """Per-t operator trace and both right-hand terms, with a running log-log slope of |term2|."""
    ts = [float(t) for t in ts]
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ValueError("t-list must be strictly increasing")
    if with_lhs:
        check_trace_class(n, f, g)
    budget = budget or Budget()
    rows = []
    for i, t in enumerate(ts):
        params = SpaceParams(n, t)
        tp = rhs_disk(t, f, g, budget) if n == 1 else rhs_ball(n, t, f, g, budget)
        lhs = operator_side(params, f, g, budget)[0] if with_lhs else complex("nan")
        rows.append(ScanRow(t, complex(lhs), tp.wedge_term, tp.correction_term, None))
        if i >= 1:
            rows[-1].slope_running = fit_loglog_slope([r.t for r in rows], [r.term2 for r in rows])
    return rows


# ---------------------------------------------------------------------------
# consequences of the disk identity

def commutator_check(t: float, f: PolySymbol, g: PolySymbol, budget: Budget | None = None,
                     tol: float = 1e-6) -> VerificationReport:
    """Tr[T_f, T_g] against (1/2 pi i) int df ^ dg = -(1/pi) int (df dbar g - dbar f dg) dm."""
    budget = budget or Budget()
    params = SpaceParams(1, t)

    def run():
        a, ia = semicommutator_trace(params, f, g, max_degree=budget.max_degree)
        b, ib = semicommutator_trace(params, g, f, max_degree=budget.max_degree)
        fs, gs = as_smooth(f), as_smooth(g)
        rule = disk_rule(0.0, 32, 64, measure="lebesgue")
        val = rule.integrate(lambda z: fs.grad(z)[..., 0] * gs.grad_bar(z)[..., 0]
                             - fs.grad_bar(z)[..., 0] * gs.grad(z)[..., 0])
        return a - b, [-val / math.pi], {"fg": ia.as_dict(), "gf": ib.as_dict()}

    return _timed("commutator-trace", {"n": 1, "t": t, "f": f.to_text(), "g": g.to_text()},
                  tol, run, tol_kind="rel")


def hankel_identity_check(t: float, g, budget: Budget | None = None,
                          tol: float = 2e-4) -> VerificationReport:
    """||H_g||^2 against (1/pi) int |dbar g|^2 dm - int int varrho_t Lap conj(g) Lap g."""
    budget = budget or Budget()
    params = SpaceParams(1, t)

    def run():
        lhs, info = hankel_hs_norm(params, g, max_degree=budget.max_degree)
        gs = as_smooth(g)
        rule = disk_rule(0.0, 32, 64, measure="lebesgue")
        first = rule.integrate(lambda z: np.abs(gs.grad_bar(z)[..., 0]) ** 2) / math.pi
        second = _correction_disk(t, gs.conj(), gs, budget)
        return lhs, [first, -second], {"lhs_convergence": info.as_dict()}

    return _timed("hankel-norm-identity", {"n": 1, "t": t, "g": g.to_text()}, tol, run,
                  tol_kind="rel")


# ---------------------------------------------------------------------------
# integration-by-parts and auxiliary identities

def _profile_or_one(phi):
    return constant_profile(1.0) if phi is None else phi


def check_disk_ibp_origin(t: float = 0.0, v: PolySymbol | None = None, phi=None,
                          n_radial: int = 48, n_angular: int = 96, tol: float = 1e-6):
    """int phi(|z|^2) v dlambda_t = (t+1) F phi(0) v(0) + int (1-|z|^2) G phi(|z|^2) conj(z) dbar v dlambda_t."""
    from .symbols import parse_symbol
    v = v if v is not None else parse_symbol("1 + |z|^2 + z^2*zbar", 1)
    phi = _profile_or_one(phi)
    vs = as_smooth(v)

    def run():
        rule = disk_rule(t, n_radial, n_angular)
        z = rule.nodes
        s = norm_sq(z)
        lhs = np.sum(rule.weights * phi(s) * vs.value(z))
        v0 = complex(vs.value(np.zeros((1, 1)))[0])
        F0 = transform_F(1, t, phi, 0.0)
        G = np.asarray(transform_G(1, t, phi, s))
        corr = np.sum(rule.weights * (1.0 - s) * G * np.conj(z[:, 0]) * vs.grad_bar(z)[:, 0])
        first = (t + 1.0) * F0 * v0 if (v0 != 0 and np.isfinite(F0)) else 0.0
        return lhs, [first, corr], {"F_phi_0": F0}

    return _timed("disk-ibp-origin", {"n": 1, "t": t, "v": v.to_text(), "phi": phi.name}, tol, run,
                  tol_kind="rel")


def check_disk_ibp_mobius(z0: complex, t: float = 0.0, v: PolySymbol | None = None, phi=None,
                          n_radial: int = 48, n_angular: int = 128, tol: float = 1e-6):
    """The disk integration-by-parts identity centred at an interior point z0.

    Both sides are integrated in zeta = phi_{z0}(w), using
    dlambda_t(w) = (1-|z0|^2)^{t+2} / |1 - conj(z0) zeta|^{2t+4} dlambda_t(zeta).
    """
    from .symbols import parse_symbol
    v = v if v is not None else parse_symbol("z^2*zbar", 1)
    phi = _profile_or_one(phi)
    vs = as_smooth(v)
    z0 = complex(z0)
    if abs(z0) >= 1:
        raise DomainError("centre must lie in the open disk")

    def run():
        rule = disk_rule(t, n_radial, n_angular)
        zeta = rule.nodes[:, 0]
        s = np.abs(zeta) ** 2
        w = (z0 - zeta) / (1.0 - np.conj(z0) * zeta)
        jac = (1.0 - abs(z0) ** 2) ** (t + 2) / np.abs(1.0 - np.conj(z0) * zeta) ** (2 * t + 4)
        K = (1.0 - z0 * np.conj(w)) ** (-(2.0 + t))
        wk = rule.weights * jac * K
        lhs = np.sum(wk * phi(s) * vs.value(w[:, None]))
        G = np.asarray(transform_G(1, t, phi, s))
        factor = (1.0 - np.abs(w) ** 2) * np.conj(z0 - w) / (1.0 - w * np.conj(z0))
        corr = -np.sum(wk * G * factor * vs.grad_bar(w[:, None])[:, 0])
        vz = complex(vs.value(np.array([[z0]]))[0])
        F0 = transform_F(1, t, phi, 0.0)
        first = (t + 1.0) * F0 * vz if (vz != 0 and np.isfinite(F0)) else 0.0
        return lhs, [first, corr], {"F_phi_0": F0}

    return _timed("disk-ibp-mobius", {"n": 1, "t": t, "z": [z0.real, z0.imag], "v": v.to_text(),
                                      "phi": phi.name}, tol, run, tol_kind="rel")


def check_ball_ibp_origin(t: float = 0.0, terms: dict | None = None, v: PolySymbol | None = None,
                          phi=None, n_radial: int = 40, resolution: int = 10, tol: float = 1e-5):
    """Ball identity at the origin with the anti-radial derivative Rbar v.

    int phi P v dlambda_t = c v(0) + int G_{l+n} phi (1-|z|^2) P Rbar v dlambda_t,
    where P = sum c_{k,g} z^k conj(z)^g with |k| >= |g| = l and c = int phi P dlambda_t.
    """
    from .symbols import parse_symbol
    n = 2
    terms = terms or {((1, 0), (1, 0)): 1.0, ((0, 1), (0, 1)): 0.5}
    v = v if v is not None else parse_symbol("1 + z1*z2bar + |z2|^2", 2)
    phi = _profile_or_one(phi)
    degs = {sum(b) for (_, b) in terms}
    if len(degs) != 1 or any(sum(a) < sum(b) for (a, b) in terms):
        raise ValueError("terms need a common conjugate degree l and holomorphic degree >= l")
    l = degs.pop()
    vs = as_smooth(v)
    params = SpaceParams(n, t)

    def run():
        # radial weight (1-s)^t only: G_{l+n} carries a pole at s = 0 that the
        # s^{n-1} factor cancels, so that factor goes into the integrand
        sr, wr = gauss_jacobi01(n_radial, t, 0.0)
        sph = sphere_rule(n, resolution, normalized=False)
        z = (np.sqrt(sr)[:, None, None] * sph.nodes[None, :, :]).reshape(-1, n)
        wts = (0.5 * params.norm_const * (wr * sr ** (n - 1))[:, None] * sph.weights[None, :]).reshape(-1)
        s = np.repeat(sr, len(sph.weights))
        P = sum(c * np.prod(z ** np.array(a), axis=-1) * np.prod(np.conj(z) ** np.array(b), axis=-1)
                for (a, b), c in terms.items())
        lhs = np.sum(wts * phi(s) * P * vs.value(z))
        cst = np.sum(wts * phi(s) * P)
        v0 = complex(vs.value(np.zeros((1, n)))[0])
        G = np.repeat(np.asarray(transform_G(l + n, t, phi, sr)), len(sph.weights))
        Rbar = np.sum(np.conj(z) * vs.grad_bar(z), axis=-1)
        corr = np.sum(wts * G * (1.0 - s) * P * Rbar)
        return lhs, [cst * v0, corr], {"l": l}

    tdict = {f"{a}|{b}": c for (a, b), c in terms.items()}
    return _timed("ball-ibp-origin", {"n": n, "t": t, "terms": tdict, "v": v.to_text()}, tol, run,
                  tol_kind="rel")


def random_real_quadratic(rng: np.random.Generator, n: int = 2) -> PolySymbol:
    """A random real-valued polynomial of degree <= 2 in z, conj(z)."""
    terms = {}
    zero = (0,) * n

    def add(a, b, c):
        key = (tuple(a), tuple(b))
        terms[key] = terms.get(key, 0) + c

    for i in range(n):
        e = [0] * n
        e[i] = 1
        c = complex(rng.normal(), rng.normal())
        add(e, zero, c)
        add(zero, e, np.conj(c))
    H = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    H = H + H.conj().T
    S = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    for i in range(n):
        for j in range(n):
            ei = [0] * n
            ei[i] += 1
            ej = [0] * n
            ej[j] += 1
            add(ej, ei, H[i, j] / 2)                  # conj(z_i) H_ij z_j / 2
            aa = [0] * n
            aa[i] += 1
            aa[j] += 1
            add(aa, zero, S[i, j] / 2)
            add(zero, aa, np.conj(S[i, j]) / 2)
    return PolySymbol(n, {(a, b): c for (a, b), c in terms.items()})


def boundary_forms(f, g, radius: float = 0.9, budgets=((32, 8), (28, 9), (36, 7))):
    """The d-coefficient, wedge and radial-derivative integrals over the ball of given radius.

    Each uses its own rule so that the three values are independent quadratures.
    The wedge value is normalized by -1/((2i)^n n!) and the radial one by 1/n.
    """
    f, g = as_smooth(f), as_smooth(g)
    n = f.n
    out = []
    for kind, (nr, res) in zip(("dcoeff", "wedge", "radial"), budgets):
        nodes, weights = local_ball_rule(n, np.zeros(n), radius, nr, res)
        if kind == "dcoeff":
            val = np.sum(weights * dcoeff_integrand(f, g, nodes))
        elif kind == "wedge":
            val = -np.sum(weights * wedge_integrand(f, g, nodes)) / ((2j) ** n * math.factorial(n))
        else:
            val = np.sum(weights * radial_integrand(f, g, nodes)) / n
        out.append(complex(val))
    return out


def check_boundary_forms(f=None, g=None, seed: int = 0, radius: float = 0.9,
                         tol: float = 1e-4) -> list:
    """The three expressions of the boundary integrand, compared pairwise."""
    rng = np.random.default_rng(seed)
    f = f if f is not None else random_real_quadratic(rng)
    g = g if g is not None else random_real_quadratic(rng)
    vals = {}

    def run_pair(a, b):
        def run():
            if "v" not in vals:
                vals["v"] = boundary_forms(f, g, radius)
            d = dict(zip(("dcoeff", "wedge", "radial"), vals["v"]))
            return d[a], [d[b]], {"radius": radius}
        return run

    pdict = {"n": 2, "f": f.to_text(), "g": g.to_text(), "radius": radius}
    return [_timed(f"boundary-forms:{a}-{b}", pdict, tol, run_pair(a, b), seed, tol_kind="rel")
            for a, b in (("dcoeff", "wedge"), ("dcoeff", "radial"), ("wedge", "radial"))]


def check_sphere_formula(alpha=(1, 0), beta_=(1, 0), v: PolySymbol | None = None, r: float = 0.8,
                         order: int = 24, resolution: int = 12, tol: float = 1e-6):
    """Sphere integral of z^alpha conj(z)^beta v against a point term plus a ball integral of Rbar v."""
    from .symbols import parse_symbol
    n = len(alpha)
    v = v if v is not None else parse_symbol("1 + z1*z2bar", n)
    vs = as_smooth(v)
    alpha = np.asarray(alpha)
    beta_ = np.asarray(beta_)
    if alpha.sum() < beta_.sum():
        raise ValueError("needs |alpha| >= |beta|")
    na, nb = int(alpha.sum()), int(beta_.sum())

    def run():
        sph = sphere_rule(n, resolution, normalized=False)
        zs = r * sph.nodes
        mono = lambda z: np.prod(z**alpha, axis=-1) * np.prod(np.conj(z) ** beta_, axis=-1)
        lhs = r ** (2 * n - 1) * np.sum(sph.weights * mono(zs) * vs.value(zs))
        if np.array_equal(alpha, beta_):
            a_ab = math.exp(math.lgamma(n) + sum(math.lgamma(x + 1) for x in alpha)
                            - math.lgamma(n + na))
        else:
            a_ab = 0.0
        point = a_ab * sphere_area(n) * r ** (2 * nb + 2 * n - 1) * complex(
            vs.value(np.zeros((1, n)))[0])
        rho, wr = gauss_legendre01(order)
        rho, wr = r * rho, r * wr
        z = rho[:, None, None] * sph.nodes[None, :, :]
        Rbar = np.sum(np.conj(z) * vs.grad_bar(z), axis=-1)
        dens = mono(z) / rho[:, None] ** (2 * nb + 2 * n) * rho[:, None] ** (2 * n - 1)
        vol = 2.0 * r ** (2 * nb + 2 * n - 1) * np.sum(wr[:, None] * sph.weights[None, :] * dens * Rbar)
        return lhs, [point, vol], {"a_alpha_beta": a_ab}

    return _timed("sphere-formula", {"n": n, "r": r, "alpha": alpha.tolist(), "beta": beta_.tolist(),
                                     "v": v.to_text()}, tol, run, tol_kind="rel")


def check_fubini(part: str, m: int, k: int, t: float, phi=None, tol: float = 1e-8):
    """Transform identities at s = 0.

    part 'i':   F_{m+k}((1-s) G_m phi)(0) = F_{m+k} phi(0) / k
    part 'ii':  F_{m+k}(G_m phi)(0) = sum_j F_{m+k+j} phi(0) / (k+j)
    part 'iii': F_m phi(0) = F_m((1-s) phi)(0) + F_{m+1} phi(0)
    part 'beta': F_m 1(0) = B(m, t+1)
    """
    phi = _profile_or_one(phi)
    from .specfun import transform_G_profile, times_one_minus

    def run():
        if part == "i":
            lhs = transform_F(m + k, t, times_one_minus(transform_G_profile(m, t, phi)), 0.0)
            rhs = transform_F(m + k, t, phi, 0.0) / k
        elif part == "ii":
            lhs = transform_F(m + k, t, transform_G_profile(m, t, phi), 0.0)
            rhs = transform_shift_series(m, k, t, phi)
        elif part == "iii":
            lhs = transform_F(m, t, phi, 0.0)
            rhs = transform_F(m, t, times_one_minus(phi), 0.0) + transform_F(m + 1, t, phi, 0.0)
        elif part == "beta":
            lhs = transform_F(m, t, constant_profile(1.0), 0.0)
            rhs = beta_fn(m, t + 1.0)
        else:
            raise ValueError(f"unknown part {part!r}")
        return lhs, [rhs], {}

    return _timed(f"fubini-{part}", {"m": m, "k": k, "t": t, "phi": phi.name}, tol, run,
                  tol_kind="rel")


def check_profile_consistency(t: float = 0.0, n: int | None = None, samples: int = 64,
                              seed: int = 0, tol: float = 1e-8):
    """Tabulated correction profile against direct quadrature at random points."""
    cache = rho_disk_cache(float(t)) if n is None else rho_ball_cache(int(n), float(t))

    def run():
        dev = cache.consistency(samples, seed)
        return dev, [0.0], {"profile": cache.name}

    pdict = {"t": t} if n is None else {"n": n, "t": t}
    return _timed("rho-consistency", pdict, tol, run, seed)


def check_profile_reduction(t: float, points: int = 50, tol: float = 1e-8):
    """s^2 rho_{1,t}(s) / 16 against the disk profile on a grid, largest relative gap."""
    def run():
        s = np.linspace(0.01, 0.99, points)
        a = s**2 * np.asarray(rho_ball(1, t, s, cached=False)) / 16.0
        b = np.asarray(rho_disk(t, s, cached=False))
        return float(np.max(np.abs(a - b) / b)), [0.0], {}

    return _timed("rho-reduction", {"t": t, "points": points}, tol, run)


IDENTITY_CHECKS = {
    "disk-ibp-origin": check_disk_ibp_origin,
    "disk-ibp-mobius": check_disk_ibp_mobius,
    "ball-ibp-origin": check_ball_ibp_origin,
    "boundary-forms": check_boundary_forms,
    "sphere-formula": check_sphere_formula,
    "fubini": check_fubini,
    "rho-consistency": check_profile_consistency,
    "rho-reduction": check_profile_reduction,
}


def lemma_check(check_id: str, **kwargs):
    """Run a registered identity check; returns a report or a list of reports."""
    try:
        fn = IDENTITY_CHECKS[check_id]
    except KeyError:
        raise KeyError(f"unknown check {check_id!r}; known: {sorted(IDENTITY_CHECKS)}") from None
    return fn(**kwargs)
