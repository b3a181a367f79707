"""Acceptance checks with pinned tolerances, shared by the CLI self-test and the test suite.

Each check returns an :class:`AcceptanceResult`.  Reference values come from
closed forms or from quadrature oracles built here with scipy, independent of
the code paths being checked.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import specfun as sf
from .geometry import SpaceParams
from .operators import hankel_hs_norm, semicommutator_trace
from .quadrature import rudin_forelli_ratios
from .symbols import bump, condition_sup_estimate, cone_pair, parse_symbol
from . import verify as vf

# every tolerance used below; tests assert against this table
TOL = {
    "AC-1": {"trace": 1e-8, "term1": 1e-8, "term2": 1e-10, "runtime_s": 1.0},
    "AC-2": {"trace": 1e-5, "term1": 1e-8, "term2": 1e-4, "identity": 2e-4, "runtime_s": 60.0},
    "AC-3": {"hankel_zbar": 1e-6, "hankel_r2": 1e-4, "bound": 0.5},
    "AC-4": {"term1_rel": 1e-6, "slope_lo": -1.3, "slope_hi": -0.8},
    "AC-5": {"rel": 1e-8, "consistency": 1e-8},
    "AC-6": {"abs": 1e-8, "ratio_bound": 2.0},
    "AC-7": {"rel": 1e-8, "lo": 0.95, "hi": 1.05},
    "AC-8": {"rel": 1e-6},
    "AC-9": {"rel": 1e-4, "runtime_s": 120.0},
    "AC-10": {"abs": 1e-6, "rotation": 1e-6},
    "AC-11": {"rel": 1e-6},
    "AC-12": {"rel": 1e-8},
    "AC-13": {"disk_rel": 1e-6, "ball_rel": 1e-5},
    "AC-14": {"rel": 0.05},
    "AC-15": {"decade_growth": 1.25},
    "AC-16": {"doubling": 2.0, "growth": 10.0},
}

ZETA2_TRACE = -(2.0 - math.pi**2 / 6.0)


@dataclass
class AcceptanceResult:
    check_id: str
    passed: bool
    summary: str
    metrics: dict = field(default_factory=dict)
    wall_s: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.check_id:<16} {self.summary}  ({self.wall_s:.1f}s)"


def _run(check_id, fn):
    t0 = time.perf_counter()
    passed, summary, metrics = fn()
    return AcceptanceResult(check_id, bool(passed), summary, metrics, time.perf_counter() - t0)


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def ac1(tol=None):
    tol = tol or TOL["AC-1"]
    z, zb = parse_symbol("z"), parse_symbol("zbar")

    def fn():
        t0 = time.perf_counter()
        lhs, _ = semicommutator_trace(SpaceParams(1, 0.0), z, zb)
        tp = vf.rhs_disk(0.0, z, zb)
        wall = time.perf_counter() - t0
        m = {"trace": lhs.real, "term1": tp.wedge_term.real, "term2": abs(tp.correction_term),
             "runtime_s": wall}
        ok = (abs(lhs + 1) <= tol["trace"] and abs(tp.wedge_term + 1) <= tol["term1"]
              and abs(tp.correction_term) <= tol["term2"] and wall < tol["runtime_s"])
        return ok, f"trace={lhs.real:.12f} term1={tp.wedge_term.real:.12f} term2={abs(tp.correction_term):.1e}", m

    return _run("AC-1", fn)


def ac2(tol=None):
    tol = tol or TOL["AC-2"]
    r = parse_symbol("|z|^2")

    def fn():
        t0 = time.perf_counter()
        lhs, _ = semicommutator_trace(SpaceParams(1, 0.0), r, r)
        tp = vf.rhs_disk(0.0, r, r)
        wall = time.perf_counter() - t0
        t2_ref = math.pi**2 / 6 - 1.5
        gap = abs(lhs - tp.total)
        ok = (abs(lhs - ZETA2_TRACE) <= tol["trace"] and abs(tp.wedge_term + 0.5) <= tol["term1"]
              and abs(tp.correction_term - t2_ref) <= tol["term2"] and gap <= tol["identity"]
              and wall < tol["runtime_s"])
        m = {"trace": lhs.real, "term1": tp.wedge_term.real, "term2": tp.correction_term.real,
             "gap": gap, "runtime_s": wall}
        return ok, (f"trace={lhs.real:.10f} term1={tp.wedge_term.real:.10f} "
                    f"term2={tp.correction_term.real:.10f} |lhs-rhs|={gap:.1e}"), m

    return _run("AC-2", fn)


def ac3(tol=None):
    tol = tol or TOL["AC-3"]
    p = SpaceParams(1, 0.0)

    def fn():
        hzb, _ = hankel_hs_norm(p, parse_symbol("zbar"))
        hz, _ = hankel_hs_norm(p, parse_symbol("z"))
        hr, _ = hankel_hs_norm(p, parse_symbol("|z|^2"))
        ok = (abs(hzb - 1) <= tol["hankel_zbar"] and hz == 0.0
              and abs(hr + ZETA2_TRACE) <= tol["hankel_r2"] and hr < tol["bound"])
        return ok, f"|H_zbar|^2={hzb:.10f} |H_z|^2={hz} |H_|z|^2|^2={hr:.10f}", \
            {"zbar": hzb, "z": hz, "r2": hr}

    return _run("AC-3", fn)


def ac4(tol=None, ts=(4, 8, 16, 32, 64)):
    tol = tol or TOL["AC-4"]
    r = parse_symbol("|z|^2")

    def fn():
        rows = vf.scan_asymptotic(1, ts, r, r, with_lhs=False)
        t2 = [abs(x.term2) for x in rows]
        slope = rows[-1].slope_running
        ok = (all(_rel(x.term1, -0.5) <= tol["term1_rel"] for x in rows)
              and all(b < a for a, b in zip(t2, t2[1:]))
              and tol["slope_lo"] <= slope <= tol["slope_hi"])
        return ok, f"|term2|={['%.3e' % v for v in t2]} slope={slope:.3f}", \
            {"term2_abs": t2, "slope": slope}

    return _run("AC-4", fn)


def ac5(tol=None):
    tol = tol or TOL["AC-5"]

    def fn():
        worst = max(vf.check_profile_reduction(t).lhs.real for t in (0.0, 2.0, 5.0))
        return worst <= tol["rel"], f"max rel gap={worst:.1e}", {"max_rel": worst}

    return _run("AC-5", fn)


def rho_consistency(tol=None, ts=(0.0, 2.0, 5.0)):
    """Cached correction profiles against direct evaluation."""
    tol = tol or TOL["AC-5"]

    def fn():
        devs = {t: vf.check_profile_consistency(t).lhs.real for t in ts}
        worst = max(devs.values())
        return worst <= tol["consistency"], f"max table deviation={worst:.1e}", {"dev": devs}

    return _run("rho-consistency", fn)


def f_kernel_oracle(s: float, x: float) -> float:
    """Double integral of 1/(s1(1-s1)) over s < s1 < s2 < x by scipy dblquad."""
    from scipy import integrate
    val, _ = integrate.dblquad(lambda s2, s1: 1.0 / (s1 * (1.0 - s1)), s, x,
                               lambda s1: s1, lambda s1: x, epsabs=1e-13, epsrel=1e-12)
    return val


def ac6(tol=None, seed=0):
    tol = tol or TOL["AC-6"]

    def fn():
        rng = np.random.default_rng(seed)
        pts = np.sort(rng.uniform(0.01, 0.99, size=(20, 2)), axis=1)
        err = max(abs(float(sf.f_kernel(s, x)) - f_kernel_oracle(s, x)) for s, x in pts)
        xs = np.geomspace(1e-4, 0.999, 25)
        ratios = {e: [sf.f_kernel_moment_ratio(x, e) for x in xs] for e in (0.25, 0.5, 0.75)}
        top = max(max(v) for v in ratios.values())
        ok = err <= tol["abs"] and np.isfinite(top) and top <= tol["ratio_bound"]
        return ok, f"max |F - oracle|={err:.1e} max moment ratio={top:.3f}", \
            {"err": err, "ratio_max": top}

    return _run("AC-6", fn)


def ac7(tol=None):
    tol = tol or TOL["AC-7"]

    def fn():
        errs = [_rel(sf.f_phi_zero(n, t, "series"), sf.f_phi_zero(n, t, "integral"))
                for n in (1, 2) for t in (0.0, 1.0, 3.5)]
        scaled = [200.0 ** (n + 1) * sf.f_phi_zero(n, 200.0, "integral") / math.factorial(n)
                  for n in (1, 2)]
        ok = max(errs) <= tol["rel"] and all(tol["lo"] <= v <= tol["hi"] for v in scaled)
        return ok, f"max rel gap={max(errs):.1e} scaled at t=200: {[round(v, 5) for v in scaled]}", \
            {"rel": max(errs), "scaled": scaled}

    return _run("AC-7", fn)


def ac8(tol=None):
    tol = tol or TOL["AC-8"]

    def fn():
        s = np.linspace(0.02, 0.98, 20)
        errs = []
        for n in (1, 2):
            for t in (0.0, 2.0):
                a = np.asarray(sf.phi_n2_closed(n, t, s))
                b = np.asarray(sf.phi_profile(n, 2, t)(s))
                errs.append(float(np.max(np.abs(a - b) / np.abs(a))))
        return max(errs) <= tol["rel"], f"max rel gap={max(errs):.1e}", {"rel": max(errs)}

    return _run("AC-8", fn)


def ac9(tol=None, seeds=(0, 1, 2)):
    tol = tol or TOL["AC-9"]

    def fn():
        t0 = time.perf_counter()
        worst = 0.0
        for seed in seeds:
            for rep in vf.check_boundary_forms(seed=seed, tol=tol["rel"]):
                worst = max(worst, rep.rel_err)
        wall = time.perf_counter() - t0
        ok = worst <= tol["rel"] and wall < tol["runtime_s"]
        return ok, f"max pairwise rel gap={worst:.1e} over {len(seeds)} pairs", \
            {"rel": worst, "runtime_s": wall}

    return _run("AC-9", fn)


def ac10(tol=None, seed=0):
    tol = tol or TOL["AC-10"]

    def fn():
        from scipy.stats import unitary_group
        z = np.array([0.5, 0.0], dtype=complex)
        idx = [(a, b) for a in range(3) for b in range(3) if a + b <= 2]
        err = 0.0
        for al in idx:
            for be in idx:
                err = max(err, abs(sf.d_coeff(al, be, z) - sf.d_coeff_axis(al, be, z)))

        def form(z, xi):
            D = np.array([[sf.d_coeff(np.eye(2, dtype=int)[i], np.eye(2, dtype=int)[j], z)
                           for j in range(2)] for i in range(2)])
            return np.conj(xi) @ D @ xi

        rng = np.random.default_rng(seed)
        z0 = np.array([0.3 + 0.2j, -0.1 + 0.4j])
        xi = rng.normal(size=2) + 1j * rng.normal(size=2)
        base = form(z0, xi)
        rot = max(abs(form(U @ z0, U @ xi) - base)
                  for U in unitary_group.rvs(2, size=5, random_state=seed))
        ok = err <= tol["abs"] and rot <= tol["rotation"]
        return ok, f"max |d - axis form|={err:.1e} rotation defect={rot:.1e}", \
            {"axis": err, "rotation": rot}

    return _run("AC-10", fn)


def ac11(tol=None):
    tol = tol or TOL["AC-11"]

    def fn():
        reps = [vf.check_sphere_formula(tol=tol["rel"]),
                vf.check_sphere_formula((1, 1), (1, 0), parse_symbol("z2bar + |z2|^2", 2),
                                        tol=tol["rel"])]
        worst = max(r.rel_err for r in reps)
        return all(r.passed for r in reps), f"max rel gap={worst:.1e}", {"rel": worst}

    return _run("AC-11", fn)


def ac12(tol=None):
    tol = tol or TOL["AC-12"]

    def fn():
        reps = []
        for m in (1, 2, 3):
            for k in (1, 2):
                for t in (0.0, 1.5):
                    for part in ("i", "ii", "iii"):
                        reps.append(vf.check_fubini(part, m, k, t, tol=tol["rel"]))
                reps.append(vf.check_fubini("beta", m, 1, t, tol=tol["rel"]))
        worst = max(r.rel_err for r in reps)
        return all(r.passed for r in reps), f"{len(reps)} identities, max rel gap={worst:.1e}", \
            {"rel": worst, "count": len(reps)}

    return _run("AC-12", fn)


def ac13(tol=None):
    tol = tol or TOL["AC-13"]

    def fn():
        disk = [vf.check_disk_ibp_mobius(z0, tol=tol["disk_rel"])
                for z0 in (0.3 + 0.2j, -0.5 + 0.1j, 0.2 - 0.6j)]
        ball = vf.check_ball_ibp_origin(tol=tol["ball_rel"])
        ok = all(r.passed for r in disk) and ball.passed
        dw = max(r.rel_err for r in disk)
        return ok, f"disk max rel={dw:.1e} ball rel={ball.rel_err:.1e}", \
            {"disk": dw, "ball": ball.rel_err}

    return _run("AC-13", fn)


def ac14_symbols():
    f = bump(2, 0.6, [0.1, 0.0])
    g = bump(2, 0.6, [0.0, 0.1])
    return f, g


def ac14(tol=None, samples: int = 10_000_000, seed: int = 0):
    tol = tol or TOL["AC-14"]

    def fn():
        f, g = ac14_symbols()
        budget = vf.Budget(mc_samples=samples, seed=seed)
        rep = vf.verify_identity(SpaceParams(2, 3.0), f, g, budget, tol=tol["rel"])
        rep.tol_kind = "rel"
        return rep.passed, (f"lhs={rep.lhs.real:.6f} rhs={rep.rhs.real:.6f} "
                            f"rel={rep.rel_err:.2e}"), rep.as_dict()

    return _run("AC-14", fn)


def ac15(tol=None):
    tol = tol or TOL["AC-15"]

    def fn():
        worst = 0.0
        ok = True
        for n in (1, 2):
            for t in (0.0, 2.0):
                for c in (-0.5, 0.0, 0.5):
                    r = rudin_forelli_ratios(n, t, c)
                    ok &= bool(np.all(np.isfinite(r)) and np.all(r > 0))
                    worst = max(worst, float(r[-1] / r[-2]))
        ok &= worst <= tol["decade_growth"]
        return ok, f"largest last-decade ratio growth={worst:.3f}", {"growth": worst}

    return _run("AC-15", fn)


def ac16(tol=None, samples: int = 100_000):
    tol = tol or TOL["AC-16"]

    def fn():
        f, g = cone_pair(0.5)
        a = condition_sup_estimate(f, g, 0.5, samples).value
        b = condition_sup_estimate(f, g, 0.5, 2 * samples).value
        change = max(a, b) / min(a, b)
        # order matters: the ratio pairs df with dbar g
        h1, h2 = parse_symbol("z1", 2), parse_symbol("z1bar", 2)
        shallow = condition_sup_estimate(h1, h2, 0.5, samples, min_depth=1e-2).value
        deep = condition_sup_estimate(h1, h2, 0.5, samples, min_depth=1e-6).value
        growth = deep / shallow
        ok = (np.isfinite(a) and np.isfinite(b) and change < tol["doubling"]
              and growth >= tol["growth"])
        return ok, f"cone sup={a:.4f}->{b:.4f} counter-case growth={growth:.2e}", \
            {"sup": [a, b], "growth": growth}

    return _run("AC-16", fn)


QUICK = [ac1, ac2, ac3, ac4, ac5, rho_consistency, ac6, ac7, ac8, ac9, ac10, ac11, ac12, ac13,
         ac15, ac16]
FULL = QUICK + [ac14]


def inject_profile_fault(t: float = 0.0, factor: float = 1.001) -> None:
    """Test hook: scale the tabulated disk profile so the table disagrees with direct evaluation."""
    cache = sf.rho_disk_cache(float(t))
    cache.values = cache.values * factor


def check_name(chk) -> str:
    """Identifier printed for a check function: ac2 -> AC-2, rho_consistency -> rho-consistency."""
    name = chk.__name__
    return "AC-" + name[2:] if name.startswith("ac") else name.replace("_", "-")


def run_selftest(level: str = "quick", echo=print, only=None) -> list:
    """Run the acceptance checks in order; ``only`` restricts them to a set of identifiers."""
    checks = FULL if level == "full" else QUICK
    if only:
        unknown = set(only) - {check_name(c) for c in FULL}
        if unknown:
            raise KeyError(f"unknown checks: {sorted(unknown)}")
        checks = [c for c in FULL if check_name(c) in set(only)]
    results = []
    for chk in checks:
        try:
            res = chk()
        except Exception as exc:  # a crash counts as a failure of that check
            res = AcceptanceResult(check_name(chk), False,
                                   f"error: {exc!r}")
        results.append(res)
        if echo:
            echo(res.line())
    return results
