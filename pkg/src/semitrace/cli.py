"""Command-line front end.

Exit codes: 0 when every check passes, 1 on a numerical failure (the report
is still written), 2 on a bad configuration or symbol.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import sys

import click
import numpy as np

from .geometry import DomainError, SpaceParams
from .symbols import SymbolSyntaxError, parse_symbol

THREADS_ENV = "SEMITRACE_THREADS"


class ConfigError(click.ClickException):
    exit_code = 2


def _num(x) -> str:
    return "" if x is None else format(float(x), ".17g")


def _write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) if isinstance(v, (float, int, np.floating)) and not isinstance(v, bool)
                    else ("" if v is None else v) for v in row])
    if path in (None, "-"):
        click.echo(buf.getvalue(), nl=False)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(buf.getvalue())


def _write_json(path, obj):
    if path:
        with open(path, "w") as fh:
            json.dump(obj, fh, indent=2, default=str)
            fh.write("\n")


def _merge(config_path, defaults: dict, flags: dict) -> dict:
    """defaults < config file < explicit flags."""
    cfg = dict(defaults)
    if config_path:
        try:
            with open(config_path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(data) - set(defaults)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(data)
    cfg.update({k: v for k, v in flags.items() if v is not None})
    return cfg


def _symbol(text, n):
    try:
        return parse_symbol(str(text), n)
    except (SymbolSyntaxError, DomainError) as exc:
        raise ConfigError(f"bad symbol {text!r}: {exc}") from exc


def _params(n, t):
    try:
        return SpaceParams(int(n), float(t))
    except (DomainError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _apply_threads():
    val = os.environ.get(THREADS_ENV)
    if not val:
        return
    try:
        k = int(val)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer") from None
    try:
        import numba
        numba.set_num_threads(max(1, min(k, numba.config.NUMBA_NUM_THREADS)))
    except ImportError:
        pass


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Numerical checks of trace formulas for Toeplitz semi-commutators."""
    _apply_threads()


# ---------------------------------------------------------------------------

VERIFY_DEFAULTS = {"space": "disk", "n": None, "t": 0.0, "f": None, "g": None, "tol": 2e-4,
                   "tol_kind": "abs", "form": "radial", "samples": 1_000_000, "seed": 0,
                   "max_degree": None, "json_out": None, "csv_out": None}


@main.command()
@click.option("--config", "config_path", type=click.Path(), help="JSON config; flags override it.")
@click.option("--space", type=click.Choice(["disk", "ball"]))
@click.option("--n", type=int, help="Ball dimension (ball only).")
@click.option("--t", type=float, help="Weight exponent t > -1.")
@click.option("--f", help="First symbol, e.g. 'z' or 'z1*z2bar' or 'bump:r0=0.6'.")
@click.option("--g", help="Second symbol.")
@click.option("--tol", type=float)
@click.option("--tol-kind", type=click.Choice(["abs", "rel"]))
@click.option("--form", type=click.Choice(["radial", "wedge"]), help="Boundary-term integrand (ball).")
@click.option("--samples", type=int, help="Monte Carlo samples for the ball correction term.")
@click.option("--seed", type=int)
@click.option("--max-degree", type=int, help="Truncation degree for the operator side.")
@click.option("--json-out", type=click.Path())
@click.option("--csv-out", type=click.Path())
def verify(config_path, **flags):
    """Compare the operator trace with boundary term plus correction term."""
    from .verify import Budget, UnsupportedSymbolError, verify_identity

    cfg = _merge(config_path, VERIFY_DEFAULTS, flags)
    if cfg["f"] is None or cfg["g"] is None:
        raise ConfigError("both --f and --g are required")
    n = 1 if cfg["space"] == "disk" else int(cfg["n"] or 2)
    if cfg["space"] == "disk" and cfg["n"] not in (None, 1):
        raise ConfigError("the disk has n = 1")
    params = _params(n, cfg["t"])
    f, g = _symbol(cfg["f"], n), _symbol(cfg["g"], n)
    budget = Budget(mc_samples=int(cfg["samples"]), seed=int(cfg["seed"]),
                    max_degree=cfg["max_degree"])
    try:
        rep = verify_identity(params, f, g, budget, tol=float(cfg["tol"]), form=cfg["form"])
    except UnsupportedSymbolError as exc:
        raise ConfigError(str(exc)) from exc
    rep.tol_kind = cfg["tol_kind"]
    click.echo(rep.to_text())
    _write_json(cfg["json_out"], rep.as_dict())
    if cfg["csv_out"]:
        t1, t2 = rep.rhs_terms
        _write_csv(cfg["csv_out"],
                   ["lhs_re", "lhs_im", "term1_re", "term1_im", "term2_re", "term2_im",
                    "abs_err", "tol", "pass"],
                   [[rep.lhs.real, rep.lhs.imag, t1.real, t1.imag, t2.real, t2.imag,
                     rep.abs_err, rep.tol, int(rep.passed)]])
    sys.exit(0 if rep.passed else 1)


# ---------------------------------------------------------------------------

SCAN_DEFAULTS = {"n": 1, "t_list": "4,8,16,32,64", "f": "|z|^2", "g": "|z|^2", "samples": 1_000_000,
                 "seed": 0, "lhs": True, "csv_out": None}


@main.command()
@click.option("--config", "config_path", type=click.Path())
@click.option("--n", type=int)
@click.option("--t-list", help="Comma-separated, strictly increasing.")
@click.option("--f")
@click.option("--g")
@click.option("--samples", type=int)
@click.option("--seed", type=int)
@click.option("--lhs/--no-lhs", default=None, help="Also compute the operator trace.")
@click.option("--csv-out", type=click.Path(), help="Defaults to stdout.")
def scan(config_path, **flags):
    """Operator trace and both right-hand terms over a list of t."""
    from .specfun import a_coeff
    from .verify import Budget, scan_asymptotic

    cfg = _merge(config_path, SCAN_DEFAULTS, flags)
    n = int(cfg["n"])
    try:
        ts = [float(x) for x in str(cfg["t_list"]).split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad t-list: {exc}") from exc
    if not ts:
        raise ConfigError("empty t-list")
    f, g = _symbol(cfg["f"], n), _symbol(cfg["g"], n)
    for t in ts:
        _params(n, t)
    budget = Budget(mc_samples=int(cfg["samples"]), seed=int(cfg["seed"]))
    try:
        rows = scan_asymptotic(n, ts, f, g, budget, with_lhs=bool(cfg["lhs"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    header = ["t", "lhs_re", "lhs_im", "term1_re", "term1_im", "term2_abs", "slope_running"]
    if n > 1:
        header += ["scaled_lhs_re", "wedge_limit_re"]
    out = []
    for r in rows:
        lre, lim = (r.lhs.real, r.lhs.imag) if cfg["lhs"] else (None, None)
        row = [r.t, lre, lim, r.term1.real, r.term1.imag, abs(r.term2),
               r.slope_running]
        if n > 1:
            # term1 = a_{n,t} W with W independent of t, and t^{1-n} a_{n,t} -> 1/((n-1)! (2 pi i)^n)
            w = r.term1 / a_coeff(n, r.t)
            limit = w / (math.factorial(n - 1) * (2j * math.pi) ** n)
            row += [None if lre is None else r.t ** (1 - n) * lre, limit.real]
        out.append(row)
    _write_csv(cfg["csv_out"], header, out)
    sys.exit(0)


# ---------------------------------------------------------------------------

@main.command()
@click.option("--t", type=float, default=0.0, show_default=True)
@click.option("--g", required=True, help="Polynomial symbol on the disk.")
@click.option("--max-degree", type=int)
@click.option("--tol", type=float, default=1e-6, show_default=True,
              help="Tolerance on the tail-extrapolation error estimate.")
@click.option("--json-out", type=click.Path())
def hankel(t, g, max_degree, tol, json_out):
    """Hilbert-Schmidt norm squared of the Hankel operator H_g on the disk."""
    from .operators import hankel_hs_norm
    from .symbols import PolySymbol

    params = _params(1, t)
    sym = _symbol(g, 1)
    if not isinstance(sym, PolySymbol):
        raise ConfigError("hankel needs a polynomial symbol")
    val, info = hankel_hs_norm(params, sym, max_degree=max_degree, tol=tol)
    click.echo(f"||H_g||^2 = {val:.15g}   (error estimate {info.error_estimate:.2e}, "
               f"converged={info.converged})")
    _write_json(json_out, {"t": t, "g": g, "value": val, "convergence": info.as_dict()})
    sys.exit(0 if info.converged else 1)


# ---------------------------------------------------------------------------

@main.group()
def specfun():
    """Radial special functions."""


@specfun.command("dump")
@click.option("--what", type=click.Choice(["rho", "rho-ball", "phi2", "f-kernel"]), default="rho",
              show_default=True)
@click.option("--n", type=int, default=1, show_default=True)
@click.option("--t", type=float, default=0.0, show_default=True)
@click.option("--x", type=float, default=0.5, show_default=True, help="Second argument of F(s, x).")
@click.option("--points", type=int, default=50, show_default=True)
@click.option("--csv-out", type=click.Path(), help="Defaults to stdout.")
def specfun_dump(what, n, t, x, points, csv_out):
    """Tabulate a radial profile on a uniform interior grid."""
    from . import specfun as sf

    _params(n, t)
    if points < 1:
        raise ConfigError("points must be positive")
    hi = x if what == "f-kernel" else 1.0
    s = np.linspace(0.0, hi, points + 2)[1:-1]
    try:
        if what == "rho":
            v = sf.rho_disk(t, s)
        elif what == "rho-ball":
            v = sf.rho_ball(n, t, s)
        elif what == "phi2":
            v = sf.phi_n2_closed(n, t, s)
        else:
            v = sf.f_kernel(s, x)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    _write_csv(csv_out, ["s", "value"], zip(s.tolist(), np.asarray(v, dtype=float).tolist()))
    sys.exit(0)


# ---------------------------------------------------------------------------

def _default_lemma_runs(check_id, t, seed):
    from . import verify as vf

    if check_id == "disk-ibp-mobius":
        return [vf.check_disk_ibp_mobius(z0, t=t) for z0 in (0.3 + 0.2j, -0.5 + 0.1j, 0.2 - 0.6j)]
    if check_id == "fubini":
        return [vf.check_fubini(p, m, k, t) for m in (1, 2, 3) for k in (1, 2)
                for p in ("i", "ii", "iii")] + [vf.check_fubini("beta", m, 1, t) for m in (1, 2, 3)]
    if check_id == "boundary-forms":
        return vf.check_boundary_forms(seed=seed)
    if check_id == "sphere-formula":
        return [vf.check_sphere_formula(),
                vf.check_sphere_formula((1, 1), (1, 0), parse_symbol("z2bar + |z2|^2", 2))]
    if check_id in ("rho-consistency", "rho-reduction"):
        return [vf.lemma_check(check_id, t=t)]
    out = vf.lemma_check(check_id, t=t)
    return out if isinstance(out, list) else [out]


@main.command()
@click.argument("check_id")
@click.option("--t", type=float, default=0.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--json-out", type=click.Path())
def lemma(check_id, t, seed, json_out):
    """Run a registered identity check (use 'list' to see the ids)."""
    from .verify import IDENTITY_CHECKS

    if check_id == "list":
        for k in sorted(IDENTITY_CHECKS):
            click.echo(k)
        sys.exit(0)
    if check_id not in IDENTITY_CHECKS:
        raise ConfigError(f"unknown check {check_id!r}; known: {', '.join(sorted(IDENTITY_CHECKS))}")
    _params(1, t)
    reps = _default_lemma_runs(check_id, t, seed)
    for r in reps:
        click.echo(r.to_text())
    _write_json(json_out, [r.as_dict() for r in reps])
    sys.exit(0 if all(r.passed for r in reps) else 1)


# ---------------------------------------------------------------------------

@main.command()
@click.argument("level", type=click.Choice(["quick", "full"]), default="quick")
@click.option("--inject-fault", type=click.Choice(["rho-cache"]), hidden=True,
              help="Corrupt the tabulated correction profile before running.")
@click.option("--only", hidden=True, help="Comma-separated check ids to run.")
def selftest(level, inject_fault, only):
    """Run the acceptance checks and print a summary table."""
    from .acceptance import inject_profile_fault, run_selftest

    if inject_fault == "rho-cache":
        inject_profile_fault()
    only = [x.strip() for x in only.split(",") if x.strip()] if only else None
    try:
        results = run_selftest(level, echo=click.echo, only=only)
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc
    failed = [r.check_id for r in results if not r.passed]
    click.echo(f"{len(results) - len(failed)}/{len(results)} passed"
               + (f"; failed: {', '.join(failed)}" if failed else ""))
    sys.exit(1 if failed else 0)


if __name__ == "__main__":
    main()
