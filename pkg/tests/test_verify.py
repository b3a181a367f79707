import json
import math

import mpmath as mp
import numpy as np
import pytest

from semitrace import verify as vf
from semitrace.geometry import DomainError, SpaceParams
from semitrace.symbols import as_smooth, parse_symbol

Z, ZB, R2 = parse_symbol("z"), parse_symbol("zbar"), parse_symbol("|z|^2")


def r2_trace(t):
    # Tr(T_f T_f - T_{f^2}) for f = |z|^2 by partial fractions of the exact diagonals
    return float(-(t + 1) * (1 - (t + 1) * mp.psi(1, t + 2)))


def test_report_schema_and_json():
    rep = vf.verify_identity(SpaceParams(1, 0.0), Z, ZB)
    assert rep.passed and rep.tol_kind == "abs"
    assert rep.lhs == pytest.approx(-1.0, abs=1e-9)
    assert rep.rhs_terms[0] == pytest.approx(-1.0, abs=1e-12)
    assert rep.rhs_terms[1] == 0
    d = json.loads(rep.to_json())
    for key in ("check_id", "params", "lhs", "rhs_terms", "abs_err", "rel_err", "tol", "tol_kind",
                "pass", "seed", "budgets", "wall_time_ms", "details"):
        assert key in d
    assert d["params"]["f"] == "z" or "z" in d["params"]["f"]
    assert rep.to_text().startswith("PASS")


def test_report_failure_is_reported():
    rep = vf.VerificationReport("x", {}, 1.0, [0.5, 0.4], 1e-3)
    assert not rep.passed and rep.abs_err == pytest.approx(0.1)
    assert vf.VerificationReport("x", {}, 1.0, [0.5, 0.4], 0.2, tol_kind="rel").passed
    nan = vf.VerificationReport("x", {}, complex("nan"), [0.0], 1.0)
    assert not nan.passed


@pytest.mark.parametrize("t", [0.0, 1.0, 4.0])
def test_disk_identity_abs_squared(t):
    tp = vf.rhs_disk(t, R2, R2)
    # the boundary term is -(1/pi) int |z|^2 dm = -1/2 for every t
    assert tp.wedge_term == pytest.approx(-0.5, abs=1e-12)
    assert tp.total == pytest.approx(r2_trace(t), abs=1e-7)
    rep = vf.verify_identity(SpaceParams(1, t), R2, R2)
    assert rep.passed and rep.lhs == pytest.approx(r2_trace(t), abs=1e-8)


def test_levi_and_laplacian_routes_agree():
    f = as_smooth(parse_symbol("|z|^2 + z^2*zbar"))
    g = as_smooth(parse_symbol("z*zbar^2 - 2*|z|^4"))
    b = vf.Budget()
    for t in (0.0, 2.5):
        lap = vf._correction_disk(t, f, g, b, kernel="laplacian")
        levi = vf._correction_disk(t, f, g, b, kernel="levi")
        assert abs(lap) > 1e-3
        assert levi == pytest.approx(lap, rel=1e-10)
    with pytest.raises(ValueError):
        vf._correction_disk(0.0, f, g, b, kernel="heat")


def test_correction_term_is_symmetric():
    # the kernel depends on |phi_z(w)| = |phi_w(z)|
    f, g = as_smooth(parse_symbol("|z|^2 + z^2*zbar")), as_smooth(parse_symbol("z*zbar^2"))
    b = vf.Budget()
    a = vf._correction_disk(1.0, f, g, b)
    c = vf._correction_disk(1.0, g, f, b)
    assert a == pytest.approx(c, rel=1e-10)


def test_disk_ball_route_matches_disk_route():
    f, g = parse_symbol("|z|^2 + z"), parse_symbol("zbar*z^2")
    a = vf.rhs_disk(1.0, f, g)
    b = vf.rhs_ball(1, 1.0, f, g)
    assert b.total == pytest.approx(a.total, rel=1e-10)


def test_constant_symbol_short_circuits():
    rep = vf.verify_identity(SpaceParams(2, 0.0), parse_symbol("2", 2), parse_symbol("z1", 2))
    assert rep.lhs == 0 and rep.rhs == 0 and rep.passed


def test_domain_errors():
    with pytest.raises(DomainError):
        vf.rhs_disk(-1.0, R2, R2)
    with pytest.raises(DomainError):
        vf.rhs_disk(0.0, parse_symbol("z1", 2), parse_symbol("z1", 2))
    with pytest.raises(NotImplementedError):
        vf.rhs_ball(3, 0.0, parse_symbol("z1", 3), parse_symbol("z1bar", 3))


def test_scan_edge_cases():
    with pytest.raises(ValueError):
        vf.scan_asymptotic(1, [2.0, 1.0], R2, R2)
    rows = vf.scan_asymptotic(1, [3.0], R2, R2)
    assert len(rows) == 1 and rows[0].slope_running is None
    assert rows[0].lhs == pytest.approx(r2_trace(3.0), abs=1e-8)
    rows = vf.scan_asymptotic(1, [1.0, 2.0], R2, R2, with_lhs=False)
    assert math.isnan(rows[0].lhs.real) and rows[1].slope_running is not None


def test_loglog_slope():
    ts = np.array([2.0, 4.0, 8.0])
    assert vf.fit_loglog_slope(ts, 3.0 * ts**-1.5) == pytest.approx(-1.5, abs=1e-12)


def test_commutator_and_hankel_checks():
    f, g = parse_symbol("z + |z|^2"), parse_symbol("zbar*z^2 - zbar")
    assert vf.commutator_check(0.0, f, g).passed
    for t in (0.0, 2.0):
        assert vf.hankel_identity_check(t, parse_symbol("zbar + z*zbar")).passed


@pytest.mark.parametrize("check_id,kwargs", [
    ("disk-ibp-origin", {}),
    ("disk-ibp-origin", {"t": 1.5}),
    ("disk-ibp-mobius", {"z0": 0.3 + 0.4j}),
    ("disk-ibp-mobius", {"z0": -0.7j, "t": 2.0}),
    ("ball-ibp-origin", {}),
    ("ball-ibp-origin", {"t": 1.0}),
    ("boundary-forms", {}),
    ("sphere-formula", {}),
    ("sphere-formula", {"alpha": (1, 1), "beta_": (2, 0)}),
    ("fubini", {"part": "i", "m": 2, "k": 1, "t": 0.5}),
    ("fubini", {"part": "ii", "m": 1, "k": 2, "t": 0.0}),
    ("fubini", {"part": "iii", "m": 2, "k": 2, "t": 1.0}),
    ("fubini", {"part": "beta", "m": 3, "k": 1, "t": 0.5}),
    ("rho-consistency", {}),
    ("rho-reduction", {"t": 2.0}),
])
def test_identity_checks_pass(check_id, kwargs):
    out = vf.lemma_check(check_id, **kwargs)
    for rep in out if isinstance(out, list) else [out]:
        assert rep.passed, rep.to_text()
        if check_id.startswith("rho-"):
            continue   # these report a discrepancy against zero
        # the check compares two non-trivial quantities
        assert abs(rep.lhs) > 1e-6 or max(abs(v) for v in rep.rhs_terms) > 1e-6


def test_unknown_check():
    with pytest.raises(KeyError):
        vf.lemma_check("no-such-check")


def test_ball_polynomial_pairs_rejected():
    # partial traces of polynomial semi-commutators diverge on B_2
    f = parse_symbol("|z|^2", 2)
    with pytest.raises(vf.UnsupportedSymbolError):
        vf.verify_identity(SpaceParams(2, 1.0), f, f)
    with pytest.raises(vf.UnsupportedSymbolError):
        vf.scan_asymptotic(2, [1.0, 2.0], f, f)
    # g holomorphic: T_f T_g = T_{fg}, so both sides vanish
    rep = vf.verify_identity(SpaceParams(2, 1.0), parse_symbol("z1bar", 2),
                             parse_symbol("z1*z2", 2))
    assert rep.passed and rep.lhs == 0
