"""Acceptance criteria, one test per criterion.

Each test prints a single PASS/FAIL line with the measured quantities.
The tolerances are pinned literally below and must match the table the
checks read, so a silent loosening fails the suite.
"""

import math

import mpmath as mp
import pytest

from semitrace import acceptance as acc

PINNED = {
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


def test_tolerances_pinned():
    assert acc.TOL == PINNED


def test_closed_form_constants():
    # -(2 - zeta(2)) from an independent 30-digit evaluation
    mp.mp.dps = 30
    ref = -(2 - mp.zeta(2))
    mp.mp.dps = 15
    assert acc.ZETA2_TRACE == pytest.approx(float(ref), abs=1e-15)
    assert acc.ZETA2_TRACE == pytest.approx(-0.35506593, abs=5e-9)


def _report(res, capsys):
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.line()


@pytest.mark.parametrize("check", acc.QUICK, ids=acc.check_name)
def test_acceptance(check, capsys):
    _report(check(), capsys)


@pytest.mark.slow
def test_acceptance_ac14(capsys):
    _report(acc.ac14(), capsys)
