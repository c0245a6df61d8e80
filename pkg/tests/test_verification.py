import json

import pytest

from analysis.verification import (
    SAMPLE_POINTS,
    STOKES_SLOPE,
    STOKES_SLOPE_TOL,
    VerificationReport,
    _exact_check,
    _sample_indices,
    exact_suite,
    run_verify,
    small_amplitude_suite,
    stokes_order,
    stokes_table,
    write_report,
)
from utils.fourier_core import make_grid
from utils.special_functions import bo_exact, bo_gamma_for_speed


def test_report_tracks_first_failure(tmp_path):
    report = VerificationReport(alpha=1.0)
    report.add("small error", 1e-9, 1e-6)
    report.add("large error", 1e-3, 1e-6)
    report.add("flag", 0.0, 0.0, passed=False)
    assert not report.passed
    assert report.first_failure.name == "large error"

    path = write_report(report, tmp_path)
    payload = json.loads(path.read_text())
    assert path.name == "verify_alpha1.json"
    assert payload["first_failure"] == "large error"
    assert [c["passed"] for c in payload["checks"]] == [True, False, False]


def test_infinite_measurement_is_serialized_as_null(tmp_path):
    report = VerificationReport(alpha=2.0)
    report.add("diverged", float("inf"), 1e-6)
    payload = json.loads(write_report(report, tmp_path).read_text())
    assert payload["checks"][0]["measured"] is None


def test_stokes_expansion_is_fourth_order(cfg):
    slope, stderr = stokes_order(2.0, cfg)
    assert abs(slope - STOKES_SLOPE) < STOKES_SLOPE_TOL
    assert stderr < 0.5


def test_stokes_table_rows(cfg):
    rows = stokes_table(0.6, (0.02, 0.04), cfg)
    assert [r["a"] for r in rows] == [0.02, 0.04]
    assert rows[0]["profile_error"] < rows[1]["profile_error"]


def test_small_amplitude_limits_for_bo(cfg):
    report = VerificationReport(alpha=1.0)
    small_amplitude_suite(1.0, cfg, report)
    assert len(report.checks) == 3
    assert report.passed


def test_exact_suite_for_bo(cfg):
    report = VerificationReport(alpha=1.0)
    exact_suite(1.0, cfg, report)
    assert len(report.checks) == 12
    assert report.passed


@pytest.mark.slow
def test_full_verification_for_bo(cfg):
    report = run_verify(1.0, (-0.9, 2.0), cfg)
    assert report.passed, report.first_failure


def test_exact_check_at_zero_speed(cfg):
    report = VerificationReport(alpha=1.0)
    _exact_check(report, "BO c=0", bo_exact(bo_gamma_for_speed(0.0), make_grid(128)), cfg)
    checks = {c.name: c for c in report.checks}
    assert checks["BO c=0: c"].passed
    assert checks["BO c=0: c"].measured < 1e-8
    assert report.passed


def test_branch_checks_use_twenty_samples():
    assert SAMPLE_POINTS >= 20
    indices = _sample_indices(100)
    assert len(indices) == SAMPLE_POINTS
    assert indices[0] == 0 and indices[-1] == 99
    assert _sample_indices(7) == list(range(7))
