import json

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose

from data.branch_io import (
    BRANCH_COLUMNS,
    exact_frame,
    read_branch_csv,
    validate_point,
    write_branch_csv,
    write_branch_json,
    write_exact_csv,
    write_spectrum_csv,
)
from models.continuation import Branch, BranchPoint
from utils.errors import BranchCsvError


def _point(c, **overrides):
    values = dict(c=c, b=c + 1.0, omega=c + 2.0, mu=c + 2.0, gamma=1.5 * (c + 1.0) ** 2, b_prime=1.0,
                  c_plus_2bprime=c + 2.0, n_neg=1, z_zero=1, verdict="Stable", n_modes=128, residual=1e-13)
    values.update(overrides)
    return BranchPoint(**values)


def _branch(points):
    branch = Branch(alpha=1.0, metadata={"method": "newton", "c_range": [-0.5, 0.5]})
    for p in points:
        branch.points.append(p)
    return branch


def test_csv_has_canonical_header_and_rows(tmp_path):
    path = write_branch_csv(_branch([_point(-0.5), _point(0.0), _point(0.5)]), tmp_path, 1e-10)
    assert path.name == "branch_alpha1.csv"
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(BRANCH_COLUMNS)
    assert len(lines) == 4
    assert lines[2].startswith("0,1,2,2,1.5,1,2,1,1,Stable,128,")


def test_csv_bytes_are_deterministic(tmp_path):
    points = [_point(c) for c in np.linspace(-0.5, 0.5, 7)]
    first = write_branch_csv(_branch(points), tmp_path / "a", 1e-10).read_bytes()
    second = write_branch_csv(_branch(points), tmp_path / "b", 1e-10).read_bytes()
    assert first == second


def test_read_restores_full_precision(tmp_path):
    c = 0.1234567890123456789
    frame = read_branch_csv(write_branch_csv(_branch([_point(c)]), tmp_path, 1e-10))
    assert frame.loc[0, "c"] == c
    assert frame.loc[0, "n_modes"] == 128


def test_unanalyzed_points_survive_a_round_trip(tmp_path):
    nan = float("nan")
    point = _point(0.0, mu=nan, gamma=nan, b_prime=nan, c_plus_2bprime=nan, n_neg=-1, z_zero=-1, verdict="")
    frame = read_branch_csv(write_branch_csv(_branch([point]), tmp_path, 1e-10))
    assert np.isnan(frame.loc[0, "b_prime"])
    assert frame.loc[0, "verdict"] == ""


@pytest.mark.parametrize("overrides, message", [
    ({"b": -0.1}, "negative"),
    ({"omega": 3.0}, "omega"),
    ({"residual": 1e-6}, "residual"),
    ({"mu": -1.0}, "mu"),
    ({"verdict": "Wobbly"}, "verdict"),
])
def test_invalid_points_are_rejected(overrides, message):
    with pytest.raises(BranchCsvError, match=message):
        validate_point(_point(0.0, **overrides), 1e-10, row=3)


def test_write_reports_offending_row(tmp_path):
    with pytest.raises(BranchCsvError) as info:
        write_branch_csv(_branch([_point(0.0), _point(0.5, residual=1.0)]), tmp_path, 1e-10)
    assert info.value.row == 2
    assert not (tmp_path / "branch_alpha1.csv").exists()


def test_read_rejects_bad_files(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(BranchCsvError, match="empty"):
        read_branch_csv(empty)

    header_only = tmp_path / "header.csv"
    header_only.write_text(",".join(BRANCH_COLUMNS) + "\n")
    with pytest.raises(BranchCsvError, match="no rows"):
        read_branch_csv(header_only)

    wrong_header = tmp_path / "wrong.csv"
    wrong_header.write_text("c,b\n0,1\n")
    with pytest.raises(BranchCsvError) as info:
        read_branch_csv(wrong_header)
    assert info.value.row == 0


def test_read_reports_row_of_bad_cell(tmp_path):
    path = write_branch_csv(_branch([_point(-0.5), _point(0.0)]), tmp_path, 1e-10)
    path.write_text(path.read_text().replace("\n0,1,", "\nzero,1,", 1))
    with pytest.raises(BranchCsvError) as info:
        read_branch_csv(path)
    assert info.value.row == 2


def test_json_sidecar(tmp_path):
    branch = _branch([_point(0.0, b_prime=float("nan"))])
    branch.events.append({"kind": "fold", "c_left": -0.1, "c_right": 0.1})
    path = write_branch_json(branch, tmp_path, status="aborted", message="step too small")
    payload = json.loads(path.read_text())
    assert path.name == "branch_alpha1.json"
    assert payload["status"] == "aborted"
    assert payload["n_points"] == 1
    assert payload["metadata"]["method"] == "newton"
    assert payload["events"][0]["kind"] == "fold"


def test_exact_frame_for_bo_and_kdv():
    bo = exact_frame(1.0, [1.0, 0.5], n_modes=64)
    assert list(bo["parameter"]) == [1.0, 0.5]
    assert_allclose(bo["b"], bo["c"] + 1.0, rtol=1e-13)
    kdv = exact_frame(2.0, [0.3, 0.6], n_modes=64)
    assert_allclose(kdv["omega"] ** 2, kdv["c"] ** 2 + 4.0 * kdv["b"], rtol=1e-10)
    with pytest.raises(ValueError):
        exact_frame(0.5, [0.3])


def test_exact_and_spectrum_files(tmp_path):
    path = write_exact_csv(exact_frame(1.0, [0.5], n_modes=64), 1.0, tmp_path)
    assert path.name == "exact_alpha1.csv"
    assert list(pd.read_csv(path).columns) == ["c", "b", "omega", "mu", "parameter"]
    rows = [{"operator": "L", "index": 0, "real": -1.0, "imag": 0.0}]
    spectrum = write_spectrum_csv(rows, 1.0, 0.0, tmp_path)
    assert spectrum.name == "spectrum_alpha1_c0.csv"
    assert spectrum.read_text().splitlines() == ["operator,index,real,imag", "L,0,-1,0"]
