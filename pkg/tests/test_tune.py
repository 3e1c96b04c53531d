import csv
import io
import json

import numpy as np
import pytest

from sarratio.errors import SarRatioError, ValidationError
from sarratio.filters import FilterSpec, apply_filter
from sarratio.quality import EvalConfig, evaluate_m
from sarratio.tune import ParamGrid, grid_search

CFG = EvalConfig(p=5)


def test_grid_points_row_major():
    g = ParamGrid.from_dict({"family": "srad", "axes": [["T", [50, 100]], ["dt", [0.02, 0.05, 0.1]]]})
    assert g.size == 6
    assert g.points()[:4] == [{"T": 50, "dt": 0.02}, {"T": 50, "dt": 0.05}, {"T": 50, "dt": 0.1}, {"T": 100, "dt": 0.02}]
    assert ParamGrid.from_dict(g.to_dict()) == g


@pytest.mark.parametrize("text", [
    "{not json", "[1, 2]", '{"family": "boxcar"}', '{"family": "boxcar", "axes": [["w", []]]}',
    '{"family": "boxcar", "axes": [["w", [4]]]}', '{"family": "external", "axes": [["path", ["a"]]]}',
    '{"family": "boxcar", "axes": [["w", [3]], ["w", [5]]]}', '{"family": "boxcar", "axes": [["w"]]}',
])
def test_malformed_grids(text):
    with pytest.raises(ValidationError):
        ParamGrid.from_json(text)


def test_single_point(blocks200):
    _, noisy = blocks200
    trace = grid_search(noisy, ParamGrid("boxcar", (("w", (5,)),)), 1.0, CFG)
    assert len(trace.rows) == 1 and trace.best is trace.rows[0]
    assert trace.best.spec == FilterSpec("boxcar", {"w": 5})


def test_argmin_matches_independent_evaluation(blocks200):
    _, noisy = blocks200
    grid = ParamGrid("boxcar", (("w", (3, 5, 9, 15, 21)),))
    trace = grid_search(noisy, grid, 1.0, CFG)
    serial = [evaluate_m(noisy, apply_filter(s, noisy), 1.0, CFG).M for s in grid.specs()]
    assert [row.report.M for row in trace.rows] == serial
    assert trace.best.index == int(np.argmin(serial))
    assert all(trace.best.report.M <= row.report.M for row in trace.rows)


def test_ties_go_to_first_point(blocks200):
    _, noisy = blocks200
    trace = grid_search(noisy, ParamGrid("boxcar", (("w", (7, 5, 5)),)), 1.0, CFG)
    assert trace.rows[1].report.M == trace.rows[2].report.M
    if trace.rows[1].report.M <= trace.rows[0].report.M:
        assert trace.best.index == 1


def test_threads_do_not_change_trace(blocks200):
    _, noisy = blocks200
    grid = ParamGrid("boxcar", (("w", (3, 5, 7)),))
    a = grid_search(noisy, grid, 1.0, CFG, threads=1)
    b = grid_search(noisy, grid, 1.0, CFG, threads=3)
    assert a.to_csv() == b.to_csv()
    assert [r.report for r in a.rows] == [r.report for r in b.rows]


def test_failed_points_are_kept(blocks200):
    _, noisy = blocks200
    # zero SRAD iterations leave the ratio at exactly 1: no textureless area
    trace = grid_search(noisy, ParamGrid("srad", (("T", (0, 5)),)), 1.0, CFG)
    assert len(trace.rows) == 2
    assert not trace.rows[0].ok and "NoTexturelessAreaError" in trace.rows[0].error
    assert trace.best.index == 1
    csv_rows = list(csv.DictReader(io.StringIO(trace.to_csv())))
    assert [r["ok"] for r in csv_rows] == [str(int(r.ok)) for r in trace.rows]
    with pytest.raises(SarRatioError):
        grid_search(noisy, ParamGrid("identity", ()), 1.0, CFG)


def test_trace_json(blocks200):
    _, noisy = blocks200
    trace = grid_search(noisy, ParamGrid("boxcar", (("w", (3, 5)),)), 1.0, CFG, seed=4)
    d = json.loads(json.dumps(trace.to_dict()))
    assert d["best"]["M"] == trace.best.report.M
    assert all(r["report"]["seed"] == 4 for r in d["rows"])
