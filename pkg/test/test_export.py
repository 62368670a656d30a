from unittest.mock import patch

import numpy as np
import pandas as pd
import pytest

from landscape.engine import Classification, classify
from landscape.errors import IoError
from landscape.export import HISTOGRAM_COLUMNS, emit_figure_data, histogram_frame
from landscape.optimizer import RunRecord
from conftest import OPT1_U2, perm_unitary


def _record(seed, value, classification=Classification.LOCAL_MAX, reconcilable=True):
    return RunRecord(
        seed=seed,
        iterations=10,
        initial_value=0.1,
        terminal_value=value,
        terminal_residual=1e-8,
        terminal_classification=classification,
        terminal_reconcilable=reconcilable,
        status="converged",
        terminal_point=np.eye(2),
    )


def test_histogram_counts():
    frame = histogram_frame(
        [0.3901, 0.3902, 0.3599, 0.1234],
        [True, True, True, False],
        ["LocalMax", "LocalMax", "LocalMax", "Saddle"],
    )
    assert list(frame.columns) == HISTOGRAM_COLUMNS
    assert frame["value_bin"].tolist() == [0.123, 0.36, 0.39]
    assert frame["count"].tolist() == [1, 1, 2]
    assert frame["count"].sum() == 4


def test_histogram_splits_by_label():
    frame = histogram_frame([0.2, 0.2], [True, False], ["Saddle", "Saddle"])
    assert len(frame) == 2


def test_histogram_rejects_bad_width():
    with pytest.raises(ValueError):
        histogram_frame([0.1], [True], ["LocalMax"], bin_width=0)


def test_emit_runs(tmp_path):
    records = [_record(0, 0.39), _record(1, 0.36), _record(2, 0.39)]
    path, raw_path = emit_figure_data(records, tmp_path / "runs.csv")

    assert raw_path == tmp_path / "runs_raw.csv"
    histogram = pd.read_csv(path)
    assert histogram["count"].sum() == 3
    raw = pd.read_csv(raw_path)
    assert raw["seed"].tolist() == [0, 1, 2]
    assert np.allclose(raw["terminal_value"], [0.39, 0.36, 0.39], rtol=0, atol=1e-15)


def test_emit_survey(tmp_path, opt1):
    reports = [classify(opt1, np.eye(4)), classify(opt1, perm_unitary(OPT1_U2))]
    path, raw_path = emit_figure_data(reports, tmp_path / "survey.csv")
    raw = pd.read_csv(raw_path)
    assert list(raw.columns) == ["index", "value", "residual", "classification", "reconcilable"]
    assert raw["classification"].tolist() == ["LocalMax", "LocalMax"]


def test_emit_empty_writes_headers(tmp_path):
    path, raw_path = emit_figure_data([], tmp_path / "empty.csv")
    assert path.read_text(encoding="utf-8").strip() == ",".join(HISTOGRAM_COLUMNS)
    assert raw_path.read_text(encoding="utf-8").strip() == "index,value,residual,classification,reconcilable"


def test_emit_is_deterministic(tmp_path):
    records = [_record(i, 0.3 + 0.01 * i) for i in range(5)]
    first, _ = emit_figure_data(records, tmp_path / "a.csv")
    second, _ = emit_figure_data(records, tmp_path / "b.csv")
    assert first.read_bytes() == second.read_bytes()


def test_emit_reports_write_failure(tmp_path):
    with patch("landscape.export.save_csv", return_value=False):
        with pytest.raises(IoError):
            emit_figure_data([_record(0, 0.39)], tmp_path / "runs.csv")


def test_emit_rejects_unknown_kind(tmp_path):
    with pytest.raises(ValueError):
        emit_figure_data([_record(0, 0.39)], tmp_path / "runs.csv", kind="other")
    with pytest.raises(ValueError):
        emit_figure_data([object()], tmp_path / "runs.csv")
