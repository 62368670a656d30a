"""
히스토그램용 구분자 파일 출력 (임계점 조사, 다중 시드 실행)
"""
from pathlib import Path

import numpy as np
import pandas as pd

from landscape.engine import CriticalReport
from landscape.errors import IoError
from landscape.optimizer import RunRecord, runs_frame, survey_frame
from util.io_helper import save_csv
from util.logger import component_logger

logger = component_logger("export")

HISTOGRAM_COLUMNS = ["value_bin", "count", "reconcilable", "classification"]


def _detect_kind(data, kind):
    if kind is not None:
        if kind not in ("runs", "survey"):
            raise ValueError(f"kind must be 'runs' or 'survey', got {kind!r}")
        return kind
    if data and isinstance(data[0], RunRecord):
        return "runs"
    if data and not isinstance(data[0], CriticalReport):
        raise ValueError(f"cannot export records of type {type(data[0]).__name__}")
    return "survey"


def histogram_frame(values, reconcilable, classifications, bin_width=1e-3) -> pd.DataFrame:
    if bin_width <= 0:
        raise ValueError(f"bin_width must be positive, got {bin_width}")
    if len(values) == 0:
        return pd.DataFrame(columns=HISTOGRAM_COLUMNS)
    bins = np.round(np.round(np.asarray(values, dtype=float) / bin_width) * bin_width, 12)
    frame = pd.DataFrame({"value_bin": bins, "reconcilable": reconcilable, "classification": classifications})
    grouped = (
        frame.groupby(["value_bin", "reconcilable", "classification"], sort=True)
        .size()
        .reset_index(name="count")
    )
    return grouped[HISTOGRAM_COLUMNS]


def emit_figure_data(data, path, kind=None, bin_width=1e-3):
    """
    히스토그램 파일(path)과 원본 레코드 파일(<stem>_raw<suffix>)을 쓴다

    :param data: RunRecord 또는 CriticalReport 목록
    :return: (히스토그램 경로, 원본 경로)
    """
    data = list(data)
    kind = _detect_kind(data, kind)
    path = Path(path)
    raw_path = path.with_name(f"{path.stem}_raw{path.suffix or '.csv'}")

    if kind == "runs":
        raw = runs_frame(data)
        values = [r.terminal_value for r in data]
        reconcilable = [r.terminal_reconcilable for r in data]
        classifications = [r.terminal_classification.value for r in data]
    else:
        raw = survey_frame(data)
        values = [r.value for r in data]
        reconcilable = [r.reconcilable for r in data]
        classifications = [r.classification.value for r in data]

    histogram = histogram_frame(values, reconcilable, classifications, bin_width=bin_width)
    for frame, target in ((histogram, path), (raw, raw_path)):
        if not save_csv(frame, target):
            raise IoError(f"failed to write {target}")
    logger.info(f"💾 {kind} 데이터 저장: {path} ({len(histogram)}개 구간), {raw_path} ({len(raw)}개 레코드)")
    return path, raw_path
