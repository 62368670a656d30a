import json

import numpy as np
import pandas as pd
from pathlib import Path

from util.logger import setup_logger

logger = setup_logger("io_helper")

# 전체 정밀도 출력 (왕복 변환 시 값 보존)
FLOAT_FORMAT = "%.17g"


def save_csv(df: pd.DataFrame, path, index=False):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        df.to_csv(path, index=index, float_format=FLOAT_FORMAT)
        return True
    except Exception as e:
        logger.error(f"❌ {path} 저장 실패: {e}")
        return False


def frame_to_csv_text(df: pd.DataFrame, index=False) -> str:
    return df.to_csv(index=index, float_format=FLOAT_FORMAT)


def read_text(path) -> str:
    """파일 내용을 문자열로 로드. 파싱 오류 처리는 호출자 몫이다."""
    with open(path, "r", encoding="utf-8") as f:
        return f.read()


def _to_builtin(value):
    # numpy 스칼라/배열은 파이썬 기본형으로
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def save_json(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, ensure_ascii=False, indent=2, default=_to_builtin)
        f.write("\n")


def dump_json_text(data) -> str:
    return json.dumps(data, ensure_ascii=False, indent=2, default=_to_builtin)
