import logging
from pathlib import Path

from config import settings


def setup_logger(name: str, log_dir=None, level=None):
    """
    이름 있는 로거 생성. 콘솔(stderr)은 항상, 파일은 log_dir가 주어질 때만 기록한다.

    :param name: 로거 이름 (파일명으로도 사용)
    :param log_dir: 로그 파일 디렉토리, None이면 콘솔만 사용
    :param level: 로그 레벨, None이면 settings.LOG_LEVEL
    """
    logger = logging.getLogger(name)
    logger.setLevel(level or settings.LOG_LEVEL)

    if not logger.handlers:
        # 콘솔 핸들러
        console_handler = logging.StreamHandler()
        console_handler.setFormatter(logging.Formatter("[%(levelname)s] %(message)s"))
        logger.addHandler(console_handler)

        # 파일 핸들러
        if log_dir is not None:
            log_dir_path = Path(log_dir)
            log_dir_path.mkdir(parents=True, exist_ok=True)
            file_handler = logging.FileHandler(log_dir_path / f"{name}.log")
            file_handler.setFormatter(logging.Formatter("%(asctime)s [%(levelname)s] %(message)s"))
            logger.addHandler(file_handler)

    return logger


def component_logger(component: str):
    """settings.LOG_DIR/<component>/<component>.log 에 기록하는 모듈 로거"""
    return setup_logger(component, log_dir=Path(settings.LOG_DIR) / component)
