"""
번들 예제 문제 다섯 개와 ε-패밀리 생성기

checkpoints 메타데이터는 이름 있는 점을 1부터 시작하는 한 줄 순열 표기로 저장한다.
"""
from pathlib import Path

import numpy as np

from config import settings
from landscape.ensemble import EnsembleProblem, load_problem
from landscape.errors import OutOfRange, ParseError
from util.logger import component_logger

logger = component_logger("ensemble")

THIRD = 1.0 / 3.0


def _diagonal_problem(weights, state_diagonals, operator_diagonals, name, metadata):
    terms = [(w, np.diag(s), np.diag(o)) for w, s, o in zip(weights, state_diagonals, operator_diagonals)]
    return EnsembleProblem.from_terms(terms, name=name, metadata=metadata)


def opt1_problem() -> EnsembleProblem:
    """2큐비트 사영 측정 예제: 두 국소 최대 0.39, 0.36"""
    return _diagonal_problem(
        [THIRD, THIRD, THIRD],
        [(0.4, 0.35, 0.15, 0.1), (0.35, 0.45, 0.2, 0.0), (0.29, 0.41, 0.18, 0.12)],
        [(1, 0, 0, 0), (0, 1, 1, 0), (0, 0, 0, 1)],
        name="opt1",
        metadata={"checkpoints": {"U1": "perm:1,2,3,4", "U2": "perm:4,2,1,3"}},
    )


def nonunique_6d_problem() -> EnsembleProblem:
    """전역 최대 0.58, 서로 다른 거짓 트랩 79/150과 0.42"""
    return _diagonal_problem(
        [THIRD, THIRD, THIRD],
        [
            (0.23, 0.35, 0.17, 0.25, 0.0, 0.0),
            (0.0, 0.0, 0.27, 0.3, 0.22, 0.21),
            (0.15, 0.26, 0.0, 0.0, 0.35, 0.24),
        ],
        [(1, 1, 0, 0, 0, 0), (0, 0, 1, 1, 0, 0), (0, 0, 0, 0, 1, 1)],
        name="nonunique-6d",
        metadata={"checkpoints": {"U1": "perm:4,2,3,6,5,1", "U2": "perm:4,3,5,6,2,1"}},
    )


def povm_4d_problem() -> EnsembleProblem:
    """비사영 POVM 예제 (나이마크 확장 대상)"""
    return _diagonal_problem(
        [0.25, 0.25, 0.5],
        [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 0.8, 0.2)],
        [(0.3, 0.2, 0.4, 0.3), (0.35, 0.45, 0.25, 0.5), (0.35, 0.35, 0.35, 0.2)],
        name="povm-4d",
        metadata={"checkpoints": {"U1": "perm:4,3,1,2", "U2": "perm:4,2,3,1"}},
    )


def appendix_distinguishable_problem() -> EnsembleProblem:
    """상태와 연산자가 모두 완전 구별 가능: F_min = 0, F_max = 0.54"""
    return _diagonal_problem(
        [0.25, 0.25, 0.5],
        [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 0.8, 0.2)],
        [(0.8, 0.2, 0, 0), (0, 0, 0.4, 0), (0, 0, 0, 0.6)],
        name="appendix-distinguishable",
        metadata={},
    )


def epsilon_problem(eps) -> EnsembleProblem:
    """
    3차원 ε-패밀리: ρ_i가 인접 위치로 ε_i 만큼 새어 나간다

    :param eps: (ε₁, ε₂, ε₃), 각 값은 [0, ½]
    """
    eps = tuple(float(e) for e in eps)
    if len(eps) != 3 or any(not (0.0 <= e <= 0.5) for e in eps):
        raise OutOfRange(f"epsilon must be three values in [0, 1/2], got {eps}")
    e1, e2, e3 = eps
    return _diagonal_problem(
        [THIRD, THIRD, THIRD],
        [(1 - e1, e1, 0), (0, 1 - e2, e2), (e3, 0, 1 - e3)],
        [(1, 0, 0), (0, 1, 0), (0, 0, 1)],
        name="epsilon-family",
        metadata={"epsilon": list(eps)},
    )


BUNDLED = {
    "opt1": opt1_problem,
    "nonunique-6d": nonunique_6d_problem,
    "povm-4d": povm_4d_problem,
    "epsilon-family": lambda: epsilon_problem((0.4, 0.4, 0.4)),
    "appendix-distinguishable": appendix_distinguishable_problem,
}


def bundled_names():
    return list(BUNDLED)


def bundled_problem(name: str, problem_dir=None) -> EnsembleProblem:
    """problem_dir(기본 settings.PROBLEM_DIR)에 파일이 있으면 읽고, 없으면 코드로 생성"""
    if name not in BUNDLED:
        raise ParseError(f"unknown bundled problem {name!r}; choose from {bundled_names()}", field="problem")
    path = Path(problem_dir or settings.PROBLEM_DIR) / f"{name}.json"
    if path.is_file():
        return load_problem(path)
    return BUNDLED[name]()


def resolve_problem(arg: str) -> EnsembleProblem:
    """경로, .json을 뺀 경로, 또는 디렉토리 접두어가 붙은 번들 이름 순으로 찾는다"""
    path = Path(arg)
    if path.is_file():
        return load_problem(path)
    with_suffix = path.with_name(path.name + ".json")
    if with_suffix.is_file():
        return load_problem(with_suffix)

    name = path.name[:-5] if path.name.endswith(".json") else path.name
    if name in BUNDLED:
        logger.debug(f"번들 문제 사용: {arg} → {name}")
        return bundled_problem(name)
    raise ParseError(f"problem {arg!r} is neither a file nor a bundled name", path=arg, field="problem")
