"""
앙상블 문제 {ω_m, ρ_m, O_m} 정의, 구조 검사, POVM 재스케일링, 나이마크 확장, 파일 입출력
"""
import json
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Any, Mapping, Optional

import numpy as np
from scipy.linalg import null_space

from landscape.errors import (
    ConstantOperator,
    DimensionMismatch,
    InvalidState,
    NonHermitianInput,
    NotPOVM,
    ParseError,
)
from landscape.matrix_kernel import is_hermitian, psd_sqrt
from util.io_helper import read_text, save_json
from util.logger import component_logger

logger = component_logger("ensemble")

# ------------------------- 허용 오차 -------------------------
STRUCT_TOL = 1e-9
PSD_TOL = 1e-10
TRACE_TOL = 1e-10
CONSTANT_RTOL = 1e-12


def _frozen(array, dtype):
    array = np.array(array, dtype=dtype, copy=True)
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class EnsembleProblem:
    weights: np.ndarray
    states: np.ndarray
    operators: np.ndarray
    name: str = ""
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float, copy=True).reshape(-1)
        states = np.array(self.states, dtype=complex, copy=True)
        operators = np.array(self.operators, dtype=complex, copy=True)
        _check_terms(weights, states, operators)

        object.__setattr__(self, "weights", _frozen(weights, float))
        object.__setattr__(self, "states", _frozen(states, complex))
        object.__setattr__(self, "operators", _frozen(operators, complex))
        object.__setattr__(self, "metadata", MappingProxyType(dict(self.metadata)))

    @classmethod
    def from_terms(cls, terms, name="", metadata=None):
        """(weight, state, operator) 튜플 목록으로 생성"""
        terms = list(terms)
        if not terms:
            raise InvalidState("an ensemble needs at least one term")
        weights = [w for w, _, _ in terms]
        states = [np.asarray(rho) for _, rho, _ in terms]
        operators = [np.asarray(O) for _, _, O in terms]
        shapes = {x.shape for x in states + operators}
        if len(shapes) != 1:
            raise DimensionMismatch(f"terms mix matrix shapes {sorted(shapes)}")
        return cls(weights, np.array(states), np.array(operators), name=name, metadata=metadata or {})

    @property
    def dimension(self) -> int:
        return self.states.shape[1]

    @property
    def num_terms(self) -> int:
        return self.weights.size

    def operator_scale(self) -> float:
        """Σ ω_m ‖O_m‖_F, 임계점 허용 오차의 기준값"""
        return float(np.sum(self.weights * np.linalg.norm(self.operators, axis=(1, 2))))


def _check_terms(weights, states, operators):
    if weights.size < 1:
        raise InvalidState("an ensemble needs at least one term")
    if states.ndim != 3 or states.shape[1] != states.shape[2] or states.shape[1] < 1:
        raise DimensionMismatch(f"states must be a stack of square matrices, got shape {states.shape}")
    if operators.shape != states.shape:
        raise DimensionMismatch(f"operators shape {operators.shape} does not match states shape {states.shape}")
    if states.shape[0] != weights.size:
        raise DimensionMismatch(f"{weights.size} weights for {states.shape[0]} terms")
    if not np.all(np.isfinite(weights)) or np.any(weights < 0):
        raise InvalidState(f"weights must be finite and nonnegative, got {weights.tolist()}")

    for m, (rho, O) in enumerate(zip(states, operators)):
        if not is_hermitian(rho):
            raise InvalidState(f"state {m} is not Hermitian")
        if not is_hermitian(O):
            raise NonHermitianInput(f"operator {m} is not Hermitian")
        eigenvalues = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
        if eigenvalues.min() < -PSD_TOL:
            raise InvalidState(f"state {m} has negative eigenvalue {eigenvalues.min():.3g}")
        trace = np.trace(rho).real
        if abs(trace - 1.0) > TRACE_TOL:
            raise InvalidState(f"state {m} has trace {trace:.17g}, expected 1")


# ------------------------- 구조 검사 -------------------------
@dataclass(frozen=True, eq=False)
class StructureReport:
    states_commute: bool
    operators_commute: bool
    projective: bool
    povm: bool
    state_gram: np.ndarray
    operator_gram: np.ndarray
    states_distinguishable: bool
    operators_distinguishable: bool
    epsilon: Optional[float] = None

    def to_dict(self):
        return {
            "states_commute": self.states_commute,
            "operators_commute": self.operators_commute,
            "projective": self.projective,
            "povm": self.povm,
            "state_gram": self.state_gram.tolist(),
            "operator_gram": self.operator_gram.tolist(),
            "states_distinguishable": self.states_distinguishable,
            "operators_distinguishable": self.operators_distinguishable,
            "epsilon": self.epsilon,
        }


def _pairwise_commute(mats) -> bool:
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            if np.linalg.norm(mats[i] @ mats[j] - mats[j] @ mats[i]) >= STRUCT_TOL:
                return False
    return True


def _gram(mats):
    gram = np.einsum("mij,nji->mn", mats, mats).real
    return (gram + gram.T) / 2


def _off_diagonal_small(gram) -> bool:
    off = ~np.eye(gram.shape[0], dtype=bool)
    return bool(np.all(np.abs(gram[off]) < STRUCT_TOL))


def validate(problem: EnsembleProblem) -> StructureReport:
    states, operators = problem.states, problem.operators
    D, M = problem.dimension, problem.num_terms
    identity = np.eye(D)

    sums_to_identity = np.linalg.norm(operators.sum(axis=0) - identity) < STRUCT_TOL
    positive = all(np.linalg.eigvalsh(O).min() >= -STRUCT_TOL for O in operators)
    orthogonal_projectors = all(
        np.linalg.norm(operators[m] @ operators[n] - (operators[m] if m == n else 0)) < STRUCT_TOL
        for m in range(M)
        for n in range(M)
    )

    epsilon = None
    if "epsilon" in problem.metadata:
        epsilon = float(np.mean(problem.metadata["epsilon"]))

    state_gram = _gram(states)
    operator_gram = _gram(operators)
    return StructureReport(
        states_commute=_pairwise_commute(states),
        operators_commute=_pairwise_commute(operators),
        projective=bool(sums_to_identity and orthogonal_projectors),
        povm=bool(sums_to_identity and positive),
        state_gram=state_gram,
        operator_gram=operator_gram,
        states_distinguishable=_off_diagonal_small(state_gram),
        operators_distinguishable=_off_diagonal_small(operator_gram),
        epsilon=epsilon,
    )


# ------------------------- POVM 재스케일링 -------------------------
@dataclass(frozen=True, eq=False)
class AffineRecord:
    """F_old(U) = F_new(U) + alpha"""
    weights: np.ndarray
    alpha: float
    shifts: np.ndarray
    scales: np.ndarray
    completed: bool


def rescale_to_povm(problem: EnsembleProblem, complete=False):
    """
    각 O_m을 (O_m − λ_min I)/(λ_max − λ_min)로 옮겨 0 ⪯ Ō_m ⪯ I 로 만든다.

    :param complete: ΣŌ_m ⪯ I 이면 O_{M+1} = I − ΣŌ_m 항(상태 I/D, 가중치 1)을 덧붙인다
    :return: (새 문제, AffineRecord)
    """
    D = problem.dimension
    identity = np.eye(D)
    shifts, scales, operators = [], [], []
    for m, O in enumerate(problem.operators):
        eigenvalues = np.linalg.eigvalsh(O)
        low, high = eigenvalues[0], eigenvalues[-1]
        if high - low <= CONSTANT_RTOL * max(1.0, abs(low), abs(high)):
            raise ConstantOperator(f"operator {m} is constant ({low:.17g}·I); it cannot be rescaled")
        shifts.append(low)
        scales.append(high - low)
        operators.append((O - low * identity) / (high - low))

    shifts, scales = np.array(shifts), np.array(scales)
    weights = problem.weights * scales
    alpha = float(np.sum(problem.weights * shifts))
    states = list(problem.states)
    completed = False

    if complete:
        complement = identity - np.sum(operators, axis=0)
        complement = (complement + complement.conj().T) / 2
        if np.linalg.eigvalsh(complement).min() < -STRUCT_TOL:
            logger.warning("⚠️ ΣŌ_m ⪯ I 조건 불만족: 보완 항을 추가하지 않습니다")
        elif np.linalg.norm(complement) > STRUCT_TOL:
            operators.append(complement)
            states.append(identity / D)
            weights = np.append(weights, 1.0)
            alpha -= float(np.trace(complement).real) / D
            completed = True

    rescaled = EnsembleProblem(
        weights,
        np.array(states),
        np.array(operators),
        name=f"{problem.name}-povm" if problem.name else "",
        metadata=dict(problem.metadata),
    )
    record = AffineRecord(weights=weights, alpha=alpha, shifts=shifts, scales=scales, completed=completed)
    return rescaled, record


# ------------------------- 나이마크 확장 -------------------------
@dataclass(frozen=True, eq=False)
class DilationRecord:
    isometry: np.ndarray
    dimension: int
    outcomes: int


def naimark_dilate(problem: EnsembleProblem):
    """
    POVM 문제를 D·M 차원 사영 측정 문제로 확장한다.
    V는 |ψ⟩⊗|0⟩ ↦ Σ_m √O_m|ψ⟩⊗|m⟩ 등거리 사상을 유니타리로 완성한 행렬이다.
    """
    if not validate(problem).povm:
        raise NotPOVM("operators do not form a POVM (positive and summing to the identity)")

    D, M = problem.dimension, problem.num_terms
    outcome_projectors = np.zeros((M, M, M))
    outcome_projectors[np.arange(M), np.arange(M), np.arange(M)] = 1.0

    isometry = np.zeros((D * M, D), dtype=complex)
    for m, O in enumerate(problem.operators):
        isometry += np.kron(psd_sqrt(O), np.eye(M)[:, [m]])

    # 보완 열은 null_space 결과를 오름차순 인덱스에 채운다
    anchors = np.arange(D) * M
    others = np.setdiff1d(np.arange(D * M), anchors)
    V = np.zeros((D * M, D * M), dtype=complex)
    V[:, anchors] = isometry
    V[:, others] = null_space(isometry.conj().T)

    ancilla_ground = outcome_projectors[0]
    states = np.array([np.kron(rho, ancilla_ground) for rho in problem.states])
    operators = np.array([np.kron(np.eye(D), outcome_projectors[m]) for m in range(M)])
    dilated = EnsembleProblem(
        problem.weights,
        states,
        operators,
        name=f"{problem.name}-dilated" if problem.name else "",
        metadata=dict(problem.metadata),
    )
    logger.debug(f"나이마크 확장 완료: D={D} → {D * M}")
    return dilated, DilationRecord(isometry=V, dimension=D, outcomes=M)


def dilated_unitary(record: DilationRecord, U):
    """V(U⊗I_M)"""
    return record.isometry @ np.kron(np.asarray(U), np.eye(record.outcomes))


# ------------------------- 파일 입출력 -------------------------
def encode_matrix(X):
    X = np.asarray(X, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in X]


def _number(value, where, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"expected a number at {where}", path=path, field=where)
    if not np.isfinite(value):
        raise ParseError(f"non-finite number at {where}", path=path, field=where)
    return float(value)


def decode_matrix(raw, D, where, path=None):
    if not isinstance(raw, list) or len(raw) != D:
        raise ParseError(f"{where} must be a list of {D} rows", path=path, field=where)
    X = np.zeros((D, D), dtype=complex)
    for i, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != D:
            raise ParseError(f"{where}[{i}] must hold {D} entries", path=path, field=f"{where}[{i}]")
        for j, pair in enumerate(row):
            spot = f"{where}[{i}][{j}]"
            if not isinstance(pair, list) or len(pair) != 2:
                raise ParseError(f"{spot} must be a [re, im] pair", path=path, field=spot)
            X[i, j] = complex(_number(pair[0], spot, path), _number(pair[1], spot, path))
    return X


def _parse_document(text, path):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", path=path, line=e.lineno) from e


def problem_from_dict(data, path=None) -> EnsembleProblem:
    if not isinstance(data, dict):
        raise ParseError("top level must be an object", path=path, field="$")
    unknown = set(data) - {"dimension", "terms", "name", "metadata"}
    if unknown:
        raise ParseError(f"unknown keys {sorted(unknown)}", path=path, field=sorted(unknown)[0])
    D = data.get("dimension")
    if isinstance(D, bool) or not isinstance(D, int) or D < 1:
        raise ParseError("dimension must be a positive integer", path=path, field="dimension")
    terms = data.get("terms")
    if not isinstance(terms, list) or not terms:
        raise ParseError("terms must be a non-empty list", path=path, field="terms")

    parsed = []
    for m, term in enumerate(terms):
        where = f"terms[{m}]"
        if not isinstance(term, dict) or set(term) != {"weight", "state", "operator"}:
            raise ParseError(f"{where} must have exactly weight, state and operator", path=path, field=where)
        weight = _number(term["weight"], f"{where}.weight", path)
        state = decode_matrix(term["state"], D, f"{where}.state", path)
        operator = decode_matrix(term["operator"], D, f"{where}.operator", path)
        parsed.append((weight, state, operator))

    metadata = data.get("metadata") or {}
    if not isinstance(metadata, dict):
        raise ParseError("metadata must be an object", path=path, field="metadata")
    return EnsembleProblem.from_terms(parsed, name=str(data.get("name", "")), metadata=metadata)


def problem_to_dict(problem: EnsembleProblem):
    data = {"dimension": problem.dimension}
    if problem.name:
        data["name"] = problem.name
    if problem.metadata:
        data["metadata"] = {k: (list(v) if isinstance(v, tuple) else v) for k, v in problem.metadata.items()}
    data["terms"] = [
        {"weight": float(w), "state": encode_matrix(rho), "operator": encode_matrix(O)}
        for w, rho, O in zip(problem.weights, problem.states, problem.operators)
    ]
    return data


def load_problem(path) -> EnsembleProblem:
    path = Path(path)
    try:
        text = read_text(path)
    except OSError as e:
        raise ParseError(f"cannot read problem file: {e}", path=path) from e
    problem = problem_from_dict(_parse_document(text, path), path=path)
    logger.debug(f"문제 로드: {path} (D={problem.dimension}, M={problem.num_terms})")
    return problem


def save_problem(problem: EnsembleProblem, path):
    save_json(path, problem_to_dict(problem))


def load_matrix(path):
    """문제 파일과 같은 [re, im] 인코딩의 정사각 행렬 파일 (리스트 또는 {"matrix": ...})"""
    path = Path(path)
    try:
        data = _parse_document(read_text(path), path)
    except OSError as e:
        raise ParseError(f"cannot read matrix file: {e}", path=path) from e
    if isinstance(data, dict):
        data = data.get("matrix")
    if not isinstance(data, list) or not data:
        raise ParseError("matrix file must hold a non-empty list of rows", path=path, field="matrix")
    return decode_matrix(data, len(data), "matrix", path)
