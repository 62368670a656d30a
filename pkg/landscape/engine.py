"""
목적 함수 F(U) = Σ ω_m Tr[U ρ_m U† O_m] 의 값, 기울기, 곡률, 헤시안 계산과 임계점 분류
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import block_diag

from landscape.ensemble import EnsembleProblem
from landscape.errors import DimensionMismatch, NonHermitianDirection, NonUnitary
from landscape.matrix_kernel import duplication_matrices, is_hermitian, is_unitary

# ------------------------- 허용 오차 -------------------------
CRIT_RTOL = 1e-8
HESS_RTOL = 1e-8
REC_RTOL = 1e-8
ABS_FLOOR = 1e-14


class Classification(str, Enum):
    LOCAL_MAX = "LocalMax"
    LOCAL_MIN = "LocalMin"
    SADDLE = "Saddle"
    NOT_CRITICAL = "NotCritical"


def _check_point(problem: EnsembleProblem, U):
    U = np.asarray(U, dtype=complex)
    D = problem.dimension
    if U.shape != (D, D):
        raise DimensionMismatch(f"unitary of shape {U.shape} for a problem of dimension {D}")
    if not is_unitary(U):
        raise NonUnitary(f"‖U†U − I‖_F = {np.linalg.norm(U.conj().T @ U - np.eye(D)):.3g}")
    return U


def rotated_states(problem: EnsembleProblem, U):
    """σ_m = U ρ_m U†, shape (M, D, D)"""
    U = _check_point(problem, U)
    return U @ problem.states @ U.conj().T


def evaluate(problem: EnsembleProblem, U) -> float:
    sigma = rotated_states(problem, U)
    traces = np.einsum("mij,mji->m", sigma, problem.operators)
    return float(np.dot(problem.weights, traces).real)


def _commutators(sigma, operators):
    return sigma @ operators - operators @ sigma


def commutator_sum(problem: EnsembleProblem, U):
    """C = Σ ω_m [σ_m, O_m] (반에르미트)"""
    sigma = rotated_states(problem, U)
    return np.einsum("m,mij->ij", problem.weights, _commutators(sigma, problem.operators))


def term_commutators(problem: EnsembleProblem, U):
    """항별 가중 교환자 노름 ω_m ‖[σ_m, O_m]‖_F"""
    sigma = rotated_states(problem, U)
    norms = np.linalg.norm(_commutators(sigma, problem.operators), axis=(1, 2))
    return problem.weights * norms


def critical_residual(problem: EnsembleProblem, U) -> float:
    return float(np.linalg.norm(commutator_sum(problem, U)))


def gradient_direction(problem: EnsembleProblem, U, sign="ascend"):
    """
    최급 상승(하강) 방향 A = ±iC. 상승 방향에서 dF(e^{isA}U)/ds|₀ = ‖A‖_F²
    """
    if sign not in ("ascend", "descend"):
        raise ValueError(f"sign must be 'ascend' or 'descend', got {sign!r}")
    A = 1j * commutator_sum(problem, U)
    A = (A + A.conj().T) / 2
    return A if sign == "ascend" else -A


def _check_direction(A, D):
    A = np.asarray(A, dtype=complex)
    if A.shape != (D, D):
        raise DimensionMismatch(f"direction of shape {A.shape} for a problem of dimension {D}")
    if not is_hermitian(A):
        raise NonHermitianDirection("tangent direction must be Hermitian")
    return A


def directional_derivative(problem: EnsembleProblem, U, A) -> float:
    """dF(e^{isA}U)/ds|₀ = Tr[iA C]"""
    A = _check_direction(A, problem.dimension)
    return float(np.trace(1j * A @ commutator_sum(problem, U)).real)


def directional_curvature(problem: EnsembleProblem, U, A) -> float:
    """
    h_U(A) = Σ ω_m Tr[σ_m(A O_m A − ½{O_m, A²})]

    F(e^{isA}U)의 2차 도함수의 절반과 같다.
    """
    A = _check_direction(A, problem.dimension)
    sigma = rotated_states(problem, U)
    O = problem.operators
    A2 = A @ A
    inner = A @ O @ A - 0.5 * (O @ A2 + A2 @ O)
    traces = np.einsum("mij,mji->m", sigma, inner)
    return float(np.dot(problem.weights, traces).real)


def _curvature_operator(problem: EnsembleProblem, U):
    """vec(A)† T vec(A) = h_U(A) 를 만족하는 에르미트 D²×D² 행렬 T"""
    sigma = rotated_states(problem, U)
    D = problem.dimension
    identity = np.eye(D)
    T = np.zeros((D * D, D * D), dtype=complex)
    for w, s, O in zip(problem.weights, sigma, problem.operators):
        T += w * (np.kron(O.T, s) - 0.5 * np.kron(identity, s @ O + O @ s))
    return T


def hessian_matrix(problem: EnsembleProblem, U):
    """(vech_sym(A_re), vech_asym(A_im)) 좌표의 실대칭 D²×D² 헤시안"""
    T = _curvature_operator(problem, U)
    dup = duplication_matrices(problem.dimension)
    block = np.block([[T.real, -T.imag], [T.imag, T.real]])
    basis = block_diag(dup.d_sy, dup.d_ay)
    H = basis.T @ block @ basis
    return (H + H.T) / 2


def hessian_spectrum(problem: EnsembleProblem, U):
    return np.linalg.eigvalsh(hessian_matrix(problem, U))


# ------------------------- 임계점 분류 -------------------------
@dataclass(frozen=True, eq=False)
class CriticalReport:
    point: np.ndarray
    value: float
    residual: float
    classification: Classification
    hessian_spectrum: np.ndarray
    reconcilable: bool
    crit_tol: float
    hess_tol: float
    rec_tol: float

    @property
    def is_critical(self) -> bool:
        return self.classification != Classification.NOT_CRITICAL

    def to_dict(self):
        return {
            "value": self.value,
            "residual": self.residual,
            "classification": self.classification.value,
            "reconcilable": self.reconcilable,
            "min_hessian_eig": float(self.hessian_spectrum[0]),
            "max_hessian_eig": float(self.hessian_spectrum[-1]),
            "hessian_spectrum": self.hessian_spectrum.tolist(),
            "tolerances": {"crit_tol": self.crit_tol, "hess_tol": self.hess_tol, "rec_tol": self.rec_tol},
        }


def classify_spectrum(spectrum, hess_tol) -> Classification:
    """최대 판정을 먼저 하므로 평평한 지형은 LocalMax가 된다"""
    if spectrum[-1] <= hess_tol:
        return Classification.LOCAL_MAX
    if spectrum[0] >= -hess_tol:
        return Classification.LOCAL_MIN
    return Classification.SADDLE


def classify(problem: EnsembleProblem, U, crit_tol=None, hess_tol=None, rec_tol=None) -> CriticalReport:
    U = _check_point(problem, U)
    scale = problem.operator_scale()
    residual = critical_residual(problem, U)
    spectrum = hessian_spectrum(problem, U)
    radius = float(np.max(np.abs(spectrum), initial=0.0))

    crit_tol = crit_tol if crit_tol is not None else max(CRIT_RTOL * scale, ABS_FLOOR)
    hess_tol = hess_tol if hess_tol is not None else max(HESS_RTOL * radius, ABS_FLOOR)
    rec_tol = rec_tol if rec_tol is not None else REC_RTOL * max(1.0, scale)

    if residual >= crit_tol:
        classification = Classification.NOT_CRITICAL
    else:
        classification = classify_spectrum(spectrum, hess_tol)

    return CriticalReport(
        point=U,
        value=evaluate(problem, U),
        residual=residual,
        classification=classification,
        hessian_spectrum=spectrum,
        reconcilable=bool(np.max(term_commutators(problem, U)) < rec_tol),
        crit_tol=float(crit_tol),
        hess_tol=float(hess_tol),
        rec_tol=float(rec_tol),
    )
