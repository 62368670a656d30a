"""
유니타리 군 위의 리만 경사 상승/하강 U ← e^{iηA}U, 다중 시드 실행, 수치 임계점 탐색
"""
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import pandas as pd
from scipy.linalg import polar

from landscape.base_runner import BaseSeedRunner
from landscape.engine import (
    CRIT_RTOL,
    HESS_RTOL,
    Classification,
    CriticalReport,
    classify,
    commutator_sum,
    critical_residual,
    directional_curvature,
    evaluate,
    gradient_direction,
    hessian_matrix,
    hessian_spectrum,
    rotated_states,
)
from landscape.ensemble import EnsembleProblem
from landscape.errors import OutOfRange
from landscape.matrix_kernel import direction_from_vector, expi, hermitian_basis
from util.logger import component_logger

logger = component_logger("optimizer")

MODES = ("ascend", "descend")


def random_unitary(seed, D: int):
    """시드 고정 하르(Haar) 무작위 유니타리: 복소 가우시안 QR 후 R 대각 위상 보정"""
    rng = np.random.default_rng(seed)
    z = (rng.normal(size=(D, D)) + 1j * rng.normal(size=(D, D))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def reunitarize(U):
    return polar(U)[0]


# ------------------------- 경사 상승/하강 -------------------------
@dataclass(frozen=True)
class OptimizerConfig:
    mode: str = "ascend"
    max_iters: int = 5000
    grad_tol: float = 1e-6
    initial_step: float = 1.0
    shrink: float = 0.5
    sufficient_increase: float = 1e-4
    min_step: float = 1e-14
    seed: int = 0
    reunitarize_every: int = 50
    record_trajectory: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise OutOfRange(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.max_iters < 0 or self.reunitarize_every < 1:
            raise OutOfRange("max_iters must be ≥ 0 and reunitarize_every ≥ 1")
        if min(self.grad_tol, self.initial_step, self.sufficient_increase, self.min_step) <= 0:
            raise OutOfRange("step sizes and tolerances must be positive")
        if not 0 < self.shrink < 1:
            raise OutOfRange(f"shrink must lie in (0, 1), got {self.shrink}")


@dataclass(frozen=True, eq=False)
class RunRecord:
    seed: int
    iterations: int
    initial_value: float
    terminal_value: float
    terminal_residual: float
    terminal_classification: Classification
    terminal_reconcilable: bool
    status: str
    terminal_point: np.ndarray
    trajectory: Optional[list] = None

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def to_dict(self):
        return {
            "seed": self.seed,
            "iterations": self.iterations,
            "initial_value": self.initial_value,
            "terminal_value": self.terminal_value,
            "terminal_residual": self.terminal_residual,
            "classification": self.terminal_classification.value,
            "reconcilable": self.terminal_reconcilable,
            "status": self.status,
        }


def terminal_report(problem: EnsembleProblem, U, grad_tol) -> CriticalReport:
    """수렴 허용 오차에 맞춘 느슨한 기준으로 종점을 분류한다"""
    scale = problem.operator_scale()
    radius = float(np.max(np.abs(hessian_spectrum(problem, U)), initial=0.0))
    return classify(
        problem,
        U,
        crit_tol=max(10 * grad_tol * scale, grad_tol),
        hess_tol=max(HESS_RTOL * radius, 10 * grad_tol * scale),
        rec_tol=max(CRIT_RTOL * scale, 1e3 * grad_tol * scale),
    )


def optimize(problem: EnsembleProblem, config: OptimizerConfig, initial=None) -> RunRecord:
    """
    백트래킹 직선 탐색 경사법. 각 반복은 직전 채택 보폭의 두 배에서 시작해
    충분 증가 조건을 만족할 때까지 보폭을 줄인다.
    """
    D = problem.dimension
    U = random_unitary(config.seed, D) if initial is None else np.asarray(initial, dtype=complex)
    sign = 1.0 if config.mode == "ascend" else -1.0

    value = evaluate(problem, U)
    initial_value = value
    trajectory = [(0, value)] if config.record_trajectory else None
    step = config.initial_step / 2
    status = "max_iters"
    iterations = 0

    for iteration in range(config.max_iters):
        A = gradient_direction(problem, U, config.mode)
        slope = float(np.linalg.norm(A) ** 2)
        if np.sqrt(slope) < config.grad_tol:
            status = "converged"
            break

        trial = 2 * step
        while True:
            candidate = expi(A, trial) @ U
            candidate_value = evaluate(problem, candidate)
            if sign * (candidate_value - value) >= config.sufficient_increase * trial * slope:
                break
            trial *= config.shrink
            if trial < config.min_step:
                status = "stalled"
                break
        if status == "stalled":
            logger.debug(f"[seed {config.seed}] 보폭 소진으로 정지 (iter {iteration})")
            break

        U, value, step = candidate, candidate_value, trial
        iterations += 1
        if iterations % config.reunitarize_every == 0:
            U = reunitarize(U)
            value = evaluate(problem, U)
        if trajectory is not None:
            trajectory.append((iterations, value))
    else:
        if np.linalg.norm(gradient_direction(problem, U, config.mode)) < config.grad_tol:
            status = "converged"

    U = reunitarize(U)
    report = terminal_report(problem, U, config.grad_tol)
    logger.debug(
        f"[seed {config.seed}] {status}: {iterations}회, F={report.value:.17g}, "
        f"{report.classification.value}"
    )
    return RunRecord(
        seed=config.seed,
        iterations=iterations,
        initial_value=initial_value,
        terminal_value=report.value,
        terminal_residual=report.residual,
        terminal_classification=report.classification,
        terminal_reconcilable=report.reconcilable,
        status=status,
        terminal_point=U,
        trajectory=trajectory,
    )


class MultiSeedOptimizer(BaseSeedRunner):
    desc = "📈 Optimizing"

    def __init__(self, problem: EnsembleProblem, config: OptimizerConfig, thread_workers=None, progress=True):
        super().__init__(logger, thread_workers=thread_workers, progress=progress)
        self.problem = problem
        self.config = config

    def run_single(self, seed):
        return optimize(self.problem, replace(self.config, seed=seed))


def run_seeds(problem: EnsembleProblem, config: OptimizerConfig, seeds, threads=None, progress=True):
    runner = MultiSeedOptimizer(problem, config, thread_workers=threads, progress=progress)
    records = runner.run_batch(seeds)
    converged = sum(r.converged for r in records)
    logger.info(f"✅ {config.mode} 완료: {len(records)}개 중 {converged}개 수렴")
    return records


def runs_frame(records) -> pd.DataFrame:
    rows = [
        {
            "seed": r.seed,
            "iterations": r.iterations,
            "terminal_value": r.terminal_value,
            "classification": r.terminal_classification.value,
            "reconcilable": r.terminal_reconcilable,
            "status": r.status,
        }
        for r in records
    ]
    return pd.DataFrame.from_records(
        rows, columns=["seed", "iterations", "terminal_value", "classification", "reconcilable", "status"]
    )


# ------------------------- 안장점 탈출 -------------------------
def saddle_escape_direction(problem: EnsembleProblem, U, mode="ascend", tol=None):
    """
    요구 부호의 곡률을 갖는 에르미트 방향. 기저 D²개를 먼저 훑고, 없으면 헤시안 행렬의
    극단 고유벡터를 확인한다. 그런 방향이 없으면 None (진짜 국소 극값)
    """
    if mode not in MODES:
        raise OutOfRange(f"mode must be one of {MODES}, got {mode!r}")
    D = problem.dimension
    residual = critical_residual(problem, U)
    if residual >= 10 * max(CRIT_RTOL * problem.operator_scale(), 1e-14):
        logger.warning(f"⚠️ 임계점이 아닌 점에서 안장점 탈출 방향 탐색 (residual={residual:.3g})")

    basis = hermitian_basis(D)
    curvatures = np.array([directional_curvature(problem, U, B) for B in basis])
    if tol is None:
        tol = max(HESS_RTOL * float(np.max(np.abs(curvatures), initial=0.0)), 1e-14)

    sign = 1.0 if mode == "ascend" else -1.0
    best = int(np.argmax(sign * curvatures))
    if sign * curvatures[best] > tol:
        return np.array(basis[best])

    values, vectors = np.linalg.eigh(hessian_matrix(problem, U))
    index = -1 if mode == "ascend" else 0
    if sign * values[index] > tol:
        A = direction_from_vector(vectors[:, index], D)
        if sign * directional_curvature(problem, U, A) > tol:
            return A
    return None


# ------------------------- 임계점 탐색 -------------------------
@dataclass(frozen=True)
class FinderConfig:
    tol: float = 1e-10
    max_iters: int = 200
    reunitarize_every: int = 25
    initial_damping: float = 1e-3
    max_damping: float = 1e8
    min_damping: float = 1e-9


def _residual_jacobian(problem: EnsembleProblem, U, basis):
    """
    잔차 좌표 c_n = Re Tr[B_n(−iC)] 와 e^{isB_l}U 방향 도함수 J[n, l]
    """
    sigma = rotated_states(problem, U)
    O = problem.operators
    residual = np.einsum("nij,ji->n", basis, -1j * commutator_sum(problem, U)).real

    inner = np.einsum("lij,mjk->lmik", basis, sigma) - np.einsum("mij,ljk->lmik", sigma, basis)
    outer = np.einsum("lmij,mjk->lmik", inner, O) - np.einsum("mij,lmjk->lmik", O, inner)
    moved = np.einsum("m,lmij->lij", problem.weights, outer)
    jacobian = np.einsum("nij,lji->nl", basis, moved).real
    return residual, jacobian


def _levenberg_marquardt(problem: EnsembleProblem, U, config: FinderConfig):
    """g(U) = ‖C‖_F² 를 감쇠 가우스-뉴턴으로 줄인다. g < tol² 이면 U, 아니면 None"""
    basis = hermitian_basis(problem.dimension)
    identity = np.eye(len(basis))
    damping = config.initial_damping
    residual, jacobian = _residual_jacobian(problem, U, basis)
    g = float(residual @ residual)
    accepted = 0

    for _ in range(config.max_iters):
        if g < config.tol ** 2:
            return U
        normal = jacobian.T @ jacobian
        x = np.linalg.solve(normal + damping * identity, -jacobian.T @ residual)
        candidate = expi(np.einsum("l,lij->ij", x, basis)) @ U
        candidate_residual, candidate_jacobian = _residual_jacobian(problem, candidate, basis)
        candidate_g = float(candidate_residual @ candidate_residual)

        if candidate_g < g:
            U, residual, jacobian, g = candidate, candidate_residual, candidate_jacobian, candidate_g
            damping = max(damping / 3, config.min_damping)
            accepted += 1
            if accepted % config.reunitarize_every == 0:
                U = reunitarize(U)
                residual, jacobian = _residual_jacobian(problem, U, basis)
                g = float(residual @ residual)
        else:
            damping *= 4
            if damping > config.max_damping:
                return None
    return U if g < config.tol ** 2 else None


def finder_report(problem: EnsembleProblem, U, tol) -> CriticalReport:
    scale = problem.operator_scale()
    radius = float(np.max(np.abs(hessian_spectrum(problem, U)), initial=0.0))
    return classify(
        problem,
        U,
        crit_tol=max(CRIT_RTOL * scale, 10 * tol),
        hess_tol=max(HESS_RTOL * radius, 1e-6),
        rec_tol=1e-6 * scale,
    )


class CriticalPointSurvey(BaseSeedRunner):
    """시드마다 무작위 유니타리에서 출발해 수렴한 임계점 보고서를 모은다 (미수렴 시드는 제외)"""

    desc = "🔍 Surveying"

    def __init__(self, problem: EnsembleProblem, config: FinderConfig, thread_workers=None, progress=True):
        super().__init__(logger, thread_workers=thread_workers, progress=progress)
        self.problem = problem
        self.config = config

    def run_single(self, seed):
        U = _levenberg_marquardt(self.problem, random_unitary(seed, self.problem.dimension), self.config)
        if U is None:
            self.logger.debug(f"[seed {seed}] 미수렴, 제외")
            return None
        return finder_report(self.problem, reunitarize(U), self.config.tol)


def deduplicate(reports, value_tol=1e-6, spectrum_tol=1e-4):
    kept = []
    for report in reports:
        duplicate = any(
            abs(report.value - other.value) <= value_tol
            and float(np.max(np.abs(report.hessian_spectrum - other.hessian_spectrum))) <= spectrum_tol
            for other in kept
        )
        if not duplicate:
            kept.append(report)
    return kept


def survey_critical_points(problem: EnsembleProblem, n_seeds, tol=1e-10, seed_offset=0, threads=None, progress=True,
                           max_iters=200):
    """:return: (수렴한 전체 보고서, 중복 제거 보고서)"""
    if n_seeds < 1:
        raise OutOfRange(f"n_seeds must be ≥ 1, got {n_seeds}")
    survey = CriticalPointSurvey(problem, FinderConfig(tol=tol, max_iters=max_iters), thread_workers=threads,
                                 progress=progress)
    raw = survey.run_batch(range(seed_offset, seed_offset + n_seeds))
    unique = deduplicate(raw)
    logger.info(f"✅ 임계점 탐색: {n_seeds}개 시드 중 {len(raw)}개 수렴, 서로 다른 점 {len(unique)}개")
    return raw, unique


def find_critical_points(problem: EnsembleProblem, n_seeds, tol=1e-10, seed_offset=0, threads=None, progress=True):
    return survey_critical_points(problem, n_seeds, tol=tol, seed_offset=seed_offset, threads=threads,
                                  progress=progress)[1]


def survey_frame(reports) -> pd.DataFrame:
    rows = [
        {
            "index": i,
            "value": r.value,
            "residual": r.residual,
            "classification": r.classification.value,
            "reconcilable": r.reconcilable,
        }
        for i, r in enumerate(reports)
    ]
    return pd.DataFrame.from_records(rows, columns=["index", "value", "residual", "classification", "reconcilable"])
