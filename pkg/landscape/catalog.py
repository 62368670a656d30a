"""
가환 앙상블의 화해 가능(reconcilable) 임계점 카탈로그

σ_m = ω_m ρ_m 과 O_m 을 동시 대각화하고 우세 블록 순서로 정렬한 뒤,
각 순열 π에 대해 값과 헤시안 고유값을 닫힌 형식으로 계산한다.
"""
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd
from scipy.optimize import linear_sum_assignment

from landscape.engine import ABS_FLOOR, HESS_RTOL, Classification
from landscape.ensemble import EnsembleProblem, validate
from landscape.errors import NotCommuting, ParseError, TooLarge, WrongM
from landscape.matrix_kernel import permutation_matrix, simultaneous_diagonalize
from util.logger import component_logger

logger = component_logger("catalog")

# ------------------------- 상수 -------------------------
DOMINANCE_TOL = 1e-12
EXHAUSTIVE_LIMIT = 8
CHUNK_SIZE = 5040
COLLAPSE_DECIMALS = 10
VALUE_TOL = 1e-10
NOT_TIED_COST = 1e6


# ------------------------- 순열 표기 -------------------------
def parse_permutation(text: str, D: Optional[int] = None):
    """1부터 시작하는 한 줄 표기 "4,2,1,3" → 0부터 시작하는 튜플"""
    try:
        pi = tuple(int(x) - 1 for x in text.split(","))
    except ValueError as e:
        raise ParseError(f"invalid permutation {text!r}", field="unitary") from e
    if sorted(pi) != list(range(len(pi))) or (D is not None and len(pi) != D):
        raise ParseError(f"{text!r} is not a permutation of 1..{D or len(pi)}", field="unitary")
    return pi


def format_permutation(pi) -> str:
    return ",".join(str(int(k) + 1) for k in pi)


# ------------------------- 블록 분해 -------------------------
@dataclass(frozen=True, eq=False)
class BlockDecomposition:
    p_hat: np.ndarray
    q_hat: np.ndarray
    state_blocks: np.ndarray
    operator_blocks: np.ndarray
    g_rho: np.ndarray
    g_o: np.ndarray
    state_multiplicities: tuple
    operator_multiplicities: tuple
    ties_adjusted: bool = False
    cache: dict = field(default_factory=dict, repr=False)

    @property
    def dimension(self) -> int:
        return self.g_rho.shape[1]

    @property
    def num_terms(self) -> int:
        return self.g_rho.shape[0]

    @property
    def blocks_match(self) -> bool:
        return bool(np.array_equal(self.state_blocks, self.operator_blocks))

    def block_of(self):
        """위치 k → 블록 번호 (0부터)"""
        return np.repeat(np.arange(self.num_terms), self.state_blocks)

    def intervals(self):
        """블록 m의 위치 구간 [start, stop)"""
        stops = np.cumsum(self.state_blocks)
        starts = stops - self.state_blocks
        return [range(int(a), int(b)) for a, b in zip(starts, stops)]


def _dominant_owner(G):
    tied = G >= G.max(axis=0, keepdims=True) - DOMINANCE_TOL
    return np.argmax(tied, axis=0), tied


def _match_sizes(owner, tied, targets):
    """동률 열만 다른 동률 블록으로 옮겨 블록 크기를 targets에 맞춘다. 불가능하면 None"""
    D = owner.size
    slots = np.repeat(np.arange(targets.size), targets)
    cost = np.where(tied[slots, :].T, 1.0, NOT_TIED_COST)
    cost[slots[None, :] == owner[:, None]] = 0.0
    rows, cols = linear_sum_assignment(cost)
    if cost[rows, cols].sum() >= NOT_TIED_COST:
        return None
    adjusted = np.empty(D, dtype=int)
    adjusted[rows] = slots[cols]
    return adjusted


def _block_order(G, owner):
    rounded = np.round(G, 12)

    def key(k):
        m = owner[k]
        return (m, -rounded[m, k], *(-rounded[:, k]), k)

    return np.array(sorted(range(G.shape[1]), key=key), dtype=int)


def _multiplicities(G):
    counts = [1]
    for k in range(1, G.shape[1]):
        if np.all(np.abs(G[:, k] - G[:, k - 1]) <= DOMINANCE_TOL):
            counts[-1] += 1
        else:
            counts.append(1)
    return tuple(counts)


def _diagonals(frame, mats):
    return np.real(np.einsum("ij,mjk,ik->mi", frame, mats, frame.conj()))


def decompose(problem: EnsembleProblem) -> BlockDecomposition:
    report = validate(problem)
    if not (report.states_commute and report.operators_commute):
        raise NotCommuting("states and operators must each pairwise commute")

    M = problem.num_terms
    sigma = problem.weights[:, None, None] * problem.states
    P = simultaneous_diagonalize(list(sigma))
    Q = simultaneous_diagonalize(list(problem.operators))
    g_rho = _diagonals(P, sigma)
    g_o = _diagonals(Q, problem.operators)

    state_owner, state_tied = _dominant_owner(g_rho)
    operator_owner, operator_tied = _dominant_owner(g_o)
    state_sizes = np.bincount(state_owner, minlength=M)
    operator_sizes = np.bincount(operator_owner, minlength=M)

    ties_adjusted = False
    if not np.array_equal(state_sizes, operator_sizes):
        adjusted = _match_sizes(state_owner, state_tied, operator_sizes)
        if adjusted is not None:
            state_owner, ties_adjusted = adjusted, True
        else:
            adjusted = _match_sizes(operator_owner, operator_tied, state_sizes)
            if adjusted is not None:
                operator_owner, ties_adjusted = adjusted, True
        if ties_adjusted:
            state_sizes = np.bincount(state_owner, minlength=M)
            operator_sizes = np.bincount(operator_owner, minlength=M)
            logger.info(f"동률 열 재배치로 블록 크기 일치: {state_sizes.tolist()}")
        else:
            logger.debug(f"블록 불일치: 상태 {state_sizes.tolist()} / 연산자 {operator_sizes.tolist()}")

    state_order = _block_order(g_rho, state_owner)
    operator_order = _block_order(g_o, operator_owner)
    g_rho, g_o = g_rho[:, state_order], g_o[:, operator_order]
    g_rho.flags.writeable = False
    g_o.flags.writeable = False

    return BlockDecomposition(
        p_hat=permutation_matrix(state_order) @ P,
        q_hat=permutation_matrix(operator_order) @ Q,
        state_blocks=state_sizes,
        operator_blocks=operator_sizes,
        g_rho=g_rho,
        g_o=g_o,
        state_multiplicities=_multiplicities(g_rho),
        operator_multiplicities=_multiplicities(g_o),
        ties_adjusted=ties_adjusted,
    )


# ------------------------- 닫힌 형식 -------------------------
@dataclass(frozen=True, eq=False)
class ClosedForms:
    """순열 배열 하나에 대한 값, 헤시안 고유값, 국소 극값 판정"""
    permutations: np.ndarray
    values: np.ndarray
    hessian_eigs: np.ndarray
    is_local_max: np.ndarray
    is_local_min: np.ndarray

    def classifications(self):
        labels = np.full(self.values.size, Classification.SADDLE.value, dtype=object)
        labels[self.is_local_min] = Classification.LOCAL_MIN.value
        labels[self.is_local_max] = Classification.LOCAL_MAX.value
        return labels


def _closed_forms_chunk(g_rho, g_o, perms):
    lam = g_rho[:, perms]
    values = np.einsum("mnk,mk->n", lam, g_o)
    iu, ju = np.triu_indices(g_rho.shape[1], 1)
    h = -np.einsum("mnp,mp->np", lam[:, :, iu] - lam[:, :, ju], g_o[:, iu] - g_o[:, ju])
    radius = np.max(np.abs(h), axis=1, initial=0.0)
    tol = np.maximum(HESS_RTOL * radius, ABS_FLOOR)
    is_max = np.all(h <= tol[:, None], axis=1)
    is_min = np.all(h >= -tol[:, None], axis=1)
    return values, h, is_max, is_min


def closed_forms(decomposition: BlockDecomposition, perms, threads=1) -> ClosedForms:
    perms = np.asarray(perms, dtype=int).reshape(-1, decomposition.dimension)
    chunks = [perms[i:i + CHUNK_SIZE] for i in range(0, len(perms), CHUNK_SIZE)] or [perms]

    def work(chunk):
        return _closed_forms_chunk(decomposition.g_rho, decomposition.g_o, chunk)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            parts = list(executor.map(work, chunks))
    else:
        parts = [work(chunk) for chunk in chunks]

    values, h, is_max, is_min = (np.concatenate(p) for p in zip(*parts))
    return ClosedForms(permutations=perms, values=values, hessian_eigs=h, is_local_max=is_max, is_local_min=is_min)


@dataclass(frozen=True, eq=False)
class PermutationPoint:
    pi: tuple
    value: float
    hessian_eigs: np.ndarray
    classification: Classification
    is_local_max: bool
    is_local_min: bool
    frames: tuple = field(repr=False, default=None)

    @property
    def representative(self):
        """Q̂† Π P̂"""
        q_hat, p_hat = self.frames
        return q_hat.conj().T @ permutation_matrix(self.pi) @ p_hat

    def full_spectrum(self):
        """헤시안 행렬 고유값 전체: 0 D개와 h_kk' 각 두 번, 오름차순"""
        D = len(self.pi)
        return np.sort(np.concatenate([np.zeros(D), self.hessian_eigs, self.hessian_eigs]))

    def one_line(self) -> str:
        return format_permutation(self.pi)


def _points_from(decomposition, forms, rows):
    frames = (decomposition.q_hat, decomposition.p_hat)
    points = []
    for i in rows:
        is_max, is_min = bool(forms.is_local_max[i]), bool(forms.is_local_min[i])
        if is_max:
            label = Classification.LOCAL_MAX
        elif is_min:
            label = Classification.LOCAL_MIN
        else:
            label = Classification.SADDLE
        points.append(
            PermutationPoint(
                pi=tuple(int(k) for k in forms.permutations[i]),
                value=float(forms.values[i]),
                hessian_eigs=forms.hessian_eigs[i].copy(),
                classification=label,
                is_local_max=is_max,
                is_local_min=is_min,
                frames=frames,
            )
        )
    return points


def point_at(decomposition: BlockDecomposition, pi) -> PermutationPoint:
    pi = np.asarray(pi, dtype=int)
    if sorted(pi.tolist()) != list(range(decomposition.dimension)):
        raise ParseError(f"{pi.tolist()} is not a permutation of 0..{decomposition.dimension - 1}", field="pi")
    return _points_from(decomposition, closed_forms(decomposition, pi[None, :]), [0])[0]


def max_assignment(decomposition: BlockDecomposition) -> PermutationPoint:
    """
    값이 가장 큰 순열. 값은 W[k, π(k)]의 합 (W = g_Oᵀ g_ρ)이라 최대 가중 할당으로 정확히 구한다.

    F(U)는 이중 확률 행렬 |U_kj|²에 대해 선형이므로 이 값이 U(D) 전체의 최댓값이기도 하다.
    """
    weights = decomposition.g_o.T @ decomposition.g_rho
    rows, cols = linear_sum_assignment(weights, maximize=True)
    pi = np.empty(decomposition.dimension, dtype=int)
    pi[rows] = cols
    return point_at(decomposition, pi)


def all_permutations(D: int):
    if D > EXHAUSTIVE_LIMIT:
        raise TooLarge(f"exhaustive enumeration needs D ≤ {EXHAUSTIVE_LIMIT}, got D = {D}")
    return np.array(list(itertools.permutations(range(D))), dtype=int).reshape(-1, D)


def sampled_permutations(D: int, n: int, seed=0):
    """서로 다른 순열 n개를 균등 비복원 추출, 사전순 정렬"""
    if D <= EXHAUSTIVE_LIMIT and n >= math.factorial(D):
        return all_permutations(D)
    rng = np.random.default_rng(seed)
    seen = set()
    while len(seen) < n:
        seen.add(tuple(rng.permutation(D).tolist()))
    return np.array(sorted(seen), dtype=int)


def enumerate_points(decomposition: BlockDecomposition, mode="exhaustive", n=None, seed=0, collapse=True, threads=1):
    """
    순열별 임계점 카탈로그 (사전순 π)

    :param mode: "exhaustive" (D ≤ 8) 또는 "sampled"
    :param n: sampled 모드의 순열 개수
    :param collapse: 값과 헤시안 고유값 다중집합이 같은 순열은 사전순 첫 번째만 남긴다
    """
    D = decomposition.dimension
    if mode == "exhaustive":
        perms = all_permutations(D)
    elif mode == "sampled":
        if not n or n < 1:
            raise ValueError("sampled mode needs n ≥ 1")
        perms = sampled_permutations(D, n, seed)
    else:
        raise ValueError(f"unknown enumeration mode {mode!r}")

    forms = closed_forms(decomposition, perms, threads=threads)
    rows = range(len(perms))
    if collapse:
        seen, kept = set(), []
        for i in rows:
            key = (
                round(float(forms.values[i]), COLLAPSE_DECIMALS),
                tuple(np.round(np.sort(forms.hessian_eigs[i]), COLLAPSE_DECIMALS).tolist()),
            )
            if key not in seen:
                seen.add(key)
                kept.append(i)
        rows = kept

    points = _points_from(decomposition, forms, rows)
    logger.debug(f"카탈로그 생성: {len(perms)}개 순열 → {len(points)}개 점 ({mode})")
    return points


def catalog_frame(points) -> pd.DataFrame:
    records = []
    for point in points:
        spectrum = point.full_spectrum()
        records.append({
            "pi": point.one_line(),
            "value": point.value,
            "classification": point.classification.value,
            "min_hessian_eig": float(spectrum[0]),
            "max_hessian_eig": float(spectrum[-1]),
        })
    return pd.DataFrame.from_records(
        records, columns=["pi", "value", "classification", "min_hessian_eig", "max_hessian_eig"]
    )


# ------------------------- M = 1 해석해 -------------------------
@dataclass(frozen=True, eq=False)
class M1Solution:
    p: np.ndarray
    q: np.ndarray
    state_multiplicities: tuple
    operator_multiplicities: tuple
    catalog: list
    max_value: float
    min_value: float
    trap_free: bool


def m1_solution(problem: EnsembleProblem, samples=2000) -> M1Solution:
    """M = 1: 모든 국소 최대(최소)가 전역 최대(최소)인지 카탈로그로 확인한다"""
    if problem.num_terms != 1:
        raise WrongM(f"the analytical solution needs M = 1, got M = {problem.num_terms}")

    decomposition = decompose(problem)
    lam = np.sort(decomposition.g_rho[0])[::-1]
    o = np.sort(decomposition.g_o[0])[::-1]
    max_value = float(np.dot(lam, o))
    min_value = float(np.dot(lam, o[::-1]))

    if decomposition.dimension <= EXHAUSTIVE_LIMIT:
        catalog = enumerate_points(decomposition)
    else:
        catalog = enumerate_points(decomposition, mode="sampled", n=samples)

    trap_free = all(abs(p.value - max_value) <= VALUE_TOL for p in catalog if p.is_local_max) and all(
        abs(p.value - min_value) <= VALUE_TOL for p in catalog if p.is_local_min
    )
    if not trap_free:
        logger.warning(f"⚠️ M=1 카탈로그에 전역이 아닌 국소 극값 존재 (max={max_value:.17g}, min={min_value:.17g})")

    return M1Solution(
        p=decomposition.p_hat,
        q=decomposition.q_hat,
        state_multiplicities=decomposition.state_multiplicities,
        operator_multiplicities=decomposition.operator_multiplicities,
        catalog=catalog,
        max_value=max_value,
        min_value=min_value,
        trap_free=trap_free,
    )
