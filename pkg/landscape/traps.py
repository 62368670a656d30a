"""
거짓 트랩(false trap) 판정

- 블록 교환 그래프의 순환으로 국소 최대를 판정 (순환 기준)
- M = 3 루프 부등식 검사
- 전수 순열 조사(brute force)로 위 판정들을 교차 검증
- 완전 구별 가능 앙상블, ε-패밀리, M = 2 보완 측정의 특수 사례
"""
import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
import pandas as pd

from landscape.bundled_problems import epsilon_problem
from landscape.catalog import (
    EXHAUSTIVE_LIMIT,
    VALUE_TOL,
    BlockDecomposition,
    PermutationPoint,
    all_permutations,
    closed_forms,
    decompose,
    format_permutation,
    max_assignment,
    point_at,
)
from landscape.ensemble import EnsembleProblem, validate
from landscape.errors import BlockMismatch, NotDistinguishable, NotLocalMax, NotPOVM, WrongM
from util.logger import component_logger

logger = component_logger("traps")

# ------------------------- 상수 -------------------------
INEQUALITY_TOL = 1e-12
POVM_TOL = 1e-9


class TrapMethod(str, Enum):
    CYCLE_CRITERION = "CycleCriterion"
    BRUTE_FORCE = "BruteForce"


def distinct_values(values, tol=VALUE_TOL):
    """정렬 후 tol 이내 값은 하나로 합친다"""
    kept = []
    for v in sorted(float(x) for x in values):
        if not kept or v - kept[-1] > tol:
            kept.append(v)
    return kept


# ------------------------- 교환 그래프 -------------------------
@dataclass(frozen=True)
class ExchangeGraph:
    nodes: tuple
    edges: tuple
    intervals: tuple

    def successors(self, node):
        return [j for i, j in self.edges if i == node]

    def two_cycles(self):
        edge_set = set(self.edges)
        return [(i, j) for i, j in self.edges if i < j and (j, i) in edge_set]

    def find_cycle(self) -> Optional[tuple]:
        """DFS로 찾은 첫 방향 순환 (가장 작은 노드부터 시작하도록 회전)"""
        state = {node: 0 for node in self.nodes}
        stack = []

        def visit(node):
            state[node] = 1
            stack.append(node)
            for nxt in self.successors(node):
                if state[nxt] == 1:
                    return stack[stack.index(nxt):]
                if state[nxt] == 0:
                    found = visit(nxt)
                    if found:
                        return found
            stack.pop()
            state[node] = 2
            return None

        for node in self.nodes:
            if state[node] == 0:
                cycle = visit(node)
                if cycle:
                    start = cycle.index(min(cycle))
                    return tuple(cycle[start:] + cycle[:start])
        return None


def exchange_graph(pi, decomposition: BlockDecomposition) -> ExchangeGraph:
    """위치 k로 옮겨 온 원소의 원래 블록 → k의 블록 간선 (블록 번호는 1부터)"""
    if not decomposition.blocks_match:
        raise BlockMismatch(
            f"state blocks {decomposition.state_blocks.tolist()} differ from "
            f"operator blocks {decomposition.operator_blocks.tolist()}"
        )
    block = decomposition.block_of()
    pi = np.asarray(pi, dtype=int)
    edges = sorted({(int(block[pi[k]]) + 1, int(block[k]) + 1) for k in range(pi.size) if block[pi[k]] != block[k]})
    intervals = tuple((r.start + 1, r.stop) for r in decomposition.intervals())
    return ExchangeGraph(nodes=tuple(range(1, decomposition.num_terms + 1)), edges=tuple(edges), intervals=intervals)


# ------------------------- 트랩 인증 -------------------------
@dataclass(frozen=True)
class TrapCertificate:
    is_false_trap: bool
    witness_cycle: Optional[tuple]
    global_value: float
    point_value: float
    method: TrapMethod

    def to_dict(self):
        return {
            "is_false_trap": self.is_false_trap,
            "witness_cycle": list(self.witness_cycle) if self.witness_cycle else None,
            "global_value": self.global_value,
            "point_value": self.point_value,
            "method": self.method.value,
        }


def global_max_value(decomposition: BlockDecomposition) -> float:
    """최대 가중 할당으로 구한 전역 최댓값 (분해 객체에 캐시)"""
    if "global_max" not in decomposition.cache:
        decomposition.cache["global_max"] = max_assignment(decomposition).value
    return decomposition.cache["global_max"]


def certify_trap(point: PermutationPoint, decomposition: BlockDecomposition, method=TrapMethod.CYCLE_CRITERION):
    if not point.is_local_max:
        raise NotLocalMax(f"permutation {format_permutation(point.pi)} is {point.classification.value}")

    global_value = global_max_value(decomposition)
    below_global = point.value < global_value - VALUE_TOL

    if method == TrapMethod.BRUTE_FORCE:
        cycle = exchange_graph(point.pi, decomposition).find_cycle() if decomposition.blocks_match else None
        return TrapCertificate(below_global, cycle, global_value, point.value, method)

    graph = exchange_graph(point.pi, decomposition)
    if graph.two_cycles():
        logger.warning(f"⚠️ 국소 최대 {format_permutation(point.pi)}의 교환 그래프에 2-순환 존재: {graph.two_cycles()}")
    cycle = graph.find_cycle()
    if cycle is not None and not below_global:
        logger.warning(
            f"⚠️ 국소 최대 {format_permutation(point.pi)}에 순환 {cycle}이 있지만 값이 전역 최대와 같음: {point.value:.17g}"
        )
    return TrapCertificate(
        is_false_trap=bool(cycle is not None and below_global),
        witness_cycle=cycle,
        global_value=global_value,
        point_value=point.value,
        method=TrapMethod.CYCLE_CRITERION,
    )


# ------------------------- M = 3 루프 부등식 -------------------------
@dataclass(frozen=True)
class Corollary2Result:
    holds: bool
    loop: Optional[tuple] = None
    positions: Optional[tuple] = None
    loss: float = 0.0


def _argmin_set(G, m, nxt, interval):
    gaps = {k: G[m, k] - G[nxt, k] for k in interval}
    lowest = min(gaps.values())
    return [k for k, gap in gaps.items() if gap <= lowest + INEQUALITY_TOL]


def corollary2_check(decomposition: BlockDecomposition) -> Corollary2Result:
    """
    루프 (m₁, m₂, m₃)의 두 방향을 모두 검사한다. 각 블록에서 다음 루프 블록과의 격차가
    최소인 위치 k_i를 고르고, 세 부등식과 양의 루프 손실이 모두 성립하면 True
    """
    if decomposition.num_terms != 3:
        raise WrongM(f"the loop inequalities need M = 3, got M = {decomposition.num_terms}")
    if not decomposition.blocks_match:
        raise BlockMismatch("the loop inequalities need matching state and operator blocks")

    G = decomposition.g_rho
    intervals = decomposition.intervals()
    for loop in ((0, 1, 2), (0, 2, 1)):
        if any(len(intervals[m]) == 0 for m in loop):
            continue
        nxt = [loop[(i + 1) % 3] for i in range(3)]
        candidates = [_argmin_set(G, loop[i], nxt[i], intervals[loop[i]]) for i in range(3)]
        for ks in itertools.product(*candidates):
            gaps = [G[loop[i], ks[i]] - G[nxt[i], ks[i]] for i in range(3)]
            satisfied = all(
                gaps[i] <= G[loop[i], ks[i - 1]] - G[nxt[i], ks[i - 1]] + INEQUALITY_TOL for i in range(3)
            )
            loss = float(sum(gaps))
            if satisfied and loss > VALUE_TOL:
                return Corollary2Result(
                    holds=True,
                    loop=tuple(m + 1 for m in loop),
                    positions=tuple(int(k) + 1 for k in ks),
                    loss=loss,
                )
    return Corollary2Result(holds=False)


# ------------------------- 전수 조사 -------------------------
@dataclass(frozen=True, eq=False)
class TrapCensus:
    global_max: float
    global_min: float
    max_trap_values: list
    min_trap_values: list
    ft_values: list
    permutations: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    classifications: np.ndarray = field(repr=False)
    is_local_max: np.ndarray = field(repr=False)
    is_local_min: np.ndarray = field(repr=False)
    max_traps: np.ndarray = field(repr=False)
    min_traps: np.ndarray = field(repr=False)

    @property
    def has_traps(self) -> bool:
        return bool(self.ft_values)

    def records(self) -> pd.DataFrame:
        """값·분류별 개수 (value, count, classification, reconcilable, ft)"""
        frame = pd.DataFrame({
            "value": np.round(self.values, 12),
            "classification": self.classifications,
            "ft": self.max_traps | self.min_traps,
        })
        grouped = (
            frame.groupby(["value", "classification", "ft"], sort=True)
            .size()
            .reset_index(name="count")
        )
        grouped["reconcilable"] = True
        return grouped[["value", "count", "classification", "reconcilable", "ft"]]

    def to_dict(self):
        return {
            "global_max": self.global_max,
            "global_min": self.global_min,
            "max_trap_values": self.max_trap_values,
            "min_trap_values": self.min_trap_values,
            "ft_values": self.ft_values,
            "permutations": int(len(self.values)),
        }


def brute_force_survey(problem: EnsembleProblem, decomposition=None, threads=1) -> TrapCensus:
    decomposition = decomposition or decompose(problem)
    forms = closed_forms(decomposition, all_permutations(decomposition.dimension), threads=threads)
    values = forms.values
    global_max, global_min = float(values.max()), float(values.min())

    max_traps = forms.is_local_max & (values < global_max - VALUE_TOL)
    min_traps = forms.is_local_min & (values > global_min + VALUE_TOL)
    max_trap_values = distinct_values(values[max_traps])
    min_trap_values = distinct_values(values[min_traps])

    logger.debug(
        f"전수 조사: {values.size}개 순열, 최대 {global_max:.17g}, 최소 {global_min:.17g}, "
        f"트랩 값 {len(max_trap_values)}+{len(min_trap_values)}개"
    )
    return TrapCensus(
        global_max=global_max,
        global_min=global_min,
        max_trap_values=max_trap_values,
        min_trap_values=min_trap_values,
        ft_values=distinct_values(max_trap_values + min_trap_values),
        permutations=forms.permutations,
        values=values,
        classifications=forms.classifications(),
        is_local_max=forms.is_local_max,
        is_local_min=forms.is_local_min,
        max_traps=max_traps,
        min_traps=min_traps,
    )


def false_trap_points(census: TrapCensus, decomposition: BlockDecomposition):
    """최대화 거짓 트랩 순열마다 (점, 인증서). 블록이 다르면 전수 조사 라벨로 인증한다"""
    method = TrapMethod.CYCLE_CRITERION if decomposition.blocks_match else TrapMethod.BRUTE_FORCE
    found = []
    for i in np.flatnonzero(census.max_traps):
        point = point_at(decomposition, census.permutations[i])
        found.append((point, certify_trap(point, decomposition, method=method)))
    return found


# ------------------------- 완전 구별 가능 -------------------------
@dataclass(frozen=True, eq=False)
class Theorem4Report:
    passed: bool
    census: TrapCensus
    counterexample: Optional[dict] = None


def theorem4_check(problem: EnsembleProblem) -> Theorem4Report:
    report = validate(problem)
    if not (report.states_distinguishable and report.operators_distinguishable):
        raise NotDistinguishable("states and operators must both be perfectly distinguishable")

    census = brute_force_survey(problem)
    counterexample = None
    for kind, mask in (("max", census.max_traps), ("min", census.min_traps)):
        hits = np.flatnonzero(mask)
        if hits.size:
            i = hits[0]
            counterexample = {
                "kind": kind,
                "pi": format_permutation(census.permutations[i]),
                "value": float(census.values[i]),
            }
            logger.warning(f"⚠️ 구별 가능 앙상블에서 거짓 트랩 발견: {counterexample}")
            break
    return Theorem4Report(passed=counterexample is None, census=census, counterexample=counterexample)


# ------------------------- ε-패밀리 -------------------------
@dataclass(frozen=True, eq=False)
class EpsilonFamily:
    eps: tuple
    problem: EnsembleProblem
    epsilon: float
    predicted_max: float
    predicts_traps: bool


def epsilon_family(eps) -> EpsilonFamily:
    problem = epsilon_problem(eps)
    eps = tuple(float(e) for e in eps)
    total = sum(eps)
    loop_conditions = all(eps[i] + 2 * eps[(i + 1) % 3] >= 1 - INEQUALITY_TOL for i in range(3))
    return EpsilonFamily(
        eps=eps,
        problem=problem,
        epsilon=total / 3,
        predicted_max=1 - total / 3,
        predicts_traps=bool(loop_conditions and total < 1.5 - INEQUALITY_TOL),
    )


def epsilon_sweep(grid=None) -> pd.DataFrame:
    grid = [i / 10 for i in range(6)] if grid is None else list(grid)
    rows = []
    for eps in itertools.product(grid, repeat=3):
        family = epsilon_family(eps)
        decomposition = decompose(family.problem)
        census = brute_force_survey(family.problem, decomposition)
        rows.append({
            "eps1": eps[0],
            "eps2": eps[1],
            "eps3": eps[2],
            "epsilon": family.epsilon,
            "predicted_max": family.predicted_max,
            "census_max": census.global_max,
            "predicts_traps": family.predicts_traps,
            "census_traps": bool(census.max_trap_values),
            "corollary2": corollary2_check(decomposition).holds if decomposition.blocks_match else False,
        })
    logger.info(f"ε 스윕 완료: {len(rows)}개 격자점")
    return pd.DataFrame.from_records(rows)


# ------------------------- M = 2 보완 측정 -------------------------
@dataclass(frozen=True)
class Corollary1Report:
    predicted_max: float
    predicted_min: float
    trap_free: bool
    verified_by_survey: bool
    survey_max: Optional[float] = None
    survey_min: Optional[float] = None


def corollary1_check(problem: EnsembleProblem) -> Corollary1Report:
    """
    O₁ + O₂ = I 이면 F(U) = Tr[U ϱ U† O₁] + ω₂, ϱ = ω₁ρ₁ − ω₂ρ₂ 인 단일 항 지형이 된다
    """
    if problem.num_terms != 2:
        raise WrongM(f"the complementary-pair reduction needs M = 2, got M = {problem.num_terms}")
    O1, O2 = problem.operators
    if np.linalg.norm(O1 + O2 - np.eye(problem.dimension)) >= POVM_TOL:
        raise NotPOVM("operators must satisfy O₁ + O₂ = I")

    w1, w2 = problem.weights
    reduced = w1 * problem.states[0] - w2 * problem.states[1]
    lam = np.sort(np.linalg.eigvalsh((reduced + reduced.conj().T) / 2))[::-1]
    o = np.sort(np.linalg.eigvalsh((O1 + O1.conj().T) / 2))[::-1]
    predicted_max = float(np.dot(lam, o) + w2)
    predicted_min = float(np.dot(lam, o[::-1]) + w2)

    report = validate(problem)
    if not (report.states_commute and report.operators_commute and problem.dimension <= EXHAUSTIVE_LIMIT):
        return Corollary1Report(predicted_max, predicted_min, trap_free=True, verified_by_survey=False)

    census = brute_force_survey(problem)
    matches = (
        abs(census.global_max - predicted_max) <= VALUE_TOL and abs(census.global_min - predicted_min) <= VALUE_TOL
    )
    return Corollary1Report(
        predicted_max=predicted_max,
        predicted_min=predicted_min,
        trap_free=bool(matches and not census.has_traps),
        verified_by_survey=True,
        survey_max=census.global_max,
        survey_min=census.global_min,
    )
