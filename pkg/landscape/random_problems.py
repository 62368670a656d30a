"""
속성 테스트용 무작위 앙상블 생성기. 모든 함수는 numpy Generator를 받는다.
"""
import numpy as np

from landscape.ensemble import EnsembleProblem


def random_density(rng: np.random.Generator, D: int, rank=None):
    rank = rank or D
    G = rng.normal(size=(D, rank)) + 1j * rng.normal(size=(D, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_hermitian(rng: np.random.Generator, D: int):
    G = rng.normal(size=(D, D)) + 1j * rng.normal(size=(D, D))
    return (G + G.conj().T) / 2


def random_weights(rng: np.random.Generator, M: int):
    weights = rng.uniform(0.2, 1.0, size=M)
    return weights / weights.sum()


def random_problem(rng: np.random.Generator, D: int, M: int) -> EnsembleProblem:
    """일반(비가환) 앙상블"""
    terms = [(w, random_density(rng, D), random_hermitian(rng, D)) for w in random_weights(rng, M)]
    return EnsembleProblem.from_terms(terms, name="random")


def random_m1_problem(rng: np.random.Generator, D: int, diagonal=True) -> EnsembleProblem:
    """M = 1, 서로 다른 고유값을 갖는 ρ와 O"""
    rho = rng.dirichlet(np.ones(D))
    o = rng.normal(size=D)
    if not diagonal:
        P = np.linalg.qr(rng.normal(size=(D, D)) + 1j * rng.normal(size=(D, D)))[0]
        Q = np.linalg.qr(rng.normal(size=(D, D)) + 1j * rng.normal(size=(D, D)))[0]
        return EnsembleProblem.from_terms(
            [(1.0, P @ np.diag(rho) @ P.conj().T, Q @ np.diag(o) @ Q.conj().T)], name="random-m1"
        )
    return EnsembleProblem.from_terms([(1.0, np.diag(rho), np.diag(o))], name="random-m1")


def _random_block_sizes(rng, D, M):
    """합이 D인 양의 정수 M개"""
    cuts = np.sort(rng.choice(np.arange(1, D), size=M - 1, replace=False))
    return np.diff(np.concatenate(([0], cuts, [D])))


def random_block_matched_problem(rng: np.random.Generator, D: int, M: int, shuffle=True) -> EnsembleProblem:
    """
    가환 대각 앙상블: σ_m이 블록 m에서 엄격히 우세하고 O_m은 같은 크기 블록의 지시 사영자

    :param shuffle: True면 상태 위치와 연산자 위치를 서로 다른 순열로 섞는다
    """
    sizes = _random_block_sizes(rng, D, M)
    owner = np.repeat(np.arange(M), sizes)

    gram = rng.uniform(0.05, 1.0, size=(M, D))
    gram[owner, np.arange(D)] = gram.max(axis=0) + rng.uniform(0.1, 1.0, size=D)
    operators = (owner[None, :] == np.arange(M)[:, None]).astype(float)

    if shuffle:
        gram = gram[:, rng.permutation(D)]
        operators = operators[:, rng.permutation(D)]

    weights = gram.sum(axis=1)
    states = gram / weights[:, None]
    weights = weights / weights.sum()
    terms = [(w, np.diag(s), np.diag(o)) for w, s, o in zip(weights, states, operators)]
    return EnsembleProblem.from_terms(terms, name="random-block-matched")


def random_distinguishable_problem(rng: np.random.Generator, D: int, M: int) -> EnsembleProblem:
    """상태끼리, 연산자끼리 지지 집합이 서로소인 가환 대각 앙상블"""
    state_owner = np.repeat(np.arange(M), _random_block_sizes(rng, D, M))[rng.permutation(D)]
    operator_owner = np.repeat(np.arange(M), _random_block_sizes(rng, D, M))[rng.permutation(D)]

    terms = []
    for m, w in enumerate(random_weights(rng, M)):
        rho = np.where(state_owner == m, rng.uniform(0.1, 1.0, size=D), 0.0)
        o = np.where(operator_owner == m, rng.uniform(0.1, 1.0, size=D), 0.0)
        terms.append((w, np.diag(rho / rho.sum()), np.diag(o)))
    return EnsembleProblem.from_terms(terms, name="random-distinguishable")


def random_commuting_problem(rng: np.random.Generator, D: int, M: int) -> EnsembleProblem:
    """가환 대각 앙상블, 연산자는 [0, 1) 균등 대각 (사영이 아니고 블록 크기도 보장하지 않음)"""
    terms = [
        (w, np.diag(rng.dirichlet(np.ones(D))), np.diag(rng.uniform(0.0, 1.0, size=D)))
        for w in random_weights(rng, M)
    ]
    return EnsembleProblem.from_terms(terms, name="random-commuting")
