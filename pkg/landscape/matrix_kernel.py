"""
복소 행렬 기본 연산: 에르미트 고유분해, e^{isA}, 크로네커 곱, 벡터화, 중복 행렬.

벡터화는 전부 열 우선(column-major) 규약을 따른다: vec(XYZ) = (Z^T ⊗ X) vec(Y).
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from landscape.errors import NonHermitianInput, NotCommuting, SymmetryViolation

# ------------------------- 허용 오차 -------------------------
SYM_RTOL = 1e-12
UNI_RTOL = 1e-10
PHASE_TOL = 1e-12
DIAG_TOL = 1e-10


def sym_tolerance(X) -> float:
    return SYM_RTOL * max(1.0, float(np.linalg.norm(X)))


def _is_square(X) -> bool:
    return X.ndim == 2 and X.shape[0] == X.shape[1]


def is_hermitian(X) -> bool:
    X = np.asarray(X)
    if not _is_square(X):
        return False
    return float(np.max(np.abs(X - X.conj().T), initial=0.0)) < sym_tolerance(X)


def is_unitary(U) -> bool:
    U = np.asarray(U)
    if not _is_square(U):
        return False
    D = U.shape[0]
    drift = np.linalg.norm(U.conj().T @ U - np.eye(D))
    return drift < UNI_RTOL * np.sqrt(D)


def _fix_phases(V):
    """각 고유벡터의 첫 번째 0이 아닌 성분을 양의 실수로 맞춘다."""
    V = V.copy()
    for j in range(V.shape[1]):
        column = V[:, j]
        nonzero = np.flatnonzero(np.abs(column) > PHASE_TOL)
        if nonzero.size:
            lead = column[nonzero[0]]
            V[:, j] = column * (np.abs(lead) / lead)
    return V


def hermitian_eig(X):
    """
    에르미트 행렬의 고유분해

    :return: (내림차순 고유값, 열이 고유벡터인 유니타리 행렬)
    """
    X = np.asarray(X, dtype=complex)
    if not is_hermitian(X):
        raise NonHermitianInput(f"matrix of shape {X.shape} is not Hermitian within {sym_tolerance(X):.3g}")
    values, vectors = np.linalg.eigh((X + X.conj().T) / 2)
    return values[::-1].copy(), _fix_phases(vectors[:, ::-1])


def expi(A, s=1.0):
    """e^{isA} (고유분해 기반이라 반올림 오차 내에서 정확히 유니타리)"""
    values, V = hermitian_eig(A)
    return (V * np.exp(1j * s * values)) @ V.conj().T


def psd_sqrt(X):
    values, V = hermitian_eig(X)
    return (V * np.sqrt(np.clip(values, 0.0, None))) @ V.conj().T


def kron(X, Y):
    return np.kron(X, Y)


# ------------------------- 벡터화 -------------------------
def vec(X):
    return np.asarray(X).reshape(-1, order="F")


def unvec(v, D):
    return np.asarray(v).reshape((D, D), order="F")


def _lower_indices(D, strict):
    # triu_indices를 전치해서 읽으면 하삼각 원소가 열 단위 순서로 나온다
    cols, rows = np.triu_indices(D, 1 if strict else 0)
    return rows, cols


def _as_real(X, label):
    X = np.asarray(X)
    if not _is_square(X):
        raise SymmetryViolation(f"{label} requires a square matrix, got shape {X.shape}")
    if np.iscomplexobj(X):
        if float(np.max(np.abs(X.imag), initial=0.0)) >= sym_tolerance(X):
            raise SymmetryViolation(f"{label} requires a real matrix")
        X = X.real
    return X.astype(float)


def vech_sym(X):
    X = _as_real(X, "vech_sym")
    if float(np.max(np.abs(X - X.T), initial=0.0)) >= sym_tolerance(X):
        raise SymmetryViolation("vech_sym requires a symmetric matrix")
    rows, cols = _lower_indices(X.shape[0], strict=False)
    return X[rows, cols]


def vech_asym(X):
    X = _as_real(X, "vech_asym")
    if float(np.max(np.abs(X + X.T), initial=0.0)) >= sym_tolerance(X):
        raise SymmetryViolation("vech_asym requires an antisymmetric matrix")
    rows, cols = _lower_indices(X.shape[0], strict=True)
    return X[rows, cols]


@dataclass(frozen=True, eq=False)
class DuplicationMatrices:
    d_sy: np.ndarray
    d_ay: np.ndarray
    dimension: int


@lru_cache(maxsize=16)
def duplication_matrices(D: int) -> DuplicationMatrices:
    rows, cols = _lower_indices(D, strict=False)
    d_sy = np.zeros((D * D, rows.size))
    index = np.arange(rows.size)
    d_sy[cols * D + rows, index] = 1.0
    d_sy[rows * D + cols, index] = 1.0

    rows, cols = _lower_indices(D, strict=True)
    d_ay = np.zeros((D * D, rows.size))
    index = np.arange(rows.size)
    d_ay[cols * D + rows, index] = 1.0
    d_ay[rows * D + cols, index] = -1.0

    d_sy.flags.writeable = False
    d_ay.flags.writeable = False
    return DuplicationMatrices(d_sy=d_sy, d_ay=d_ay, dimension=D)


def direction_from_vector(v, D):
    """(vech_sym(A_re), vech_asym(A_im)) 좌표를 에르미트 행렬 A로 되돌린다."""
    dup = duplication_matrices(D)
    v = np.asarray(v, dtype=float)
    n_sym = dup.d_sy.shape[1]
    real = unvec(dup.d_sy @ v[:n_sym], D)
    imag = unvec(dup.d_ay @ v[n_sym:], D)
    return real + 1j * imag


@lru_cache(maxsize=16)
def _basis_cache(D):
    basis = []
    for k in range(D):
        E = np.zeros((D, D), dtype=complex)
        E[k, k] = 1.0
        basis.append(E)
    for k in range(D):
        for l in range(k + 1, D):
            S = np.zeros((D, D), dtype=complex)
            S[k, l] = S[l, k] = 1 / np.sqrt(2)
            basis.append(S)
            Y = np.zeros((D, D), dtype=complex)
            Y[k, l] = -1j / np.sqrt(2)
            Y[l, k] = 1j / np.sqrt(2)
            basis.append(Y)
    stacked = np.array(basis)
    stacked.flags.writeable = False
    return stacked


def hermitian_basis(D):
    """프로베니우스 정규직교 에르미트 기저 D²개, shape (D², D, D)"""
    return _basis_cache(D)


def permutation_matrix(pi):
    """Σ_k |k⟩⟨pi[k]| : 위치 k에 pi[k] 위치의 원소를 가져온다."""
    pi = np.asarray(pi, dtype=int)
    P = np.zeros((pi.size, pi.size))
    P[np.arange(pi.size), pi] = 1.0
    return P


# ------------------------- 동시 대각화 -------------------------
def _is_diagonal(X, tol):
    off = X - np.diag(np.diag(X))
    return float(np.max(np.abs(off), initial=0.0)) < tol


def _refine(vectors, mats, depth, tol):
    if depth == len(mats) or vectors.shape[1] == 1:
        return vectors
    restricted = vectors.conj().T @ mats[depth] @ vectors
    restricted = (restricted + restricted.conj().T) / 2
    values, W = hermitian_eig(restricted)
    vectors = vectors @ W

    groups = []
    start = 0
    for k in range(1, len(values) + 1):
        if k == len(values) or abs(values[k] - values[start]) > tol * max(1.0, abs(values[start])):
            groups.append(_refine(vectors[:, start:k], mats, depth + 1, tol))
            start = k
    return np.hstack(groups)


def simultaneous_diagonalize(mats, tol=DIAG_TOL):
    """
    서로 교환하는 에르미트 행렬 집합을 동시에 대각화하는 유니타리 P 반환 (P X P† 대각).
    모든 입력이 이미 대각이면 단위 행렬을 그대로 쓴다.
    """
    mats = [np.asarray(X, dtype=complex) for X in mats]
    D = mats[0].shape[0]
    if all(_is_diagonal(X, tol) for X in mats):
        return np.eye(D, dtype=complex)

    vectors = _refine(np.eye(D, dtype=complex), mats, 0, tol)
    P = vectors.conj().T
    for X in mats:
        if not _is_diagonal(P @ X @ P.conj().T, tol * max(1.0, float(np.linalg.norm(X)))):
            raise NotCommuting("matrices cannot be simultaneously diagonalized")
    return P
