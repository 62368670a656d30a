import numpy as np
import pytest

from landscape.bundled_problems import (
    appendix_distinguishable_problem,
    nonunique_6d_problem,
    opt1_problem,
    povm_4d_problem,
)
from landscape.matrix_kernel import permutation_matrix

# 0부터 시작하는 한 줄 표기
OPT1_U2 = (3, 1, 0, 2)
POVM_U1 = (3, 2, 0, 1)
POVM_U2 = (3, 1, 2, 0)
NONUNIQUE_U1 = (3, 1, 2, 5, 4, 0)
NONUNIQUE_U2 = (3, 2, 4, 5, 1, 0)


def perm_unitary(pi):
    return permutation_matrix(pi).astype(complex)


@pytest.fixture
def opt1():
    """Three-term projective problem with local maxima 0.39 and 0.36"""
    return opt1_problem()


@pytest.fixture
def nonunique():
    return nonunique_6d_problem()


@pytest.fixture
def povm():
    return povm_4d_problem()


@pytest.fixture
def appendix():
    return appendix_distinguishable_problem()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
