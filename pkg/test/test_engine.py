import numpy as np
import pytest

from landscape.engine import (
    Classification,
    classify,
    classify_spectrum,
    commutator_sum,
    critical_residual,
    directional_curvature,
    directional_derivative,
    evaluate,
    gradient_direction,
    hessian_matrix,
    hessian_spectrum,
    term_commutators,
)
from landscape.ensemble import EnsembleProblem
from landscape.errors import DimensionMismatch, NonHermitianDirection, NonUnitary
from landscape.matrix_kernel import direction_from_vector, expi
from landscape.optimizer import random_unitary
from landscape.random_problems import random_hermitian, random_problem
from conftest import OPT1_U2, perm_unitary


def _along(problem, U, A, s):
    return evaluate(problem, expi(A, s) @ U)


def test_opt1_values(opt1):
    """Known values at the identity and the second checkpoint"""
    assert evaluate(opt1, np.eye(4)) == pytest.approx(0.39, abs=1e-12)
    assert evaluate(opt1, perm_unitary(OPT1_U2)) == pytest.approx(0.36, abs=1e-12)


def test_pure_state_on_its_projector():
    psi = np.array([1.0, 1.0j]) / np.sqrt(2)
    rho = np.outer(psi, psi.conj())
    problem = EnsembleProblem.from_terms([(1.0, rho, rho)])
    assert evaluate(problem, np.eye(2)) == pytest.approx(1.0, abs=1e-12)


def test_global_phase_does_not_change_value(opt1):
    U = random_unitary(11, 4)
    assert evaluate(opt1, np.exp(0.83j) * U) == pytest.approx(evaluate(opt1, U), abs=1e-12)


def test_rejects_bad_points(opt1):
    with pytest.raises(NonUnitary):
        evaluate(opt1, 2 * np.eye(4))
    with pytest.raises(DimensionMismatch):
        evaluate(opt1, np.eye(3))


def test_commutator_sum_is_anti_hermitian(rng):
    problem = random_problem(rng, 4, 3)
    C = commutator_sum(problem, random_unitary(5, 4))
    assert np.allclose(C, -C.conj().T, atol=1e-14)


def test_gradient_matches_finite_difference(rng):
    """Ascent direction has derivative ‖A‖² and matches a central difference on 100 random pairs"""
    step = 1e-5
    for i in range(100):
        D, M = 2 + i % 4, 1 + i % 3
        problem = random_problem(rng, D, M)
        U = random_unitary(i, D)
        A = gradient_direction(problem, U, "ascend")

        exact = directional_derivative(problem, U, A)
        assert exact == pytest.approx(np.linalg.norm(A) ** 2, rel=1e-10)
        numeric = (_along(problem, U, A, step) - _along(problem, U, A, -step)) / (2 * step)
        assert numeric == pytest.approx(exact, rel=1e-6, abs=1e-9)

        B = random_hermitian(rng, D)
        numeric = (_along(problem, U, B, step) - _along(problem, U, B, -step)) / (2 * step)
        assert numeric == pytest.approx(directional_derivative(problem, U, B), rel=1e-6, abs=1e-9)


def test_descend_direction_is_negated(rng):
    problem = random_problem(rng, 3, 2)
    U = random_unitary(4, 3)
    assert np.allclose(gradient_direction(problem, U, "descend"), -gradient_direction(problem, U, "ascend"))
    with pytest.raises(ValueError):
        gradient_direction(problem, U, "sideways")


def test_curvature_is_half_second_derivative(rng):
    problem = random_problem(rng, 4, 3)
    U = random_unitary(8, 4)
    A = random_hermitian(rng, 4)

    step = 1e-3
    second = (_along(problem, U, A, step) - 2 * evaluate(problem, U) + _along(problem, U, A, -step)) / step ** 2
    assert directional_curvature(problem, U, A) == pytest.approx(0.5 * second, abs=1e-5)


@pytest.mark.parametrize("at_critical", [True, False])
def test_hessian_quadratic_form_matches_curvature(opt1, rng, at_critical):
    U = perm_unitary(OPT1_U2) if at_critical else random_unitary(21, 4)
    H = hessian_matrix(opt1, U)
    assert H.shape == (16, 16)
    assert np.allclose(H, H.T)

    for _ in range(10):
        v = rng.normal(size=16)
        A = direction_from_vector(v, 4)
        assert v @ H @ v == pytest.approx(directional_curvature(opt1, U, A), abs=1e-9)


def test_hessian_at_identity(opt1):
    spectrum = hessian_spectrum(opt1, np.eye(4))
    assert spectrum[-1] <= 1e-9

    A = np.zeros((4, 4))
    A[0, 3] = A[3, 0] = 1.0
    assert directional_curvature(opt1, np.eye(4), A) == pytest.approx(-0.13 / 3, abs=1e-12)


def test_curvature_vanishes_along_identity(opt1):
    U = random_unitary(3, 4)
    assert directional_curvature(opt1, U, 0.7 * np.eye(4)) == pytest.approx(0.0, abs=1e-14)


def test_curvature_rejects_non_hermitian_direction(opt1):
    A = np.zeros((4, 4))
    A[0, 1] = 1.0
    with pytest.raises(NonHermitianDirection):
        directional_curvature(opt1, np.eye(4), A)


def test_classify_checkpoints(opt1):
    for U, value in ((np.eye(4), 0.39), (perm_unitary(OPT1_U2), 0.36)):
        report = classify(opt1, U)
        assert report.classification == Classification.LOCAL_MAX
        assert report.value == pytest.approx(value, abs=1e-12)
        assert report.reconcilable
        assert report.is_critical


def test_classify_random_point_is_not_critical(opt1):
    report = classify(opt1, random_unitary(17, 4))
    assert report.classification == Classification.NOT_CRITICAL
    assert not report.is_critical
    assert report.residual == pytest.approx(critical_residual(opt1, report.point))
    assert report.to_dict()["classification"] == "NotCritical"


def test_flat_landscape_is_local_max():
    problem = EnsembleProblem.from_terms([(1.0, np.diag([0.3, 0.7]), np.eye(2))])
    report = classify(problem, random_unitary(1, 2))
    assert report.classification == Classification.LOCAL_MAX
    assert np.all(report.hessian_spectrum == 0)


def test_local_max_survives_random_directions(opt1, rng):
    U = perm_unitary((0, 2, 1, 3))
    assert classify(opt1, U).classification == Classification.LOCAL_MAX
    for _ in range(200):
        A = random_hermitian(rng, 4)
        assert directional_curvature(opt1, U, A) <= 1e-12


def test_classify_spectrum_order():
    assert classify_spectrum(np.array([-1.0, 0.0]), 1e-12) == Classification.LOCAL_MAX
    assert classify_spectrum(np.array([0.0, 1.0]), 1e-12) == Classification.LOCAL_MIN
    assert classify_spectrum(np.array([-1.0, 1.0]), 1e-12) == Classification.SADDLE
    assert classify_spectrum(np.zeros(3), 1e-12) == Classification.LOCAL_MAX


def test_term_commutators_are_weighted(opt1):
    U = random_unitary(9, 4)
    norms = term_commutators(opt1, U)
    assert norms.shape == (3,)
    assert np.all(norms >= 0)
    assert np.linalg.norm(commutator_sum(opt1, U)) <= norms.sum() + 1e-12
