import json

import numpy as np
import pytest

from landscape.bundled_problems import BUNDLED, bundled_names, bundled_problem, resolve_problem
from landscape.engine import evaluate
from landscape.ensemble import (
    EnsembleProblem,
    dilated_unitary,
    load_matrix,
    load_problem,
    naimark_dilate,
    problem_to_dict,
    rescale_to_povm,
    save_problem,
    validate,
)
from landscape.errors import (
    ConstantOperator,
    DimensionMismatch,
    InvalidState,
    NonHermitianInput,
    NotPOVM,
    ParseError,
)
from landscape.matrix_kernel import is_unitary
from landscape.optimizer import random_unitary
from landscape.random_problems import random_problem
from conftest import POVM_U1, POVM_U2, perm_unitary


def test_validate_opt1(opt1):
    """opt1 is a projective measurement over commuting states"""
    report = validate(opt1)

    assert report.projective
    assert report.povm
    assert report.states_commute
    assert report.operators_commute
    assert report.state_gram[0, 1] == pytest.approx(0.3275, abs=1e-12)
    assert not report.states_distinguishable
    assert report.operators_distinguishable
    assert report.epsilon is None


def test_validate_distinguishable(appendix):
    report = validate(appendix)
    assert report.states_distinguishable
    assert report.operators_distinguishable
    assert not report.povm


def test_validate_povm(povm):
    report = validate(povm)
    assert report.povm
    assert not report.projective


def test_grams_are_symmetric_with_purity_diagonal(opt1):
    report = validate(opt1)
    assert np.allclose(report.state_gram, report.state_gram.T)
    purities = [np.trace(rho @ rho).real for rho in opt1.states]
    assert np.allclose(np.diag(report.state_gram), purities)


def test_structure_flags_stable_under_joint_conjugation(opt1):
    V = random_unitary(7, 4)
    rotated = EnsembleProblem(
        opt1.weights,
        V @ opt1.states @ V.conj().T,
        V @ opt1.operators @ V.conj().T,
    )
    before, after = validate(opt1), validate(rotated)

    assert after.states_commute == before.states_commute
    assert after.projective == before.projective
    assert np.allclose(after.state_gram, before.state_gram, atol=1e-10)
    assert np.allclose(after.operator_gram, before.operator_gram, atol=1e-10)


def test_problem_rejects_bad_terms():
    rho = np.diag([0.5, 0.5])
    O = np.diag([1.0, 0.0])

    with pytest.raises(InvalidState):
        EnsembleProblem.from_terms([(-0.1, rho, O)])
    with pytest.raises(InvalidState):
        EnsembleProblem.from_terms([(1.0, np.diag([0.7, 0.5]), O)])
    with pytest.raises(InvalidState):
        EnsembleProblem.from_terms([(1.0, np.diag([1.2, -0.2]), O)])
    with pytest.raises(NonHermitianInput):
        EnsembleProblem.from_terms([(1.0, rho, np.array([[0, 1], [0, 0]]))])
    with pytest.raises(DimensionMismatch):
        EnsembleProblem.from_terms([(1.0, rho, O), (1.0, np.eye(3) / 3, np.eye(3))])


def test_problem_is_immutable(opt1):
    with pytest.raises(ValueError):
        opt1.weights[0] = 1.0


def test_rescale_simple_case():
    problem = EnsembleProblem.from_terms([(1.0, np.diag([0.6, 0.4]), np.diag([2.0, 0.0]))])
    rescaled, record = rescale_to_povm(problem)

    assert np.allclose(rescaled.operators[0], np.diag([1.0, 0.0]))
    assert record.weights[0] == pytest.approx(2.0)
    assert record.alpha == pytest.approx(0.0)


def test_rescale_preserves_landscape(rng):
    """F_old(U) = F_new(U) + alpha"""
    problem = random_problem(rng, 3, 2)
    rescaled, record = rescale_to_povm(problem)
    for O in rescaled.operators:
        eig = np.linalg.eigvalsh(O)
        assert eig.min() >= -1e-12 and eig.max() <= 1 + 1e-12

    points = [random_unitary(seed, 3) for seed in range(50)]
    old = np.array([evaluate(problem, U) for U in points])
    new = np.array([evaluate(rescaled, U) for U in points])
    assert np.allclose(old, new + record.alpha, atol=1e-10)


def test_rescale_with_completion():
    problem = EnsembleProblem.from_terms([
        (0.5, np.diag([0.7, 0.2, 0.1]), np.diag([2.0, 0.0, 0.0])),
        (0.5, np.diag([0.1, 0.3, 0.6]), np.diag([0.0, 0.0, 3.0])),
    ])
    rescaled, record = rescale_to_povm(problem, complete=True)

    assert record.completed
    assert rescaled.num_terms == 3
    assert np.allclose(rescaled.operators[2], np.diag([0.0, 1.0, 0.0]))
    assert validate(rescaled).povm
    for seed in range(20):
        U = random_unitary(seed, 3)
        assert evaluate(problem, U) == pytest.approx(evaluate(rescaled, U) + record.alpha, abs=1e-10)


def test_rescale_rejects_constant_operator():
    problem = EnsembleProblem.from_terms([(1.0, np.diag([0.5, 0.5]), 3 * np.eye(2))])
    with pytest.raises(ConstantOperator):
        rescale_to_povm(problem)


def test_naimark_dilation_povm_example(povm):
    """The dilated projective problem reproduces F(U1) = 0.4 and F(U2) = 0.3625"""
    dilated, record = naimark_dilate(povm)

    assert dilated.dimension == 12
    assert is_unitary(record.isometry)
    assert validate(dilated).projective
    for pi, expected in ((POVM_U1, 0.4), (POVM_U2, 0.3625)):
        U = perm_unitary(pi)
        assert evaluate(povm, U) == pytest.approx(expected, abs=1e-12)
        assert evaluate(dilated, dilated_unitary(record, U)) == pytest.approx(expected, abs=1e-12)


def test_naimark_dilation_equality_for_random_points(povm):
    dilated, record = naimark_dilate(povm)
    for seed in range(20):
        U = random_unitary(seed, 4)
        assert evaluate(dilated, dilated_unitary(record, U)) == pytest.approx(evaluate(povm, U), abs=1e-9)


def test_naimark_dilation_projective_input(opt1):
    dilated, record = naimark_dilate(opt1)
    U = random_unitary(3, 4)
    assert evaluate(dilated, dilated_unitary(record, U)) == pytest.approx(evaluate(opt1, U), abs=1e-12)


def test_naimark_dilation_rejects_non_povm(appendix):
    with pytest.raises(NotPOVM):
        naimark_dilate(appendix)


def test_save_load_round_trip(opt1, tmp_path):
    path = tmp_path / "opt1.json"
    save_problem(opt1, path)
    loaded = load_problem(path)

    assert np.array_equal(loaded.weights, opt1.weights)
    assert np.array_equal(loaded.states, opt1.states)
    assert np.array_equal(loaded.operators, opt1.operators)
    assert loaded.name == "opt1"
    assert loaded.metadata["checkpoints"]["U2"] == "perm:4,2,1,3"


def test_load_reports_json_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "dimension": 2,\n  "terms": [\n}\n', encoding="utf-8")
    with pytest.raises(ParseError) as e:
        load_problem(path)
    assert e.value.line == 4
    assert e.value.to_dict()["error"] == "ParseError"


def test_load_reports_field(opt1, tmp_path):
    data = problem_to_dict(opt1)
    data["terms"][0]["state"][1][2] = [0.0]
    path = tmp_path / "field.json"
    path.write_text(json.dumps(data), encoding="utf-8")

    with pytest.raises(ParseError) as e:
        load_problem(path)
    assert e.value.field == "terms[0].state[1][2]"


def test_load_rejects_negative_weight(opt1, tmp_path):
    data = problem_to_dict(opt1)
    data["terms"][0]["weight"] = -0.1
    path = tmp_path / "negative.json"
    path.write_text(json.dumps(data), encoding="utf-8")

    with pytest.raises(InvalidState):
        load_problem(path)


def test_load_rejects_non_finite(opt1, tmp_path):
    data = problem_to_dict(opt1)
    path = tmp_path / "nan.json"
    path.write_text(json.dumps(data).replace("0.4,", "NaN,", 1), encoding="utf-8")

    with pytest.raises(ParseError):
        load_problem(path)


def test_load_matrix(tmp_path):
    path = tmp_path / "u.json"
    path.write_text(json.dumps({"matrix": [[[0, 0], [1, 0]], [[1, 0], [0, 0]]]}), encoding="utf-8")
    assert np.array_equal(load_matrix(path), np.array([[0, 1], [1, 0]], dtype=complex))


@pytest.mark.parametrize("name", bundled_names())
def test_bundled_files_match_builders(name):
    """Every shipped problem file loads and equals its in-code definition"""
    loaded = bundled_problem(name)
    built = BUNDLED[name]()
    assert np.array_equal(loaded.weights, built.weights)
    assert np.array_equal(loaded.states, built.states)
    assert np.array_equal(loaded.operators, built.operators)


def test_resolve_problem_accepts_prefixed_names(tmp_path, opt1):
    assert resolve_problem("examples/opt1").name == "opt1"
    assert resolve_problem("opt1.json").name == "opt1"

    save_problem(opt1, tmp_path / "mine.json")
    assert resolve_problem(str(tmp_path / "mine")).dimension == 4

    with pytest.raises(ParseError):
        resolve_problem("no-such-problem")
