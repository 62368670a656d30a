import json
from unittest.mock import patch

import pytest

import main
from landscape.ensemble import load_problem
from main import run


def _stdout_json(capsys):
    return json.loads(capsys.readouterr().out)


def _stderr_error(capsys):
    lines = [line for line in capsys.readouterr().err.splitlines() if line.strip()]
    return json.loads(lines[-1])


@pytest.mark.parametrize(
    "unitary, expected",
    [("identity", 0.39), ("U2", 0.36), ("perm:4,2,1,3", 0.36), ("perm:1,2,3,4", 0.39)],
)
def test_evaluate(capsys, unitary, expected):
    assert run(["evaluate", "--problem", "examples/opt1", "--unitary", unitary]) == 0
    assert _stdout_json(capsys)["value"] == pytest.approx(expected, abs=1e-12)


def test_evaluate_delimited(capsys):
    assert run(["evaluate", "--problem", "opt1", "--format", "delimited"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "unitary,value"
    assert float(lines[1].split(",")[1]) == pytest.approx(0.39, abs=1e-12)


def test_classify(capsys):
    assert run(["classify", "--problem", "examples/opt1", "--unitary", "U2"]) == 0
    payload = _stdout_json(capsys)
    assert payload["classification"] == "LocalMax"
    assert payload["reconcilable"]
    assert payload["max_hessian_eig"] <= 1e-9


def test_validate(capsys):
    assert run(["validate", "--problem", "examples/opt1"]) == 0
    payload = _stdout_json(capsys)
    assert payload["projective"]
    assert payload["state_gram"][0][1] == pytest.approx(0.3275, abs=1e-12)


def test_detect_traps(capsys):
    """opt1 has the false trap 0.36 witnessed by the cycle 1 → 2 → 3"""
    assert run(["detect-traps", "--problem", "examples/opt1", "--mode", "exhaustive"]) == 0
    payload = _stdout_json(capsys)

    assert payload["global_max"] == pytest.approx(0.39, abs=1e-12)
    assert any(abs(v - 0.36) <= 1e-12 for v in payload["max_trap_values"])
    witnesses = [t["witness_cycle"] for t in payload["traps"] if abs(t["point_value"] - 0.36) <= 1e-12]
    assert [1, 2, 3] in witnesses
    assert any(t["pi"] == "4,2,1,3" for t in payload["traps"])
    assert payload["corollary2"] is not None


def test_detect_traps_delimited(capsys):
    assert run(["detect-traps", "--problem", "opt1", "--format", "delimited"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "value,count,classification,reconcilable,ft"


def test_detect_traps_sampled(capsys):
    assert run(["detect-traps", "--problem", "nonunique-6d", "--mode", "sampled", "--samples", "720"]) == 0
    payload = _stdout_json(capsys)
    assert payload["global_max"] == pytest.approx(0.58, abs=1e-12)
    for expected in (79 / 150, 0.42):
        assert any(abs(v - expected) <= 1e-12 for v in payload["max_trap_values"])


def test_enumerate_delimited(capsys):
    assert run(["enumerate", "--problem", "opt1", "--format", "delimited"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "pi,value,classification,min_hessian_eig,max_hessian_eig"
    assert len(lines) > 1


def test_enumerate_structured(capsys):
    assert run(["enumerate", "--problem", "opt1"]) == 0
    payload = _stdout_json(capsys)
    assert payload["decomposition"]["state_blocks"] == [1, 2, 1]
    assert payload["points"][0]["pi"] == "1,2,3,4"


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["evaluate"],
        ["evaluate", "--problem", "opt1", "--bogus"],
        ["optimize", "--problem", "opt1", "--mode", "sideways"],
        ["frobnicate"],
    ],
)
def test_usage_errors(argv):
    assert run(argv) == 2


def test_parse_error(capsys):
    assert run(["evaluate", "--problem", "opt1", "--unitary", "perm:1,1,2,3"]) == 1
    error = _stderr_error(capsys)
    assert error["error"] == "ParseError"
    assert error["field"] == "unitary"


def test_missing_problem_file(capsys):
    assert run(["validate", "--problem", "no/such/problem.json"]) == 1
    assert _stderr_error(capsys)["error"] == "ParseError"


def test_dilate_requires_povm(capsys):
    assert run(["dilate", "--problem", "appendix-distinguishable"]) == 1
    assert _stderr_error(capsys)["error"] == "NotPOVM"


def test_dilate(capsys, tmp_path):
    out = tmp_path / "dilated.json"
    assert run(["dilate", "--problem", "povm-4d", "--unitary", "U1", "--out", str(out)]) == 0
    payload = _stdout_json(capsys)
    assert payload["dimension"] == 12
    assert payload["value"] == pytest.approx(0.4, abs=1e-12)
    assert payload["dilated_value"] == pytest.approx(0.4, abs=1e-12)
    assert load_problem(out).dimension == 12


def test_examples(capsys, tmp_path):
    assert run(["examples", "--out", str(tmp_path)]) == 0
    payload = _stdout_json(capsys)
    assert payload["verified"]
    assert sorted(p.name for p in tmp_path.iterdir()) == [
        "appendix-distinguishable.json",
        "epsilon-family.json",
        "nonunique-6d.json",
        "opt1.json",
        "povm-4d.json",
    ]


def test_optimize(capsys):
    argv = ["optimize", "--problem", "examples/appendix-distinguishable", "--mode", "ascend",
            "--seeds", "3", "--threads", "1", "--no-progress"]
    assert run(argv) == 0
    payload = _stdout_json(capsys)
    assert len(payload["runs"]) == 3
    assert all(abs(v - 0.54) <= 1e-6 for v in payload["terminal_values"])


def test_optimize_out_is_deterministic(capsys, tmp_path):
    base = ["optimize", "--problem", "opt1", "--seeds", "4", "--threads", "2", "--no-progress"]
    assert run(base + ["--out", str(tmp_path / "a.csv")]) == 0
    assert run(base + ["--out", str(tmp_path / "b.csv")]) == 0
    capsys.readouterr()

    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a_raw.csv").read_bytes() == (tmp_path / "b_raw.csv").read_bytes()
    header = (tmp_path / "a.csv").read_text(encoding="utf-8").splitlines()[0]
    assert header == "value_bin,count,reconcilable,classification"


def test_survey_out(capsys, tmp_path):
    out = tmp_path / "survey.csv"
    argv = ["survey", "--problem", "opt1", "--seeds", "3", "--threads", "1", "--no-progress", "--out", str(out)]
    assert run(argv) == 0
    payload = _stdout_json(capsys)
    assert out.exists()
    assert (tmp_path / "survey_raw.csv").exists()
    assert payload["converged"] <= 3


def test_structured_out_file(capsys, tmp_path):
    out = tmp_path / "report.json"
    assert run(["validate", "--problem", "opt1", "--out", str(out)]) == 0
    assert _stdout_json(capsys)["written"] == str(out)
    assert json.loads(out.read_text(encoding="utf-8"))["projective"]


def test_bare_out_name_goes_to_output_dir(capsys, tmp_path, monkeypatch):
    monkeypatch.setattr("config.settings.OUTPUT_DIR", str(tmp_path))
    assert run(["validate", "--problem", "opt1", "--out", "report.json"]) == 0
    assert _stdout_json(capsys)["written"] == str(tmp_path / "report.json")
    assert (tmp_path / "report.json").exists()


def test_catalog_commands_use_configured_threads(capsys, monkeypatch):
    monkeypatch.setattr("config.settings.THREADS", 3)
    with patch("main.brute_force_survey", wraps=main.brute_force_survey) as survey:
        assert run(["detect-traps", "--problem", "opt1"]) == 0
    assert survey.call_args.kwargs["threads"] == 3

    with patch("main.enumerate_points", wraps=main.enumerate_points) as points:
        assert run(["enumerate", "--problem", "opt1"]) == 0
    assert points.call_args.kwargs["threads"] == 3
    capsys.readouterr()
