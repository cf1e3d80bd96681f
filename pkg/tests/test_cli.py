import json

import pytest

from lyapcert.analysis import (
    AnalysisConfig,
    ConfigError,
    InvariantViolationError,
    _check_edges,
    run_analyze,
    run_simulate,
)
from lyapcert.cli import main


SMALL = "8,16,32"


def _read(path):
    with open(path, "rb") as handle:
        return handle.read()


def test_config_from_dict_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="unknown config keys"):
        AnalysisConfig.from_dict({"model": "heat-neumann", "bogus": 1})


def test_config_requires_target():
    config = AnalysisConfig()
    with pytest.raises(ConfigError):
        run_analyze(config)


def test_inline_rule_system_config(tmp_path):
    config = AnalysisConfig.from_dict(
        {
            "system": {
                "type": "spectral",
                "eigenvalue_rule": "n^2",
                "coeff_rule": "1",
                "label": "quadratic-spectrum",
            },
            "modes": [8, 16, 32],
            "sample_count": 16,
        }
    )
    report, _ = run_analyze(config)
    assert report["system"] == "quadratic-spectrum"
    assert report["modes"] == [8, 16, 32]


def test_analyze_counterexample_pattern(tmp_path):
    config = AnalysisConfig(
        model="counterexample", modes=(64, 128, 256), sample_count=32,
        out_dir=str(tmp_path),
    )
    report, artifacts = run_analyze(config)
    slots = report["slots"]
    assert slots["two_admissibility"]["value"] == "bounded"
    assert slots["gamma_scans"]["value"]["0.5"]["verdict"] == "diverging"
    assert slots["l2_iss"]["value"] == "ISS"
    edge = {e["id"]: e["status"] for e in report["edges"]}
    assert edge["bounded-input-constant-does-not-imply-half-power-class"] == "witnessed"
    assert (
        edge["stability-plus-bounded-input-constant-does-not-imply-contraction-similarity"]
        == "not-checkable-at-finite-truncation"
    )
    assert (tmp_path / "report.json").exists()
    assert (tmp_path / "trends.csv").exists()
    assert (tmp_path / "trajectories.csv").exists()
    doc = json.loads(_read(artifacts["report"]))
    assert doc["schema"] == "1"
    for slot in doc["slots"].values():
        assert "provenance" in slot


def test_explicit_sequences_reject_oversized_modes():
    config = AnalysisConfig.from_dict(
        {
            "system": {
                "type": "spectral",
                "eigenvalues": [1.0, 2.0, 3.0],
                "input_coeffs": [1.0, 1.0, 1.0],
            },
            "modes": [64],
        }
    )
    with pytest.raises(ConfigError, match="only 3 modes"):
        run_analyze(config)


def test_multi_input_matrix_rejected_by_config():
    config = AnalysisConfig.from_dict(
        {
            "system": {
                "type": "matrix",
                "a": [[-1.0, 0.0], [0.0, -2.0]],
                "b": [[1.0, 0.0], [0.0, 1.0]],
            },
            "modes": [2],
        }
    )
    with pytest.raises(ConfigError, match="scalar-input"):
        run_analyze(config)


def test_analyze_zero_input_system():
    config = AnalysisConfig.from_dict(
        {
            "system": {
                "type": "spectral",
                "eigenvalue_rule": "n^2",
                "coeff_rule": "0*n",
                "label": "silent",
            },
            "modes": [4, 8, 16],
            "sample_count": 8,
        }
    )
    report, _ = run_analyze(config)
    assert report["slots"]["l2_iss"]["value"] == "ISS"
    assert report["slots"]["two_admissibility"]["value"] == "bounded"
    assert report["findings"] == []


def test_exponent_bridge_reported():
    config = AnalysisConfig(model="heat-neumann", modes=(16, 64, 256), sample_count=8)
    report, _ = run_analyze(config)
    bridge = report["slots"]["gamma_scans"]["exponent_bridge"]
    # The finest bounded scan exponent 0.375 maps to 1/(1 - 0.375) = 1.6.
    assert "1.6" in bridge


def test_analyze_determinism(tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    for out in (out_a, out_b):
        config = AnalysisConfig(
            model="heat-neumann", modes=(8, 16, 32), seed=123,
            sample_count=16, out_dir=str(out),
        )
        run_analyze(config)
    for name in ("report.json", "trends.csv", "trajectories.csv"):
        assert _read(out_a / name) == _read(out_b / name)


def test_trends_csv_shape(tmp_path):
    import csv as csv_mod
    import io

    config = AnalysisConfig(
        model="heat-neumann", modes=(8, 16, 32), sample_count=16, out_dir=str(tmp_path)
    )
    run_analyze(config)
    text = _read(tmp_path / "trends.csv").decode()
    assert "\r" not in text
    rows = list(csv_mod.reader(io.StringIO(text)))
    assert rows[0] == ["system", "label", "quantity", "gamma_or_q", "N", "T", "value"]
    quantities = {row[2] for row in rows[1:]}
    assert {"class_scan_norm", "admissibility_constant", "certificate_a3",
            "certificate_a4", "coercivity_lower", "condition_number"} <= quantities
    for row in rows[1:]:
        float(row[6])  # full-precision values round-trip


def test_edge_violation_detection():
    # Synthetic slots in which the theorem edge fails must abort the run.
    slots = {
        "exponentially_stable": {"value": True},
        "two_admissibility": {"value": "bounded"},
        "l2_iss": {"value": "not-ISS"},
        "gamma_scans": {"value": {}},
        "coercive_quadratic_l2": {"value": "certified"},
        "noncoercive_w0": {"value": "certified"},
        "contraction_similarity": {"condition_numbers": []},
    }
    with pytest.raises(InvariantViolationError):
        _check_edges(slots)


def test_cli_analyze_exit_codes(tmp_path):
    assert main([
        "analyze", "--model", "heat-neumann", "--modes", SMALL, "--out",
        str(tmp_path / "n"),
    ]) == 0
    # Dirichlet carries infeasibility findings: exit code 3 by contract.
    assert main([
        "analyze", "--model", "heat-dirichlet", "--modes", SMALL, "--out",
        str(tmp_path / "d"),
    ]) == 3


def test_cli_config_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    assert main(["analyze", "--config", str(bad)]) == 2
    missing = main(["analyze"])  # neither model nor system
    assert missing == 2


def test_cli_delta_override(tmp_path):
    # Valid override sits inside the spectral gap and lands in trends.csv.
    code = main([
        "analyze", "--model", "heat-neumann", "--modes", SMALL,
        "--delta-override", "1.0", "--out", str(tmp_path),
    ])
    assert code == 0
    text = _read(tmp_path / "trends.csv").decode()
    assert "decay_prefactor" in text
    assert "decay rate 1" in text
    # An override outside the gap is a config error.
    assert main([
        "analyze", "--model", "heat-neumann", "--modes", SMALL,
        "--delta-override", "5.0",
    ]) == 2


def test_seed_change_keeps_selftest_pattern():
    from lyapcert.selftest import run_selftest

    lines_a, lines_b = [], []
    assert run_selftest(seed=0, emit=lines_a.append)
    assert run_selftest(seed=321, emit=lines_b.append)
    pattern_a = [line.split(":")[0] for line in lines_a]
    pattern_b = [line.split(":")[0] for line in lines_b]
    assert pattern_a == pattern_b


def test_cli_admissibility_scan(tmp_path, capsys):
    code = main([
        "admissibility-scan", "--model", "counterexample", "--modes", "64,128,256",
        "--out", str(tmp_path),
    ])
    assert code == 0
    doc = json.loads(_read(tmp_path / "admissibility.json"))
    assert doc["constant_verdict"] == "bounded"
    assert doc["scans"]["0.5"]["verdict"] == "diverging"
    out = capsys.readouterr().out
    assert "gamma=0.5: diverging" in out


def test_cli_lyapunov_eval(tmp_path):
    code = main([
        "lyapunov-eval", "--model", "heat-neumann", "--modes", "8", "--out", str(tmp_path),
    ])
    assert code == 0
    doc = json.loads(_read(tmp_path / "forms.json"))
    forms = doc["forms"]
    assert forms["v_half"]["weights"] == [0.5] * 8
    assert forms["v_half"]["kind"] == "diagonal"
    assert all("provenance" in f for f in forms.values())
    assert forms["w_plain"]["a1"] < forms["w_plain"]["a2"]


def test_cli_simulate(tmp_path):
    out = tmp_path / "sim"
    code = main([
        "simulate", "--model", "heat-neumann", "--modes", "16", "--seed", "7",
        "--out", str(out),
    ])
    assert code == 0
    doc = json.loads(_read(out / "gainfit.json"))
    assert doc["certified"] is True
    header = _read(out / "trajectory_00.csv").decode().splitlines()[0]
    assert header.startswith("t,mode_1,") and header.endswith(",u")
    # Deterministic under the same seed.
    out2 = tmp_path / "sim2"
    main(["simulate", "--model", "heat-neumann", "--modes", "16", "--seed", "7",
          "--out", str(out2)])
    assert _read(out / "gainfit.json") == _read(out2 / "gainfit.json")
    assert _read(out / "trajectory_03.csv") == _read(out2 / "trajectory_03.csv")


def test_cli_selftest_fault_injection(capsys):
    code = main(["selftest", "--fault", "self-adjoint-identity"])
    captured = capsys.readouterr().out
    assert code == 4
    assert "FAIL  self-adjoint-identity" in captured
    passes = [line for line in captured.splitlines() if line.startswith("PASS")]
    assert len(passes) >= 20


def test_simulate_run(tmp_path):
    config = AnalysisConfig(model="counterexample", modes=(8,), seed=1, out_dir=str(tmp_path))
    doc, artifacts = run_simulate(config)
    assert doc["certified"] is True
    assert len([k for k in artifacts if k.startswith("trajectory")]) == 6
