"""Command-line surface tests."""

import json
import os

import pytest

from mnlmix.cli import main


def run(argv, capsys=None):
    code = main(argv)
    return code


def test_simulate_writes_model(tmp_path):
    out = tmp_path / "m.json"
    assert run(["simulate", "--n", "4", "--lambda", "2", "--seed", "7",
                "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["n"] == 4 and len(data["a"]) == 4


def test_simulate_deterministic_bytes(tmp_path):
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    argv = ["simulate", "--n", "4", "--lambda", "2", "--seed", "9"]
    run(argv + ["--out", str(p1)])
    run(argv + ["--out", str(p2)])
    assert p1.read_bytes() == p2.read_bytes()


def test_simulate_counterexample_exact(tmp_path):
    out = tmp_path / "ce.json"
    assert run(["simulate", "--model", "counterexample", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["a"] == ["2/5", "2/5", "1/10", "1/10"]
    assert data["b"] == ["3/10", "3/10", "1/5", "1/5"]


def test_simulate_three_roots_witness(tmp_path):
    out = tmp_path / "w.json"
    assert run(["simulate", "--model", "three-roots", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["kind"] == "three-roots-witness"
    assert data["b1"] == pytest.approx(0.0565171)


def test_simulate_with_samples(tmp_path):
    out = tmp_path / "m.json"
    sout = tmp_path / "s.json"
    assert run([
        "simulate", "--n", "4", "--lambda", "2", "--seed", "3",
        "--out", str(out), "--samples", "500", "--slate", "1,2,3",
        "--samples-out", str(sout),
    ]) == 0
    data = json.loads(sout.read_text())
    assert data["size"] == 500
    assert sum(data["slates"][0]["counts"]) == 500


def test_simulate_requires_args():
    assert run(["simulate"]) == 1


def test_mu_flag(tmp_path):
    out = tmp_path / "m.json"
    assert run(["simulate", "--n", "3", "--mu", "0.25", "--seed", "1",
                "--out", str(out)]) == 0
    assert json.loads(out.read_text())["lambda"] == pytest.approx(3.0)


def test_identify_exit_codes(tmp_path):
    rep = tmp_path / "r.json"
    assert run(["identify", "counterexample", "--out", str(rep)]) == 2
    data = json.loads(rep.read_text())
    assert not data["unique"]
    assert any(
        s["a"] == ["5/19", "5/19"] and s["b"] == ["7/19", "7/19"]
        for s in data["solutions"]
    )
    gen = tmp_path / "m.json"
    run(["simulate", "--n", "4", "--lambda", "2", "--seed", "7", "--out", str(gen)])
    assert run(["identify", str(gen), "--out", str(tmp_path / "r2.json")]) == 0

    coll = tmp_path / "c.json"
    coll.write_text(json.dumps({
        "n": 3, "lambda": 2.0, "a": [0.5, 0.3, 0.2], "b": [0.5, 0.3, 0.2],
    }))
    assert run(["identify", str(coll), "--out", str(tmp_path / "r3.json")]) == 3


def test_learn_oracle_cli(tmp_path):
    gen = tmp_path / "m.json"
    run(["simulate", "--n", "5", "--lambda", "2", "--seed", "8", "--out", str(gen)])
    rep = tmp_path / "learn.json"
    assert run(["learn", str(gen), "--mode", "oracle", "--out", str(rep)]) == 0
    data = json.loads(rep.read_text())
    assert data["max_rel_error"] <= 1e-8
    assert data["queries"] == 3 * 5 + 17


def test_learn_samples_cli(tmp_path):
    gen = tmp_path / "m.json"
    run(["simulate", "--n", "4", "--lambda", "2", "--seed", "2", "--out", str(gen)])
    rep = tmp_path / "learn.json"
    code = run([
        "learn", str(gen), "--mode", "samples", "--eps", "0.1",
        "--seed", "2", "--out", str(rep),
    ])
    data = json.loads(rep.read_text())
    assert data["samples"] > 0
    assert code in (0, 4, 5, 6)


def test_learn_collapse_exit_code(tmp_path):
    coll = tmp_path / "c.json"
    coll.write_text(json.dumps({
        "n": 4, "lambda": 2.0,
        "a": [0.4, 0.3, 0.2, 0.1], "b": [0.4, 0.3, 0.2, 0.1],
    }))
    assert run(["learn", str(coll), "--mode", "oracle",
                "--out", str(tmp_path / "r.json")]) == 4


def test_experiment_counterexample_cli(tmp_path):
    rep = tmp_path / "x.json"
    assert run(["experiment", "counterexample", "--out", str(rep)]) == 0
    assert json.loads(rep.read_text())["verdict"] is True


def test_experiment_three_roots_cli(tmp_path):
    rep = tmp_path / "x.json"
    assert run(["experiment", "three-roots", "--out", str(rep)]) == 0
    assert json.loads(rep.read_text())["verdict"] is True


def test_experiment_sweep_cli(tmp_path):
    rep = tmp_path / "sweep.json"
    assert run([
        "experiment", "identifiability-sweep", "--n", "3", "--lambda", "2",
        "--trials", "5", "--seed", "1", "--out", str(rep),
    ]) == 0
    assert json.loads(rep.read_text())["counts"]["unique"] == 5


def test_experiment_sample_complexity_writes_csv(tmp_path):
    rep = tmp_path / "curve.json"
    assert run([
        "experiment", "sample-complexity", "--n", "4", "--lambda", "2",
        "--grid", "0.2", "--trials", "3", "--seed", "0", "--out", str(rep),
    ]) == 0
    csv_path = tmp_path / "curve.csv"
    assert csv_path.exists()
    assert csv_path.read_text().startswith("eps,n_star,success")


def test_experiment_discriminant_cli(tmp_path):
    rep = tmp_path / "d.json"
    assert run([
        "experiment", "discriminant-max", "--lambda", "2",
        "--restarts", "10", "--seed", "4", "--out", str(rep),
    ]) == 0
    data = json.loads(rep.read_text())
    assert len(data["restart_values"]) == 10


def test_default_seed_env(tmp_path, monkeypatch):
    monkeypatch.setenv("MNLMIX_DEFAULT_SEED", "31")
    out1 = tmp_path / "e1.json"
    assert run(["simulate", "--n", "3", "--lambda", "1", "--out", str(out1)]) == 0
    monkeypatch.delenv("MNLMIX_DEFAULT_SEED")
    out2 = tmp_path / "e2.json"
    run(["simulate", "--n", "3", "--lambda", "1", "--seed", "31", "--out", str(out2)])
    assert out1.read_text() == out2.read_text()


def test_bad_model_file(tmp_path):
    missing = tmp_path / "nope.json"
    assert run(["identify", str(missing)]) == 1
