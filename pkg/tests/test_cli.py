"""Command-line interface: exit codes, file outputs, determinism."""

import hashlib
import json

import pytest

import kpcalab.cli as cli
from kpcalab import NumericFailure


def _write_config(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def _bounds_config(tmp_path, seed=5):
    return _write_config(tmp_path, f"bounds{seed}.json", {
        "seed": seed, "perturbation_cases": 30, "operator_trials": 20})


_RATES_PAYLOAD = {
    "decay": "expo", "gamma": 0.5, "theta": 0.2, "metric": "recon_hat",
    "n_grid": [32, 48, 64, 96], "replications": 5, "atoms": 24, "rank": 8,
    "seed": 3, "slope_tolerance": 5.0,
}


def test_bounds_run_and_byte_identical_rerun(tmp_path, capsys):
    cfg = _bounds_config(tmp_path)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli.main(["bounds", "--config", cfg, "--out", str(out1)]) == 0
    assert cli.main(["bounds", "--config", cfg, "--out", str(out2)]) == 0
    assert (out1 / "results.csv").read_bytes() == (out2 / "results.csv").read_bytes()
    assert not (out1 / "oracle_snapshot.json").exists()
    summary = json.loads((out1 / "summary.json").read_text())
    assert summary["tool"] == "kpcalab"
    assert summary["command"] == "bounds"
    raw = open(cfg, "rb").read()
    assert summary["config_sha256"] == hashlib.sha256(raw).hexdigest()
    assert all(v["pass"] for v in summary["verdicts"].values())
    assert summary["violations_plain"] == 0
    head = (out1 / "results.csv").read_text().splitlines()
    assert head[0].startswith("case,dim,d,delta_d,b_hs,plain_lhs")
    assert len(head) == 31
    stdout = capsys.readouterr().out
    assert "overall: PASS" in stdout


def test_rates_threads_do_not_change_bytes(tmp_path):
    cfg = _write_config(tmp_path, "rates.json", _RATES_PAYLOAD)
    out1, out2 = tmp_path / "t1", tmp_path / "t2"
    assert cli.main(["rates", "--config", cfg, "--out", str(out1),
                     "--threads", "2"]) == 0
    assert cli.main(["rates", "--config", cfg, "--out", str(out2),
                     "--threads", "1"]) == 0
    assert (out1 / "results.csv").read_bytes() == (out2 / "results.csv").read_bytes()
    assert (out1 / "oracle_snapshot.json").exists()
    snap = json.loads((out1 / "oracle_snapshot.json").read_text())
    assert len(snap["population_spectrum"]) == 24
    header = (out1 / "results.csv").read_text().splitlines()[0]
    assert header == "n,m,ell,rep,metric,value"
    summary = json.loads((out1 / "summary.json").read_text())
    assert summary["threads"] == 2
    assert summary["metric"] == "recon_hat"
    assert summary["verdicts"]["slope_within_tolerance"]["pass"]
    assert summary["verdicts"]["projector_swap_inequality"]["pass"]


def test_seed_override_changes_results(tmp_path):
    cfg = _bounds_config(tmp_path)
    out1, out2 = tmp_path / "s5", tmp_path / "s6"
    assert cli.main(["bounds", "--config", cfg, "--out", str(out1),
                     "--seed", "5"]) == 0
    assert cli.main(["bounds", "--config", cfg, "--out", str(out2),
                     "--seed", "6"]) == 0
    assert (out1 / "results.csv").read_bytes() != (out2 / "results.csv").read_bytes()
    assert json.loads((out2 / "summary.json").read_text())["effective_seed"] == 6


def test_malformed_config_exits_one_and_writes_nothing(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    out = tmp_path / "never"
    assert cli.main(["bounds", "--config", str(bad), "--out", str(out)]) == 1
    assert not out.exists()
    assert "config error" in capsys.readouterr().err


def test_config_schema_rejections(tmp_path, capsys):
    out = str(tmp_path / "o")
    cases = [
        ("unknown.json", {"seed": 1, "florp": 2}, "bounds"),
        ("missing.json", {k: v for k, v in _RATES_PAYLOAD.items()
                          if k != "metric"}, "rates"),
        ("noseed.json", {"perturbation_cases": 3}, "bounds"),
        ("list.json", [1, 2], "bounds"),
    ]
    for name, payload, command in cases:
        cfg = _write_config(tmp_path, name, payload)
        assert cli.main([command, "--config", cfg, "--out", out]) == 1
        assert not (tmp_path / "o").exists()
    capsys.readouterr()


def test_missing_config_file_exits_one(tmp_path, capsys):
    out = str(tmp_path / "o")
    assert cli.main(["bounds", "--config", str(tmp_path / "ghost.json"),
                     "--out", out]) == 1
    capsys.readouterr()


def test_verdict_failure_exits_two_but_writes_outputs(tmp_path, capsys):
    payload = dict(_RATES_PAYLOAD, slope_tolerance=1e-6)
    cfg = _write_config(tmp_path, "tight.json", payload)
    out = tmp_path / "tight"
    assert cli.main(["rates", "--config", cfg, "--out", str(out)]) == 2
    assert (out / "results.csv").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert not summary["verdicts"]["slope_within_tolerance"]["pass"]
    assert "overall: FAIL" in capsys.readouterr().out


def test_numeric_failure_exits_three(tmp_path, monkeypatch, capsys):
    def explode(config, seed, threads):
        raise NumericFailure("eigensolver went sideways")

    monkeypatch.setitem(cli._HANDLERS, "bounds", explode)
    cfg = _bounds_config(tmp_path)
    assert cli.main(["bounds", "--config", cfg, "--out", str(tmp_path / "x")]) == 3
    assert "numeric failure" in capsys.readouterr().err


def test_thread_argument_parsing(tmp_path, capsys):
    cfg = _bounds_config(tmp_path)
    assert cli.main(["bounds", "--config", cfg, "--out", str(tmp_path / "auto"),
                     "--threads", "auto"]) == 0
    assert cli.main(["bounds", "--config", cfg, "--out", str(tmp_path / "z"),
                     "--threads", "0"]) == 1
    assert cli.main(["bounds", "--config", cfg, "--out", str(tmp_path / "z"),
                     "--threads", "soon"]) == 1
    capsys.readouterr()


def test_argparse_exits(capsys):
    assert cli.main(["--help"]) == 0
    assert cli.main([]) == 1
    assert cli.main(["florp"]) == 1
    capsys.readouterr()


def test_spectrum_smoke(tmp_path, capsys):
    cfg = _write_config(tmp_path, "spec.json", {
        "atoms": 24, "rank": 6, "decay": "poly", "alpha": 2.0,
        "seed": 7, "ells": [1, 2, 5]})
    out = tmp_path / "spec"
    assert cli.main(["spectrum", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "results.csv").read_text().splitlines()
    assert lines[0] == "ell,eigenvalue,tail_energy,projector_residual,rel_err,agrees"
    assert len(lines) == 4
    assert lines[1].startswith("1,") and lines[1].endswith("true")
    bad = _write_config(tmp_path, "specbad.json", {
        "atoms": 24, "rank": 6, "decay": "poly", "alpha": 2.0,
        "seed": 7, "ells": [6]})
    assert cli.main(["spectrum", "--config", bad, "--out", str(out)]) == 1
    capsys.readouterr()


def test_transition_smoke(tmp_path, capsys):
    cfg = _write_config(tmp_path, "trans.json", {
        "decay": "expo", "gamma": 1.0, "theta": 0.0, "ell_fixed": 1,
        "metric": "proj_rf_hat", "taus": [0.3, 0.9],
        "n_grid": [32, 48, 64, 96], "replications": 5, "atoms": 24,
        "rank": 6, "seed": 2, "slope_tolerance": 5.0})
    out = tmp_path / "trans"
    assert cli.main(["transition", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "results.csv").read_text().splitlines()
    assert lines[0].split(",")[0] == "tau"
    assert lines[1].startswith(",")  # reference rows carry no tau
    assert any(line.startswith("0.2999") or line.startswith("0.3")
               for line in lines[1:])
    assert (out / "oracle_snapshot.json").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["threshold"] == pytest.approx(0.5)
    capsys.readouterr()


def test_concentration_smoke(tmp_path, capsys):
    cfg = _write_config(tmp_path, "conc.json", {
        "tau": 2.0, "count": 200, "replications": 50, "atoms": 32,
        "rank": 8, "seed": 4, "experiments": ["cov_deviation"]})
    out = tmp_path / "conc"
    assert cli.main(["concentration", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "results.csv").read_text().splitlines()
    assert lines[0].startswith("experiment,tau,count,replications,bound")
    assert len(lines) == 2 and lines[1].startswith("cov_deviation,2,200,50,")
    summary = json.loads((out / "summary.json").read_text())
    assert summary["verdicts"]["cov_deviation_within_tail"]["pass"]
    capsys.readouterr()
