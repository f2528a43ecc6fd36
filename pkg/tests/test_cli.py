"""Tests for the command line interface."""

import json

import pytest

from visa.cli import main
from visa.runner import TRACE_HEADER


def _write_config(tmp_path, name="cfg.json", **extra):
    raw = {
        "model": {"kind": "gaussian-diag", "dim": 4},
        "method": ["visa", "iwfvi"],
        "ess_threshold": [0.9],
        "lr": [0.01],
        "seeds": [1],
        "steps": 10,
        "n_samples": 4,
        "out_dir": "out",
    }
    raw.update(extra)
    raw = {k: v for k, v in raw.items() if v is not None}
    path = tmp_path / name
    path.write_text(json.dumps(raw))
    return path


def test_run_success(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    code = main(["run", "--config", str(cfg)])
    captured = capsys.readouterr()
    assert code == 0
    lines = captured.out.splitlines()
    ok_lines = [l for l in lines if l.startswith("[ok] ")]
    assert len(ok_lines) == 2
    assert "rows=10" in ok_lines[0]
    assert lines[-1].startswith("2/2 cells succeeded; outputs in ")
    csv = tmp_path / "out" / "visa_lr0.01_alpha0.9_seed1.csv"
    assert csv.read_text().splitlines()[0] == TRACE_HEADER


def test_run_out_override(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    other = tmp_path / "elsewhere"
    code = main(["run", "--config", str(cfg), "--out", str(other)])
    assert code == 0
    assert (other / "status.json").exists()
    assert not (tmp_path / "out").exists()
    echoed = json.loads((other / "effective_config.json").read_text())
    assert echoed["out_dir"] == str(other.resolve())


def test_run_jobs_matches_serial(tmp_path):
    cfg = _write_config(tmp_path)
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "serial")]) == 0
    assert (
        main(["run", "--config", str(cfg), "--out", str(tmp_path / "par"), "--jobs", "2"]) == 0
    )
    name = "iwfvi_lr0.01_seed1.csv"
    serial = (tmp_path / "serial" / name).read_bytes()
    parallel = (tmp_path / "par" / name).read_bytes()
    assert serial == parallel


def test_run_missing_config(tmp_path, capsys):
    code = main(["run", "--config", str(tmp_path / "nope.json")])
    captured = capsys.readouterr()
    assert code == 1
    assert captured.err.startswith("error: ")


def test_run_invalid_json(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{oops")
    code = main(["run", "--config", str(path)])
    captured = capsys.readouterr()
    assert code == 1
    assert "invalid JSON" in captured.err


def test_run_invalid_config_names_field(tmp_path, capsys):
    cfg = _write_config(tmp_path, method=["iwfvi"])
    code = main(["run", "--config", str(cfg)])
    captured = capsys.readouterr()
    assert code == 1
    assert "ess_threshold" in captured.err


def test_run_partial_failure_exit_code(tmp_path, capsys, monkeypatch):
    import visa.runner as runner_mod

    def boom(*args, **kwargs):
        raise RuntimeError("boom")

    monkeypatch.setattr(runner_mod, "visa_run", boom)
    cfg = _write_config(tmp_path)
    code = main(["run", "--config", str(cfg)])
    captured = capsys.readouterr()
    assert code == 2
    assert "[FAILED] visa_lr0.01_alpha0.9_seed1.csv: RuntimeError: boom" in captured.out
    assert "1/2 cells succeeded" in captured.out
    status = json.loads((tmp_path / "out" / "status.json").read_text())
    assert status["n_failed"] == 1
    assert (tmp_path / "out" / "iwfvi_lr0.01_seed1.csv").exists()


def test_plot_subcommand(tmp_path, capsys):
    cfg = _write_config(tmp_path, method=["iwfvi"], ess_threshold=None, steps=5)
    assert main(["run", "--config", str(cfg)]) == 0
    capsys.readouterr()
    csv = tmp_path / "out" / "iwfvi_lr0.01_seed1.csv"
    out = tmp_path / "chart.svg"
    code = main(["plot", "--out", str(out), str(csv)])
    captured = capsys.readouterr()
    assert code == 0
    assert captured.out.strip() == f"wrote {out}"
    assert out.read_text().count("<polyline") == 1
    log_out = tmp_path / "chart_log.svg"
    assert main(["plot", "--out", str(log_out), "--log-x", str(csv)]) == 0
    assert "(log)" in log_out.read_text()


def test_plot_empty_csv_fails(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text(TRACE_HEADER + "\n")
    code = main(["plot", "--out", str(tmp_path / "c.svg"), str(empty)])
    captured = capsys.readouterr()
    assert code == 1
    assert "no rows" in captured.err


def test_simulate_data_creates_then_noop(tmp_path, capsys):
    raw_model = {"kind": "pickover", "data": "pk.csv", "gen": {"t": 9}}
    cfg = _write_config(tmp_path, model=raw_model, method=["iwfvi"], ess_threshold=None)
    code = main(["simulate-data", "--model", "pickover", "--config", str(cfg)])
    captured = capsys.readouterr()
    assert code == 0
    path = tmp_path / "pk.csv"
    assert captured.out.strip() == f"wrote {path}"
    before = path.read_bytes()
    code = main(["simulate-data", "--model", "pickover", "--config", str(cfg)])
    captured = capsys.readouterr()
    assert code == 0
    assert "already exists; leaving it in place" in captured.out
    assert path.read_bytes() == before


def test_simulate_data_model_mismatch(tmp_path, capsys):
    raw_model = {"kind": "pickover", "data": "pk.csv", "gen": {}}
    cfg = _write_config(tmp_path, model=raw_model, method=["iwfvi"], ess_threshold=None)
    code = main(["simulate-data", "--model", "lv", "--config", str(cfg)])
    captured = capsys.readouterr()
    assert code == 1
    assert "model.kind" in captured.err


def test_unknown_subcommand_exits_via_argparse(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
