"""Command-line behaviour: exit codes, determinism, file outputs."""

import json

import pytest

from teleopsim.cli import USAGE_EXIT, main


def write_scenario(path, **overrides):
    doc = {"format": "teleopsim-scenario", "version": 1,
           "case": "delayed", "track_id": "A", "terrain": "patchy",
           "base_delay": 1.0, "jitter": 0.25, "duration": 20.0,
           "seed": 7, "operator": 1}
    doc.update(overrides)
    path.write_text(json.dumps(doc))
    return path


def test_usage_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as e:
        main(["simulate"])          # missing --config
    assert e.value.code == USAGE_EXIT
    with pytest.raises(SystemExit):
        main(["no-such-command"])


def test_missing_scenario_file_exits_2(tmp_path, capsys):
    rc = main(["simulate", "--config", str(tmp_path / "none.json")])
    assert rc == USAGE_EXIT
    assert "error" in capsys.readouterr().err


def test_invalid_scenario_exits_2(tmp_path, capsys):
    path = write_scenario(tmp_path / "s.json", operator=42)
    rc = main(["simulate", "--config", str(path)])
    assert rc == USAGE_EXIT


def test_simulate_is_deterministic(tmp_path, capsys):
    path = write_scenario(tmp_path / "s.json")
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert main(["simulate", "--config", str(path), "--out", str(out1)]) == 0
    assert main(["simulate", "--config", str(path), "--out", str(out2)]) == 0
    assert (out1 / "log.csv").read_bytes() == (out2 / "log.csv").read_bytes()
    assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()
    assert "case=delayed" in capsys.readouterr().out


def test_seed_override_changes_output(tmp_path, capsys):
    path = write_scenario(tmp_path / "s.json")
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    main(["simulate", "--config", str(path), "--out", str(out1)])
    main(["simulate", "--config", str(path), "--seed", "99", "--out", str(out2)])
    assert (out1 / "log.csv").read_bytes() != (out2 / "log.csv").read_bytes()
    rep = json.loads((out2 / "report.json").read_text())
    assert rep["seed"] == 99


def test_gradcheck_passes(capsys):
    assert main(["gradcheck"]) == 0
    out = capsys.readouterr().out
    assert "max_rel_err" in out


def test_data_train_eval_chain(tmp_path, capsys):
    """End-to-end through the subcommands at toy scale: generate, train
    one epoch per variable, replay a held-out log."""
    data = tmp_path / "data"
    models = tmp_path / "models"
    assert main(["gen-data", "--out", str(data),
                 "--duration-train", "30", "--duration-test", "25"]) == 0
    listed = capsys.readouterr().out.strip().splitlines()
    assert len(listed) == 6

    assert main(["train", "--data", str(data), "--out", str(models),
                 "--epochs", "1"]) == 0
    for var in ("x_mv", "x_momega", "f_ev", "f_eomega"):
        assert (models / f"{var}.json").exists()

    report = tmp_path / "ol.json"
    rc = main(["eval-open-loop", "--log", str(data / "test_1.csv"),
               "--models", str(models), "--out", str(report)])
    assert rc == 0
    doc = json.loads(report.read_text())
    assert set(doc["variables"]) == {"x_mv", "x_momega", "f_ev", "f_eomega"}
    for var in doc["variables"].values():
        assert var["conv"] is None or var["conv"] > 0.0


def test_train_without_data_exits_2(tmp_path, capsys):
    rc = main(["train", "--data", str(tmp_path), "--out", str(tmp_path / "m")])
    assert rc == USAGE_EXIT
