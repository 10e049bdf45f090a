import json
from pathlib import Path

import pytest

from src.cli import EXIT_CONFIG, EXIT_DOMAIN, EXIT_OK, EXIT_VERIFY, main, sweep_table
from src.colddamp import optimal_strength
from src.config import config_from_dict
from src.utils import DataProcessor

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

UNIT = {
    "oscillator": {"units": "natural", "omega_p": 1.0},
    "noise": {"units": "natural", "s_zz": 1.0, "s_ff": 1.0, "s_zf": 0.0},
}


def write_config(tmp_path, raw, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(raw), encoding="utf-8")
    return str(path)


def run_json(capsys, *argv):
    code = main([*argv, "--format", "json"])
    return code, json.loads(capsys.readouterr().out)


def test_analyze_text_report(capsys):
    assert main(["analyze", "--config", str(CONFIGS / "fixture.json")]) == EXIT_OK
    out = capsys.readouterr().out
    assert "N_eff" in out
    assert "controller:" in out


def test_analyze_json_report(capsys, fixtures):
    code, report = run_json(capsys, "analyze", "--config", str(CONFIGS / "fixture.json"))
    assert code == EXIT_OK
    assert report["N_eff"] == pytest.approx(fixtures["markovian"]["n_eff"], rel=1e-6)
    assert report["controller"]["C_1"]["im"] == pytest.approx(fixtures["markovian"]["c1_im"], rel=1e-6)
    assert report["squeeze_class"] == "position-squeezed"
    assert report["metadata"]["command"] == "analyze"
    assert report["flags"] == []


def test_free_mass_phase_readout_is_flagged(capsys):
    code, report = run_json(capsys, "analyze", "--config", str(CONFIGS / "ligo_phase.json"))
    assert code == EXIT_OK
    assert report["N_eff"] >= 0.5
    assert "free-mass SQL not beaten" in report["flags"]


def test_ground_state_config(capsys):
    code, report = run_json(capsys, "analyze", "--config", str(CONFIGS / "ground_state.json"))
    assert code == EXIT_OK
    assert 0.0 < report["N_eff"] < 1e-3


def test_exit_codes(tmp_path, capsys):
    assert main(["analyze"]) == EXIT_CONFIG
    assert main(["analyze", "--config", str(tmp_path / "absent.json")]) == EXIT_CONFIG
    heisenberg = dict(UNIT, noise={"s_zz": 1.0, "s_ff": 0.5})
    assert main(["analyze", "--config", write_config(tmp_path, heisenberg)]) == EXIT_DOMAIN
    degenerate = dict(UNIT, noise={"s_zz": 1.0, "s_ff": 1e14 + 1.0, "s_zf": 1e7})
    assert main(["analyze", "--config", write_config(tmp_path, degenerate, "deg.json")]) == EXIT_DOMAIN
    err = capsys.readouterr().err
    assert "DegenerateControllerError" in err


def test_sweep_writes_csv_with_metadata(tmp_path):
    raw = dict(UNIT, sweep={"axes": [{"name": "s_ff", "values": [0.5, 1.0, 4.0]}]})
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--config", write_config(tmp_path, raw), "--out", str(out)]) == EXIT_OK
    table = DataProcessor.read_csv(out)
    meta = DataProcessor.read_metadata(out)
    assert list(table.columns) == ["s_ff", "n_eff", "u_ctrl", "q_eff", "eta2", "mu", "a_over_b"]
    assert table["s_ff"].tolist() == [0.5, 1.0, 4.0]
    # S_FF = 0.5 violates the Heisenberg bound
    assert table["n_eff"].isna().tolist() == [True, False, False]
    assert table["n_eff"][1] == pytest.approx(0.2483029, rel=1e-6)
    assert meta["command"] == "sweep"
    assert len(meta["config_hash"]) == 16


def test_sweep_output_is_reproducible(tmp_path):
    raw = dict(UNIT, sweep={"axes": [{"name": "s_zf", "start": -0.5, "stop": 0.5, "num": 5},
                                     {"name": "omega_p", "values": [0.5, 2.0]}]})
    path = write_config(tmp_path, raw)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sweep", "--config", path, "--out", str(a), "--workers", "1"]) == EXIT_OK
    assert main(["sweep", "--config", path, "--out", str(b), "--workers", "3"]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert len(DataProcessor.read_csv(a)) == 10


def test_single_point_sweep_equals_analyze(capsys):
    cfg = config_from_dict(dict(UNIT, sweep={"axes": [{"name": "s_zf", "values": [0.0]}]}))
    table = sweep_table(cfg)
    code, report = run_json(capsys, "analyze", "--config", str(CONFIGS / "fixture.json"))
    assert table["n_eff"][0] == pytest.approx(report["N_eff"], rel=1e-12)


def test_sweep_rejects_unknown_axis(tmp_path):
    raw = dict(UNIT, sweep={"axes": [{"name": "temperature", "values": [1.0]}]})
    assert main(["sweep", "--config", write_config(tmp_path, raw)]) == EXIT_CONFIG


def test_optimize_thermal_strength(tmp_path, capsys):
    path = write_config(tmp_path, {"thermal": {"theta": 0.5}})
    code, report = run_json(capsys, "optimize", "--config", path)
    assert code == EXIT_OK
    assert report["omega_q_over_omega_p"] == pytest.approx(optimal_strength(0.5), rel=1e-4)
    assert report["n_eff"] == pytest.approx(report["n_opt_closed_form"], abs=1e-6)


def test_fig2_left_table(tmp_path):
    raw = {"sweep": {"thetas": [0.1, 10.0], "x": {"name": "x", "values": [0.5, 5.0, 50.0]}}}
    out = tmp_path / "left.csv"
    assert main(["fig2", "left", "--config", write_config(tmp_path, raw), "--out", str(out)]) == EXIT_OK
    table = DataProcessor.read_csv(out)
    assert len(table) == 6
    assert table["theta"].tolist() == [0.1] * 3 + [10.0] * 3


def test_verify_reports_corrupted_fixture(tmp_path, capsys, fixtures):
    broken = json.loads(json.dumps(fixtures))
    broken["markovian"]["u_ctrl"] = 0.75
    path = tmp_path / "fixtures.json"
    path.write_text(json.dumps(broken), encoding="utf-8")
    assert main(["verify", "--fixtures", str(path)]) == EXIT_VERIFY
    out = capsys.readouterr().out
    assert "failed invariant [markovian_fixture]" in out
    assert "U_ctrl" in out


def test_run_dispatches_on_config_mode(tmp_path, capsys):
    code, report = run_json(capsys, "run", "--config", str(CONFIGS / "fixture.json"))
    assert code == EXIT_OK
    assert report["metadata"]["command"] == "analyze"
    assert report["N_eff"] == pytest.approx(0.2483029, rel=1e-6)

    out = tmp_path / "cold.csv"
    assert main(["run", "--config", str(CONFIGS / "cold_damping.toml"), "--out", str(out)]) == EXIT_OK
    table = DataProcessor.read_csv(out)
    assert DataProcessor.read_metadata(out)["command"] == "sweep"
    assert len(table) == 61
    assert table["x"].iloc[0] == pytest.approx(0.01)


def test_run_fig2_mode_uses_panel_option(tmp_path):
    raw = {"mode": "fig2",
           "sweep": {"thetas": [0.1], "x": {"name": "x", "values": [0.5, 5.0]}}}
    out = tmp_path / "left.csv"
    path = write_config(tmp_path, raw)
    assert main(["run", "--config", path, "--panel", "left", "--out", str(out)]) == EXIT_OK
    assert DataProcessor.read_metadata(out)["command"] == "fig2 left"
    assert len(DataProcessor.read_csv(out)) == 2


def test_run_needs_config(capsys):
    assert main(["run"]) == EXIT_CONFIG
