import json
from pathlib import Path

import pytest

from hpctwin.cli import main

FIXTURE = Path(__file__).parent / "fixtures" / "sample_trace.json"

TINY_TOPOLOGY = {
    "topology": {
        "num_cdus": 2, "racks_per_cdu": 3, "chassis_per_rack": 2,
        "rectifiers_per_rack": 8, "blades_per_rack": 8, "nodes_per_rack": 16,
        "sivocs_per_rack": 16, "switches_per_rack": 4, "nodes_total": 80,
    },
}


@pytest.fixture()
def tiny_config_file(tmp_path):
    p = tmp_path / "tiny.json"
    p.write_text(json.dumps(TINY_TOPOLOGY))
    return p


def test_run_writes_run_dir(tmp_path, tiny_config_file, capsys):
    out = tmp_path / "myrun"
    rc = main(["run", "--config", str(tiny_config_file), "--hours", "0.05",
               "--no-cooling", "--out", str(out), "--seed", "3"])
    assert rc == 0
    assert (out / "report.json").exists()
    assert (out / "power.csv").exists()
    text = capsys.readouterr().out
    assert "avg_power_mw" in text


def test_run_into_store(tmp_path, tiny_config_file, monkeypatch):
    monkeypatch.setenv("HPCTWIN_STORE", str(tmp_path / "store"))
    rc = main(["run", "--config", str(tiny_config_file), "--hours", "0.05", "--no-cooling"])
    assert rc == 0
    metas = list((tmp_path / "store").glob("*/meta.json"))
    assert len(metas) == 1
    assert json.loads(metas[0].read_text())["status"] == "DONE"


def test_replay_trace(tmp_path, tiny_config_file, capsys):
    out = tmp_path / "replay"
    rc = main(["replay", "--trace", str(FIXTURE), "--config", str(tiny_config_file),
               "--no-cooling", "--out", str(out)])
    assert rc == 0
    assert (out / "ingest_report.json").exists()
    rep = json.loads((out / "report.json").read_text())
    assert rep["jobs_completed"] == 10


def test_report_renders_figures(tmp_path, tiny_config_file, capsys):
    out = tmp_path / "r"
    main(["run", "--config", str(tiny_config_file), "--hours", "0.05", "--out", str(out)])
    rc = main(["report", str(out)])
    assert rc == 0
    assert (out / "figures" / "power.png").exists()
    assert "figure:" in capsys.readouterr().out


def test_compare_two_dirs(tmp_path, tiny_config_file, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["run", "--config", str(tiny_config_file), "--hours", "0.05",
          "--no-cooling", "--out", str(a), "--seed", "1"])
    main(["run", "--config", str(tiny_config_file), "--hours", "0.05",
          "--no-cooling", "--out", str(b), "--seed", "1", "--mode", "DC_380V"])
    rc = main(["compare", str(a), str(b)])
    assert rc == 0
    text = capsys.readouterr().out
    assert "avg_eta_system" in text


def test_bad_config_is_clean_error(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"power": {"gpu_max_w": -5}}))
    rc = main(["run", "--config", str(p), "--hours", "0.01"])
    assert rc == 2
    assert "error" in capsys.readouterr().err


def test_report_on_non_run_dir(tmp_path, capsys):
    rc = main(["report", str(tmp_path)])
    assert rc == 2
