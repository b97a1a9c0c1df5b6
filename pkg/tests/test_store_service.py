import json
import time
from dataclasses import replace

import numpy as np
import pytest
from fastapi.testclient import TestClient

from hpctwin.config import SystemConfig
from hpctwin.engine import make_report, run_simulation
from hpctwin.report import downsample, render_figures, write_run
from hpctwin.service import create_app
from hpctwin.store import DONE, FAILED, RunStore, StoreError, UnknownRun, resolve_store_root
from hpctwin.workload import Dist, WorkloadStats, generate_synthetic


@pytest.fixture()
def tiny_run(tiny, tmp_path):
    cfg = tiny.with_overrides(simulation=replace(tiny.simulation, cooling_enabled=True))
    stats = WorkloadStats(30.0, Dist(6, 4), Dist(90, 30), Dist(0.5, 0.2), Dist(0.5, 0.2))
    jobs = generate_synthetic(stats, 300.0, seed=2, nodes_total=80)
    result = run_simulation(cfg, jobs, 300.0, seed=2)
    report = make_report(result, cfg.economics)
    out = write_run(result, report, tmp_path / "run0")
    return out


class TestDownsample:
    def test_stride_mean_on_fixture(self):
        t = np.arange(120, dtype=float)
        v = np.arange(120, dtype=float)
        td, vd = downsample(t, v, 60)
        assert len(vd) == 2
        assert vd[0] == pytest.approx(np.mean(np.arange(60)))
        assert vd[1] == pytest.approx(np.mean(np.arange(60, 120)))

    def test_stride_one_identity(self):
        t = np.arange(7.0)
        td, vd = downsample(t, t, 1)
        assert np.array_equal(td, t) and np.array_equal(vd, t)


class TestRunFiles:
    def test_layout(self, tiny_run):
        for name in ("config.json", "power.csv", "cooling.csv", "jobs.csv", "report.json"):
            assert (tiny_run / name).exists(), name

    def test_report_fields(self, tiny_run):
        rep = json.loads((tiny_run / "report.json").read_text())
        for key in ("jobs_completed", "throughput_jobs_per_hr", "avg_power_mw",
                    "total_energy_mwhr", "loss_mw", "loss_pct", "co2_tons",
                    "energy_cost_usd"):
            assert key in rep

    def test_figures_rendered(self, tiny_run):
        written = render_figures(tiny_run)
        names = {p.name for p in written}
        assert {"power.png", "efficiency.png", "pue.png"} <= names
        assert all(p.stat().st_size > 1000 for p in written)


class TestStore:
    def test_lifecycle_and_persistence(self, tmp_path, tiny_run):
        store = RunStore(tmp_path / "store")
        run_id = store.create_run({"topology": {}}, label="x")
        assert store.describe(run_id).status == "QUEUED"
        store.update(run_id, status="RUNNING", progress=0.5)
        store.update(run_id, status=DONE)
        # fresh instance over the same directory sees identical state
        again = RunStore(tmp_path / "store")
        desc = again.describe(run_id)
        assert desc.status == DONE
        assert desc.progress == 1.0

    def test_no_backward_transitions(self, tmp_path):
        store = RunStore(tmp_path / "store")
        run_id = store.create_run({})
        store.update(run_id, status=DONE)
        with pytest.raises(StoreError):
            store.update(run_id, status="RUNNING")

    def test_unknown_run(self, tmp_path):
        store = RunStore(tmp_path / "store")
        with pytest.raises(UnknownRun):
            store.describe("nope")

    def test_series_access_and_stride(self, tmp_path, tiny_run):
        store = RunStore(tiny_run.parent)
        run_id = tiny_run.name
        t, v = store.series(run_id, "p_system_w")
        assert len(v) == 300
        t2, v2 = store.series(run_id, "p_system_w", stride=60)
        assert len(v2) == 5
        assert v2[0] == pytest.approx(v[:60].mean())
        tp, vp = store.series(run_id, "pue")
        assert len(vp) == 20

    def test_unknown_metric(self, tmp_path, tiny_run):
        store = RunStore(tiny_run.parent)
        with pytest.raises(UnknownRun):
            store.series(tiny_run.name, "bogus_metric")

    def test_resolve_store_root_precedence(self, monkeypatch, tmp_path):
        monkeypatch.delenv("HPCTWIN_STORE", raising=False)
        assert resolve_store_root(None, None) == resolve_store_root()
        monkeypatch.setenv("HPCTWIN_STORE", str(tmp_path / "env"))
        assert str(resolve_store_root(None, "cfg")) == str(tmp_path / "env")
        assert str(resolve_store_root("flag", "cfg")) == "flag"
        monkeypatch.delenv("HPCTWIN_STORE")
        assert str(resolve_store_root(None, "cfg")) == "cfg"


def tiny_request(seed=1, mode=None, duration=240.0):
    cfg = {
        "topology": {
            "num_cdus": 2, "racks_per_cdu": 3, "chassis_per_rack": 2,
            "rectifiers_per_rack": 8, "blades_per_rack": 8, "nodes_per_rack": 16,
            "sivocs_per_rack": 16, "switches_per_rack": 4, "nodes_total": 80,
        },
        "simulation": {"cooling_enabled": False},
    }
    if mode:
        cfg["loss_model"] = {"mode": mode}
    return {
        "label": f"test seed {seed}",
        "config": cfg,
        "workload": {
            "type": "synthetic", "duration_s": duration, "seed": seed,
            "t_avg_s": 20.0, "node_count_mean": 6, "node_count_std": 4,
            "wall_time_mean_s": 60.0, "wall_time_std_s": 20.0,
        },
    }


def wait_done(client, run_id, timeout=60.0):
    t0 = time.time()
    while time.time() - t0 < timeout:
        desc = client.get(f"/runs/{run_id}").json()
        if desc["status"] in (DONE, FAILED):
            return desc
        time.sleep(0.1)
    raise TimeoutError(f"run {run_id} did not finish")


class TestService:
    @pytest.fixture()
    def client(self, tmp_path):
        store = RunStore(tmp_path / "svc")
        app = create_app(store, max_concurrent=2)
        with TestClient(app) as c:
            yield c

    def test_submit_poll_series_report(self, client):
        r = client.post("/runs", json=tiny_request())
        assert r.status_code == 201
        run_id = r.json()["run_id"]
        desc = wait_done(client, run_id)
        assert desc["status"] == DONE
        assert desc["progress"] == 1.0

        rep = client.get(f"/runs/{run_id}/report").json()
        assert rep["avg_power_mw"] > 0

        s = client.get(f"/runs/{run_id}/series",
                       params={"metric": "p_system_w", "stride": 60}).json()
        assert len(s["values"]) == 4
        listing = client.get("/runs").json()["runs"]
        assert any(d["run_id"] == run_id for d in listing)

    def test_unknown_config_field_rejected(self, client):
        req = tiny_request()
        req["config"]["powerr"] = {}
        r = client.post("/runs", json=req)
        assert r.status_code == 422
        assert "powerr" in r.json()["detail"]

    def test_unknown_request_field_rejected(self, client):
        req = tiny_request()
        req["bogus"] = 1
        assert client.post("/runs", json=req).status_code == 422

    def test_distinct_run_ids(self, client):
        a = client.post("/runs", json=tiny_request(seed=1)).json()["run_id"]
        b = client.post("/runs", json=tiny_request(seed=2)).json()["run_id"]
        assert a != b
        wait_done(client, a)
        wait_done(client, b)

    def test_compare_identical_runs(self, client):
        a = client.post("/runs", json=tiny_request(seed=7)).json()["run_id"]
        b = client.post("/runs", json=tiny_request(seed=7)).json()["run_id"]
        wait_done(client, a)
        wait_done(client, b)
        cmp = client.get("/compare", params={"a": a, "b": b}).json()
        assert cmp["fields"]["avg_power_mw"]["delta"] == 0.0
        assert cmp["fields"]["loss_pct"]["delta"] == 0.0

    def test_compare_modes_shows_efficiency_gap(self, client):
        a = client.post("/runs", json=tiny_request(seed=3, mode="AC_BASELINE")).json()["run_id"]
        b = client.post("/runs", json=tiny_request(seed=3, mode="DC_380V")).json()["run_id"]
        wait_done(client, a)
        wait_done(client, b)
        cmp = client.get("/compare", params={"a": a, "b": b}).json()
        assert cmp["fields"]["avg_eta_system"]["delta"] > 0.02

    def test_compare_requires_done(self, client):
        a = client.post("/runs", json=tiny_request(seed=4)).json()["run_id"]
        r = client.get("/compare", params={"a": a, "b": "missing"})
        assert r.status_code == 404
        wait_done(client, a)

    def test_delete(self, client):
        a = client.post("/runs", json=tiny_request(seed=5)).json()["run_id"]
        wait_done(client, a)
        assert client.delete(f"/runs/{a}").status_code == 204
        assert client.get(f"/runs/{a}").status_code == 404

    def test_failed_run_isolated(self, client, tmp_path):
        req = tiny_request()
        req["workload"] = {"type": "trace", "path": str(tmp_path / "missing.json")}
        r = client.post("/runs", json=req)
        assert r.status_code == 422
        # and a healthy run still works afterwards
        ok = client.post("/runs", json=tiny_request(seed=9)).json()["run_id"]
        assert wait_done(client, ok)["status"] == DONE

    def test_trace_workload(self, client, tmp_path):
        from pathlib import Path
        fixture = Path(__file__).parent / "fixtures" / "sample_trace.json"
        req = {
            "label": "replay",
            "config": tiny_request()["config"],
            "workload": {"type": "trace", "path": str(fixture)},
        }
        run_id = client.post("/runs", json=req).json()["run_id"]
        desc = wait_done(client, run_id)
        assert desc["status"] == DONE
        rep = client.get(f"/runs/{run_id}/report").json()
        assert rep["jobs_completed"] == 10
