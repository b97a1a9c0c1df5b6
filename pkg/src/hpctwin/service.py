"""HTTP scenario service: launch simulations, poll progress, fetch series.

Stateless per request; everything durable lives in the run store. Runs
execute on a bounded worker pool so a batch of what-if submissions queues
instead of oversubscribing the host.
"""

from __future__ import annotations

import threading
import traceback
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, ConfigDict, Field

from .config import ConfigError, SystemConfig
from .engine import make_report, run_simulation
from .report import write_run
from .store import DONE, FAILED, RUNNING, RunStore, StoreError, UnknownRun
from .workload import (
    FRONTIER_DAILY_STATS,
    Dist,
    WorkloadStats,
    generate_synthetic,
    ingest_trace,
)


class SyntheticSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")
    type: str = Field("synthetic", pattern="^synthetic$")
    duration_s: float = Field(86400.0, gt=0, le=14 * 86400.0)
    seed: int = 0
    t_avg_s: float = Field(FRONTIER_DAILY_STATS.t_avg_s, gt=0)
    node_count_mean: float = Field(FRONTIER_DAILY_STATS.node_count_dist.mean, ge=1)
    node_count_std: float = Field(FRONTIER_DAILY_STATS.node_count_dist.std, ge=0)
    wall_time_mean_s: float = Field(FRONTIER_DAILY_STATS.wall_time_dist.mean, gt=0)
    wall_time_std_s: float = Field(FRONTIER_DAILY_STATS.wall_time_dist.std, ge=0)
    cpu_util_mean: float = Field(FRONTIER_DAILY_STATS.cpu_util_dist.mean, ge=0, le=1)
    cpu_util_std: float = Field(FRONTIER_DAILY_STATS.cpu_util_dist.std, ge=0)
    gpu_util_mean: float = Field(FRONTIER_DAILY_STATS.gpu_util_dist.mean, ge=0, le=1)
    gpu_util_std: float = Field(FRONTIER_DAILY_STATS.gpu_util_dist.std, ge=0)

    def stats(self) -> WorkloadStats:
        return WorkloadStats(
            t_avg_s=self.t_avg_s,
            node_count_dist=Dist(self.node_count_mean, self.node_count_std),
            wall_time_dist=Dist(self.wall_time_mean_s, self.wall_time_std_s),
            cpu_util_dist=Dist(self.cpu_util_mean, self.cpu_util_std),
            gpu_util_dist=Dist(self.gpu_util_mean, self.gpu_util_std),
        )


class TraceSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")
    type: str = Field("trace", pattern="^trace$")
    path: str
    duration_s: float | None = Field(None, gt=0)


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    label: str = ""
    config: dict = Field(default_factory=dict)
    workload: SyntheticSpec | TraceSpec = Field(default_factory=SyntheticSpec)


def create_app(store: RunStore, max_concurrent: int = 2,
               frontend_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="hpctwin scenario service")
    pool = ThreadPoolExecutor(max_workers=max_concurrent, thread_name_prefix="run")
    lock = threading.Lock()

    def execute(run_id: str, config: SystemConfig, req: RunRequest) -> None:
        try:
            store.update(run_id, status=RUNNING)
            if isinstance(req.workload, TraceSpec):
                jobs, _ = ingest_trace(req.workload.path, config.power)
                duration = req.workload.duration_s or max(
                    j.submit_time + j.wall_time_s for j in jobs) + 60.0
                seed = 0
            else:
                spec = req.workload
                jobs = generate_synthetic(
                    spec.stats(), spec.duration_s, spec.seed,
                    nodes_total=config.topology.nodes_total,
                    trace_quanta_s=config.simulation.trace_quanta_s)
                duration = spec.duration_s
                seed = spec.seed

            def on_progress(frac: float) -> None:
                store.update(run_id, progress=frac)

            result = run_simulation(config, jobs, duration, seed=seed, progress=on_progress)
            report = make_report(result, config.economics)
            write_run(result, report, store.run_dir(run_id))
            store.update(run_id, status=DONE)
        except Exception as exc:  # isolation: a failed run must not take the service down
            store.update(run_id, status=FAILED,
                         error=f"{type(exc).__name__}: {exc}")
            traceback.print_exc()

    @app.post("/runs", status_code=201)
    def submit_run(req: RunRequest):
        try:
            config = SystemConfig.from_dict(req.config)
        except ConfigError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        if isinstance(req.workload, TraceSpec) and not Path(req.workload.path).exists():
            raise HTTPException(status_code=422, detail=f"trace file not found: {req.workload.path}")
        with lock:
            run_id = store.create_run(config.to_dict(), label=req.label)
        pool.submit(execute, run_id, config, req)
        return {"run_id": run_id}

    @app.get("/runs")
    def list_runs():
        return {"runs": [d.to_dict() for d in store.list_runs()]}

    @app.get("/runs/{run_id}")
    def get_run(run_id: str):
        try:
            return store.describe(run_id).to_dict()
        except UnknownRun as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.get("/runs/{run_id}/report")
    def get_report(run_id: str):
        try:
            return store.report(run_id)
        except UnknownRun as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.get("/runs/{run_id}/metrics")
    def get_metrics(run_id: str):
        try:
            store.describe(run_id)
            return {"metrics": store.metrics(run_id)}
        except UnknownRun as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.get("/runs/{run_id}/series")
    def get_series(run_id: str, metric: str = Query(...), stride: int = Query(1, ge=1)):
        try:
            t, v = store.series(run_id, metric, stride)
        except UnknownRun as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return {"metric": metric, "stride": stride,
                "time_s": t.tolist(), "values": v.tolist()}

    @app.get("/compare")
    def compare(a: str = Query(...), b: str = Query(...)):
        try:
            da, db = store.describe(a), store.describe(b)
        except UnknownRun as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        if da.status != DONE or db.status != DONE:
            raise HTTPException(status_code=409,
                                detail=f"both runs must be DONE (a={da.status}, b={db.status})")
        ra, rb = store.report(a), store.report(b)
        fields = {}
        for key in ra:
            va, vb = ra.get(key), rb.get(key)
            if isinstance(va, (int, float)) and isinstance(vb, (int, float)):
                delta = vb - va
                pct = 100.0 * delta / va if va else None
                fields[key] = {"a": va, "b": vb, "delta": delta, "pct": pct}
        return {"a": a, "b": b, "fields": fields}

    @app.delete("/runs/{run_id}", status_code=204)
    def delete_run(run_id: str):
        try:
            store.delete(run_id)
        except UnknownRun as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except StoreError as exc:
            raise HTTPException(status_code=409, detail=str(exc))

    if frontend_dir is not None and Path(frontend_dir).exists():
        app.mount("/dashboard", StaticFiles(directory=Path(frontend_dir), html=True),
                  name="dashboard")

    return app
