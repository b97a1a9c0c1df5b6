"""Directory-per-run store backing the service and CLI.

Layout: <root>/<run_id>/ holds meta.json (descriptor), config.json, the
series CSVs, and report.json. Run state is whatever the files say, so a
process restart loses nothing; meta.json updates are atomic.
"""

from __future__ import annotations

import json
import os
import secrets
import shutil
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .report import COOLING_FILE, POWER_FILE, REPORT_FILE, atomic_write_text, downsample

QUEUED = "QUEUED"
RUNNING = "RUNNING"
DONE = "DONE"
FAILED = "FAILED"
_ORDER = {QUEUED: 0, RUNNING: 1, DONE: 2, FAILED: 2}

DEFAULT_STORE_ENV = "HPCTWIN_STORE"


class StoreError(RuntimeError):
    pass


class UnknownRun(StoreError):
    pass


@dataclass
class RunDescriptor:
    run_id: str
    status: str
    progress: float
    submitted_at: float
    finished_at: float | None
    error: str | None
    label: str

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id, "status": self.status, "progress": self.progress,
            "submitted_at": self.submitted_at, "finished_at": self.finished_at,
            "error": self.error, "label": self.label,
        }


def resolve_store_root(cli_value: str | None = None, config_value: str | None = None) -> Path:
    """Precedence: explicit flag, then environment, then config file, then ./runs."""
    if cli_value:
        return Path(cli_value)
    env = os.environ.get(DEFAULT_STORE_ENV)
    if env:
        return Path(env)
    if config_value:
        return Path(config_value)
    return Path("runs")


class RunStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    # -- lifecycle ------------------------------------------------------
    def create_run(self, config_snapshot: dict, label: str = "") -> str:
        run_id = time.strftime("%Y%m%d-%H%M%S") + "-" + secrets.token_hex(4)
        d = self.run_dir(run_id)
        d.mkdir(parents=True)
        atomic_write_text(d / "config.json", json.dumps(config_snapshot, indent=2))
        self._write_meta(run_id, RunDescriptor(
            run_id=run_id, status=QUEUED, progress=0.0,
            submitted_at=time.time(), finished_at=None, error=None, label=label,
        ))
        return run_id

    def run_dir(self, run_id: str) -> Path:
        if "/" in run_id or run_id.startswith("."):
            raise UnknownRun(f"bad run id {run_id!r}")
        return self.root / run_id

    def _write_meta(self, run_id: str, desc: RunDescriptor) -> None:
        atomic_write_text(self.run_dir(run_id) / "meta.json", json.dumps(desc.to_dict(), indent=2))

    def describe(self, run_id: str) -> RunDescriptor:
        path = self.run_dir(run_id) / "meta.json"
        if not path.exists():
            raise UnknownRun(f"no such run {run_id!r}")
        d = json.loads(path.read_text())
        return RunDescriptor(**d)

    def update(self, run_id: str, status: str | None = None, progress: float | None = None,
               error: str | None = None) -> RunDescriptor:
        desc = self.describe(run_id)
        if status is not None:
            if _ORDER[status] < _ORDER[desc.status]:
                raise StoreError(f"run {run_id}: cannot move {desc.status} -> {status}")
            desc.status = status
            if status in (DONE, FAILED):
                desc.finished_at = time.time()
                desc.progress = 1.0 if status == DONE else desc.progress
        if progress is not None:
            desc.progress = max(desc.progress, float(progress))
        if error is not None:
            desc.error = error
        self._write_meta(run_id, desc)
        return desc

    def list_runs(self) -> list[RunDescriptor]:
        out = []
        for meta in sorted(self.root.glob("*/meta.json")):
            try:
                out.append(RunDescriptor(**json.loads(meta.read_text())))
            except (json.JSONDecodeError, TypeError):
                continue
        out.sort(key=lambda d: d.submitted_at, reverse=True)
        return out

    def delete(self, run_id: str) -> None:
        desc = self.describe(run_id)
        if desc.status == RUNNING:
            raise StoreError(f"run {run_id} is RUNNING; refuse to delete")
        shutil.rmtree(self.run_dir(run_id))

    # -- data access ----------------------------------------------------
    def report(self, run_id: str) -> dict:
        path = self.run_dir(run_id) / REPORT_FILE
        if not path.exists():
            raise UnknownRun(f"run {run_id} has no report (status {self.describe(run_id).status})")
        return json.loads(path.read_text())

    def config(self, run_id: str) -> dict:
        path = self.run_dir(run_id) / "config.json"
        if not path.exists():
            raise UnknownRun(f"run {run_id} has no config")
        return json.loads(path.read_text())

    def metrics(self, run_id: str) -> list[str]:
        names: list[str] = []
        for fname in (POWER_FILE, COOLING_FILE):
            path = self.run_dir(run_id) / fname
            if path.exists():
                cols = pd.read_csv(path, nrows=0).columns.tolist()
                names.extend(c for c in cols if c != "time_s")
        return names

    def series(self, run_id: str, metric: str, stride: int = 1) -> tuple[np.ndarray, np.ndarray]:
        """Timestamped values for one metric, optionally stride-mean reduced."""
        if stride < 1:
            raise ValueError("stride must be >= 1")
        for fname in (POWER_FILE, COOLING_FILE):
            path = self.run_dir(run_id) / fname
            if not path.exists():
                continue
            cols = pd.read_csv(path, nrows=0).columns
            if metric in cols:
                df = pd.read_csv(path, usecols=["time_s", metric])
                return downsample(df["time_s"].to_numpy(), df[metric].to_numpy(), stride)
        raise UnknownRun(f"run {run_id} has no metric {metric!r}")
