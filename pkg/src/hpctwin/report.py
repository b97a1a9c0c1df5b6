"""Run persistence and report rendering.

A finished run is written as delimited series files plus a machine-readable
report; the `report` CLI path additionally renders matplotlib figures next
to them. Writes are atomic (temp file, then rename) so a crashed writer
never leaves a half-readable run behind.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from .engine import Report, RunResult

POWER_FILE = "power.csv"
COOLING_FILE = "cooling.csv"
JOBS_FILE = "jobs.csv"
REPORT_FILE = "report.json"


def atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_df(df: pd.DataFrame, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    os.close(fd)
    try:
        df.to_csv(tmp, index=False)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def power_frame(result: RunResult) -> pd.DataFrame:
    data = {"time_s": result.time_s}
    data.update(result.channels)
    for i in range(result.p_cdu_group_w.shape[1]):
        data[f"p_cdu_group_w_{i:02d}"] = result.p_cdu_group_w[:, i]
    return pd.DataFrame(data)


def cooling_frame(result: RunResult) -> pd.DataFrame:
    if result.cooling_records.size == 0:
        return pd.DataFrame({"time_s": []})
    data = {"time_s": result.cooling_time_s}
    for j, name in enumerate(result.cooling_names):
        data[name] = result.cooling_records[:, j]
    return pd.DataFrame(data)


def jobs_frame(result: RunResult) -> pd.DataFrame:
    return pd.DataFrame(result.job_records)


def write_run(result: RunResult, report: Report, out_dir: str | Path) -> Path:
    """Persist one run: config snapshot, delimited series, job table, report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out / "config.json", json.dumps(result.config_snapshot, indent=2))
    _atomic_write_df(power_frame(result), out / POWER_FILE)
    cf = cooling_frame(result)
    if len(cf.columns) > 1:
        _atomic_write_df(cf, out / COOLING_FILE)
    jf = jobs_frame(result)
    if not jf.empty:
        _atomic_write_df(jf, out / JOBS_FILE)
    payload = report.to_dict()
    payload["seed"] = result.seed
    payload["duration_s"] = result.duration_s
    payload["jobs_submitted"] = result.jobs_submitted
    payload["rejected_jobs"] = result.rejected_jobs
    payload["wall_clock_s"] = result.wall_clock_s
    atomic_write_text(out / REPORT_FILE, json.dumps(payload, indent=2))
    return out


def render_figures(run_dir: str | Path, out_dir: str | Path | None = None) -> list[Path]:
    """Render the standard figures for a stored run; returns written paths."""
    run_dir = Path(run_dir)
    fig_dir = Path(out_dir) if out_dir is not None else run_dir / "figures"
    fig_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    power = pd.read_csv(run_dir / POWER_FILE)
    t_hr = power["time_s"] / 3600.0

    fig, ax = plt.subplots(figsize=(9, 4.5))
    ax.plot(t_hr, power["p_system_w"] / 1e6, lw=0.8, color="tab:red", label="system power")
    ax.plot(t_hr, power["loss_total_w"] / 1e6, lw=0.8, color="tab:orange", label="conversion loss")
    ax.set_xlabel("time (h)")
    ax.set_ylabel("MW")
    ax.legend(loc="upper right")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    p = fig_dir / "power.png"
    fig.savefig(p, dpi=130)
    plt.close(fig)
    written.append(p)

    fig, ax = plt.subplots(figsize=(9, 3.5))
    ax.plot(t_hr, 100.0 * power["eta_system"], lw=0.8, color="tab:green")
    ax.set_xlabel("time (h)")
    ax.set_ylabel("conversion efficiency (%)")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    p = fig_dir / "efficiency.png"
    fig.savefig(p, dpi=130)
    plt.close(fig)
    written.append(p)

    fig, ax = plt.subplots(figsize=(9, 3.5))
    ax.plot(t_hr, power["nodes_busy"], lw=0.8, color="tab:blue")
    ax.set_xlabel("time (h)")
    ax.set_ylabel("busy nodes")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    p = fig_dir / "utilization.png"
    fig.savefig(p, dpi=130)
    plt.close(fig)
    written.append(p)

    cooling_path = run_dir / COOLING_FILE
    if cooling_path.exists():
        cool = pd.read_csv(cooling_path)
        tc = cool["time_s"] / 3600.0

        fig, ax = plt.subplots(figsize=(9, 3.5))
        ax.plot(tc, cool["pue"], lw=0.9, color="tab:purple")
        ax.axhline(1.0, color="gray", lw=0.8, ls="--")
        ax.set_xlabel("time (h)")
        ax.set_ylabel("PUE")
        ax.grid(alpha=0.3)
        fig.tight_layout()
        p = fig_dir / "pue.png"
        fig.savefig(p, dpi=130)
        plt.close(fig)
        written.append(p)

        fig, ax = plt.subplots(figsize=(9, 4))
        for col, label in (
            ("htw_supply_temp_c", "HTW supply"),
            ("htw_return_temp_c", "HTW return"),
            ("ctw_supply_temp_c", "CTW supply"),
            ("cdu_00_secondary_supply_temp_c", "CDU0 secondary supply"),
        ):
            if col in cool:
                ax.plot(tc, cool[col], lw=0.9, label=label)
        ax.set_xlabel("time (h)")
        ax.set_ylabel("temperature (C)")
        ax.legend(loc="upper right", fontsize=8)
        ax.grid(alpha=0.3)
        fig.tight_layout()
        p = fig_dir / "cooling_temps.png"
        fig.savefig(p, dpi=130)
        plt.close(fig)
        written.append(p)

        fig, ax = plt.subplots(figsize=(9, 3.2))
        for col, label in (
            ("num_ct_staged", "tower cells"),
            ("num_htwp_staged", "HTW pumps"),
            ("num_ctwp_staged", "CTW pumps"),
            ("num_ehx_staged", "heat exchangers"),
        ):
            if col in cool:
                ax.step(tc, cool[col], lw=0.9, where="post", label=label)
        ax.set_xlabel("time (h)")
        ax.set_ylabel("staged count")
        ax.legend(loc="upper right", fontsize=8)
        ax.grid(alpha=0.3)
        fig.tight_layout()
        p = fig_dir / "staging.png"
        fig.savefig(p, dpi=130)
        plt.close(fig)
        written.append(p)

    return written


def downsample(time_s: np.ndarray, values: np.ndarray, stride: int) -> tuple[np.ndarray, np.ndarray]:
    """Stride-mean reduction; the last partial window is dropped."""
    if stride <= 1:
        return time_s, values
    n = (values.size // stride) * stride
    if n == 0:
        return time_s[:0], values[:0]
    t = time_s[:n].reshape(-1, stride).mean(axis=1)
    v = values[:n].reshape(-1, stride).mean(axis=1)
    return t, v
