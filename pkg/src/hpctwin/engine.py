"""Main simulation loop: admit arrivals, schedule, compute power, step cooling.

Time advances in 1 s ticks. Each tick runs, in order: admit newly arrived
jobs, one scheduling pass, advance running jobs and release completions,
recompute power with conversion losses, and every cooling stride feed the
CDU heat loads into the cooling stepper. A run is a pure function of
(config, jobs); ensembles vary only the workload seed.
"""

from __future__ import annotations

import math
import time as _time
from dataclasses import dataclass, field

import numpy as np

from .config import REPLAY, EconomicsParams, SystemConfig
from .cooling import CoolingInputs, CoolingModel
from .power import PowerModel, cooling_feed
from .scheduler import NodePool, PendingQueue, schedule_jobs
from .workload import Job, WorkloadStats, generate_synthetic

POWER_CHANNELS = (
    "p_system_w", "p_output_w", "loss_rectifier_w", "loss_sivoc_w",
    "loss_total_w", "eta_system", "nodes_busy", "jobs_running", "jobs_pending",
)


class EngineError(RuntimeError):
    pass


@dataclass
class RunResult:
    """Everything one simulation produced, ready for reporting and storage."""

    time_s: np.ndarray
    channels: dict[str, np.ndarray]
    p_cdu_group_w: np.ndarray          # (ticks, num_cdus)
    cooling_time_s: np.ndarray
    cooling_names: list[str]
    cooling_records: np.ndarray        # (strides, n_outputs)
    job_records: list[dict]
    rejected_jobs: list[dict]
    config_snapshot: dict
    seed: int
    tick_s: float
    jobs_submitted: int
    jobs_completed: int
    wall_clock_s: float = 0.0

    @property
    def duration_s(self) -> float:
        return float(self.time_s.size * self.tick_s)

    def cooling_channel(self, name: str) -> np.ndarray:
        return self.cooling_records[:, self.cooling_names.index(name)]


@dataclass
class Report:
    """End-of-run summary statistics."""

    jobs_completed: int
    throughput_jobs_per_hr: float
    avg_power_mw: float
    total_energy_mwhr: float
    loss_mw: float
    loss_pct: float
    co2_tons: float
    energy_cost_usd: float
    avg_eta_system: float
    # Output-side (post-conversion) energy, reported alongside the input-side
    # totals so consumers can pick either convention.
    total_energy_output_mwhr: float = 0.0
    avg_pue: float = float("nan")

    def to_dict(self) -> dict:
        out = {}
        for k in ("jobs_completed", "throughput_jobs_per_hr", "avg_power_mw",
                  "total_energy_mwhr", "loss_mw", "loss_pct", "co2_tons",
                  "energy_cost_usd", "avg_eta_system", "total_energy_output_mwhr",
                  "avg_pue"):
            v = getattr(self, k)
            # NaN marks channels a run did not produce (e.g. PUE with cooling
            # off); serialize those as null.
            out[k] = None if isinstance(v, float) and math.isnan(v) else v
        return out


@dataclass
class ErrorMetrics:
    channels: dict[str, dict] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dict(self.channels)


def _wetbulb_lookup(config: SystemConfig, series=None):
    if series is None:
        const = config.simulation.wetbulb_c
        return lambda t: const
    arr = np.asarray(series, dtype=float)
    times, temps = arr[:, 0], arr[:, 1]

    def lookup(t: float) -> float:
        idx = np.searchsorted(times, t, side="right") - 1
        return float(temps[max(idx, 0)])

    return lookup


def run_simulation(
    config: SystemConfig,
    jobs: list[Job],
    duration_s: float,
    seed: int = 0,
    wetbulb_series=None,
    progress=None,
    phase_hook=None,
) -> RunResult:
    """Run the tick loop for duration_s simulated seconds.

    progress, if given, is called with a fraction in [0, 1]; phase_hook, if
    given, is called as phase_hook(tick, phase_name) for every phase in tick
    order (used by tests to pin the ordering contract).
    """
    if duration_s <= 0:
        raise ValueError("duration_s must be positive")
    started = _time.perf_counter()
    config.validate()
    sim = config.simulation
    topo = config.topology
    n_ticks = int(round(duration_s / sim.tick_s))
    policy = sim.policy

    jobs = sorted(jobs, key=lambda j: (j.submit_time, j.job_id))
    power_model = PowerModel(config)
    pool = NodePool(topo.nodes_total)
    queue = PendingQueue()

    cpu_util = np.zeros(topo.nodes_total)
    gpu_util = np.zeros(topo.nodes_total)

    channels = {name: np.zeros(n_ticks) for name in POWER_CHANNELS}
    p_cdu = np.zeros((n_ticks, topo.num_cdus))

    cooling_enabled = sim.cooling_enabled
    stride = sim.cooling_stride_ticks
    wetbulb_at = _wetbulb_lookup(config, wetbulb_series)
    cooling_model = CoolingModel(config) if cooling_enabled else None
    cooling_state = None
    cooling_times: list[float] = []
    cooling_rows: list[np.ndarray] = []
    cooling_names: list[str] = []

    running: dict[int, dict] = {}
    job_records: dict[int, dict] = {}
    rejected: list[dict] = []
    next_arrival = 0
    completed = 0
    quanta = sim.trace_quanta_s

    def emit(tick, phase):
        if phase_hook is not None:
            phase_hook(tick, phase)

    for tick in range(n_ticks):
        now = tick * sim.tick_s

        # 1. arrivals
        emit(tick, "arrivals")
        while next_arrival < len(jobs) and jobs[next_arrival].submit_time <= now:
            job = jobs[next_arrival]
            queue.push(job, now)
            job_records[job.job_id] = {
                "job_id": job.job_id, "job_name": job.job_name,
                "node_count": job.node_count, "submit_time": job.submit_time,
                "wall_time_s": job.wall_time_s, "start_time": None, "end_time": None,
            }
            next_arrival += 1

        # 2. schedule
        emit(tick, "schedule")
        allocations, new_rejections = schedule_jobs(
            queue, pool, policy, now, nodes_total=topo.nodes_total)
        rejected.extend(new_rejections)
        for rej in new_rejections:
            rec = job_records.get(rej["job_id"])
            if rec is not None:
                rec["end_time"] = now
                rec["rejected"] = True
        for alloc in allocations:
            job = alloc.job
            running[job.job_id] = {
                "job": job, "nodes": alloc.node_ids, "start": now, "quantum": -1,
            }
            job_records[job.job_id]["start_time"] = now

        # 3. advance running jobs, release completions, refresh utilization
        emit(tick, "advance")
        done_ids = []
        for job_id, entry in running.items():
            job: Job = entry["job"]
            elapsed = now - entry["start"]
            if elapsed >= job.wall_time_s:
                done_ids.append(job_id)
                continue
            q = int(elapsed // quanta)
            if q != entry["quantum"]:
                entry["quantum"] = q
                ids = entry["nodes"]
                cpu_util[ids] = job.cpu_trace.at(elapsed)
                gpu_util[ids] = job.gpu_trace.at(elapsed)
        for job_id in done_ids:
            entry = running.pop(job_id)
            ids = entry["nodes"]
            cpu_util[ids] = 0.0
            gpu_util[ids] = 0.0
            pool.release(job_id)
            job_records[job_id]["end_time"] = now
            completed += 1

        # 4. power with conversion losses
        emit(tick, "power")
        sample = power_model.sample(cpu_util, gpu_util, time_s=now)
        if not math.isfinite(sample.p_system_w):
            raise EngineError(f"non-finite system power at tick {tick}")
        channels["p_system_w"][tick] = sample.p_system_w
        channels["p_output_w"][tick] = sample.p_output_w
        channels["loss_rectifier_w"][tick] = sample.loss_rectifier_w
        channels["loss_sivoc_w"][tick] = sample.loss_sivoc_w
        channels["loss_total_w"][tick] = sample.loss_total_w
        channels["eta_system"][tick] = sample.eta_system
        channels["nodes_busy"][tick] = topo.nodes_total - pool.free_count
        channels["jobs_running"][tick] = len(running)
        channels["jobs_pending"][tick] = len(queue)
        p_cdu[tick] = sample.p_cdu_group_w

        # 5. cooling stride
        if cooling_enabled and tick % stride == 0:
            emit(tick, "cooling")
            heats = cooling_feed(sample.p_cdu_group_w, sim.cooling_efficiency)
            inputs = CoolingInputs(cdu_heat_w=heats, wetbulb_c=wetbulb_at(now),
                                   p_system_w=sample.p_system_w)
            if cooling_state is None:
                cooling_state = cooling_model.warmup(inputs)
            cooling_state, outputs = cooling_model.step(
                cooling_state, inputs, dt_s=stride * sim.tick_s)
            if not cooling_names:
                cooling_names = list(outputs.record.keys())
            cooling_times.append(now)
            cooling_rows.append(np.fromiter(outputs.record.values(), dtype=float))

        if progress is not None and (tick % 900 == 0 or tick == n_ticks - 1):
            progress((tick + 1) / n_ticks)

    # conservation check: every submitted job is accounted for
    submitted = next_arrival
    pending = len(queue)
    n_rej = len({r["job_id"] for r in rejected})
    if submitted != completed + len(running) + pending + n_rej:
        raise EngineError(
            f"job accounting broken: {submitted} submitted != {completed} done "
            f"+ {len(running)} running + {pending} pending + {n_rej} rejected")

    return RunResult(
        time_s=np.arange(n_ticks) * sim.tick_s,
        channels=channels,
        p_cdu_group_w=p_cdu,
        cooling_time_s=np.asarray(cooling_times),
        cooling_names=cooling_names,
        cooling_records=np.vstack(cooling_rows) if cooling_rows else np.zeros((0, 0)),
        job_records=[job_records[k] for k in sorted(job_records)],
        rejected_jobs=rejected,
        config_snapshot=config.to_dict(),
        seed=seed,
        tick_s=sim.tick_s,
        jobs_submitted=submitted,
        jobs_completed=completed,
        wall_clock_s=_time.perf_counter() - started,
    )


def make_report(result: RunResult, economics: EconomicsParams) -> Report:
    """Summary statistics over a completed run."""
    n = result.time_s.size
    if n == 0:
        return Report(0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0)
    hours = result.duration_s / 3600.0
    p = result.channels["p_system_w"]
    energy_mwh = float(np.trapezoid(p, dx=result.tick_s)) / 3.6e9
    out_mwh = float(np.trapezoid(result.channels["p_output_w"], dx=result.tick_s)) / 3.6e9
    loss_mwh = float(np.trapezoid(result.channels["loss_total_w"], dx=result.tick_s)) / 3.6e9
    avg_power_mw = float(p.mean()) / 1e6
    loss_mw = float(result.channels["loss_total_w"].mean()) / 1e6
    loss_pct = 100.0 * loss_mwh / energy_mwh if energy_mwh > 0 else 0.0
    conv_in_mwh = energy_mwh - (result.config_snapshot["topology"]["num_cdus"]
                                * result.config_snapshot["power"]["cdu_pump_w"]
                                * hours / 1e6)
    eta = out_mwh / conv_in_mwh if conv_in_mwh > 0 else 1.0
    co2 = co2_tons(energy_mwh, eta, economics)
    cost = energy_mwh * 1000.0 * economics.electricity_usd_per_kwh
    pue = result.cooling_channel("pue") if result.cooling_records.size else None
    return Report(
        jobs_completed=result.jobs_completed,
        throughput_jobs_per_hr=result.jobs_completed / hours if hours > 0 else 0.0,
        avg_power_mw=avg_power_mw,
        total_energy_mwhr=energy_mwh,
        loss_mw=loss_mw,
        loss_pct=loss_pct,
        co2_tons=co2,
        energy_cost_usd=cost,
        avg_eta_system=eta,
        total_energy_output_mwhr=out_mwh,
        avg_pue=float(np.nanmean(pue)) if pue is not None and pue.size else float("nan"),
    )


def co2_tons(energy_mwh: float, eta_system: float, economics: EconomicsParams) -> float:
    """Emissions from consumed energy: intensity per MWh converted to metric
    tons and grossed up by the conversion efficiency."""
    factor = economics.emission_intensity_lbs_per_mwh / economics.lbs_per_metric_ton
    return energy_mwh * factor / eta_system


def compare_with_measured(result: RunResult, measured_time_s, measured_power_w,
                          channel: str = "p_system_w") -> ErrorMetrics:
    """RMSE/MAE of a simulated channel against a measured series over their
    overlapping time range, aligned to the nearest simulated sample."""
    mt = np.asarray(measured_time_s, dtype=float)
    mv = np.asarray(measured_power_w, dtype=float)
    if mt.size == 0 or mt.size != mv.size:
        raise ValueError("measured series must be nonempty and aligned")
    st = result.time_s
    sv = result.channels[channel]
    lo, hi = max(st[0], mt.min()), min(st[-1], mt.max())
    mask = (mt >= lo) & (mt <= hi)
    if not np.any(mask):
        raise ValueError("no time overlap between simulated and measured series")
    idx = np.clip(np.round((mt[mask] - st[0]) / result.tick_s).astype(int), 0, st.size - 1)
    diff = sv[idx] - mv[mask]
    return ErrorMetrics(channels={channel: {
        "rmse": float(np.sqrt(np.mean(diff ** 2))),
        "mae": float(np.mean(np.abs(diff))),
        "n": int(diff.size),
    }})


def run_ensemble(
    config: SystemConfig,
    stats: WorkloadStats,
    n_seeds: int,
    duration_s: float,
    base_seed: int = 0,
) -> dict:
    """Independent synthetic runs over consecutive seeds, aggregated per
    report field into min/avg/max/std."""
    if n_seeds < 2:
        raise ValueError("n_seeds must be >= 2")
    reports = []
    for k in range(n_seeds):
        seed = base_seed + k
        jobs = generate_synthetic(stats, duration_s, seed,
                                  nodes_total=config.topology.nodes_total,
                                  trace_quanta_s=config.simulation.trace_quanta_s)
        result = run_simulation(config, jobs, duration_s, seed=seed)
        reports.append(make_report(result, config.economics))
    table = {}
    for name in reports[0].to_dict():
        vals = np.array([r.to_dict()[name] for r in reports], dtype=float)
        vals = vals[np.isfinite(vals)]
        if vals.size == 0:
            continue
        table[name] = {
            "min": float(vals.min()), "avg": float(vals.mean()),
            "max": float(vals.max()), "std": float(vals.std()),
        }
    return {"n_seeds": n_seeds, "fields": table,
            "reports": [r.to_dict() for r in reports]}
