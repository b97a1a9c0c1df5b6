"""Job streams: telemetry-trace ingest and synthetic Poisson workloads.

Both paths produce the same Job shape the engine consumes: a node count, a
wall time, a submit time, and CPU/GPU utilization traces sampled at a fixed
quantum. Traces recorded as component wattage are inverted back to
utilization through the same linear power map the simulator applies.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ComponentPowerTable

TRACE_FORMAT = "hpc-telemetry-v1"


class TraceError(ValueError):
    """Malformed or inconsistent telemetry trace."""


@dataclass(frozen=True)
class UtilTrace:
    """Utilization fractions sampled every quanta_s seconds."""

    quanta_s: float
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.values.ndim != 1 or self.values.size < 1:
            raise ValueError("trace needs at least one value")
        if np.any((self.values < 0.0) | (self.values > 1.0)):
            raise ValueError("trace values must lie in [0, 1]")

    @property
    def duration_s(self) -> float:
        return self.quanta_s * self.values.size

    def at(self, elapsed_s: float) -> float:
        """Zero-order hold: each quantum's value covers its whole interval."""
        idx = min(int(elapsed_s // self.quanta_s), self.values.size - 1)
        return float(self.values[max(idx, 0)])


@dataclass(frozen=True)
class Job:
    job_id: int
    job_name: str
    node_count: int
    submit_time: float
    wall_time_s: float
    cpu_trace: UtilTrace
    gpu_trace: UtilTrace
    pinned_nodes: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError(f"job {self.job_id}: node_count must be >= 1")
        if self.wall_time_s <= 0:
            raise ValueError(f"job {self.job_id}: wall_time_s must be positive")
        if self.pinned_nodes is not None and len(self.pinned_nodes) != self.node_count:
            raise ValueError(
                f"job {self.job_id}: pinned_nodes has {len(self.pinned_nodes)} "
                f"entries for node_count {self.node_count}"
            )

    def to_dict(self) -> dict:
        d = {
            "job_id": self.job_id,
            "job_name": self.job_name,
            "node_count": self.node_count,
            "submit_time": self.submit_time,
            "wall_time_s": self.wall_time_s,
            "cpu_util": self.cpu_trace.values.tolist(),
            "gpu_util": self.gpu_trace.values.tolist(),
            "trace_quanta_s": self.cpu_trace.quanta_s,
        }
        if self.pinned_nodes is not None:
            d["nodes"] = list(self.pinned_nodes)
        return d


@dataclass(frozen=True)
class Dist:
    mean: float
    std: float

    def __iter__(self):
        return iter((self.mean, self.std))


@dataclass(frozen=True)
class WorkloadStats:
    """Summary statistics that parameterize the synthetic generator."""

    t_avg_s: float
    node_count_dist: Dist
    wall_time_dist: Dist
    cpu_util_dist: Dist
    gpu_util_dist: Dist

    def validate(self) -> "WorkloadStats":
        if self.t_avg_s <= 0:
            raise ValueError("t_avg_s must be positive")
        for name in ("node_count_dist", "wall_time_dist", "cpu_util_dist", "gpu_util_dist"):
            d = getattr(self, name)
            if d.mean < 0:
                raise ValueError(f"{name}.mean must be >= 0")
            if d.std < 0:
                raise ValueError(f"{name}.std must be >= 0")
        if self.wall_time_dist.mean <= 0:
            raise ValueError("wall_time_dist.mean must be positive")
        return self


# Daily-average workload shape observed on the reference machine: mean job
# inter-arrival 138 s, 268 nodes and 39 minutes per job on average. The
# utilization distributions are calibration defaults chosen to reproduce the
# observed conversion-loss fraction, since per-job utilization statistics are
# not published.
FRONTIER_DAILY_STATS = WorkloadStats(
    t_avg_s=138.0,
    node_count_dist=Dist(268.0, 626.0),
    wall_time_dist=Dist(39.0 * 60.0, 14.0 * 60.0),
    cpu_util_dist=Dist(0.30, 0.15),
    gpu_util_dist=Dist(0.30, 0.18),
)


@dataclass
class IngestReport:
    """Machine-readable summary of one trace ingest."""

    path: str = ""
    jobs_ingested: int = 0
    records_total: int = 0
    clamped_below_idle: int = 0
    clamped_above_max: int = 0
    rejected_jobs: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "path": self.path,
            "jobs_ingested": self.jobs_ingested,
            "records_total": self.records_total,
            "clamped_below_idle": self.clamped_below_idle,
            "clamped_above_max": self.clamped_above_max,
            "rejected_jobs": self.rejected_jobs,
        }


def power_to_util(power_w, idle_w: float, max_w: float):
    """Invert the linear power map; clamps into [0, 1]."""
    span = max_w - idle_w
    if span <= 0:
        raise ValueError("max_w must exceed idle_w")
    return np.clip((np.asarray(power_w, dtype=float) - idle_w) / span, 0.0, 1.0)


def _invert_channel(
    power_w: np.ndarray,
    idle_w: float,
    max_w: float,
    report: IngestReport,
    job_label: str,
    channel: str,
    over_max_tolerance: float,
) -> np.ndarray:
    """Utilization from recorded wattage with anomaly accounting.

    Readings below idle are treated as sensor noise: clamped and counted.
    Readings above max beyond the tolerance imply the config does not match
    the machine that produced the trace, so the job is rejected loudly.
    """
    power_w = np.asarray(power_w, dtype=float)
    limit = max_w * (1.0 + over_max_tolerance)
    over = power_w > limit
    if np.any(over):
        worst = float(power_w.max())
        raise TraceError(
            f"{job_label}: {channel} power {worst:.1f} W exceeds configured max "
            f"{max_w:.1f} W by more than {over_max_tolerance:.0%}"
        )
    report.records_total += power_w.size
    report.clamped_below_idle += int(np.sum(power_w < idle_w))
    report.clamped_above_max += int(np.sum((power_w > max_w) & ~over))
    return power_to_util(power_w, idle_w, max_w)


def ingest_trace(
    path: str | Path,
    table: ComponentPowerTable,
    over_max_tolerance: float = 0.05,
) -> tuple[list[Job], IngestReport]:
    """Read a telemetry trace file and return jobs sorted by submit time.

    The format is a JSON document (see docs/trace_format.md): per-job node
    counts, start times, and per-quantum CPU wattage (per node) and GPU
    wattage (per GPU).
    """
    path = Path(path)
    report = IngestReport(path=str(path))
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise TraceError(f"cannot read trace {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise TraceError(f"trace {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "jobs" not in doc:
        raise TraceError(f"trace {path} must be an object with a 'jobs' list")
    if doc.get("format", TRACE_FORMAT) != TRACE_FORMAT:
        raise TraceError(f"unsupported trace format {doc.get('format')!r}")
    quanta = float(doc.get("trace_quanta_s", 15.0))

    jobs: list[Job] = []
    for i, rec in enumerate(doc["jobs"]):
        label = f"job[{i}] (id={rec.get('job_id', '?')})"
        try:
            cpu_w = np.asarray(rec["cpu_power_w"], dtype=float)
            gpu_w = np.asarray(rec["gpu_power_w"], dtype=float)
            if cpu_w.size != gpu_w.size or cpu_w.size == 0:
                raise TraceError(f"{label}: cpu/gpu power traces must be equal nonzero length")
            cpu_u = _invert_channel(cpu_w, table.cpu_idle_w, table.cpu_max_w,
                                    report, label, "cpu", over_max_tolerance)
            gpu_u = _invert_channel(gpu_w, table.gpu_idle_w, table.gpu_max_w,
                                    report, label, "gpu", over_max_tolerance)
            wall = float(rec.get("wall_time_s", cpu_w.size * quanta))
            pinned = rec.get("nodes")
            job = Job(
                job_id=int(rec["job_id"]),
                job_name=str(rec.get("job_name", f"job{rec['job_id']}")),
                node_count=int(rec["node_count"]),
                submit_time=float(rec["start_time"]),
                wall_time_s=wall,
                cpu_trace=UtilTrace(quanta, cpu_u),
                gpu_trace=UtilTrace(quanta, gpu_u),
                pinned_nodes=tuple(int(n) for n in pinned) if pinned is not None else None,
            )
        except TraceError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise TraceError(f"{label}: malformed record: {exc}") from exc
        jobs.append(job)

    jobs.sort(key=lambda j: (j.submit_time, j.job_id))
    report.jobs_ingested = len(jobs)
    return jobs, report


def sample_interarrival(lambda_per_s: float, u: float) -> float:
    """Exponential inter-arrival time from one uniform draw in [0, 1)."""
    if lambda_per_s <= 0:
        raise ValueError("lambda_per_s must be positive")
    if not 0.0 <= u < 1.0:
        raise ValueError("u must lie in [0, 1)")
    return -math.log(1.0 - u) / lambda_per_s


def _truncated_normal(rng: np.random.Generator, mean: float, std: float,
                      lo: float, hi: float) -> float:
    if std == 0.0:
        return min(max(mean, lo), hi)
    # Rejection sampling; the acceptance region always has positive mass
    # because [lo, hi] is a real interval around clip targets.
    for _ in range(10000):
        x = rng.normal(mean, std)
        if lo <= x <= hi:
            return float(x)
    return min(max(mean, lo), hi)


def generate_synthetic(
    stats: WorkloadStats,
    duration_s: float,
    seed: int,
    nodes_total: int = 9472,
    trace_quanta_s: float = 15.0,
) -> list[Job]:
    """Poisson arrivals with per-job sizes, runtimes, and utilizations drawn
    from truncated normal distributions. A pure function of its arguments:
    the same seed always yields the identical job sequence."""
    if duration_s <= 0:
        raise ValueError("duration_s must be positive")
    stats.validate()
    rng = np.random.default_rng(seed)
    lam = 1.0 / stats.t_avg_s
    jobs: list[Job] = []
    t = 0.0
    job_id = 0
    while True:
        t += sample_interarrival(lam, float(rng.random()))
        if t >= duration_s:
            break
        nodes = int(round(_truncated_normal(rng, *stats.node_count_dist, 1, nodes_total)))
        wall = _truncated_normal(rng, *stats.wall_time_dist, trace_quanta_s, 7 * 86400.0)
        cpu = _truncated_normal(rng, *stats.cpu_util_dist, 0.0, 1.0)
        gpu = _truncated_normal(rng, *stats.gpu_util_dist, 0.0, 1.0)
        n_quanta = max(1, int(math.ceil(wall / trace_quanta_s)))
        jobs.append(
            Job(
                job_id=job_id,
                job_name=f"synth{job_id:05d}",
                node_count=nodes,
                submit_time=t,
                wall_time_s=wall,
                cpu_trace=UtilTrace(trace_quanta_s, np.full(n_quanta, cpu)),
                gpu_trace=UtilTrace(trace_quanta_s, np.full(n_quanta, gpu)),
            )
        )
        job_id += 1
    return jobs


def derive_stats(jobs: list[Job]) -> WorkloadStats:
    """Estimate generator statistics back from a job sequence."""
    if len(jobs) < 2:
        raise ValueError("need at least two jobs to derive statistics")
    submits = np.sort(np.array([j.submit_time for j in jobs]))
    gaps = np.diff(submits)
    nodes = np.array([j.node_count for j in jobs], dtype=float)
    walls = np.array([j.wall_time_s for j in jobs], dtype=float)
    cpus = np.array([float(j.cpu_trace.values.mean()) for j in jobs])
    gpus = np.array([float(j.gpu_trace.values.mean()) for j in jobs])
    return WorkloadStats(
        t_avg_s=float(gaps.mean()),
        node_count_dist=Dist(float(nodes.mean()), float(nodes.std())),
        wall_time_dist=Dist(float(walls.mean()), float(walls.std())),
        cpu_util_dist=Dist(float(cpus.mean()), float(cpus.std())),
        gpu_util_dist=Dist(float(gpus.mean()), float(gpus.std())),
    )
