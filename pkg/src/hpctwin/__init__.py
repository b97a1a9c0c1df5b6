"""Digital twin of a liquid-cooled supercomputer: workload, power, cooling."""

from .config import SystemConfig, load_config, map_node
from .engine import Report, RunResult, make_report, run_ensemble, run_simulation
from .workload import FRONTIER_DAILY_STATS, Job, WorkloadStats, generate_synthetic, ingest_trace

__version__ = "0.1.0"

__all__ = [
    "SystemConfig", "load_config", "map_node",
    "Report", "RunResult", "make_report", "run_ensemble", "run_simulation",
    "FRONTIER_DAILY_STATS", "Job", "WorkloadStats", "generate_synthetic", "ingest_trace",
    "__version__",
]
