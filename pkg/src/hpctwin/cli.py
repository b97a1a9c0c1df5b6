"""Command-line interface: run, replay, report, serve, compare."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .config import LOSS_MODES, POLICIES, REPLAY, ConfigError, SystemConfig, load_config
from .engine import compare_with_measured, make_report, run_simulation
from .report import render_figures, write_run
from .store import DONE, RunStore, resolve_store_root
from .workload import FRONTIER_DAILY_STATS, generate_synthetic, ingest_trace


def _load_config(args) -> SystemConfig:
    cfg = load_config(args.config) if args.config else SystemConfig().validate()
    sim = cfg.simulation
    lm = cfg.loss_model
    if getattr(args, "policy", None):
        sim = replace(sim, policy=args.policy)
    if getattr(args, "mode", None):
        lm = replace(lm, mode=args.mode)
    if getattr(args, "no_cooling", False):
        sim = replace(sim, cooling_enabled=False)
    if getattr(args, "wetbulb", None) is not None:
        sim = replace(sim, wetbulb_c=args.wetbulb)
    return cfg.with_overrides(simulation=sim, loss_model=lm)


def _finish_run(args, config: SystemConfig, result, label: str) -> Path:
    report = make_report(result, config.economics)
    if args.out:
        out_dir = Path(args.out)
        write_run(result, report, out_dir)
    else:
        store = RunStore(resolve_store_root(args.store))
        run_id = store.create_run(config.to_dict(), label=label)
        out_dir = store.run_dir(run_id)
        write_run(result, report, out_dir)
        store.update(run_id, status="RUNNING")
        store.update(run_id, status=DONE, progress=1.0)
    print(f"run written to {out_dir}")
    for key, value in report.to_dict().items():
        print(f"  {key:28s} {value}")
    return out_dir


def cmd_run(args) -> int:
    config = _load_config(args)
    duration = args.hours * 3600.0
    stats = FRONTIER_DAILY_STATS
    jobs = generate_synthetic(stats, duration, args.seed,
                              nodes_total=config.topology.nodes_total,
                              trace_quanta_s=config.simulation.trace_quanta_s)
    print(f"synthetic workload: {len(jobs)} jobs over {args.hours:.1f} h (seed {args.seed})")
    result = run_simulation(config, jobs, duration, seed=args.seed)
    _finish_run(args, config, result, label=f"synthetic {args.hours:.1f}h seed={args.seed}")
    return 0


def cmd_replay(args) -> int:
    config = _load_config(args)
    if args.policy is None:
        config = config.with_overrides(simulation=replace(config.simulation, policy=REPLAY))
    jobs, ingest_report = ingest_trace(args.trace, config.power)
    print(f"ingested {ingest_report.jobs_ingested} jobs "
          f"({ingest_report.clamped_below_idle} below-idle readings clamped)")
    duration = args.hours * 3600.0 if args.hours else \
        max(j.submit_time + j.wall_time_s for j in jobs) + 60.0
    result = run_simulation(config, jobs, duration)
    out_dir = _finish_run(args, config, result, label=f"replay {Path(args.trace).name}")
    (out_dir / "ingest_report.json").write_text(json.dumps(ingest_report.to_dict(), indent=2))

    doc = json.loads(Path(args.trace).read_text())
    measured = doc.get("measured_power_w")
    if measured:
        import numpy as np
        t = np.arange(len(measured), dtype=float)
        metrics = compare_with_measured(result, t, measured)
        (out_dir / "error_metrics.json").write_text(json.dumps(metrics.to_dict(), indent=2))
        for channel, m in metrics.channels.items():
            print(f"  vs measured {channel}: rmse={m['rmse']:.1f} W mae={m['mae']:.1f} W")
    return 0


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    report_path = run_dir / "report.json"
    if not report_path.exists():
        print(f"error: {run_dir} does not look like a run directory", file=sys.stderr)
        return 2
    report = json.loads(report_path.read_text())
    for key, value in report.items():
        if not isinstance(value, (list, dict)):
            print(f"{key:28s} {value}")
    if args.figures:
        written = render_figures(run_dir)
        for p in written:
            print(f"figure: {p}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    store = RunStore(resolve_store_root(args.store))
    frontend = Path(args.frontend) if args.frontend else \
        Path(__file__).resolve().parents[2] / "frontend" / "dist"
    app = create_app(store, max_concurrent=args.max_concurrent,
                     frontend_dir=frontend if frontend.exists() else None)
    print(f"store root: {store.root}")
    if frontend.exists():
        print(f"dashboard: http://{args.host}:{args.port}/dashboard")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_compare(args) -> int:
    def load(path_or_id: str) -> dict:
        p = Path(path_or_id)
        if p.is_dir():
            return json.loads((p / "report.json").read_text())
        store = RunStore(resolve_store_root(args.store))
        return store.report(path_or_id)

    ra, rb = load(args.run_a), load(args.run_b)
    print(f"{'field':28s} {'A':>14s} {'B':>14s} {'delta':>12s}")
    for key in ra:
        va, vb = ra.get(key), rb.get(key)
        if isinstance(va, (int, float)) and isinstance(vb, (int, float)):
            print(f"{key:28s} {va:14.4f} {vb:14.4f} {vb - va:+12.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hpctwin",
        description="Digital-twin simulator for a liquid-cooled supercomputer",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_workload=True):
        p.add_argument("--config", help="config JSON file (defaults describe the reference machine)")
        p.add_argument("--store", help="run store root (or set HPCTWIN_STORE)")
        p.add_argument("--out", help="write the run to this directory instead of the store")
        p.add_argument("--policy", choices=POLICIES, help="scheduling policy override")
        p.add_argument("--mode", choices=LOSS_MODES, help="loss-model mode override")
        p.add_argument("--no-cooling", action="store_true", help="skip the cooling co-simulation")
        p.add_argument("--wetbulb", type=float, help="constant wet-bulb temperature (C)")

    p = sub.add_parser("run", help="run a synthetic workload")
    common(p)
    p.add_argument("--hours", type=float, default=24.0, help="simulated duration")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("replay", help="replay a telemetry trace file")
    common(p)
    p.add_argument("--trace", required=True, help="trace JSON file")
    p.add_argument("--hours", type=float, help="clip the replay to this many hours")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("report", help="print a stored run's report and render figures")
    p.add_argument("run_dir")
    p.add_argument("--no-figures", dest="figures", action="store_false")
    p.set_defaults(func=cmd_report, figures=True)

    p = sub.add_parser("serve", help="start the HTTP scenario service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--store", help="run store root (or set HPCTWIN_STORE)")
    p.add_argument("--max-concurrent", type=int, default=2)
    p.add_argument("--frontend", help="directory with built dashboard assets")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("compare", help="compare two stored runs' reports")
    p.add_argument("run_a")
    p.add_argument("run_b")
    p.add_argument("--store", help="run store root")
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
