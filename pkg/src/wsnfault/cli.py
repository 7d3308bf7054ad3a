"""Command-line entry point: ``wsnfault {simulate,monitor,replay,bench}``."""

from __future__ import annotations

import argparse
import logging
import re
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import bench, regressors, windows
from .config import ConfigError, RunConfig, parse_endpoint, read_config_file
from .conversion import SENSORS
from .detector import AlertLog, FaultMonitor
from .simulator import BaseStation, FaultScript, SimClock, SimulatorServer, default_profiles

log = logging.getLogger("wsnfault")

# flag dest -> RunConfig key
_FLAG_KEYS = {
    "listen": "endpoint",
    "connect": "endpoint",
    "tick_ms": "tick_ms",
    "short_len": "short_len",
    "avg_group": "avg_group",
    "long_len": "long_len",
    "algorithm": "algorithm",
    "data_dir": "data_dir",
    "cooldown": "cooldown",
    "epsilon": "epsilon",
    "nodes": "nodes",
    "seed": "seed",
    "seconds_per_day": "seconds_per_day",
    "fault_script": "fault_script",
    "cpu_power": "cpu_power_watts",
}


def _endpoint(text: str) -> str:
    try:
        parse_endpoint(text)
    except ConfigError as err:
        raise argparse.ArgumentTypeError(str(err))
    return text


def _threshold(text: str) -> tuple[str, float]:
    sensor, sep, pct = text.partition("=")
    if not sep or sensor not in SENSORS:
        raise argparse.ArgumentTypeError(f"expected SENSOR=PERCENT with SENSOR in {', '.join(SENSORS)}")
    try:
        return sensor, float(pct)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid percent {pct!r}")


def _common(p: argparse.ArgumentParser, detector: bool = True) -> None:
    p.add_argument("--config", help="flat key = value config file; flags override it")
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("--tick-ms", type=int)
    if detector:
        p.add_argument("--short-len", type=int, help="instances per short window (default 3600)")
        p.add_argument("--avg-group", type=int, help="instances per long-window average (default 60)")
        p.add_argument("--long-len", type=int, help="averages per long window (default 1440)")
        p.add_argument("--algorithm", help="predictor for sensor models (default DecisionStump)")
        p.add_argument("--threshold", action="append", type=_threshold, metavar="SENSOR=PCT", default=[])
        p.add_argument("--epsilon", type=float)
        p.add_argument("--cooldown", type=int, help="evaluations to suppress repeat alerts (default 60)")
        p.add_argument("--out", help="alert log path (JSON lines)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wsnfault", description="Sensor-network fault detection toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the synthetic base station")
    _common(sim, detector=False)
    sim.add_argument("--listen", type=_endpoint, help="host:port to listen on")
    sim.add_argument("--nodes", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--seconds-per-day", type=float, help="wall seconds per simulated day")
    sim.add_argument("--diurnal", action="store_true", default=None, help="day/night swings in light and temperature")
    sim.add_argument("--fault-script")
    sim.add_argument("--ticks", type=int, help="stop after this many ticks")
    sim.add_argument("--wait-clients", type=int, default=0, help="hold the first tick until N clients connect")

    mon = sub.add_parser("monitor", help="connect to a base station and detect faults")
    _common(mon)
    mon.add_argument("--connect", type=_endpoint, help="base station host:port")
    mon.add_argument("--data-dir")
    mon.add_argument("--retries", type=int, default=3)
    mon.add_argument("--max-frames", type=int)
    mon.add_argument("--record", help="directory for full per-node trace CSVs")

    rep = sub.add_parser("replay", help="run a recorded window-format CSV through the detector")
    _common(rep)
    rep.add_argument("file")
    rep.add_argument("--node", type=int, help="node id (default: parsed from node_<id>_ file name)")

    ben = sub.add_parser("bench", help="compare the five predictors on a recorded dataset")
    ben.add_argument("--config")
    ben.add_argument("-v", "--verbose", action="count", default=0)
    ben.add_argument("--data", required=True, help="window-format CSV")
    ben.add_argument("--algorithms", default="all", help="comma list or 'all'")
    ben.add_argument("--target", default="all", help="sensor to predict, or 'all' to pool every sensor")
    ben.add_argument("--holdout", type=float, default=0.3, help="fraction of rows (the latest) used for testing")
    ben.add_argument("--cpu-power", type=float)
    ben.add_argument("--epsilon", type=float)
    ben.add_argument("--out", default="bench_report.csv")
    return parser


def load_config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        cfg.update(read_config_file(args.config), source=args.config)
    overrides = {key: getattr(args, dest) for dest, key in _FLAG_KEYS.items() if getattr(args, dest, None) is not None}
    if getattr(args, "diurnal", None):
        overrides["diurnal"] = True
    for sensor, pct in getattr(args, "threshold", []) or []:
        overrides[f"threshold_{sensor}"] = pct
    cfg.update(overrides)
    return cfg.validate()


def cmd_simulate(args, cfg: RunConfig) -> int:
    script = FaultScript.load(cfg.fault_script) if cfg.fault_script else FaultScript()
    clock = SimClock(cfg.tick_ms, cfg.seconds_per_day)
    station = BaseStation(default_profiles(cfg.nodes, diurnal=cfg.diurnal), script, clock, cfg.seed)
    host, port = parse_endpoint(cfg.endpoint)
    try:
        server = SimulatorServer(station, host, port)
    except OSError as err:
        print(f"simulate: cannot listen on {cfg.endpoint}: {err}", file=sys.stderr)
        return 1
    print(f"listening on {server.address[0]}:{server.port} ({cfg.nodes} nodes, tick {cfg.tick_ms} ms)", flush=True)

    def on_tick(t, frames):
        log.info("tick %d: %d frames", t, len(frames))

    try:
        if args.wait_clients:
            server.wait_for_clients(args.wait_clients, timeout=60.0)
        server.run(args.ticks, on_tick=on_tick)
    except KeyboardInterrupt:
        pass
    finally:
        server.close()
    return 0


def _trace_recorder(directory):
    from .conversion import to_instance

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = {}

    def record(frame):
        fh = files.get(frame.node_id)
        if fh is None:
            fh = files[frame.node_id] = open(directory / f"node_{frame.node_id}_trace.csv", "w")
            fh.write(",".join(windows.CSV_HEADER) + "\n")
        try:
            fh.write(",".join(windows.format_row(to_instance(frame))) + "\n")
        except ValueError:
            pass

    def close():
        for fh in files.values():
            fh.close()

    return record, close


def cmd_monitor(args, cfg: RunConfig) -> int:
    from .monitor import HandshakeError, run_monitor

    host, port = parse_endpoint(cfg.endpoint)
    data_dir = Path(cfg.data_dir)
    out = Path(args.out) if args.out else data_dir / "alerts.jsonl"
    data_dir.mkdir(parents=True, exist_ok=True)
    alert_log = AlertLog(out, echo=True)
    executor = ThreadPoolExecutor(max_workers=1, thread_name_prefix="rebuild")
    monitor = FaultMonitor(
        cfg.window_config(),
        cfg.thresholds(),
        cfg.algorithm,
        data_dir=data_dir,
        executor=executor,
        cooldown=cfg.cooldown,
        on_event=alert_log,
    )
    recorder, close_recorder = _trace_recorder(args.record) if args.record else (None, lambda: None)
    stop = threading.Event()
    status = 0
    try:
        stats = run_monitor(monitor, host, port, retries=args.retries, max_frames=args.max_frames, stop=stop, recorder=recorder)
        log.info("ingested %d frames (%d frame errors)", stats.frames, stats.frame_errors)
        if stats.frames == 0:
            print("monitor: stream ended before any frame arrived", file=sys.stderr)
            status = 1
    except (OSError, HandshakeError) as err:
        print(f"monitor: cannot reach base station at {cfg.endpoint}: {err}", file=sys.stderr)
        status = 1
    except KeyboardInterrupt:
        stop.set()
    finally:
        monitor.close()
        executor.shutdown(wait=True)
        alert_log.close()
        close_recorder()
    return status


def _node_from_name(path: Path) -> int | None:
    m = re.match(r"node_(\d+)_", path.name)
    return int(m.group(1)) if m else None


def replay_file(path, cfg: RunConfig, node_id: int | None = None, out=None, echo: bool = False) -> FaultMonitor:
    path = Path(path)
    node = node_id if node_id is not None else (_node_from_name(path) or 0)
    instances = windows.read_instances(path, node)
    alert_log = AlertLog(out, echo=echo, mode="w")
    monitor = FaultMonitor(cfg.window_config(), cfg.thresholds(), cfg.algorithm, cooldown=cfg.cooldown, on_event=alert_log)
    try:
        for inst in instances:
            monitor.ingest(inst)
    finally:
        alert_log.close()
    return monitor


def cmd_replay(args, cfg: RunConfig) -> int:
    try:
        monitor = replay_file(args.file, cfg, args.node, args.out, echo=True)
    except windows.WindowFileError as err:
        print(f"replay: {err}", file=sys.stderr)
        return 1
    except FileNotFoundError as err:
        print(f"replay: {err}", file=sys.stderr)
        return 1
    print(f"replayed {args.file}: {len(monitor.alerts)} alerts, {len(monitor.events) - len(monitor.alerts)} node anomalies")
    return 0


def cmd_bench(args, cfg: RunConfig) -> int:
    path = Path(args.data)
    try:
        instances = windows.read_instances(path, _node_from_name(path) or 0)
    except (windows.WindowFileError, FileNotFoundError) as err:
        print(f"bench: {err}", file=sys.stderr)
        return 1
    targets = list(SENSORS) if args.target == "all" else [args.target]
    datasets = [windows.build_dataset(instances, t) for t in targets]
    algorithms = regressors.ALGORITHMS if args.algorithms == "all" else [a for a in args.algorithms.split(",") if a]
    try:
        report = bench.run_bench(datasets, algorithms, args.holdout, cfg.energy_model(), cfg.epsilon)
    except regressors.EmptyDataset as err:
        print(f"bench: {err}", file=sys.stderr)
        return 1
    bench.write_report(report, args.out)
    bench.write_histogram(report, bench.histogram_path_for(args.out))
    print(f"{'algorithm':<18}{'predict s':>14}{'energy J':>14}{'error %':>12}{'fit s':>12}")
    for r in report.results:
        print(f"{r.algorithm:<18}{r.predict_time_s:>14.3e}{r.energy_j:>14.6e}{r.total_error_rate_pct:>12.4f}{r.fit_time_s:>12.4f}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    if args.command == "bench" and args.algorithms != "all":
        for name in args.algorithms.split(","):
            try:
                regressors.resolve_algorithm(name)
            except regressors.UnknownAlgorithm as err:
                parser.error(str(err))
    if args.command == "bench" and args.target != "all" and args.target not in SENSORS:
        parser.error(f"--target must be one of {', '.join(SENSORS)} or 'all'")
    try:
        cfg = load_config(args)
    except ConfigError as err:
        parser.error(str(err))
    handler = {"simulate": cmd_simulate, "monitor": cmd_monitor, "replay": cmd_replay, "bench": cmd_bench}[args.command]
    return handler(args, cfg)


if __name__ == "__main__":
    sys.exit(main())
