"""Desk-scale fault scenario over TCP: 5 nodes, 20 ms ticks, stuck temperature on one node.

Runs the simulator and the monitor in one process, then prints when each
alert fired relative to the injected fault.

    python scripts/run_fault_scenario.py --seed 7 --node 3 --inject 130 --ticks 400
"""
import argparse
import threading
import time

from wsnfault.detector import FaultMonitor, ThresholdConfig
from wsnfault.monitor import run_monitor
from wsnfault.simulator import BaseStation, FaultScript, SimClock, SimulatorServer, default_profiles
from wsnfault.windows import WindowConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--node", type=int, default=3)
    ap.add_argument("--sensor", default="temperature")
    ap.add_argument("--stuck", type=int, default=200, help="ADC value the sensor sticks at")
    ap.add_argument("--inject", type=int, default=130, help="tick of injection (-1 for a healthy run)")
    ap.add_argument("--ticks", type=int, default=400)
    ap.add_argument("--algorithm", default="stump")
    ap.add_argument("--threshold", type=float, default=None, help="uniform threshold in percent")
    args = ap.parse_args()

    cfg = WindowConfig(tick_ms=20, short_len=120, avg_group=10, long_len=36)
    script = f"{args.inject} {args.node} {args.sensor} stuck {args.stuck}" if args.inject >= 0 else ""
    clock = SimClock(tick_ms=cfg.tick_ms)
    server = SimulatorServer(BaseStation(default_profiles(5), FaultScript.parse(script), clock, args.seed))
    thresholds = ThresholdConfig.uniform(args.threshold) if args.threshold else ThresholdConfig()
    monitor = FaultMonitor(cfg, thresholds, args.algorithm)

    def drive():
        try:
            server.wait_for_clients(1)
            server.run(args.ticks)
        finally:
            server.close()

    threading.Thread(target=drive, daemon=True).start()
    start = time.perf_counter()
    stats = run_monitor(monitor, *server.address, retries=0)
    monitor.close()

    print(f"{stats.frames} frames, {stats.frame_errors} frame errors, {time.perf_counter() - start:.1f} s")
    for e in monitor.events:
        tick = round((e.timestamp_ms - clock.epoch_ms) / clock.sim_ms_per_tick)
        lag = f"{tick - args.inject:+d} ticks from injection" if args.inject >= 0 else ""
        print(f"tick {tick:4d}  {e.describe()}  {lag}")
    if not monitor.events:
        print("no alerts")


if __name__ == "__main__":
    main()
