"""Write simulated per-node traces in window CSV format, without a network hop.

    python scripts/record_trace.py --out traces --ticks 480 --fault "130 3 temperature stuck 200"
"""
import argparse
from pathlib import Path

from wsnfault.conversion import to_instance
from wsnfault.simulator import BaseStation, FaultScript, SimClock, default_profiles
from wsnfault.windows import write_instances


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="traces")
    ap.add_argument("--nodes", type=int, default=5)
    ap.add_argument("--ticks", type=int, default=480)
    ap.add_argument("--tick-ms", type=int, default=20)
    ap.add_argument("--seconds-per-day", type=float, default=86400.0)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--diurnal", action="store_true")
    ap.add_argument("--fault", action="append", default=[], help="fault script line; repeatable")
    args = ap.parse_args()

    station = BaseStation(
        default_profiles(args.nodes, diurnal=args.diurnal),
        FaultScript.parse("\n".join(args.fault)),
        SimClock(args.tick_ms, args.seconds_per_day),
        args.seed,
    )
    per_node = {}
    for frame in station.frames(args.ticks):
        per_node.setdefault(frame.node_id, []).append(to_instance(frame))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for node, insts in sorted(per_node.items()):
        path = out / f"node_{node}_trace.csv"
        write_instances(path, insts)
        print(f"{path}: {len(insts)} rows")


if __name__ == "__main__":
    main()
