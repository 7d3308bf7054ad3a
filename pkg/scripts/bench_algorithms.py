"""Compare the five predictors on a simulated node trace: timing, energy, error rate and error histogram.

    python scripts/bench_algorithms.py --ticks 3600 --out bench_out
"""
import argparse
from pathlib import Path

from wsnfault import bench, windows
from wsnfault.conversion import SENSORS, to_instance
from wsnfault.simulator import BaseStation, SimClock, default_profiles


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ticks", type=int, default=3600)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--node", type=int, default=1)
    ap.add_argument("--diurnal", action="store_true")
    ap.add_argument("--seconds-per-day", type=float, default=86400.0)
    ap.add_argument("--holdout", type=float, default=0.3)
    ap.add_argument("--out", default="bench_out")
    args = ap.parse_args()

    station = BaseStation(default_profiles(args.node, diurnal=args.diurnal), None, SimClock(1000, args.seconds_per_day), args.seed)
    insts = [to_instance(f) for f in station.frames(args.ticks) if f.node_id == args.node]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    windows.write_instances(out / f"node_{args.node}_trace.csv", insts)

    report = bench.run_bench([windows.build_dataset(insts, s) for s in SENSORS], holdout=args.holdout)
    bench.write_report(report, out / "report.csv")
    bench.write_histogram(report, out / "report_histogram.csv")
    print(f"{len(insts)} instances, {report.test_size} pooled test predictions")
    print(f"{'algorithm':<18}{'predict s':>12}{'energy J':>14}{'error %':>10}{'fit s':>10}")
    for r in report.results:
        print(f"{r.algorithm:<18}{r.predict_time_s:>12.2e}{r.energy_j:>14.6e}{r.total_error_rate_pct:>10.4f}{r.fit_time_s:>10.3f}")
    print("\nabsolute error distribution (% of predictions per bucket)")
    print("bucket   " + "".join(f"{r.algorithm[:12]:>14}" for r in report.results))
    for b in bench.BUCKETS:
        print(f"{b:<9}" + "".join(f"{100 * report.histograms[r.algorithm][b] / report.test_size:>14.2f}" for r in report.results))


if __name__ == "__main__":
    main()
