"""Benchmark table over the baseline registry (the Table-1/2 style harness).

Example:
    python scripts/run_benchmark.py --data pipeline_out --seeds 0,1,2 \
        --methods danp,np_no_sim,np_direct_transfer,np_sim_real,mlp,clmu
"""

import argparse
import os
import sys

import numpy as np

import mcsim.datagen as dg
from mcsim.evalbench import histogram_report, run_benchmark


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", required=True, help="dir holding sim_train/real_train/real_test")
    ap.add_argument("--out", default=None)
    ap.add_argument("--methods", default="danp,np_no_sim")
    ap.add_argument("--seeds", default="0,1,2")
    ap.add_argument("--epochs", type=int, default=60)
    args = ap.parse_args()

    datasets = {name: dg.load_dataset(os.path.join(args.data, name))
                for name in ("sim_train", "real_train", "real_test")}
    methods = [m.strip() for m in args.methods.split(",")]
    seeds = [int(s) for s in args.seeds.split(",")]
    overrides = {m: {"epochs": args.epochs} for m in methods}
    table = run_benchmark(methods, datasets, seeds=seeds, overrides=overrides)
    print(table.to_text())

    hist = histogram_report(
        np.concatenate([s.y for s in datasets["real_train"][0]]),
        np.concatenate([s.y for s in datasets["sim_train"][0]]))
    print(f"MAP distribution overlap (real vs sim): {hist.overlap:.3f}")

    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "metrics.csv"), "w") as fh:
            fh.write(table.to_csv())
        with open(os.path.join(args.out, "metrics.txt"), "w") as fh:
            fh.write(table.to_text())
        with open(os.path.join(args.out, "histogram.csv"), "w") as fh:
            fh.write(hist.to_csv())
        print(f"wrote {args.out}/metrics.csv, metrics.txt, histogram.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())
