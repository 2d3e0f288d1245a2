"""End-to-end pipeline demo: generate data, train, evaluate, forecast.

Writes everything under --out (default ./pipeline_out). Scale is controlled
by --quick (small grids, minutes) vs full defaults.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

import mcsim.datagen as dg
from mcsim.danp import DanpConfig, build_context_bank, predict, save_model, train
from mcsim.datagen.trends import label_trend
from mcsim.evalbench import bucketed_metrics


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="pipeline_out")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--quick", action="store_true", help="small grids, ~2 minutes")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    t0 = time.time()
    sim_cfg = dg.sim_default_config()
    real_cfg = dg.realproxy_default_config()
    if args.quick:
        sim_cfg = dg.GeneratorConfig(**{**sim_cfg.__dict__, "hr_values": (75.0, 95.0),
                                        "ees_values": (1.0, 2.2), "tau_values": (0.06,),
                                        "n_per_cell": 6})
        real_cfg = dg.GeneratorConfig(**{**real_cfg.__dict__, "hr_values": (76.0, 90.0),
                                         "ees_values": (0.8, 1.4), "tau_values": (0.06,),
                                         "n_per_cell": 8})
    test_cfg = dg.GeneratorConfig(**{**real_cfg.__dict__,
                                     "n_per_cell": max(2, real_cfg.n_per_cell // 2)})

    print("generating datasets...")
    sim = dg.make_sim_dataset(sim_cfg, seed=args.seed,
                              out_dir=os.path.join(args.out, "sim_train"))
    real = dg.make_realproxy_dataset(real_cfg, seed=args.seed + 1,
                                     out_dir=os.path.join(args.out, "real_train"))
    test = dg.make_realproxy_dataset(test_cfg, seed=args.seed + 2,
                                     out_dir=os.path.join(args.out, "real_test"))
    for name, (s, m) in (("sim", sim), ("real", real), ("test", test)):
        print(f"  {name}: {m.n_samples} samples, trends {m.counts_by_trend}")

    print("training...")
    cfg = DanpConfig(seed=args.seed, epochs=8 if args.quick else 60)
    result = train(sim, real, cfg,
                   log_path=os.path.join(args.out, "training_log.jsonl"))
    version = save_model(os.path.join(args.out, "model"), result.model)
    print(f"  best val MAE {result.best_val_mae:.2f} mmHg, model {version}")

    print("evaluating on the held-out real-proxy test split...")
    bank = build_context_bank(sim[0] + real[0], cap=cfg.context_bank_cap,
                              seed=cfg.context_bank_seed)
    means = [predict(result.model, s.x, s.pl, bank, n_samples=25,
                     seed=args.seed).mean for s in test[0]]
    mets = bucketed_metrics(test[0], means)
    print("  " + json.dumps({k: round(v, 3) if isinstance(v, float) else v
                             for k, v in mets.items()}))

    # one what-if: same context, two hypothetical level plans
    sample = test[0][0]
    low = np.full(90, 2)
    high = np.full(90, 8)
    for name, plan in (("P2", low), ("P8", high)):
        fc = predict(result.model, sample.x, plan, bank, n_samples=50, seed=7)
        print(f"  what-if {name}: mean MAP {fc.mean.mean():.1f} mmHg, "
              f"trend {label_trend(fc.mean).value}")
    print(f"done in {time.time() - t0:.0f}s -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
