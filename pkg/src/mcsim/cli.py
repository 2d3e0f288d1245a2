"""Command-line entry points for the full pipeline.

Verbs: simulate, gen-data, train, eval, predict, serve. Validation failures
exit nonzero after printing one machine-parseable ``MCSIM-ERROR {...}`` line
on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .cardio import CardiacParams, export_beatseries_csv, simulate_waveform
from .danp import (
    DanpConfig,
    build_context_bank,
    load_model,
    predict,
    save_model,
    train,
)
from .datagen import (
    GeneratorConfig,
    load_dataset,
    make_realproxy_dataset,
    make_sim_dataset,
    realproxy_default_config,
    sim_default_config,
)
from .datagen.trends import label_trend
from .evalbench import histogram_report, run_benchmark
from .service.schemas import WhatIfRequest


def _fail(message: str, detail=None) -> int:
    line = json.dumps({"error": message, "detail": detail}, sort_keys=True)
    print(f"MCSIM-ERROR {line}", file=sys.stderr)
    return 1


def _load_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def cmd_simulate(args) -> int:
    params = CardiacParams(p_level=args.level, hr=args.hr, ees=args.ees, tau=args.tau)
    series = simulate_waveform(params, duration=args.duration, dt=args.dt)
    export_beatseries_csv(series, args.out)
    print(f"wrote {args.out} ({len(series)} samples at {series.fs} Hz)")
    return 0


def cmd_gen_data(args) -> int:
    overrides = _load_json(args.config) if args.config else {}
    sim_cfg = GeneratorConfig(**{**sim_default_config().__dict__,
                                 **overrides.get("sim", {})})
    real_cfg = GeneratorConfig(**{**realproxy_default_config().__dict__,
                                  **overrides.get("real", {})})
    os.makedirs(args.out, exist_ok=True)
    _, m1 = make_sim_dataset(sim_cfg, seed=args.seed,
                             out_dir=os.path.join(args.out, "sim_train"))
    _, m2 = make_realproxy_dataset(real_cfg, seed=args.seed + 1,
                                   out_dir=os.path.join(args.out, "real_train"))
    _, m3 = make_realproxy_dataset(real_cfg, seed=args.seed + 2,
                                   out_dir=os.path.join(args.out, "real_test"))
    for name, m in (("sim_train", m1), ("real_train", m2), ("real_test", m3)):
        print(f"{name}: {m.n_samples} samples, trends {m.counts_by_trend},"
              f" sha256 {m.records_sha256[:16]}")
    return 0


def cmd_train(args) -> int:
    overrides = _load_json(args.config) if args.config else {}
    cfg = DanpConfig(**{**DanpConfig(seed=args.seed).to_dict(), **overrides})
    sim = load_dataset(os.path.join(args.data, "sim_train"))
    real = load_dataset(os.path.join(args.data, "real_train"))
    os.makedirs(args.out, exist_ok=True)
    result = train(sim, real, cfg, log_path=os.path.join(args.out, "training_log.jsonl"))
    version = save_model(args.out, result.model)
    status = "aborted" if result.aborted else "ok"
    print(f"{status}: best val MAE {result.best_val_mae:.3f} mmHg,"
          f" model {version} -> {args.out}")
    return 0 if not result.aborted else 1


def cmd_eval(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    seeds = [int(s) for s in args.seeds.split(",")]
    datasets = {
        "sim_train": load_dataset(os.path.join(args.data, "sim_train")),
        "real_train": load_dataset(os.path.join(args.data, "real_train")),
        "real_test": load_dataset(os.path.join(args.data, "real_test")),
    }
    overrides = _load_json(args.config) if args.config else {}
    table = run_benchmark(methods, datasets, seeds=seeds,
                          overrides=overrides.get("methods", {}))
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "metrics.csv"), "w", encoding="utf-8") as fh:
        fh.write(table.to_csv())
    with open(os.path.join(args.out, "metrics.txt"), "w", encoding="utf-8") as fh:
        fh.write(table.to_text())
    real_train_maps = np.concatenate([s.y for s in datasets["real_train"][0]])
    sim_maps = np.concatenate([s.y for s in datasets["sim_train"][0]])
    hist = histogram_report(real_train_maps, sim_maps)
    with open(os.path.join(args.out, "histogram.csv"), "w", encoding="utf-8") as fh:
        fh.write(hist.to_csv())
    print(table.to_text())
    print(f"distribution overlap (real vs sim MAP): {hist.overlap:.3f}")
    return 0


def cmd_predict(args) -> int:
    request = WhatIfRequest(**_load_json(args.request))
    model, sidecar = load_model(args.model)
    bank_samples, _ = load_dataset(args.bank)
    bank = build_context_bank(bank_samples, cap=model.cfg.context_bank_cap,
                              seed=model.cfg.context_bank_seed)
    fc = predict(model, np.asarray(request.context, dtype=np.float64),
                 np.asarray(request.future_pl), bank,
                 n_samples=request.n_samples, seed=args.seed)
    print(json.dumps({
        "mean": fc.mean.tolist(),
        "q10": fc.q10.tolist(),
        "q50": fc.q50.tolist(),
        "q90": fc.q90.tolist(),
        "trend": label_trend(fc.mean).value,
        "model_version": sidecar["model_version"],
    }, sort_keys=True))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(model_dir=args.model, data_dir=args.data,
                     server_seed=args.seed)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcsim",
        description="cardio pump-support simulator and MAP forecasting suite",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("simulate", help="run the waveform simulator, write CSV")
    p.add_argument("--hr", type=float, default=72.0)
    p.add_argument("--ees", type=float, default=2.0)
    p.add_argument("--tau", type=float, default=0.05)
    p.add_argument("--level", type=int, default=5)
    p.add_argument("--duration", type=float, default=15.0)
    p.add_argument("--dt", type=float, default=0.001)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gen-data", help="generate sim + real-proxy containers")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="JSON file with generator overrides")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train the forecaster")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="JSON file with model config overrides")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="run the baseline benchmark table")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--methods", default="danp,np_no_sim")
    p.add_argument("--seeds", default="0,1,2")
    p.add_argument("--config", help="JSON file with per-method overrides")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="answer one what-if request on stdout")
    p.add_argument("--model", required=True)
    p.add_argument("--bank", required=True, help="dataset dir for the context bank")
    p.add_argument("--request", required=True, help="WhatIfRequest JSON file")
    p.add_argument("--seed", type=int, default=2024)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("serve", help="blocking HTTP what-if service")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8008)
    p.add_argument("--seed", type=int, default=2024)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # surface every validation failure as one line
        return _fail(type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
