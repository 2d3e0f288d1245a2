"""Baseline registry, benchmark harness, and the domain-separability probe."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..autodiff import Tape, Tensor, affine, backward, log_softmax, zero_grad
from ..autodiff.layers import init_affine, nll_domain_batch
from ..autodiff.optim import OptimState, adam_step, clip_global_norm, collect_grads
from ..autodiff.tensor import relu, sub
from ..danp import DanpConfig, build_context_bank, predict, train
from ..danp.model import (
    assemble_x_encoding,
    denormalize_map,
    encode_pl_onehot,
    normalize_map,
    normalize_window,
)
from ..datagen.dataset import compute_channel_stats
from ..datagen.samples import balanced_subsample
from ..errors import ContractViolation
from .metrics import MetricsTable, bucketed_metrics

log = logging.getLogger(__name__)

BASELINE_REGISTRY = ("mlp", "np_no_sim", "np_direct_transfer", "np_sim_real",
                     "danp", "danp_no_seq", "danp_sampling")
NOT_IMPLEMENTED = ("clmu", "meta_regression")


@dataclass
class BaselineSpec:
    name: str
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in BASELINE_REGISTRY:
            raise ContractViolation(f"unknown baseline {self.name!r}")


def _danp_config(name: str, seed: int, overrides: dict) -> DanpConfig:
    base = {"seed": seed}
    if name in ("np_no_sim", "np_direct_transfer", "np_sim_real"):
        base["lambda_domain"] = 0.0
    if name == "danp_no_seq":
        base["use_seq_encoder"] = False
    base.update(overrides)
    return DanpConfig(**base)


def run_baseline(spec: BaselineSpec, datasets: dict, seeds, n_eval_samples: int = 25):
    """Train one method across seeds and evaluate on the real-proxy test split.

    ``datasets`` needs "sim_train", "real_train", "real_test" entries of
    (samples, manifest) tuples or sample lists. Returns (per-seed metric
    dicts, failed flag).
    """
    per_seed = []
    failed = False
    for seed in seeds:
        try:
            per_seed.append(_run_once(spec, datasets, int(seed), n_eval_samples))
        except Exception:
            log.exception("baseline %s failed for seed %s", spec.name, seed)
            failed = True
    return per_seed, failed


def _as_samples(dataset):
    if dataset is None:
        return []
    return list(dataset[0]) if isinstance(dataset, tuple) else list(dataset)


def _run_once(spec: BaselineSpec, datasets: dict, seed: int, n_eval_samples: int):
    sim_train = datasets.get("sim_train")
    real_train = datasets.get("real_train")
    test = _as_samples(datasets["real_test"])
    name = spec.name

    if name == "mlp":
        return _run_mlp(spec, sim_train, real_train, test, seed)

    cfg = _danp_config(name, seed, spec.overrides)
    use_sim = name not in ("np_no_sim",)
    use_real = name not in ("np_direct_transfer",)
    sim_ds = sim_train if use_sim else None
    real_ds = real_train if use_real else None
    if name == "danp_sampling":
        sim_ds = balanced_subsample(_as_samples(sim_ds), seed) if sim_ds else None
        real_ds = balanced_subsample(_as_samples(real_ds), seed) if real_ds else None

    result = train(sim_ds, real_ds, cfg)
    model = result.model
    pool = _as_samples(sim_ds) + _as_samples(real_ds)
    bank = build_context_bank(pool, cap=cfg.context_bank_cap, seed=cfg.context_bank_seed)
    means = [predict(model, s.x, s.pl, bank, n_samples=n_eval_samples,
                     seed=cfg.seed).mean for s in test]
    metrics = bucketed_metrics(test, means)
    metrics["val_mae"] = result.best_val_mae
    metrics["final_val_domain_acc"] = result.log[-1].get("val_domain_acc") if result.log else None
    return metrics


def run_benchmark(methods, datasets: dict, seeds=(0, 1, 2), overrides=None,
                  n_eval_samples: int = 25) -> MetricsTable:
    """Table harness: named methods (plus 'not implemented' placeholders)."""
    table = MetricsTable()
    overrides = overrides or {}
    for name in methods:
        if name in NOT_IMPLEMENTED:
            table.add_not_implemented(name)
            continue
        spec = BaselineSpec(name=name, overrides=overrides.get(name, {}))
        per_seed, failed = run_baseline(spec, datasets, seeds, n_eval_samples)
        table.add_row(name, per_seed, failed=failed)
    return table


# -- MLP baseline -------------------------------------------------------------

def _mlp_features(samples, stats) -> np.ndarray:
    """Flatten(90 x 7 normalized features) + flatten(90 x 9 future one-hot)."""
    rows = []
    for s in samples:
        x = s.x.values.copy()
        norm = np.empty_like(x)
        for j, name in enumerate(("map", "p_level", "qp", "lvp", "hr", "tau",
                                  "contractility")):
            if name == "p_level":
                norm[:, j] = (x[:, j] - 1.0) / 8.0
            else:
                lo, hi = stats[name]
                norm[:, j] = (x[:, j] - lo) / (hi - lo)
        rows.append(np.concatenate([norm.ravel(), encode_pl_onehot(s.pl).ravel()]))
    return np.stack(rows)


def _run_mlp(spec: BaselineSpec, sim_train, real_train, test, seed: int):
    cfg = _danp_config("danp", seed, spec.overrides)  # reuse epochs/lr/batch knobs
    pool = _as_samples(sim_train) + _as_samples(real_train)
    stats = compute_channel_stats(pool)
    rng = np.random.default_rng([seed, 7])
    X = _mlp_features(pool, stats)
    Y = np.stack([normalize_map(s.y, stats) for s in pool])

    d_in = X.shape[1]
    hidden = (256, 128, 64)
    P = {}
    dims = (d_in,) + hidden + (90,)
    for i in range(len(dims) - 1):
        P[f"w{i}"], P[f"b{i}"] = init_affine(rng, dims[i], dims[i + 1])
    opt = OptimState.for_params(P, lr=cfg.learning_rate)

    def forward(xb):
        h = Tensor(xb)
        for i in range(len(hidden)):
            h = relu(affine(h, P[f"w{i}"], P[f"b{i}"]))
        return affine(h, P[f"w{len(hidden)}"], P[f"b{len(hidden)}"])

    n = X.shape[0]
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            zero_grad(P)
            with Tape() as tape:
                out = forward(X[idx])
                loss = sub(out, Tensor(Y[idx])).abs().mean()
            backward(tape, loss)
            tape.release()
            grads, _ = clip_global_norm(collect_grads(P), cfg.clip_norm)
            adam_step(P, grads, opt)

    Xt = _mlp_features(test, stats)
    pred = denormalize_map(forward(Xt).data, stats)
    return bucketed_metrics(test, list(pred))


# -- logistic domain probe ----------------------------------------------------

def raw_window_features(samples, stats=None) -> np.ndarray:
    """Flattened normalized 7-channel context windows."""
    stats = stats or compute_channel_stats(samples)
    return np.stack([normalize_window(s.x.values, stats).ravel() for s in samples])


def frozen_model_features(model, samples) -> np.ndarray:
    """The domain head's input feature under a frozen model (posterior-mean
    latent, step-mean level one-hot)."""
    feats = []
    for lo in range(0, len(samples), 64):
        chunk = samples[lo:lo + 64]
        x_sum = model.x_summary(assemble_x_encoding(chunk, model.stats)).data
        mean_oh = np.stack([encode_pl_onehot(s.pl).mean(axis=0) for s in chunk])
        feats.append(np.concatenate([x_sum, mean_oh,
                                     np.zeros((len(chunk), model.cfg.d_z))], axis=1))
    return np.concatenate(feats, axis=0)


def logistic_probe(features: np.ndarray, labels, seed: int = 0,
                   epochs: int = 300, l2: float = 1e-4,
                   holdout: float = 0.3) -> float:
    """Train a linear log-softmax probe; returns held-out accuracy."""
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=int)
    rng = np.random.default_rng(seed)
    order = rng.permutation(X.shape[0])
    n_test = int(round(holdout * X.shape[0]))
    test_idx, train_idx = order[:n_test], order[n_test:]

    mu = X[train_idx].mean(axis=0)
    sd = X[train_idx].std(axis=0) + 1e-9
    Xn = (X - mu) / sd

    P = {}
    P["w"], P["b"] = init_affine(rng, X.shape[1], 2)
    opt = OptimState.for_params(P, lr=0.05)
    for _ in range(epochs):
        zero_grad(P)
        with Tape() as tape:
            lp = log_softmax(affine(Tensor(Xn[train_idx]), P["w"], P["b"]), axis=-1)
            loss = nll_domain_batch(lp, y[train_idx]) + (P["w"].square().sum() * l2)
        backward(tape, loss)
        tape.release()
        adam_step(P, collect_grads(P), opt)
    pred = np.argmax(Xn[test_idx] @ P["w"].data + P["b"].data, axis=1)
    return float(np.mean(pred == y[test_idx]))
