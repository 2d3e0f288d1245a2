"""Training loop: shuffled mixed-domain batches, ramped gradient reversal,
per-epoch logging, best-validation checkpointing."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from ..autodiff import Tape, Tensor, backward, zero_grad
from ..autodiff.optim import OptimState, adam_step, clip_global_norm, collect_grads
from ..datagen.dataset import compute_channel_stats
from ..errors import ContractViolation
from .config import DanpConfig
from .model import (
    DanpModel,
    assemble_context_array,
    assemble_x_encoding,
    denormalize_map,
    encode_pl_onehot,
)

log = logging.getLogger(__name__)


@dataclass
class TrainResult:
    model: DanpModel          # carries the best-validation parameters
    log: list
    final_params: dict
    best_val_mae: float
    aborted: bool = False


def grl_schedule(progress: float, gamma: float, max_value: float) -> float:
    """Standard adversarial ramp: 0 at the start, max_value asymptotically."""
    return float(max_value * (2.0 / (1.0 + np.exp(-gamma * progress)) - 1.0))


def _clone_params(params: dict) -> dict:
    return {k: Tensor(p.data.copy(), requires_grad=True) for k, p in params.items()}


def _unpack(dataset):
    if dataset is None:
        return [], None
    if isinstance(dataset, tuple):
        samples, manifest = dataset
        if manifest is not None:
            manifest.validate()
        return list(samples), manifest
    return list(dataset), None


def mean_forecast(model: DanpModel, samples, bank_arr: np.ndarray) -> np.ndarray:
    """Posterior-mean decode of many samples, de-normalized to mmHg."""
    r = model.encode_context(bank_arr)
    lat = model.z_posterior(r)
    mu_z = lat.mu_z.data
    tracks = []
    for lo in range(0, len(samples), 64):
        chunk = samples[lo:lo + 64]
        x_enc = assemble_x_encoding(chunk, model.stats)
        x_sum = model.x_summary(x_enc)
        pl_oh = np.stack([encode_pl_onehot(s.pl) for s in chunk])
        z = Tensor(np.broadcast_to(mu_z, (len(chunk), mu_z.size)).copy())
        mu_y, _ = model.decode(x_sum, pl_oh, z)
        tracks.append(denormalize_map(mu_y.data, model.stats))
    return np.concatenate(tracks, axis=0)


def _domain_accuracy(model: DanpModel, samples, bank_arr: np.ndarray) -> float:
    r = model.encode_context(bank_arr)
    mu_z = model.z_posterior(r).mu_z.data
    hits = 0
    for lo in range(0, len(samples), 64):
        chunk = samples[lo:lo + 64]
        x_sum = model.x_summary(assemble_x_encoding(chunk, model.stats))
        pl_oh = np.stack([encode_pl_onehot(s.pl) for s in chunk])
        z = Tensor(np.broadcast_to(mu_z, (len(chunk), mu_z.size)).copy())
        feat = model.domain_feature(x_sum, pl_oh, z)
        lp = model.classify_domain(feat, 0.0)
        hits += int(np.sum(np.argmax(lp.data, axis=-1)
                           == np.array([s.domain for s in chunk])))
    return hits / max(1, len(samples))


def train(sim_dataset, realproxy_dataset, config: DanpConfig, log_path=None) -> TrainResult:
    """Fit the model on mixed sim/real-proxy data.

    ``sim_dataset`` / ``realproxy_dataset`` are (samples, manifest) tuples
    or plain sample lists; either may be None for single-domain baselines.
    """
    cfg = config
    sim_samples, _ = _unpack(sim_dataset)
    real_samples, _ = _unpack(realproxy_dataset)
    pool = sim_samples + real_samples
    if len(pool) < 10:
        raise ContractViolation("need at least 10 training samples")

    rng_init = np.random.default_rng([cfg.seed, 0])
    rng_train = np.random.default_rng([cfg.seed, 1])
    rng_val = np.random.default_rng([cfg.seed, 2])

    # held-out validation split, stratified by domain
    val_idx = []
    train_idx = []
    for domain in (0, 1):
        idx = [i for i, s in enumerate(pool) if s.domain == domain]
        if not idx:
            continue
        perm = rng_val.permutation(len(idx))
        n_val = int(round(cfg.val_fraction * len(idx)))
        val_idx.extend(idx[j] for j in perm[:n_val])
        train_idx.extend(idx[j] for j in perm[n_val:])
    train_idx.sort()
    val_idx.sort()
    train_pool = [pool[i] for i in train_idx]
    val_pool = [pool[i] for i in val_idx]

    stats = compute_channel_stats(train_pool)   # train split only
    model = DanpModel(cfg, stats, rng=rng_init)
    opt = OptimState.for_params(model.params, lr=cfg.learning_rate)

    bank_size = min(128, len(train_pool))
    bank_idx = rng_val.choice(len(train_pool), size=bank_size, replace=False)
    bank = [train_pool[i] for i in sorted(bank_idx)]
    bank_arr = assemble_context_array(bank, stats)

    n_batches = max(1, len(train_pool) // cfg.batch_size)
    total_steps = max(1, cfg.epochs * n_batches)
    records = []
    best_val = np.inf
    best_params = _clone_params(model.params)
    aborted = False
    step = 0

    for epoch in range(cfg.epochs):
        order = rng_train.permutation(len(train_pool))
        agg = {"l_rec": 0.0, "l_kl": 0.0, "l_dom": 0.0, "total": 0.0, "domain_acc": 0.0}
        max_add = 0.0
        min_kl = np.inf
        n_steps_epoch = 0
        for b in range(n_batches):
            batch = [train_pool[i] for i in order[b * cfg.batch_size:(b + 1) * cfg.batch_size]]
            if len(batch) < 10:
                continue
            progress = step / total_steps
            lam_grl = grl_schedule(progress, cfg.grl_gamma, cfg.grl_max)
            opt.lr = cfg.learning_rate * (
                cfg.lr_final_fraction + (1.0 - cfg.lr_final_fraction) * (1.0 - progress))
            zero_grad(model.params)
            with Tape() as tape:
                loss, parts = model.loss(batch, lam_grl, rng_train)
            if not np.isfinite(parts["total"]):
                log.error("non-finite loss at step %d; aborting, best checkpoint retained", step)
                aborted = True
                break
            backward(tape, loss)
            tape.release()
            grads = collect_grads(model.params)
            grads, _ = clip_global_norm(grads, cfg.clip_norm)
            adam_step(model.params, grads, opt)
            step += 1
            n_steps_epoch += 1
            for k in agg:
                agg[k] += parts[k]
            max_add = max(max_add, parts["additivity_err"])
            min_kl = min(min_kl, parts["l_kl"])
        if aborted:
            break

        n = max(1, n_steps_epoch)
        record = {k: agg[k] / n for k in agg}
        map_scale = stats["map"][1] - stats["map"][0]
        record.update({
            "epoch": epoch,
            "lambda_grl": grl_schedule(step / total_steps, cfg.grl_gamma, cfg.grl_max),
            "max_additivity_err": max_add,
            "min_kl": min_kl if np.isfinite(min_kl) else 0.0,
            "train_mae_mmhg": record["l_rec"] * map_scale,
            "n_steps": n_steps_epoch,
        })
        if val_pool:
            pred = mean_forecast(model, val_pool, bank_arr)
            truth = np.stack([s.y for s in val_pool])
            record["val_mae"] = float(np.mean(np.abs(pred - truth)))
            record["val_domain_acc"] = _domain_accuracy(model, val_pool, bank_arr)
        else:
            record["val_mae"] = record["train_mae_mmhg"]
            record["val_domain_acc"] = float("nan")
        records.append(record)
        if record["val_mae"] < best_val:
            best_val = record["val_mae"]
            best_params = _clone_params(model.params)

    final_params = model.params
    best_model = DanpModel(cfg, stats, params=best_params)
    if log_path is not None:
        with open(log_path, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return TrainResult(model=best_model, log=records, final_params=final_params,
                       best_val_mae=float(best_val), aborted=aborted)
