"""Probabilistic what-if forecasting from a frozen model, plus model
persistence (checkpoint file + JSON sidecar)."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass

import numpy as np

from .. import __version__
from ..autodiff import Tensor, load_checkpoint, save_checkpoint
from ..datagen.features import FeatureWindow
from ..datagen.samples import HORIZON
from ..errors import ContractViolation
from .config import DanpConfig
from .model import (
    DanpModel,
    assemble_context_array,
    denormalize_map,
    encode_pl_onehot,
    normalize_window,
)


@dataclass
class Forecast:
    """Per-step predicted MAP mean, predictive spread, and latent-sampling
    quantile tracks, all in mmHg."""

    mean: np.ndarray
    sigma: np.ndarray
    q10: np.ndarray
    q50: np.ndarray
    q90: np.ndarray
    n_latent_samples: int

    def __post_init__(self):
        for name in ("mean", "sigma", "q10", "q50", "q90"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != (HORIZON,):
                raise ContractViolation(f"{name} must have {HORIZON} entries")
            setattr(self, name, arr)
        if np.any(self.q10 > self.q50) or np.any(self.q50 > self.q90):
            raise ContractViolation("quantile tracks must be pointwise monotone")


def build_context_bank(samples, cap: int = 512, seed: int = 123):
    """Fixed-seed subsample of the training windows used as inference context."""
    samples = list(samples)
    if len(samples) <= cap:
        return samples
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(samples), size=cap, replace=False)
    return [samples[i] for i in sorted(idx)]


def predict(model: DanpModel, x, pl, context_bank, n_samples: int = 50,
            seed: int = 0) -> Forecast:
    """Draw latents conditioned on the context bank and decode each into a
    MAP track; summary statistics are taken across the draws."""
    if not context_bank:
        raise ContractViolation("context bank must be nonempty")
    x_values = x.values if isinstance(x, FeatureWindow) else np.asarray(x, dtype=np.float64)
    FeatureWindow(x_values)  # validate shape and level column
    pl = np.asarray(pl)
    if pl.shape != (HORIZON,) or np.any(pl < 1) or np.any(pl > 9) \
            or np.any(pl != np.round(pl)):
        raise ContractViolation("future P-levels must be 90 integers in 1..9")
    if n_samples < 1:
        raise ContractViolation("n_samples must be >= 1")

    ctx_arr = assemble_context_array(context_bank, model.stats)
    r = model.encode_context(ctx_arr)
    lat = model.z_posterior(r)
    mu_z, sigma_z = lat.mu_z.data, lat.sigma_z.data

    rng = np.random.default_rng(seed)
    eps = rng.standard_normal((n_samples, mu_z.size))
    z = mu_z + sigma_z * eps

    x_enc = normalize_window(x_values, model.stats)[None]
    x_sum = model.x_summary(x_enc)
    x_sum_tiled = Tensor(np.broadcast_to(x_sum.data, (n_samples, x_sum.shape[-1])).copy())
    pl_oh = np.broadcast_to(encode_pl_onehot(pl.astype(int)),
                            (n_samples, HORIZON, 9)).copy()
    mu_y, sigma_y = model.decode(x_sum_tiled, pl_oh, Tensor(z))
    tracks = denormalize_map(mu_y.data, model.stats)

    q10, q50, q90 = np.quantile(tracks, [0.1, 0.5, 0.9], axis=0)
    spread = tracks.std(axis=0)
    if model.cfg.sigma_head:
        map_scale = model.stats["map"][1] - model.stats["map"][0]
        head_var = np.mean((sigma_y.data * map_scale) ** 2, axis=0)
        spread = np.sqrt(spread ** 2 + head_var)
    return Forecast(mean=tracks.mean(axis=0), sigma=spread,
                    q10=q10, q50=q50, q90=q90, n_latent_samples=n_samples)


# -- persistence -------------------------------------------------------------

CHECKPOINT_FILE = "checkpoint.bin"
SIDECAR_FILE = "danp.json"


def save_model(dirpath, model: DanpModel, extra_meta: dict | None = None) -> str:
    """Write checkpoint + sidecar; returns the model version string."""
    os.makedirs(dirpath, exist_ok=True)
    ckpt_path = os.path.join(dirpath, CHECKPOINT_FILE)
    save_checkpoint(ckpt_path, model.params, meta={"package": "mcsim"})
    with open(ckpt_path, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    version = f"mcsim-{__version__}-{digest[:12]}"
    sidecar = {
        "config": model.cfg.to_dict(),
        "channel_stats": model.stats,
        "context_bank_seed": model.cfg.context_bank_seed,
        "model_version": version,
    }
    if extra_meta:
        sidecar.update(extra_meta)
    with open(os.path.join(dirpath, SIDECAR_FILE), "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, sort_keys=True, indent=2)
    return version


def load_model(dirpath):
    """Read (DanpModel, sidecar dict) back from disk."""
    with open(os.path.join(dirpath, SIDECAR_FILE), "r", encoding="utf-8") as fh:
        sidecar = json.load(fh)
    params, _ = load_checkpoint(os.path.join(dirpath, CHECKPOINT_FILE),
                                requires_grad=True)
    cfg = DanpConfig.from_dict(sidecar["config"])
    model = DanpModel(cfg, sidecar["channel_stats"], params=params)
    return model, sidecar
