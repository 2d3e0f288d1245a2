"""Domain-adversarial neural process over MAP forecasting windows.

The context encoder runs a gated recurrent cell over each context element's
90-step concatenation of normalized features, future-level one-hots, and
future targets, then averages the final hidden states into a permutation-
invariant representation. A two-hidden-layer affine stack maps that
representation to the latent Gaussian. The sequential decoder consumes the
target window's summary embedding, the hypothetical future level one-hot,
and a latent draw at every step through two stacked recurrent layers and a
four-layer sigmoid head. The domain head shares the decoder's input
representation through a gradient reversal layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import logging

import numpy as np

from ..autodiff import (
    GruParams,
    Tensor,
    affine,
    concat,
    gaussian_kl,
    grl,
    gru_cell,
    init_affine,
    init_gru,
    log_softmax,
    mae_loss,
    reparameterize,
)
from ..autodiff.layers import nll_domain_batch
from ..autodiff.tensor import add, mul, relu, sigmoid, softplus, sub, tanh
from ..datagen.features import COL_PLEVEL, WINDOW_STEPS
from ..datagen.samples import split_context_target
from ..errors import ContractViolation
from .config import DanpConfig

log = logging.getLogger(__name__)

N_LEVELS = 9
CONT_COLS = (0, 2, 3, 4, 5, 6)          # continuous feature columns
CONT_NAMES = ("map", "qp", "lvp", "hr", "tau", "contractility")
D_XENC = len(CONT_COLS) + N_LEVELS      # per-step encoding of the context window
D_CTX = D_XENC + N_LEVELS + 1           # + future level one-hot + future target

GRU_FIELDS = ("w_xr", "w_hr", "b_r", "w_xz", "w_hz", "b_z",
              "w_xn", "w_hn", "b_xn", "b_hn")


@dataclass
class LatentGaussian:
    mu_z: Tensor
    sigma_z: Tensor


# -- normalization ----------------------------------------------------------

def merge_channel_stats(*stats_dicts) -> dict:
    """Combine per-dataset stats into train-wide mins/maxes."""
    merged = {}
    for stats in stats_dicts:
        for name, (lo, hi) in stats.items():
            if name in merged:
                merged[name] = [min(merged[name][0], lo), max(merged[name][1], hi)]
            else:
                merged[name] = [float(lo), float(hi)]
    return merged


def normalize_map(y, stats):
    lo, hi = stats["map"]
    return (np.asarray(y, dtype=np.float64) - lo) / (hi - lo)


def denormalize_map(y_norm, stats):
    lo, hi = stats["map"]
    return lo + np.asarray(y_norm, dtype=np.float64) * (hi - lo)


def encode_pl_onehot(pl) -> np.ndarray:
    pl = np.asarray(pl, dtype=int)
    out = np.zeros(pl.shape + (N_LEVELS,))
    np.put_along_axis(out, (pl - 1)[..., None], 1.0, axis=-1)
    return out


def normalize_window(x_values, stats) -> np.ndarray:
    """90 x 7 physical-unit window -> 90 x 15 model encoding."""
    x = np.asarray(x_values, dtype=np.float64)
    out = np.empty((x.shape[0], D_XENC))
    for j, (col, name) in enumerate(zip(CONT_COLS, CONT_NAMES)):
        lo, hi = stats[name]
        out[:, j] = (x[:, col] - lo) / (hi - lo)
    out[:, len(CONT_COLS):] = encode_pl_onehot(x[:, COL_PLEVEL])
    return out


def assemble_x_encoding(samples, stats) -> np.ndarray:
    return np.stack([normalize_window(s.x.values, stats) for s in samples])


def assemble_context_array(samples, stats) -> np.ndarray:
    """[n, 90, 25] arrays feeding the context encoder."""
    n = len(samples)
    arr = np.zeros((n, WINDOW_STEPS, D_CTX))
    for i, s in enumerate(samples):
        arr[i, :, :D_XENC] = normalize_window(s.x.values, stats)
        arr[i, :, D_XENC:D_XENC + N_LEVELS] = encode_pl_onehot(s.pl)
        arr[i, :, -1] = normalize_map(s.y, stats)
    return arr


# -- parameters -------------------------------------------------------------

def init_params(cfg: DanpConfig, rng: np.random.Generator) -> dict:
    P = {}

    def put_affine(prefix, d_in, d_out):
        P[f"{prefix}_w"], P[f"{prefix}_b"] = init_affine(rng, d_in, d_out)

    def put_gru(prefix, d_in, d_h):
        for name, t in init_gru(rng, d_in, d_h).tensors().items():
            P[f"{prefix}_{name}"] = t

    if cfg.use_seq_encoder:
        put_affine("enc_emb", D_CTX, cfg.d_emb)
        put_gru("enc_gru", cfg.d_emb, cfg.d_r)
    else:
        put_affine("pool", D_CTX, cfg.d_r)
    put_affine("z_h1", cfg.d_r, cfg.d_r)
    put_affine("z_h2", cfg.d_r, cfg.d_r)
    put_affine("z_mu", cfg.d_r, cfg.d_z)
    put_affine("z_sig", cfg.d_r, cfg.d_z)
    dec_in = (cfg.d_r if cfg.refeed_summary else 0) + N_LEVELS + cfg.d_z
    if not cfg.refeed_summary:
        put_affine("dec_init", cfg.d_r, cfg.d_h)
    put_gru("dec_gru1", dec_in, cfg.d_h)
    put_gru("dec_gru2", cfg.d_h, cfg.d_h)
    put_affine("head1", cfg.d_h, cfg.d_h)
    put_affine("head2", cfg.d_h, cfg.d_h // 2)
    put_affine("head3", cfg.d_h // 2, cfg.d_h // 4)
    put_affine("head4", cfg.d_h // 4, 1)
    put_affine("sig_head", cfg.d_h, 1)
    d_feat = cfg.d_r + N_LEVELS + cfg.d_z
    put_affine("dom1", d_feat, 64)
    put_affine("dom2", 64, 32)
    put_affine("dom3", 32, 2)
    return P


class DanpModel:
    """Parameters + config + normalization stats, with the forward passes."""

    def __init__(self, config: DanpConfig, stats: dict, params: dict | None = None,
                 rng: np.random.Generator | None = None):
        self.cfg = config
        self.stats = {k: list(v) for k, v in stats.items()}
        if params is None:
            params = init_params(config, rng or np.random.default_rng(config.seed))
        self.params = params

    def _gru(self, prefix) -> GruParams:
        return GruParams(**{f: self.params[f"{prefix}_{f}"] for f in GRU_FIELDS})

    # -- encoder ------------------------------------------------------------
    def _encoder_pass(self, arr: np.ndarray) -> Tensor:
        """[n, 90, 25] -> [n, d_r] per-element encodings."""
        P = self.params
        n, steps, _ = arr.shape
        if self.cfg.use_seq_encoder:
            g = self._gru("enc_gru")
            h = Tensor(np.zeros((n, self.cfg.d_r)))
            for t in range(steps):
                xt = tanh(affine(Tensor(arr[:, t, :]), P["enc_emb_w"], P["enc_emb_b"]))
                h = gru_cell(xt, h, g)
            return h
        flat = Tensor(arr.reshape(n * steps, arr.shape[2]))
        e = tanh(affine(flat, P["pool_w"], P["pool_b"]))
        return e.reshape(n, steps, self.cfg.d_r).mean(axis=1)

    def encode_context(self, ctx_array: np.ndarray) -> Tensor:
        """Mean of per-element encodings: permutation/duplication invariant."""
        if ctx_array.shape[0] == 0:
            raise ContractViolation("context must be nonempty")
        return self._encoder_pass(ctx_array).mean(axis=0)

    def x_summary(self, x_enc: np.ndarray) -> Tensor:
        """Context-free pass over the target's own window (future slots zeroed)."""
        n, steps, d = x_enc.shape
        arr = np.zeros((n, steps, D_CTX))
        arr[:, :, :d] = x_enc
        return self._encoder_pass(arr)

    # -- latent -------------------------------------------------------------
    def z_posterior(self, r: Tensor) -> LatentGaussian:
        P = self.params
        h = tanh(affine(r, P["z_h1_w"], P["z_h1_b"]))
        h = tanh(affine(h, P["z_h2_w"], P["z_h2_b"]))
        mu = affine(h, P["z_mu_w"], P["z_mu_b"])
        sigma = add(softplus(affine(h, P["z_sig_w"], P["z_sig_b"])), 1e-3)
        return LatentGaussian(mu_z=mu, sigma_z=sigma)

    # -- decoder ------------------------------------------------------------
    def decode(self, x_sum: Tensor, pl_onehot: np.ndarray, z: Tensor):
        """Per-step sequential decoding -> (mu_y, sigma_y), each [B, 90],
        in normalized units (mu_y in (0,1) via the closing sigmoid)."""
        P = self.params
        cfg = self.cfg
        B, steps, _ = pl_onehot.shape
        if x_sum.shape[0] != B or z.shape[0] != B:
            raise ContractViolation("decode batch dimensions disagree")
        if cfg.refeed_summary:
            h1 = Tensor(np.zeros((B, cfg.d_h)))
        else:
            h1 = tanh(affine(x_sum, P["dec_init_w"], P["dec_init_b"]))
        h2 = Tensor(np.zeros((B, cfg.d_h)))
        g1, g2 = self._gru("dec_gru1"), self._gru("dec_gru2")
        hs = []
        for t in range(steps):
            parts = ([x_sum] if cfg.refeed_summary else []) + [Tensor(pl_onehot[:, t, :]), z]
            h1 = gru_cell(concat(parts, axis=1), h1, g1)
            h2 = gru_cell(h1, h2, g2)
            hs.append(h2)
        H = concat(hs, axis=0)                      # [steps*B, d_h], step-major
        m = relu(affine(H, P["head1_w"], P["head1_b"]))
        m = relu(affine(m, P["head2_w"], P["head2_b"]))
        m = relu(affine(m, P["head3_w"], P["head3_b"]))
        mu = sigmoid(affine(m, P["head4_w"], P["head4_b"]))
        mu = mu.reshape(steps, B).transpose()
        sg = add(softplus(affine(H, P["sig_head_w"], P["sig_head_b"])), 1e-3)
        sg = sg.reshape(steps, B).transpose()
        return mu, sg

    # -- domain head ----------------------------------------------------------
    def domain_feature(self, x_sum: Tensor, pl_onehot: np.ndarray, z: Tensor) -> Tensor:
        """Step-mean of the decoder's input sequence (x_sum and z are
        constant across steps, so only the level one-hot averages)."""
        mean_oh = Tensor(pl_onehot.mean(axis=1))
        return concat([x_sum, mean_oh, z], axis=1)

    def classify_domain(self, feature: Tensor, lambda_grl: float) -> Tensor:
        P = self.params
        f = grl(feature, lambda_grl)
        h = relu(affine(f, P["dom1_w"], P["dom1_b"]))
        h = relu(affine(h, P["dom2_w"], P["dom2_b"]))
        return log_softmax(affine(h, P["dom3_w"], P["dom3_b"]), axis=-1)

    # -- losses ---------------------------------------------------------------
    def loss(self, batch, lambda_grl: float, rng: np.random.Generator):
        """Composite training loss on one mixed batch.

        Returns (total loss Tensor, float components dict).
        """
        cfg = self.cfg
        ctx, tgt = split_context_target(batch, cfg.context_ratio, rng)
        eps = rng.standard_normal(cfg.d_z)
        ctx_arr = assemble_context_array(ctx, self.stats)
        r = self.encode_context(ctx_arr)
        lat_c = self.z_posterior(r)
        if cfg.np_style_kl:
            lat_t = self.z_posterior(self.encode_context(
                assemble_context_array(list(ctx) + list(tgt), self.stats)))
            z = reparameterize(lat_t.mu_z, lat_t.sigma_z, eps)
            kl = _kl_between(lat_t, lat_c)
        else:
            z = reparameterize(lat_c.mu_z, lat_c.sigma_z, eps)
            kl = gaussian_kl(lat_c.mu_z, lat_c.sigma_z)

        B = len(tgt)
        x_enc = assemble_x_encoding(tgt, self.stats)
        x_sum = self.x_summary(x_enc)
        pl_oh = np.stack([encode_pl_onehot(s.pl) for s in tgt])
        zB = add(Tensor(np.zeros((B, cfg.d_z))), z)
        mu_y, sigma_y = self.decode(x_sum, pl_oh, zB)
        y_norm = Tensor(np.stack([normalize_map(s.y, self.stats) for s in tgt]))
        domains = np.array([s.domain for s in tgt], dtype=int)

        restrict = (cfg.recon_real_only and cfg.lambda_domain > 0
                    and not cfg.aux_sim_recon and bool(np.any(domains == 1)))
        rows = (domains == 1) if restrict else np.ones(B, dtype=bool)
        if cfg.sigma_head:
            l_rec = _masked_gaussian_nll(mu_y, sigma_y, y_norm, rows)
        else:
            l_rec = _masked_mae(mu_y, y_norm, rows)

        feature = self.domain_feature(x_sum, pl_oh, zB)
        log_probs = self.classify_domain(feature, lambda_grl)
        l_dom = nll_domain_batch(log_probs, domains)
        batch_domains = {s.domain for s in batch}
        if cfg.lambda_domain > 0 and len(batch_domains) < 2:
            log.warning("single-domain batch during adversarial training; "
                        "domain loss computed on the available labels")

        l_y = add(l_rec, mul(kl, cfg.beta_kl))
        total = add(l_y, mul(l_dom, cfg.lambda_domain))

        pred_domain = np.argmax(log_probs.data, axis=-1)
        parts = {
            "l_rec": float(l_rec.data),
            "l_kl": float(kl.data),
            "l_dom": float(l_dom.data),
            "total": float(total.data),
            "domain_acc": float(np.mean(pred_domain == domains)),
            "n_targets": B,
            "lambda_grl": float(lambda_grl),
        }
        parts["additivity_err"] = abs(
            parts["total"] - ((parts["l_rec"] + parts["l_kl"] * cfg.beta_kl)
                              + parts["l_dom"] * cfg.lambda_domain))
        return total, parts


def _masked_mae(pred: Tensor, target: Tensor, rows: np.ndarray) -> Tensor:
    if bool(np.all(rows)):
        return mae_loss(pred, target)
    w = np.zeros(pred.shape)
    w[rows, :] = 1.0 / (rows.sum() * pred.shape[1])
    return mul(sub(pred, target).abs(), w).sum()


def _masked_gaussian_nll(mu: Tensor, sigma: Tensor, target: Tensor,
                         rows: np.ndarray) -> Tensor:
    w = np.zeros(mu.shape)
    w[rows, :] = 1.0 / (rows.sum() * mu.shape[1])
    inv_var = (sigma.log() * (-2.0)).exp()
    quad = mul(sub(target, mu).square(), inv_var) * 0.5
    nll = add(add(quad, sigma.log()), 0.5 * np.log(2.0 * np.pi))
    return mul(nll, w).sum()


def _kl_between(q: LatentGaussian, p: LatentGaussian) -> Tensor:
    """KL(q || p) for diagonal Gaussians, as a tape expression."""
    inv_p_var = (p.sigma_z.log() * (-2.0)).exp()
    quad = mul(add(q.sigma_z.square(), sub(q.mu_z, p.mu_z).square()), inv_p_var)
    term = add(sub(p.sigma_z.log(), q.sigma_z.log()), mul(quad, 0.5))
    return add(term.sum(), -0.5 * q.mu_z.size)
