"""Layers and loss primitives built on the tape: gated recurrent cell,
gradient reversal, Gaussian reparameterization/KL, MAE and NLL losses."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractViolation
from .tensor import Tensor, _record, add, affine, matmul, mul, sigmoid, sub, tanh


def uniform_fan_in(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def orthogonal(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    a = rng.standard_normal((max(n, m), min(n, m)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))  # fix the sign ambiguity for determinism
    if n < m:
        q = q.T
    return q[:n, :m]


def init_affine(rng: np.random.Generator, d_in: int, d_out: int):
    """PyTorch-style uniform fan-in init; returns (w, b) leaf tensors."""
    w = Tensor(uniform_fan_in(rng, d_in, (d_in, d_out)), requires_grad=True)
    b = Tensor(uniform_fan_in(rng, d_in, (d_out,)), requires_grad=True)
    return w, b


@dataclass
class GruParams:
    """Gate weights of one gated recurrent cell (input d_in, hidden d_h)."""

    w_xr: Tensor
    w_hr: Tensor
    b_r: Tensor
    w_xz: Tensor
    w_hz: Tensor
    b_z: Tensor
    w_xn: Tensor
    w_hn: Tensor
    b_xn: Tensor
    b_hn: Tensor

    @property
    def d_in(self) -> int:
        return self.w_xr.shape[0]

    @property
    def d_h(self) -> int:
        return self.w_xr.shape[1]

    def tensors(self) -> dict:
        return {
            "w_xr": self.w_xr, "w_hr": self.w_hr, "b_r": self.b_r,
            "w_xz": self.w_xz, "w_hz": self.w_hz, "b_z": self.b_z,
            "w_xn": self.w_xn, "w_hn": self.w_hn, "b_xn": self.b_xn, "b_hn": self.b_hn,
        }


def init_gru(rng: np.random.Generator, d_in: int, d_h: int) -> GruParams:
    """Uniform fan-in input weights, orthogonal recurrent weights, zero biases."""
    def wx():
        return Tensor(uniform_fan_in(rng, d_in, (d_in, d_h)), requires_grad=True)

    def wh():
        return Tensor(orthogonal(rng, d_h, d_h), requires_grad=True)

    def bias():
        return Tensor(np.zeros(d_h), requires_grad=True)

    return GruParams(
        w_xr=wx(), w_hr=wh(), b_r=bias(),
        w_xz=wx(), w_hz=wh(), b_z=bias(),
        w_xn=wx(), w_hn=wh(), b_xn=bias(), b_hn=bias(),
    )


def gru_cell(x_t: Tensor, h_prev: Tensor, p: GruParams) -> Tensor:
    """One gated recurrent update; output stays in (-1, 1) per coordinate
    whenever the initial hidden state does."""
    if x_t.shape[-1] != p.d_in or h_prev.shape[-1] != p.d_h:
        raise ContractViolation(
            f"gru_cell shape mismatch: x {x_t.shape}, h {h_prev.shape}, "
            f"cell ({p.d_in}, {p.d_h})"
        )
    r = sigmoid(add(affine(x_t, p.w_xr, p.b_r), matmul(h_prev, p.w_hr)))
    z = sigmoid(add(affine(x_t, p.w_xz, p.b_z), matmul(h_prev, p.w_hz)))
    n = tanh(add(affine(x_t, p.w_xn, p.b_xn), mul(r, add(matmul(h_prev, p.w_hn), p.b_hn))))
    return add(mul(sub(1.0, z), n), mul(z, h_prev))


def grl(x: Tensor, lambda_grl: float) -> Tensor:
    """Identity forward; backward multiplies the upstream gradient by
    ``-lambda_grl``."""
    if lambda_grl < 0:
        raise ContractViolation("lambda_grl must be nonnegative")
    out = Tensor(x.data)  # exact forward identity, shared buffer (never mutated)
    out.requires_grad = x.requires_grad
    lam = float(lambda_grl)
    _record(out, (x,), lambda g: (-lam * g,))
    return out


def reparameterize(mu: Tensor, sigma: Tensor, eps) -> Tensor:
    """z = mu + sigma * eps, differentiable in mu and sigma."""
    if np.any(np.asarray(sigma.data) <= 0.0):
        raise ContractViolation("sigma must be positive elementwise")
    eps_t = eps if isinstance(eps, Tensor) else Tensor(eps)
    return add(mu, mul(sigma, eps_t))


def gaussian_kl(mu: Tensor, sigma: Tensor) -> Tensor:
    """KL( N(mu, diag sigma^2) || N(0, I) ) as a scalar tensor."""
    if np.any(np.asarray(sigma.data) <= 0.0):
        raise ContractViolation("sigma must be positive elementwise")
    term = add(add(mu.square(), sigma.square()), -1.0)
    term = sub(term, mul(sigma.log(), 2.0))
    return mul(term.sum(), 0.5)


def mae_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Mean absolute error; subgradient 0 at exact ties."""
    if pred.shape != target.shape:
        raise ContractViolation(f"shape mismatch: {pred.shape} vs {target.shape}")
    return sub(pred, target).abs().mean()


def nll_domain_loss(log_probs: Tensor, label: int) -> Tensor:
    """Negative log likelihood of one domain label under a log-softmax head."""
    if label not in (0, 1):
        raise ContractViolation(f"label must be 0 or 1, got {label!r}")
    lp = log_probs.data.reshape(-1)
    if lp.shape[0] != 2:
        raise ContractViolation("log_probs must have two entries")
    if abs(np.exp(lp).sum() - 1.0) > 1e-6:
        raise ContractViolation("log_probs must come from a log-softmax head")
    mask = np.zeros(log_probs.shape)
    mask.reshape(-1)[label] = -1.0
    return mul(log_probs, mask).sum()


def nll_domain_batch(log_probs: Tensor, labels: np.ndarray) -> Tensor:
    """Mean NLL over a batch of rows of log-probabilities."""
    labels = np.asarray(labels, dtype=int)
    if np.any((labels != 0) & (labels != 1)):
        raise ContractViolation("labels must be 0 or 1")
    n = log_probs.shape[0]
    mask = np.zeros(log_probs.shape)
    mask[np.arange(n), labels] = -1.0 / n
    return mul(log_probs, mask).sum()
