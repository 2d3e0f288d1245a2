"""Model/training configuration."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from ..errors import ContractViolation


@dataclass
class DanpConfig:
    # architecture sizes
    d_r: int = 64            # context representation
    d_z: int = 16            # latent
    d_h: int = 64            # decoder recurrent hidden
    d_emb: int = 32          # encoder input embedding

    # loss trade-offs
    lambda_domain: float = 1.0   # weight of the domain loss in the total
    grl_gamma: float = 10.0      # ramp steepness of the reversal constant
    grl_max: float = 1.0         # asymptotic reversal constant
    beta_kl: float = 0.05        # KL weight inside the task loss

    # training
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 1e-3
    lr_final_fraction: float = 0.1   # linear decay floor; MAE needs a cooled lr
    seed: int = 0
    clip_norm: float = 5.0
    context_ratio: float = 0.9
    val_fraction: float = 0.15

    # behavior flags
    use_seq_encoder: bool = True    # off = mean-pooled affine context encoding
    sigma_head: bool = False        # train the decoder sigma with Gaussian NLL
    recon_real_only: bool = True    # task loss on real-domain targets when adversarial
    aux_sim_recon: bool = True      # add sim-domain reconstruction as auxiliary loss
    np_style_kl: bool = False       # KL(q(z|C+T) || q(z|C)) instead of prior KL
    refeed_summary: bool = True     # re-feed the x summary at every decoder step

    # inference
    n_latent_samples: int = 50
    context_bank_cap: int = 512
    context_bank_seed: int = 123

    def __post_init__(self):
        for name in ("d_r", "d_z", "d_h", "d_emb"):
            if getattr(self, name) < 1:
                raise ContractViolation(f"{name} must be >= 1")
        if self.lambda_domain < 0:
            raise ContractViolation("lambda_domain must be >= 0")
        if self.beta_kl < 0:
            raise ContractViolation("beta_kl must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DanpConfig":
        return cls(**d)
