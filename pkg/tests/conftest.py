import numpy as np
import pytest

import mcsim.datagen as dg
from mcsim.danp import DanpConfig, train


def tiny_sim_config(**kw):
    base = dict(
        hr_values=(72.0, 95.0),
        ees_values=(1.0, 2.2),
        tau_values=(0.06,),
        n_per_cell=5,
        perturb=dg.PerturbConfig(obs_noise=0.3),
    )
    base.update(kw)
    return dg.GeneratorConfig(**base)


def tiny_real_config(**kw):
    base = dict(
        hr_values=(76.0, 90.0),
        ees_values=(0.7, 1.4),
        tau_values=(0.06,),
        n_per_cell=5,
        domain=1,
        use_realproxy_constants=True,
        perturb=dg.PerturbConfig(ou_std=5.0, hr_mod_amp=0.1, resp_amp=3.0, obs_noise=1.5),
    )
    base.update(kw)
    return dg.GeneratorConfig(**base)


@pytest.fixture(scope="session")
def tiny_sim_dataset():
    return dg.make_sim_dataset(tiny_sim_config(), seed=7)


@pytest.fixture(scope="session")
def tiny_real_dataset():
    return dg.make_realproxy_dataset(tiny_real_config(), seed=8)


TINY_MODEL_CONFIG = DanpConfig(
    d_r=24, d_z=8, d_h=24, d_emb=16, epochs=4, batch_size=16, seed=3,
)


@pytest.fixture(scope="session")
def tiny_model(tiny_sim_dataset, tiny_real_dataset):
    """A small trained model shared by prediction/service/CLI tests."""
    return train(tiny_sim_dataset, tiny_real_dataset, TINY_MODEL_CONFIG)


def gradcheck(build_loss, params, eps=1e-5, fd_subset=None, rng=None):
    """Max relative error between tape gradients and central differences.

    ``build_loss`` must be a deterministic closure over ``params``.
    """
    from mcsim.autodiff import Tape, backward, zero_grad

    zero_grad(params)
    with Tape() as tape:
        loss = build_loss()
    backward(tape, loss)
    analytic = {k: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
                for k, p in params.items()}
    worst = 0.0
    for name, p in params.items():
        flat = p.data.reshape(-1)
        if fd_subset is not None and flat.size > fd_subset:
            rng = rng or np.random.default_rng(0)
            idx = rng.choice(flat.size, size=fd_subset, replace=False)
        else:
            idx = range(flat.size)
        ga = analytic[name].reshape(-1)
        for i in idx:
            orig = flat[i]
            flat[i] = orig + eps
            lp = float(build_loss().data)
            flat[i] = orig - eps
            lm = float(build_loss().data)
            flat[i] = orig
            fd = (lp - lm) / (2 * eps)
            denom = max(abs(fd), abs(ga[i]), 1e-6)
            worst = max(worst, abs(ga[i] - fd) / denom)
    return worst
