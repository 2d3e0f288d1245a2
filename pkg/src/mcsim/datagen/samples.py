"""Supervised samples and the sample-level operations: augmentation,
context/target splitting, trend-balanced subsampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractViolation
from .features import COL_LVP, COL_MAP, COL_QP, FeatureWindow, WINDOW_STEPS
from .trends import TrendLabel, label_trend

HORIZON = 90  # forecast steps, 15 minutes at 0.1 Hz


class SampleRejected(RuntimeError):
    """Augmentation pushed the sample outside the plausible pressure range."""


@dataclass
class Sample:
    """One supervised window: context features, future P-levels, future MAP."""

    x: FeatureWindow
    pl: np.ndarray            # 90 future P-levels in 1..9
    y: np.ndarray             # 90 future MAP values, mmHg
    domain: int               # 0 = sim, 1 = real
    trend: TrendLabel

    def __post_init__(self):
        self.pl = np.asarray(self.pl)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.pl.shape != (HORIZON,) or self.y.shape != (HORIZON,):
            raise ContractViolation("pl and y must have 90 entries")
        if np.any(self.pl < 1) or np.any(self.pl > 9) or np.any(self.pl != np.round(self.pl)):
            raise ContractViolation("future P-levels must be integers in 1..9")
        self.pl = self.pl.astype(np.int64)
        if self.domain not in (0, 1):
            raise ContractViolation(f"domain must be 0 or 1, got {self.domain}")
        if not isinstance(self.trend, TrendLabel):
            self.trend = TrendLabel(self.trend)

    def validate(self):
        """Re-run all invariants (used when loading from disk)."""
        FeatureWindow(self.x.values)
        Sample(x=self.x, pl=self.pl, y=self.y, domain=self.domain, trend=self.trend)
        if self.trend != label_trend(self.y):
            raise ContractViolation("stored trend label disagrees with the target window")


def augment(sample: Sample, shift: float, scale: float, rng_seed,
            noise_sigma: float = 1.0) -> Sample:
    """Shift/rescale the pressure channels, rescale the flow channel, add
    i.i.d. Gaussian noise to the pressures, and relabel the trend.

    Raises :class:`SampleRejected` when the resulting MAP leaves (10, 250).
    """
    if not 0.8 <= scale <= 1.2:
        raise ContractViolation(f"scale out of [0.8, 1.2]: {scale}")
    if not -15.0 <= shift <= 15.0:
        raise ContractViolation(f"shift out of [-15, 15]: {shift}")
    rng = np.random.default_rng(rng_seed)
    x = sample.x.values.copy()
    y = sample.y.copy()
    for col in (COL_MAP, COL_LVP):
        x[:, col] = scale * x[:, col] + shift
    x[:, COL_QP] = scale * x[:, COL_QP]
    y = scale * y + shift
    if noise_sigma > 0.0:
        x[:, COL_MAP] += rng.normal(0.0, noise_sigma, WINDOW_STEPS)
        x[:, COL_LVP] += rng.normal(0.0, noise_sigma, WINDOW_STEPS)
        y += rng.normal(0.0, noise_sigma, HORIZON)
    map_values = np.concatenate([x[:, COL_MAP], y])
    if np.any(map_values <= 10.0) or np.any(map_values >= 250.0):
        raise SampleRejected("augmented MAP outside (10, 250) mmHg")
    return Sample(x=FeatureWindow(x), pl=sample.pl.copy(), y=y,
                  domain=sample.domain, trend=label_trend(y))


def split_context_target(batch, ratio: float = 0.9, rng=None):
    """Random disjoint partition with round(ratio * n) context elements."""
    batch = list(batch)
    n = len(batch)
    if n < 10:
        raise ContractViolation("need at least 10 samples to split")
    if not 0.0 <= ratio <= 1.0:
        raise ContractViolation("ratio must lie in [0, 1]")
    rng = rng if rng is not None else np.random.default_rng()
    order = rng.permutation(n)
    n_ctx = int(round(ratio * n))
    ctx_idx = sorted(order[:n_ctx])
    tgt_idx = sorted(order[n_ctx:])
    return [batch[i] for i in ctx_idx], [batch[i] for i in tgt_idx]


def balanced_subsample(samples, seed):
    """Equalize the three trend classes at the minority class count."""
    samples = list(samples)
    by_trend = {label: [] for label in TrendLabel}
    for i, s in enumerate(samples):
        by_trend[s.trend].append(i)
    missing = [label.value for label, idx in by_trend.items() if not idx]
    if missing:
        raise ContractViolation(f"trend classes absent: {missing}")
    m = min(len(idx) for idx in by_trend.values())
    rng = np.random.default_rng(seed)
    keep = []
    for label in TrendLabel:
        idx = by_trend[label]
        keep.extend(idx[j] for j in rng.choice(len(idx), size=m, replace=False))
    keep.sort()
    return [samples[i] for i in keep]
