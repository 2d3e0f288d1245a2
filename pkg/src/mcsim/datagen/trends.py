"""MAP-window trend classification via an ordinary-least-squares line.

``medium`` is the fitted value at the window midpoint (identically the mean
of the series for OLS) and ``dy`` the fitted total change over the window
(slope times n-1 steps). Windows sitting above 80 mmHg use +-10 mmHg
thresholds, windows at or below 80 mmHg use +-5.
"""

from __future__ import annotations

import enum

import numpy as np

from ..errors import ContractViolation


class TrendLabel(str, enum.Enum):
    INC = "inc"
    DEC = "dec"
    STAT = "stat"

    def __str__(self):
        return self.value


def label_trend(series) -> TrendLabel:
    y = np.asarray(series, dtype=np.float64)
    if y.ndim != 1 or y.size < 2:
        raise ContractViolation("label_trend expects a 1-D series of >= 2 values")
    if not np.all(np.isfinite(y)):
        raise ContractViolation("label_trend expects finite values")
    n = y.size
    idx = np.arange(n, dtype=np.float64)
    dev = idx - (n - 1) / 2.0
    sxy = float(np.dot(dev, y))
    sxx = float(np.dot(dev, dev))
    # multiply before dividing so integer-friendly boundary cases stay exact
    dy = sxy * (n - 1) / sxx
    medium = float(y.mean())
    threshold = 10.0 if medium > 80.0 else 5.0
    if dy >= threshold:
        return TrendLabel.INC
    if dy <= -threshold:
        return TrendLabel.DEC
    return TrendLabel.STAT
