"""Forecast metrics, per-trend buckets, and the distribution-overlap report."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..datagen.trends import TrendLabel, label_trend
from ..errors import ContractViolation


def mae(pred, target) -> float:
    """Mean absolute deviation in mmHg."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ContractViolation(f"length mismatch: {pred.shape} vs {target.shape}")
    return float(np.mean(np.abs(pred - target)))


def bucketed_metrics(samples, forecast_means, trend_on: str = "target") -> dict:
    """Per-trend MAE buckets plus trend accuracy of the forecast mean track.

    ``trend_on`` buckets either by the ground-truth target window trend
    (default) or by the trend of the context MAP column ("input").
    """
    if len(samples) != len(forecast_means):
        raise ContractViolation("one forecast per sample required")
    if trend_on not in ("target", "input"):
        raise ContractViolation("trend_on must be 'target' or 'input'")
    per_sample = []
    for s, mean_track in zip(samples, forecast_means):
        err = mae(mean_track, s.y)
        if trend_on == "target":
            bucket = label_trend(s.y)
        else:
            bucket = label_trend(s.x.values[:, 0])
        hit = label_trend(np.asarray(mean_track)) == label_trend(s.y)
        per_sample.append((err, bucket, hit))

    out = {"n": len(per_sample)}
    errs = np.array([e for e, _, _ in per_sample])
    out["mae_all"] = float(errs.mean()) if per_sample else None
    out["trend_acc"] = float(np.mean([h for _, _, h in per_sample])) if per_sample else None
    for label in TrendLabel:
        sub = [e for e, b, _ in per_sample if b == label]
        out[f"mae_{label.value}"] = float(np.mean(sub)) if sub else None
        out[f"n_{label.value}"] = len(sub)
    return out


@dataclass
class MetricsTable:
    """Per-method rows of mean +- std metrics."""

    rows: list = field(default_factory=list)

    METRICS = ("mae_all", "mae_inc", "mae_dec", "mae_stat", "trend_acc")

    def add_row(self, method: str, per_seed: list, failed: bool = False):
        """Aggregate a list of bucketed_metrics dicts (one per seed)."""
        row = {"method": method, "failed": failed, "n_seeds": len(per_seed)}
        for m in self.METRICS:
            vals = [r[m] for r in per_seed if r.get(m) is not None]
            row[m] = (float(np.mean(vals)), float(np.std(vals))) if vals else None
        self.rows.append(row)
        return row

    def add_not_implemented(self, method: str):
        self.rows.append({"method": method, "failed": False, "n_seeds": 0,
                          **{m: "not implemented" for m in self.METRICS}})

    def to_csv(self) -> str:
        lines = ["method,n_seeds," + ",".join(f"{m},{m}_std" for m in self.METRICS)]
        for row in self.rows:
            cells = [row["method"], str(row["n_seeds"])]
            for m in self.METRICS:
                v = row[m]
                if v is None:
                    cells += ["", ""]
                elif isinstance(v, str):
                    cells += [v, ""]
                else:
                    cells += [f"{v[0]:.4f}", f"{v[1]:.4f}"]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        headers = ["method"] + [m for m in self.METRICS] + ["n_seeds"]
        widths = [max(18, len(h) + 2) for h in headers]
        out = ["".join(h.ljust(w) for h, w in zip(headers, widths))]
        for row in self.rows:
            cells = [row["method"]]
            for m in self.METRICS:
                v = row[m]
                if v is None:
                    cells.append("-")
                elif isinstance(v, str):
                    cells.append(v)
                else:
                    cells.append(f"{v[0]:.2f} +- {v[1]:.2f}")
            cells.append(str(row["n_seeds"]))
            out.append("".join(c.ljust(w) for c, w in zip(cells, widths)))
        return "\n".join(out) + "\n"


@dataclass
class HistogramReport:
    bin_edges: np.ndarray
    counts_real: np.ndarray
    counts_pred: np.ndarray
    overlap: float

    def to_csv(self) -> str:
        lines = ["bin_left,count_real,count_pred"]
        for left, cr, cp in zip(self.bin_edges[:-1], self.counts_real, self.counts_pred):
            lines.append(f"{left:.1f},{int(cr)},{int(cp)}")
        return "\n".join(lines) + "\n"


def histogram_report(real_values, pred_values, bin_width: float = 10.0,
                     lo: float = 20.0, hi: float = 200.0) -> HistogramReport:
    """Per-source MAP histograms and their overlap coefficient
    sum_b min(p_b, q_b) on shared 10 mmHg bins."""
    edges = np.arange(lo, hi + bin_width / 2, bin_width)
    cr, _ = np.histogram(np.asarray(real_values).ravel(), bins=edges)
    cp, _ = np.histogram(np.asarray(pred_values).ravel(), bins=edges)
    p = cr / cr.sum() if cr.sum() else np.zeros_like(cr, dtype=float)
    q = cp / cp.sum() if cp.sum() else np.zeros_like(cp, dtype=float)
    return HistogramReport(bin_edges=edges, counts_real=cr, counts_pred=cp,
                           overlap=float(np.minimum(p, q).sum()))
