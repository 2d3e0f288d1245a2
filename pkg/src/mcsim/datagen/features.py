"""25 Hz waveform -> 0.1 Hz feature derivation.

Heart rate comes from the dominant spectral peak of the low-passed aortic
pressure, the relaxation constant from per-cycle log-linear fits on the LVP
downstroke, contractility from the peak rate of LV pressure rise. The
0.1 Hz feature window bins the pressures/flows over 10 s and runs the
estimators on centered 30 s windows.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import butter, filtfilt, find_peaks

from ..cardio.model import FS_OUT, BeatSeries
from ..errors import ContractViolation, EstimationFailed

WINDOW_STEPS = 90          # rows per 15-minute feature window
BIN_SECONDS = 10           # one row per 10 s
EST_WINDOW_SECONDS = 30    # estimator window centered on each bin

CHANNEL_NAMES = ("map", "p_level", "qp", "lvp", "hr", "tau", "contractility")
COL_MAP, COL_PLEVEL, COL_QP, COL_LVP, COL_HR, COL_TAU, COL_CONTR = range(7)


class WindowRejected(RuntimeError):
    """Too many estimator failures inside one feature window."""


@dataclass
class FeatureWindow:
    """90 x 7 feature matrix at 0.1 Hz, column order as CHANNEL_NAMES."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (WINDOW_STEPS, len(CHANNEL_NAMES)):
            raise ContractViolation(
                f"feature window must be {WINDOW_STEPS}x{len(CHANNEL_NAMES)}, "
                f"got {self.values.shape}"
            )
        levels = self.values[:, COL_PLEVEL]
        if np.any(levels != np.round(levels)) or np.any(levels < 1) or np.any(levels > 9):
            raise ContractViolation("P-level column must be integer-valued in 1..9")


@lru_cache(maxsize=8)
def _lowpass_coeffs(fs: int, cutoff: float = 10.0):
    return butter(4, min(cutoff / (fs / 2.0), 0.99), btype="low")


@lru_cache(maxsize=32)
def _hann(n: int) -> np.ndarray:
    return np.hanning(n)


def estimate_heart_rate(aop, fs: int = FS_OUT) -> float:
    """Dominant spectral frequency of the pulse waveform, in bpm."""
    x = np.asarray(aop, dtype=np.float64)
    if x.size < 10 * fs:
        raise ContractViolation("need at least 10 s of signal")
    b, a = _lowpass_coeffs(fs)
    x = filtfilt(b, a, x)
    x = x - x.mean()
    spec = np.abs(np.fft.rfft(x * _hann(x.size))) ** 2
    freqs = np.fft.rfftfreq(x.size, d=1.0 / fs)
    band = (freqs >= 0.5) & (freqs <= 5.5)
    if not np.any(band):
        raise EstimationFailed("no spectral bins in the plausible heart-rate band")
    idx_band = np.nonzero(band)[0]
    p_band = spec[idx_band]
    k = int(idx_band[np.argmax(p_band)])
    floor = np.median(p_band)
    if spec[k] <= 1e-12 or spec[k] <= 10.0 * floor:
        raise EstimationFailed("no spectral peak above the noise floor")
    # parabolic interpolation around the peak for sub-bin resolution
    if 0 < k < spec.size - 1:
        y0, y1, y2 = spec[k - 1], spec[k], spec[k + 1]
        denom = y0 - 2.0 * y1 + y2
        delta = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
        delta = float(np.clip(delta, -0.5, 0.5))
    else:
        delta = 0.0
    f_peak = (k + delta) * fs / x.size
    return 60.0 * f_peak


def _downstroke_segment(cycle: np.ndarray) -> np.ndarray | None:
    """Samples from the steepest drop through the first point at or below
    max(5 mmHg, 10% of the cycle peak); None when shorter than 4 samples."""
    if cycle.size < 5:
        return None
    diffs = np.diff(cycle)
    start = int(np.argmin(diffs))
    threshold = max(5.0, 0.1 * float(cycle.max()))
    below = np.nonzero(cycle[start:] <= threshold)[0]
    if below.size:
        end = start + int(below[0]) + 1
    else:
        # threshold never reached: stop where the pressure stops falling
        end = start + int(np.argmin(cycle[start:])) + 1
    seg = cycle[start:end]
    return seg if seg.size >= 4 else None


def _ols_slope(y: np.ndarray) -> float:
    """Least-squares slope of y against its 0..n-1 index."""
    n = y.size
    dev = np.arange(n, dtype=np.float64) - (n - 1) / 2.0
    return float(np.dot(dev, y) / np.dot(dev, dev))


def _fit_tau(seg: np.ndarray, dt: float) -> float | None:
    """Relaxation constant of one downstroke segment, in seconds.

    Fits log-linear least squares on the first differences, which cancels
    any constant pressure floor under the exponential. Non-contracting
    segments (e.g. a linear ramp) fall back to the direct log fit on the
    pressures, which stays finite but carries the classic floor bias.
    """
    d = np.diff(seg)
    if np.all(d < 0.0):
        # drops below 15% of the initial drop sit in the filling transition
        # where the exponential model no longer holds; keep the head
        strong = -d >= 0.15 * (-d[0])
        k = int(np.argmax(~strong)) if not strong.all() else d.size
        d = d[:max(k, 2)]
        if d.size >= 3:
            # the first drop straddles valve closure; trim it when affordable
            d = d[1:]
        slope = _ols_slope(np.log(-d))
        if slope < -1e-9:
            return -dt / slope
    if np.all(seg > 0.0) and seg[-1] < seg[0]:
        slope = _ols_slope(np.log(seg)) / dt
        if slope < 0.0:
            return -1.0 / slope
    return None


def estimate_tau(lvp, hr: float, fs: int = FS_OUT) -> float:
    """Isovolumic relaxation constant in ms: median of per-cycle fits."""
    x = np.asarray(lvp, dtype=np.float64)
    period = 60.0 / hr
    if x.size < 3 * period * fs:
        raise ContractViolation("need at least 3 cycles of signal")
    spread = float(np.ptp(x))
    if spread < 1e-6:
        raise EstimationFailed("flat LVP has no downstroke")
    peaks, _ = find_peaks(x, distance=max(1, int(0.5 * period * fs)),
                          prominence=0.25 * spread)
    estimates = []
    for i in range(peaks.size - 1):
        seg = _downstroke_segment(x[peaks[i]:peaks[i + 1]])
        if seg is None:
            continue
        tau = _fit_tau(seg, 1.0 / fs)
        if tau is not None and np.isfinite(tau):
            estimates.append(tau)
    if not estimates:
        raise EstimationFailed("downstroke segment < 4 samples in every cycle")
    return 1000.0 * float(np.median(estimates))


def estimate_contractility(lvp, fs: int = FS_OUT, gain: float = 1.0,
                           offset: float = 0.0) -> float:
    """Median over cycles of the peak central-difference dP/dt (mmHg/s),
    passed through a configurable linear transform (identity by default)."""
    x = np.asarray(lvp, dtype=np.float64)
    if x.size < 3:
        raise ContractViolation("signal too short")
    dpdt = np.gradient(x) * fs
    spread = float(np.ptp(dpdt))
    if spread < 1e-9:
        return gain * float(dpdt.max()) + offset
    peaks, _ = find_peaks(dpdt, distance=max(1, int(0.2 * fs)),
                          prominence=0.25 * spread)
    if peaks.size == 0:
        value = float(dpdt.max())
    else:
        value = float(np.median(dpdt[peaks]))
    return gain * value + offset


def bin_mean(signal, fs: int = FS_OUT, bin_seconds: int = BIN_SECONDS) -> np.ndarray:
    """Mean of a waveform over consecutive bins (the 0.1 Hz rolling view)."""
    x = np.asarray(signal, dtype=np.float64)
    per = fs * bin_seconds
    n_bins = x.size // per
    return x[: n_bins * per].reshape(n_bins, per).mean(axis=1)


def _mode_level(levels: np.ndarray) -> int:
    counts = np.bincount(levels.astype(int), minlength=10)
    return int(np.argmax(counts))


def derive_features(series: BeatSeries, p_level_track) -> FeatureWindow:
    """Convert 900 s of 25 Hz waveforms plus a per-second P-level track into
    the 90 x 7 feature window. Estimators failing in more than 20% of bins
    reject the window; sparse failures are patched from the nearest valid bin.
    """
    fs = series.fs
    expected = WINDOW_STEPS * BIN_SECONDS * fs
    if len(series) != expected:
        raise ContractViolation(f"series must cover exactly {expected} samples")
    track = np.asarray(p_level_track)
    if track.size != WINDOW_STEPS * BIN_SECONDS:
        raise ContractViolation("p_level_track must have one entry per second")

    out = np.empty((WINDOW_STEPS, len(CHANNEL_NAMES)))
    out[:, COL_MAP] = bin_mean(series.aop, fs)
    out[:, COL_QP] = bin_mean(series.qp, fs)
    out[:, COL_LVP] = bin_mean(series.lvp, fs)
    out[:, COL_PLEVEL] = [
        _mode_level(track[i * BIN_SECONDS:(i + 1) * BIN_SECONDS])
        for i in range(WINDOW_STEPS)
    ]

    half_extra = (EST_WINDOW_SECONDS - BIN_SECONDS) // 2
    failures = 0
    est = np.full((WINDOW_STEPS, 3), np.nan)
    for i in range(WINDOW_STEPS):
        lo = max(0, (i * BIN_SECONDS - half_extra)) * fs
        hi = min(WINDOW_STEPS * BIN_SECONDS, (i + 1) * BIN_SECONDS + half_extra) * fs
        aop_w = series.aop[lo:hi]
        lvp_w = series.lvp[lo:hi]
        try:
            hr = estimate_heart_rate(aop_w, fs)
            est[i, 0] = hr
            est[i, 1] = estimate_tau(lvp_w, hr, fs)
            est[i, 2] = estimate_contractility(lvp_w, fs)
        except EstimationFailed:
            failures += 1
    if failures > 0.2 * WINDOW_STEPS:
        raise WindowRejected(f"estimators failed in {failures}/{WINDOW_STEPS} bins")
    for col in range(3):
        bad_idx = np.nonzero(np.isnan(est[:, col]))[0]
        if bad_idx.size:
            good_idx = np.nonzero(~np.isnan(est[:, col]))[0]
            nearest = good_idx[np.argmin(np.abs(bad_idx[:, None] - good_idx[None, :]), axis=1)]
            est[bad_idx, col] = est[nearest, col]
    out[:, COL_HR] = est[:, 0]
    out[:, COL_TAU] = est[:, 1]
    out[:, COL_CONTR] = est[:, 2]
    return FeatureWindow(values=out)
