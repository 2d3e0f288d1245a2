"""Long-window waveform synthesis from steady-state simulator cycles.

A 30-minute, 25 Hz training window is far longer than the integrator needs
to reach its periodic steady state, so each (parameter cell, pump level)
pair is integrated once and its final cycle is replayed with continuous
cardiac phase. Pump-level switches splice between per-level cycles with an
exponential pressure relaxation at the Windkessel time constant. The
real-proxy domain layers slow Ornstein-Uhlenbeck drift, low-frequency heart
-rate modulation, respiratory oscillation, and heavier observation noise on
top of the replayed cycles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..cardio.constants import CircConstants, default_constants
from ..cardio.model import FS_OUT, BeatSeries, simulate_grid


@dataclass
class SteadyCycle:
    """One steady-state cardiac cycle on a dense phase grid."""

    period: float
    phase: np.ndarray
    aop: np.ndarray
    lvp: np.ndarray
    qp: np.ndarray


@dataclass
class PerturbConfig:
    """Strengths of the real-proxy perturbations (zeros reduce to the
    nominal simulated domain)."""

    ou_theta: float = 1.0 / 300.0   # 1/s mean reversion of the MAP drift
    ou_std: float = 0.0             # mmHg stationary drift magnitude
    hr_mod_amp: float = 0.0         # fractional low-frequency HR modulation
    hr_mod_period: float = 75.0     # s
    resp_amp: float = 0.0           # mmHg respiratory oscillation at 0.25 Hz
    obs_noise: float = 0.0          # mmHg white observation noise on pressures


def build_cycle_library(hr: float, ees: float, tau: float,
                        circ: CircConstants | None = None,
                        levels=range(1, 10), dt: float = 0.001) -> dict:
    """Integrate one parameter cell at every pump level and return the
    steady cycles, or None if any level diverges."""
    circ = circ or default_constants()
    levels = list(levels)
    period = 60.0 / hr
    tail = 2.0 * period + 0.1
    res = simulate_grid(
        [hr] * len(levels), [ees] * len(levels), [tau] * len(levels), levels,
        circ=circ, duration=max(16.0, 12.0 + tail), dt=dt, tail_seconds=tail,
    )
    if np.any(res["diverged"]):
        return None
    return {lvl: _extract_cycle(res["tail"], i, period)
            for i, lvl in enumerate(levels)}


def build_cycle_libraries(cells, circ: CircConstants | None = None,
                          levels=range(1, 10), dt: float = 0.001,
                          chunk: int = 512) -> tuple[dict, list]:
    """Batched variant of :func:`build_cycle_library` over many (hr, ees,
    tau) cells at once; one integration per chunk instead of one per cell.

    Returns ({cell: {level: SteadyCycle}}, [diverged cells]).
    """
    circ = circ or default_constants()
    levels = list(levels)
    rows = [(cell, lvl) for cell in cells for lvl in levels]
    libs = {cell: {} for cell in cells}
    bad = set()
    for lo in range(0, len(rows), chunk):
        sub = rows[lo:lo + chunk]
        hrs = np.array([c[0] for c, _ in sub])
        tail = 2.0 * 60.0 / hrs.min() + 0.1
        res = simulate_grid(
            hrs,
            [c[1] for c, _ in sub],
            [c[2] for c, _ in sub],
            [lvl for _, lvl in sub],
            circ=circ, duration=max(16.0, 12.0 + tail), dt=dt, tail_seconds=tail,
        )
        for i, (cell, lvl) in enumerate(sub):
            if res["diverged"][i]:
                bad.add(cell)
            else:
                libs[cell][lvl] = _extract_cycle(res["tail"], i, 60.0 / cell[0])
    for cell in bad:
        libs.pop(cell, None)
    return libs, sorted(bad)


def _extract_cycle(tail: dict, row: int, period: float) -> SteadyCycle:
    dt = tail["dt"]
    n_tail = tail["aop"].shape[1]
    t_grid = np.arange(n_tail) * dt
    t_ref = (n_tail - 1) * dt - period  # start of the last full cycle
    m = int(np.ceil(period / dt))
    phase = np.arange(m) * (period / m)
    return SteadyCycle(
        period=period,
        phase=phase,
        aop=np.interp(t_ref + phase, t_grid, tail["aop"][row]),
        lvp=np.interp(t_ref + phase, t_grid, tail["lvp"][row]),
        qp=np.interp(t_ref + phase, t_grid, tail["qp"][row]),
    )


def _cardiac_phase(t: np.ndarray, perturb: PerturbConfig, phi: float) -> np.ndarray:
    """Integrated playback phase under low-frequency rate modulation."""
    m = perturb.hr_mod_amp
    if m == 0.0:
        return t
    w = 2.0 * np.pi / perturb.hr_mod_period
    return t + (m / w) * (np.cos(phi) - np.cos(w * t + phi))


def _ou_path(rng: np.random.Generator, n_seconds: int, theta: float,
             stationary_std: float) -> np.ndarray:
    """Mean-zero Ornstein-Uhlenbeck path sampled at 1 Hz."""
    if stationary_std <= 0.0:
        return np.zeros(n_seconds)
    sigma = stationary_std * np.sqrt(2.0 * theta)
    x = np.empty(n_seconds)
    x[0] = rng.normal(0.0, stationary_std)
    eps = rng.normal(0.0, sigma, n_seconds - 1)
    for i in range(n_seconds - 1):
        x[i + 1] = x[i] * (1.0 - theta) + eps[i]
    return x


def synthesize_beatseries(cycles: dict, level_track: np.ndarray,
                          circ: CircConstants, rng: np.random.Generator,
                          perturb: PerturbConfig | None = None,
                          fs: int = FS_OUT) -> BeatSeries:
    """Replay steady cycles along a per-second P-level track.

    ``level_track`` holds one integer level per second; its length sets the
    series duration.
    """
    perturb = perturb or PerturbConfig()
    n_seconds = level_track.size
    n = n_seconds * fs
    t = np.arange(n) / fs
    phase = _cardiac_phase(t, perturb, rng.uniform(0.0, 2.0 * np.pi))

    aop = np.empty(n)
    lvp = np.empty(n)
    qp = np.empty(n)
    track = np.asarray(level_track, dtype=int)
    bounds = np.nonzero(np.diff(track))[0] + 1  # second indices where level changes
    seg_starts = np.concatenate([[0], bounds])
    seg_ends = np.concatenate([bounds, [n_seconds]])

    for s0, s1 in zip(seg_starts, seg_ends):
        lvl = track[s0]
        cyc = cycles[int(lvl)]
        lo, hi = s0 * fs, s1 * fs
        ph = np.mod(phase[lo:hi], cyc.period)
        aop[lo:hi] = np.interp(ph, cyc.phase, cyc.aop, period=cyc.period)
        lvp[lo:hi] = np.interp(ph, cyc.phase, cyc.lvp, period=cyc.period)
        qp[lo:hi] = np.interp(ph, cyc.phase, cyc.qp, period=cyc.period)

    # pressure/flow continuity across level switches: exponential relaxation
    tau_wk = circ.r_sys * circ.c_ao
    for s0 in seg_starts[1:]:
        j = s0 * fs
        rel = t[j:] - t[j]
        for arr, tc in ((aop, tau_wk), (lvp, 0.5 * tau_wk), (qp, 1.0)):
            delta = arr[j - 1] - arr[j]
            arr[j:] += delta * np.exp(-rel / tc)

    if perturb.ou_std > 0.0:
        drift_1hz = _ou_path(rng, n_seconds + 1, perturb.ou_theta, perturb.ou_std)
        drift = np.interp(t, np.arange(n_seconds + 1, dtype=float), drift_1hz)
        aop += drift
        lvp += 0.5 * drift
    if perturb.resp_amp > 0.0:
        resp = np.sin(2.0 * np.pi * 0.25 * t + rng.uniform(0.0, 2.0 * np.pi))
        aop += perturb.resp_amp * resp
        lvp += 0.5 * perturb.resp_amp * resp
    if perturb.obs_noise > 0.0:
        aop += rng.normal(0.0, perturb.obs_noise, n)
        lvp += rng.normal(0.0, perturb.obs_noise, n)
        qp += rng.normal(0.0, 0.02 * perturb.obs_noise, n)

    return BeatSeries(aop=aop, lvp=lvp, qp=qp)


def make_tiled_series(params, seconds: int, rng=None,
                      perturb: PerturbConfig | None = None) -> BeatSeries:
    """Constant-level tiled series, mostly for estimator self-consistency
    checks against long windows."""
    cycles = build_cycle_library(params.hr, params.ees, params.tau,
                                 circ=params.circ, levels=[params.p_level])
    if cycles is None:
        raise RuntimeError("cycle extraction diverged")
    rng = rng if rng is not None else np.random.default_rng(0)
    track = np.full(seconds, params.p_level, dtype=int)
    return synthesize_beatseries(cycles, track, params.circ, rng, perturb)
