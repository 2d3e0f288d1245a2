"""Two-state lumped-parameter circulation with an axial transvalvular pump.

States are LV volume ``v_lv`` (mL) and aortic Windkessel pressure ``p_ao``
(mmHg). LV pressure follows a time-varying elastance; the aortic and mitral
valves are smooth diodes; the pump moves blood from the LV into the aorta
along a per-level linear head-flow curve. Output waveforms are box-averaged
to the device rate of 25 Hz.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from ..errors import ContractViolation, InsufficientData, SimulationDiverged
from .constants import CircConstants, default_constants

FS_OUT = 25  # Hz, fixed device sampling rate
ML_PER_S_PER_LMIN = 1000.0 / 60.0


@dataclass(frozen=True)
class CardiacParams:
    """One simulator configuration point."""

    p_level: int
    hr: float      # bpm
    ees: float     # end-systolic elastance, mmHg/mL
    tau: float     # isovolumic relaxation time constant, s
    circ: CircConstants = field(default_factory=default_constants)

    def __post_init__(self):
        if not (isinstance(self.p_level, (int, np.integer)) and 1 <= self.p_level <= 9):
            raise ContractViolation(f"p_level must be an integer in 1..9, got {self.p_level!r}")
        if not 40.0 <= self.hr <= 300.0:
            raise ContractViolation(f"hr out of range [40, 300]: {self.hr}")
        if not 0.2 <= self.ees <= 10.0:
            raise ContractViolation(f"ees out of range [0.2, 10]: {self.ees}")
        if not 0.015 <= self.tau <= 0.12:
            raise ContractViolation(f"tau out of range [0.015, 0.12]: {self.tau}")

    @property
    def period(self) -> float:
        return 60.0 / self.hr


@dataclass(frozen=True)
class HemoState:
    """Instantaneous integrator state."""

    v_lv: float   # mL
    p_ao: float   # mmHg
    t: float = 0.0

    def __post_init__(self):
        if self.v_lv <= 0:
            raise ContractViolation(f"v_lv must be positive, got {self.v_lv}")
        if not 0.0 < self.p_ao < 300.0:
            raise ContractViolation(f"p_ao out of (0, 300): {self.p_ao}")


@dataclass
class BeatSeries:
    """25 Hz waveform bundle: aortic pressure, LV pressure, pump flow."""

    aop: np.ndarray   # mmHg
    lvp: np.ndarray   # mmHg
    qp: np.ndarray    # L/min
    fs: int = FS_OUT

    def __post_init__(self):
        self.aop = np.asarray(self.aop, dtype=np.float64)
        self.lvp = np.asarray(self.lvp, dtype=np.float64)
        self.qp = np.asarray(self.qp, dtype=np.float64)
        if self.fs != FS_OUT:
            raise ContractViolation(f"fs is fixed at {FS_OUT} Hz")
        if not (self.aop.shape == self.lvp.shape == self.qp.shape) or self.aop.ndim != 1:
            raise ContractViolation("aop, lvp, qp must be 1-D arrays of equal length")

    def __len__(self):
        return self.aop.size

    @property
    def duration(self) -> float:
        return self.aop.size / self.fs


@dataclass(frozen=True)
class SteadySummary:
    map: float       # mmHg
    mean_qp: float   # L/min
    mean_lvp: float  # mmHg
    n_cycles: int


def end_systole_time(hr) -> float:
    """Systolic interval scaled with the square root of the cycle length."""
    return 0.3 * np.sqrt(60.0 / np.asarray(hr, dtype=np.float64))


def _activation(t_in_cycle, t_es, tau):
    """Normalized elastance activation: 0 at cycle start, 1 at end-systole,
    exponential relaxation with time constant tau afterwards."""
    tc = np.asarray(t_in_cycle, dtype=np.float64)
    u = tc / t_es
    rising = 2.0 * u * u / (1.0 + u * u)
    decaying = np.exp(-np.clip(tc - t_es, 0.0, None) / tau)
    return np.where(tc <= t_es, rising, decaying)


def elastance(t_in_cycle, params: CardiacParams):
    """Time-varying LV elastance E(t) in mmHg/mL at a time within one cycle."""
    tc = np.asarray(t_in_cycle, dtype=np.float64)
    if np.any(tc < 0.0) or np.any(tc >= params.period):
        raise ContractViolation(
            f"t_in_cycle must lie in [0, {params.period:.6f}) for hr={params.hr}"
        )
    e_min = params.circ.e_min
    a = _activation(tc, end_systole_time(params.hr), params.tau)
    out = e_min + (params.ees - e_min) * a
    return float(out) if np.isscalar(t_in_cycle) else out


def pump_flow(p_level, delta_p, circ: CircConstants | None = None):
    """Pump flow (L/min) at a given head pressure ``delta_p = p_ao - p_lv``."""
    circ = circ or default_constants()
    if not (isinstance(p_level, (int, np.integer)) and 1 <= p_level <= 9):
        raise ContractViolation(f"p_level must be an integer in 1..9, got {p_level!r}")
    head = np.clip(np.asarray(delta_p, dtype=np.float64), 0.0, None)
    q = np.clip(circ.pump_q0[p_level - 1] - circ.pump_slope * head, 0.0, None)
    return float(q) if np.isscalar(delta_p) else q


def _smooth_relu(x, softness):
    # C-infinity stand-in for max(0, x); event-free diode handling.
    return 0.5 * (x + np.sqrt(x * x + softness * softness))


def _derivatives(t, v, p, hr, ees, tau, q0_level, circ: CircConstants):
    """RHS of the 2-state ODE, vectorized over parameter rows."""
    period = 60.0 / hr
    tc = t - np.floor(t / period) * period
    a = _activation(tc, 0.3 * np.sqrt(period), tau)
    e_t = circ.e_min + (ees - circ.e_min) * a
    p_lv = e_t * (v - circ.v0)

    q_valve = _smooth_relu(p_lv - p, circ.diode_softness) / circ.r_prox       # mL/s
    q_fill = _smooth_relu(circ.p_ven - p_lv, circ.diode_softness) / circ.r_mitral
    head = np.clip(p - p_lv, 0.0, None)
    qp_lmin = np.clip(q0_level - circ.pump_slope * head, 0.0, None)
    q_pump = qp_lmin * ML_PER_S_PER_LMIN

    dv = q_fill - q_valve - q_pump
    dp = (q_valve + q_pump - p / circ.r_sys) / circ.c_ao
    return dv, dp, p_lv, qp_lmin, q_valve


def simulate_grid(
    hr,
    ees,
    tau,
    p_level,
    circ: CircConstants | None = None,
    duration: float = 15.0,
    dt: float = 0.001,
    warmup: float = 5.0,
    tail_seconds: float = 0.0,
    initial_state: HemoState | None = None,
):
    """Integrate many parameter rows at once (classic RK4, fixed step).

    Returns a dict with 25 Hz arrays ``aop``, ``lvp``, ``qp`` of shape
    (n_rows, n_samples), a boolean ``diverged`` mask, ``last_valid_time``
    per row, and (when ``tail_seconds`` > 0) dense dt-grid arrays of the
    final stretch for cycle-resolved post-processing.
    """
    circ = circ or default_constants()
    hr = np.atleast_1d(np.asarray(hr, dtype=np.float64))
    ees = np.atleast_1d(np.asarray(ees, dtype=np.float64))
    tau = np.atleast_1d(np.asarray(tau, dtype=np.float64))
    p_level = np.atleast_1d(np.asarray(p_level))
    n = max(a.size for a in (hr, ees, tau, p_level))
    hr, ees, tau = (np.broadcast_to(a, (n,)).copy() for a in (hr, ees, tau))
    p_level = np.broadcast_to(p_level, (n,)).copy()

    if duration < 10.0:
        raise ContractViolation("duration must be >= 10 s")
    if dt > 0.002:
        raise ContractViolation("dt must be <= 0.002 s")
    block = (1.0 / FS_OUT) / dt
    if abs(block - round(block)) > 1e-9:
        raise ContractViolation("1/25 s must be an integer multiple of dt")
    block = int(round(block))
    if np.any(p_level < 1) or np.any(p_level > 9) or np.any(p_level != np.floor(p_level)):
        raise ContractViolation("p_level entries must be integers in 1..9")

    q0_level = np.array([circ.pump_q0[int(l) - 1] for l in p_level], dtype=np.float64)

    if initial_state is not None:
        v = np.full(n, initial_state.v_lv, dtype=np.float64)
        p = np.full(n, initial_state.p_ao, dtype=np.float64)
    else:
        # near-steady start: filled ventricle, MAP guess rising with level
        v = np.full(n, circ.v0 + circ.p_ven / circ.e_min, dtype=np.float64)
        p = 60.0 + 3.0 * p_level.astype(np.float64)

    n_steps = int(round(duration / dt))
    n_out = n_steps // block
    n_skip = int(round(warmup * FS_OUT))  # 25 Hz samples discarded
    if n_out <= n_skip:
        raise ContractViolation("duration must exceed the warm-up interval")

    aop = np.empty((n, n_out))
    lvp = np.empty((n, n_out))
    qp = np.empty((n, n_out))

    tail_steps = int(round(tail_seconds / dt))
    tail = None
    if tail_steps > 0:
        tail = {
            "aop": np.empty((n, tail_steps)),
            "lvp": np.empty((n, tail_steps)),
            "qp": np.empty((n, tail_steps)),
            "v_lv": np.empty((n, tail_steps)),
            "dt": dt,
        }
    tail_start = n_steps - tail_steps

    alive = np.ones(n, dtype=bool)
    last_valid = np.zeros(n, dtype=np.float64)

    acc_a = np.zeros(n)
    acc_l = np.zeros(n)
    acc_q = np.zeros(n)
    out_idx = 0
    half = 0.5 * dt

    with np.errstate(all="ignore"):
        for step in range(n_steps):
            t = step * dt
            dv1, dp1, p_lv1, qp1, _ = _derivatives(t, v, p, hr, ees, tau, q0_level, circ)
            dv2, dp2, _, _, _ = _derivatives(
                t + half, v + half * dv1, p + half * dp1, hr, ees, tau, q0_level, circ
            )
            dv3, dp3, _, _, _ = _derivatives(
                t + half, v + half * dv2, p + half * dp2, hr, ees, tau, q0_level, circ
            )
            dv4, dp4, _, _, _ = _derivatives(
                t + dt, v + dt * dv3, p + dt * dp3, hr, ees, tau, q0_level, circ
            )

            acc_a += p
            acc_l += p_lv1
            acc_q += qp1
            if tail_steps > 0 and step >= tail_start:
                j = step - tail_start
                tail["aop"][:, j] = p
                tail["lvp"][:, j] = p_lv1
                tail["qp"][:, j] = qp1
                tail["v_lv"][:, j] = v

            v = v + (dt / 6.0) * (dv1 + 2.0 * dv2 + 2.0 * dv3 + dv4)
            p = p + (dt / 6.0) * (dp1 + 2.0 * dp2 + 2.0 * dp3 + dp4)

            if (step + 1) % block == 0:
                aop[:, out_idx] = acc_a / block
                lvp[:, out_idx] = acc_l / block
                qp[:, out_idx] = acc_q / block
                acc_a[:] = 0.0
                acc_l[:] = 0.0
                acc_q[:] = 0.0
                out_idx += 1
                ok = np.isfinite(v) & np.isfinite(p) & alive
                last_valid[ok] = t + dt
                alive &= np.isfinite(v) & np.isfinite(p)

    return {
        "aop": aop[:, n_skip:],
        "lvp": lvp[:, n_skip:],
        "qp": qp[:, n_skip:],
        "diverged": ~alive,
        "last_valid_time": last_valid,
        "tail": tail,
    }


def simulate_waveform(
    params: CardiacParams,
    duration: float = 15.0,
    dt: float = 0.001,
    warmup: float = 5.0,
    initial_state: HemoState | None = None,
) -> BeatSeries:
    """Integrate one parameter point and return 25 Hz waveforms after
    discarding the warm-up transient."""
    res = simulate_grid(
        params.hr,
        params.ees,
        params.tau,
        params.p_level,
        circ=params.circ,
        duration=duration,
        dt=dt,
        warmup=warmup,
        initial_state=initial_state,
    )
    if res["diverged"][0]:
        raise SimulationDiverged(
            f"state became non-finite (last valid t={res['last_valid_time'][0]:.3f} s)",
            last_valid_time=float(res["last_valid_time"][0]),
        )
    return BeatSeries(aop=res["aop"][0], lvp=res["lvp"][0], qp=res["qp"][0])


def steady_summary(series: BeatSeries) -> SteadySummary:
    """Arithmetic means over an integer number of detected cardiac cycles."""
    aop = series.aop
    if aop.size == 0:
        raise InsufficientData("empty series")
    spread = float(np.ptp(aop))
    if spread < max(1e-6, 0.03 * abs(float(aop.mean()))):
        # pulseless (or sub-3% ripple) input: peak detection is unreliable
        # (25 Hz aliasing envelopes dominate) and cycle alignment moves the
        # mean by well under the summary tolerances, so average everything
        return SteadySummary(
            map=float(aop.mean()),
            mean_qp=float(series.qp.mean()),
            mean_lvp=float(series.lvp.mean()),
            n_cycles=0,
        )
    min_dist = max(1, int(series.fs * 60.0 / 300.0))  # fastest allowed rhythm
    peaks, _ = find_peaks(aop, distance=min_dist, prominence=0.25 * spread)
    if peaks.size < 4:
        raise InsufficientData(f"only {max(0, peaks.size - 1)} full cycles detected, need >= 3")
    lo, hi = peaks[0], peaks[-1]
    return SteadySummary(
        map=float(aop[lo:hi].mean()),
        mean_qp=float(series.qp[lo:hi].mean()),
        mean_lvp=float(series.lvp[lo:hi].mean()),
        n_cycles=int(peaks.size - 1),
    )


def export_beatseries_csv(series: BeatSeries, path):
    """Columnar CSV export with header ``t,aop,lvp,qp``."""
    t = np.arange(len(series)) / series.fs
    data = np.column_stack([t, series.aop, series.lvp, series.qp])
    np.savetxt(path, data, delimiter=",", header="t,aop,lvp,qp", comments="", fmt="%.6f")


def read_beatseries_csv(path) -> BeatSeries:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    return BeatSeries(aop=data[:, 1], lvp=data[:, 2], qp=data[:, 3])
