import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.signal import find_peaks

from mcsim.cardio import (
    CardiacParams,
    CircConstants,
    HemoState,
    default_constants,
    elastance,
    export_beatseries_csv,
    load_constants,
    pump_flow,
    realproxy_constants,
    simulate_grid,
    simulate_waveform,
    steady_summary,
)
from mcsim.cardio.model import BeatSeries, end_systole_time, read_beatseries_csv
from mcsim.errors import ContractViolation, InsufficientData, SimulationDiverged


def params(level=5, hr=72.0, ees=2.0, tau=0.05, circ=None):
    return CardiacParams(p_level=level, hr=hr, ees=ees, tau=tau,
                         circ=circ or default_constants())


class TestConstants:
    def test_defaults_parse(self):
        c = default_constants()
        assert len(c.pump_q0) == 9
        assert all(b > a for a, b in zip(c.pump_q0, c.pump_q0[1:]))

    def test_realproxy_shifted(self):
        a, b = default_constants(), realproxy_constants()
        assert a.r_sys != b.r_sys and a.c_ao != b.c_ao

    def test_version_mandatory(self, tmp_path):
        p = tmp_path / "c.txt"
        p.write_text("r_sys = 1.0\n")
        with pytest.raises(ContractViolation):
            load_constants(p)

    def test_roundtrip_file(self, tmp_path):
        p = tmp_path / "c.txt"
        p.write_text("version = 1\nr_sys = 1.25  # mmHg*s/mL\n")
        c = load_constants(p)
        assert c.r_sys == 1.25

    def test_nonincreasing_pump_table_rejected(self):
        with pytest.raises(ContractViolation):
            CircConstants(pump_q0=(1, 1, 1, 1, 1, 1, 1, 1, 1))


class TestCardiacParams:
    @pytest.mark.parametrize("kw", [
        dict(p_level=0), dict(p_level=10), dict(hr=30.0), dict(hr=301.0),
        dict(ees=0.1), dict(ees=11.0), dict(tau=0.01), dict(tau=0.2),
    ])
    def test_invariants_rejected(self, kw):
        base = dict(p_level=5, hr=72.0, ees=2.0, tau=0.05)
        base.update(kw)
        with pytest.raises(ContractViolation):
            CardiacParams(**base)


class TestElastance:
    def test_starts_at_diastolic_value(self):
        p = params()
        assert elastance(0.0, p) == pytest.approx(p.circ.e_min)

    def test_peak_is_ees(self):
        p = params()
        t_es = float(end_systole_time(p.hr))
        assert elastance(t_es, p) == pytest.approx(p.ees)

    def test_relaxation_one_time_constant(self):
        # independent evaluation of the activation at one tau past end-systole
        p = params(hr=60.0, tau=0.04)
        t_es = float(end_systole_time(60.0))
        expected = p.circ.e_min + (p.ees - p.circ.e_min) / np.e
        assert elastance(t_es + 0.04, p) == pytest.approx(expected, rel=0.01)

    def test_out_of_cycle_rejected(self):
        p = params(hr=60.0)
        with pytest.raises(ContractViolation):
            elastance(1.0, p)
        with pytest.raises(ContractViolation):
            elastance(-0.01, p)

    @settings(max_examples=50, deadline=None)
    @given(hr=st.floats(40.0, 300.0), tau=st.floats(0.015, 0.12),
           frac=st.floats(0.0, 0.999))
    def test_activation_bounded(self, hr, tau, frac):
        p = params(hr=hr, tau=tau)
        e = elastance(frac * 60.0 / hr, p)
        assert p.circ.e_min - 1e-12 <= e <= p.ees + 1e-12


class TestPumpFlow:
    def test_zero_head_gives_table_value(self):
        c = default_constants()
        for level in range(1, 10):
            assert pump_flow(level, 0.0) == pytest.approx(c.pump_q0[level - 1])

    def test_monotone_in_level(self):
        flows = [pump_flow(level, 60.0) for level in range(1, 10)]
        assert all(b >= a for a, b in zip(flows, flows[1:]))

    def test_exact_value_from_constants_file(self):
        # independent evaluation against the shipped constants
        c = default_constants()
        expected = max(0.0, c.pump_q0[4] - c.pump_slope * 60.0)
        assert pump_flow(5, 60.0) == pytest.approx(expected)

    def test_invalid_level(self):
        for bad in (0, 10, 2.5):
            with pytest.raises(ContractViolation):
                pump_flow(bad, 10.0)

    @settings(max_examples=50, deadline=None)
    @given(level=st.integers(1, 9), d1=st.floats(-50, 200), d2=st.floats(-50, 200))
    def test_monotone_nonincreasing_in_head(self, level, d1, d2):
        lo, hi = sorted((d1, d2))
        assert pump_flow(level, lo) >= pump_flow(level, hi) - 1e-12
        assert pump_flow(level, hi) >= 0.0


class TestSimulateWaveform:
    def test_interpeak_interval_matches_heart_rate(self):
        s = simulate_waveform(params(hr=60.0), duration=15.0)
        peaks, _ = find_peaks(s.aop, distance=5, prominence=0.25 * np.ptp(s.aop))
        intervals = np.diff(peaks) / s.fs
        assert np.all(np.abs(intervals - 1.0) <= 0.02)

    def test_flat_elastance_gives_tiny_pulse(self):
        # ees at the diastolic elastance: no contraction, pump-only flow
        c = CircConstants(e_min=0.2)
        p = CardiacParams(p_level=1, hr=72.0, ees=0.2, tau=0.05, circ=c)
        s = simulate_waveform(p, duration=15.0)
        assert np.ptp(s.aop) < 5.0

    def test_bit_identical_reruns(self):
        a = simulate_waveform(params(), duration=12.0)
        b = simulate_waveform(params(), duration=12.0)
        assert np.array_equal(a.aop, b.aop)
        assert np.array_equal(a.lvp, b.lvp)
        assert np.array_equal(a.qp, b.qp)

    def test_preconditions(self):
        with pytest.raises(ContractViolation):
            simulate_waveform(params(), duration=5.0)
        with pytest.raises(ContractViolation):
            simulate_waveform(params(), duration=15.0, dt=0.004)

    def test_divergence_reported_with_last_valid_time(self):
        # a microscopic compliance makes the Windkessel ODE stiff enough to blow up
        c = CircConstants(c_ao=1e-6)
        p = CardiacParams(p_level=9, hr=300.0, ees=10.0, tau=0.015, circ=c)
        with pytest.raises(SimulationDiverged) as exc:
            simulate_waveform(p, duration=12.0, dt=0.002)
        assert exc.value.last_valid_time >= 0.0

    def test_initial_state_override(self):
        st0 = HemoState(v_lv=120.0, p_ao=80.0)
        s = simulate_waveform(params(), duration=12.0, initial_state=st0)
        assert len(s) == 175


class TestSteadySummary:
    def test_constant_series(self):
        s = BeatSeries(aop=np.full(300, 80.0), lvp=np.full(300, 15.0),
                       qp=np.full(300, 2.0))
        assert steady_summary(s).map == pytest.approx(80.0)

    def test_zero_mean_sinusoid(self):
        t = np.arange(25 * 10) / 25.0
        aop = 100.0 + 20.0 * np.sin(2 * np.pi * t)
        s = BeatSeries(aop=aop, lvp=aop * 0.5, qp=np.ones_like(aop))
        assert steady_summary(s).map == pytest.approx(100.0, abs=0.1)

    def test_map_increases_with_level(self):
        maps = {}
        for level in (2, 8):
            s = simulate_waveform(params(level=level, hr=80.0, ees=2.0, tau=0.04),
                                  duration=15.0)
            maps[level] = steady_summary(s).map
        assert maps[8] > maps[2]

    def test_insufficient_cycles(self):
        t = np.arange(30) / 25.0
        aop = 100 + 20 * np.sin(2 * np.pi * t)
        s = BeatSeries(aop=aop, lvp=aop, qp=aop)
        with pytest.raises(InsufficientData):
            steady_summary(s)


class TestPhysicsInvariants:
    def test_map_monotone_in_level_small_grid(self):
        hr, ees, tau = 80.0, 1.5, 0.05
        res = simulate_grid([hr] * 9, [ees] * 9, [tau] * 9, list(range(1, 10)),
                            duration=20.0)
        maps = [steady_summary(BeatSeries(aop=res["aop"][i], lvp=res["lvp"][i],
                                          qp=res["qp"][i])).map for i in range(9)]
        assert np.all(np.diff(maps) > -0.5)

    def test_dt_convergence(self):
        m1 = steady_summary(simulate_waveform(params(), duration=15.0, dt=0.002)).map
        m2 = steady_summary(simulate_waveform(params(), duration=15.0, dt=0.001)).map
        assert abs(m1 - m2) < 0.1

    def test_autocorrelation_period(self):
        p = params(hr=72.0)
        s = simulate_waveform(p, duration=20.0)
        x = s.aop - s.aop.mean()
        ac = np.correlate(x, x, "full")[x.size - 1:]
        lag = int(np.argmax(ac[10:60])) + 10
        expected = 25 * 60.0 / p.hr
        assert abs(lag - expected) <= 1.0

    def test_cycle_flow_balance(self):
        from mcsim.cardio.model import ML_PER_S_PER_LMIN, _smooth_relu

        c = default_constants()
        res = simulate_grid([72.0], [2.0], [0.05], [5], duration=15.0,
                            tail_seconds=2.0)
        tail = res["tail"]
        dt = tail["dt"]
        aop, lvp, qp = tail["aop"][0], tail["lvp"][0], tail["qp"][0]
        n_cycle = int(round((60.0 / 72.0) / dt))
        peaks, _ = find_peaks(aop, distance=int(0.5 * n_cycle))
        i0 = peaks[0]
        i1 = i0 + n_cycle
        q_valve = _smooth_relu(lvp - aop, c.diode_softness) / c.r_prox
        vol_in = np.trapezoid(q_valve[i0:i1] + qp[i0:i1] * ML_PER_S_PER_LMIN, dx=dt)
        vol_out = np.trapezoid(aop[i0:i1] / c.r_sys, dx=dt)
        assert abs(vol_in - vol_out) / vol_out < 0.01


class TestCsvExport:
    def test_header_and_roundtrip(self, tmp_path):
        s = simulate_waveform(params(), duration=12.0)
        path = tmp_path / "wave.csv"
        export_beatseries_csv(s, path)
        header = path.read_text().splitlines()[0]
        assert header == "t,aop,lvp,qp"
        back = read_beatseries_csv(path)
        assert np.allclose(back.aop, s.aop, atol=1e-5)
