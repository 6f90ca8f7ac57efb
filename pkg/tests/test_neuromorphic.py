import io
import math

import numpy as np
import pytest

from gneighbor.filters import adaptive_mean, similarity_mask
from gneighbor.image_core import Window3x3
from gneighbor.neuromorphic import (
    COMPARISON_ORDER,
    TRACE_HEADER,
    AnalogParams,
    CalibrationError,
    NeuronState,
    RegisterOverflowError,
    SipoRegister,
    averaging_circuit,
    calibrate,
    diff_amp,
    firing_boundary,
    normalize_neuron_output,
    run_window_pipeline,
    simulate_neuron_slot,
    vco_duty,
)

P = AnalogParams()


def comparator_duty(v, amp=3.0, samples=1_000_000):
    """Fraction of one sine period above ``v``, by midpoint sampling."""
    t = (np.arange(samples) + 0.5) / samples
    return float(np.mean(amp * np.sin(2 * np.pi * t) > v))


class TestAnalogParams:
    def test_defaults_follow_circuit_table(self):
        assert (P.v_sine_amp, P.f_sine, P.v_ref, P.clk_freq) == (3.0, 100e3, 1.12, 50.0)
        assert P.slot_duration * P.clk_freq == 1.0
        assert P.dt == pytest.approx(1 / (100 * P.f_sine))
        assert P.steps_per_slot == 200_000

    def test_default_boundary_is_point_three(self):
        assert P.difference_threshold == pytest.approx(0.3, abs=1e-12)

    @pytest.mark.parametrize("field", ["v_ref", "charge_rate", "gain", "dt"])
    def test_rejects_non_positive(self, field):
        with pytest.raises(ValueError):
            AnalogParams(**{field: 0.0})

    def test_dt_must_resolve_sine(self):
        with pytest.raises(ValueError):
            AnalogParams(dt=1e-6)


class TestDiffAmp:
    def test_equal_pixels(self):
        assert diff_amp(0.4, 0.4, P) == 0.0

    def test_rail(self):
        assert diff_amp(0.0, 1.0, P) == 3.0
        assert diff_amp(0.0, 1.0, AnalogParams(gain=5.0)) == 3.0

    def test_linear_region(self):
        assert diff_amp(0.5, 0.2, P) == pytest.approx(0.9, abs=1e-15)
        assert diff_amp(0.2, 0.5, P) == diff_amp(0.5, 0.2, P)


class TestVcoDuty:
    def test_closed_form_points(self):
        assert vco_duty(0.0, P) == pytest.approx(0.5, abs=1e-12)
        assert vco_duty(3.0, P) == pytest.approx(0.0, abs=1e-12)
        assert vco_duty(1.5, P) == pytest.approx(1 / 3, abs=1e-12)

    @pytest.mark.parametrize("v", np.linspace(0.0, 3.0, 7))
    def test_matches_numeric_comparator(self, v):
        assert vco_duty(v, P) == pytest.approx(comparator_duty(v), abs=1e-4)

    def test_strictly_decreasing(self):
        duties = [vco_duty(v, P) for v in np.linspace(0, 3, 301)]
        assert all(a > b for a, b in zip(duties, duties[1:]))


class TestNeuronSlot:
    def test_zero_duty_never_fires(self):
        state, samples = simulate_neuron_slot(0.0, P)
        assert not state.fired and state.fire_time is None
        assert state.charge == 0.0 and not samples.vco_out.any()

    def test_full_duty_fires_at_closed_form(self):
        state, _ = simulate_neuron_slot(1.0, P)
        assert state.fired
        assert abs(state.fire_time - P.v_ref / P.charge_rate) <= P.dt
        assert state.charge >= P.v_ref

    def test_firing_predicate_sweep(self):
        d_min = P.v_ref / (P.charge_rate * P.slot_duration)
        for d in np.round(np.arange(0, 1.0001, 0.01), 2):
            state, _ = simulate_neuron_slot(float(d), P)
            assert state.fired == (d >= d_min), d
            assert normalize_neuron_output(state) == int(d >= d_min)

    def test_fire_time_monotone_in_duty(self):
        times = [simulate_neuron_slot(d, P)[0].fire_time for d in np.linspace(0.41, 1.0, 25)]
        assert all(b <= a + P.dt for a, b in zip(times, times[1:]))

    def test_charge_held_after_fire(self):
        state, s = simulate_neuron_slot(0.5, P)
        i = int(np.argmax(s.neuron_out))
        assert np.all(s.charge[i:] == s.charge[i]) and s.neuron_out[i:].all() and not s.neuron_out[:i].any()
        assert s.time[i] == state.fire_time

    def test_vco_duty_in_samples(self):
        _, s = simulate_neuron_slot(0.25, P)
        assert s.vco_out.mean() == pytest.approx(0.25, abs=0.011)

    def test_rejects_bad_duty(self):
        with pytest.raises(ValueError):
            simulate_neuron_slot(1.2, P)


class TestSipoRegister:
    def test_first_shift(self):
        reg = SipoRegister().shift(1)
        assert reg.filled == 1 and reg.bits[0] == 1 and reg.bits[1] is None

    def test_nine_shifts_readable(self):
        reg = SipoRegister()
        for i in range(9):
            with pytest.raises(RuntimeError):
                reg.read()
            reg.shift(1 - i % 2)
        assert reg.read() == (1, 0, 1, 0, 1, 0, 1, 0, 1)

    def test_overflow(self):
        reg = SipoRegister()
        for _ in range(9):
            reg.shift(0)
        with pytest.raises(RegisterOverflowError):
            reg.shift(1)


class TestAveragingCircuit:
    W = Window3x3.from_center(0.5, [0.45, 0.48, 0.90, 0.52, 0.10, 0.55, 0.95, 0.50])

    def test_all_gates(self):
        assert averaging_circuit(self.W, [1] * 9) == pytest.approx(sum(self.W.values) / 9, abs=1e-15)

    def test_single_gate(self):
        assert averaging_circuit(self.W, [0, 0, 1, 0, 0, 0, 0, 0, 0]) == 0.90

    def test_worked_example(self):
        assert averaging_circuit(self.W, [1, 1, 0, 1, 1, 0, 1, 0, 1]) == pytest.approx(0.5, abs=1e-15)

    def test_degenerate(self):
        with pytest.raises(ValueError):
            averaging_circuit(self.W, [0] * 9)


class TestCalibration:
    def test_closed_form_charge_rate(self):
        params = calibrate(0.3, verify=False)
        d_min = math.acos(0.3) / math.pi
        assert d_min == pytest.approx(0.4030, abs=5e-5)
        assert params.charge_rate == pytest.approx(1.12 / (d_min * 0.02), rel=1e-12)
        assert params.v_ref == 1.12

    def test_boundary_between_76_and_77(self):
        params = calibrate(0.3)
        fires = lambda k: simulate_neuron_slot(vco_duty(diff_amp(0, k / 255, params), params), params)[0].fired
        assert fires(76) and not fires(77)
        assert firing_boundary(params) == 76

    def test_limits(self):
        near_zero = calibrate(1e-6, verify=False)
        assert near_zero.firing_duty == pytest.approx(0.5, abs=1e-6)
        near_rail = calibrate(0.999999, verify=False)
        assert near_rail.firing_duty == pytest.approx(0.0, abs=1e-3)
        assert near_rail.difference_threshold == pytest.approx(0.999999, abs=1e-9)

    @pytest.mark.parametrize("theta", [0.0, 1.0, -0.2, 1.3])
    def test_infeasible(self, theta):
        with pytest.raises(CalibrationError, match="feasible range"):
            calibrate(theta)

    def test_gain_widens_range(self):
        params = calibrate(1.0, AnalogParams(gain=2.5), verify=False)
        assert params.difference_threshold == pytest.approx(1.0, abs=1e-12)


class TestPipeline:
    params = calibrate(0.3)

    def test_constant_window(self):
        w = Window3x3((0.42,) * 9)
        mask, out, trace = run_window_pipeline(w, self.params, trace_stride=1000)
        assert mask.n == 9 and out == 0.42
        assert 0.160 < trace.activation_time <= 0.180
        assert all(s.fired for s in trace.slot_states)

    def test_rail_neighbors(self):
        w = Window3x3.from_center(0.0, [1.0] * 8)
        mask, out, trace = run_window_pipeline(w, self.params, trace_stride=1000)
        assert str(mask) == "000010000" and out == 0.0
        assert trace.activation_time == pytest.approx(0.180, abs=self.params.dt)

    def test_matches_software_mask(self, rng):
        for _ in range(5):
            vals = np.round(rng.random(9) * 255) / 255
            w = Window3x3(tuple(vals))
            mask, out, _ = run_window_pipeline(w, self.params, trace_stride=50_000)
            assert mask == similarity_mask(w, 0.3)
            assert out == adaptive_mean(w, mask)

    def test_worked_example(self):
        w = Window3x3.from_center(0.5, [0.45, 0.48, 0.90, 0.52, 0.10, 0.55, 0.95, 0.50])
        mask, out, _ = run_window_pipeline(w, calibrate(0.1), trace_stride=50_000)
        assert mask.n == 6 and out == pytest.approx(0.5, abs=1e-12)

    def test_slot_order_is_center_first(self):
        assert COMPARISON_ORDER[0] == 4 and sorted(COMPARISON_ORDER) == list(range(9))

    def test_trace_invariants(self):
        w = Window3x3.from_center(0.3, [0.3, 0.35, 0.9, 0.31, 0.0, 0.29, 0.5, 0.3])
        _, out, tr = run_window_pipeline(w, self.params)
        assert len(tr) == 9 * self.params.steps_per_slot
        steps = np.diff(tr.time)
        assert np.all(steps > 0) and np.allclose(steps, self.params.dt, rtol=1e-6)
        assert tr.time[-1] == pytest.approx(0.180, abs=self.params.dt)
        unset = np.isnan(tr.avg_out)
        first_set = int(np.argmin(unset))
        assert unset[:first_set].all() and not unset[first_set:].any()
        assert tr.time[first_set] == pytest.approx(tr.activation_time) and tr.slot[first_set] == 9
        assert np.all(tr.avg_out[first_set:] == out)
        assert set(np.unique(tr.slot)) == set(range(1, 10))

    def test_trace_csv(self):
        w = Window3x3((0.2,) * 9)
        _, _, tr = run_window_pipeline(w, self.params, trace_stride=20_000)
        text = tr.to_csv()
        lines = text.splitlines()
        assert lines[0] == TRACE_HEADER
        assert len(lines) == 1 + len(tr)
        assert lines[1].endswith(",") and not lines[-1].endswith(",")
        assert lines[-1].split(",")[0] == "0.18"
        assert "\r" not in text
        buf = io.StringIO()
        tr.to_csv(buf)
        assert buf.getvalue() == text

    def test_stride_keeps_last_sample(self):
        _, _, tr = run_window_pipeline(Window3x3((0.5,) * 9), self.params, trace_stride=7_000_000)
        assert len(tr) == 2 and tr.time[-1] == pytest.approx(0.18)

    def test_deterministic(self):
        w = Window3x3.from_center(0.6, [0.1, 0.65, 0.7, 0.5, 0.62, 0.9, 0.58, 0.6])
        a = run_window_pipeline(w, self.params, trace_stride=997)[2].to_csv()
        b = run_window_pipeline(w, self.params, trace_stride=997)[2].to_csv()
        assert a == b


def test_normalize_output():
    assert normalize_neuron_output(NeuronState(1.2, True, 0.01)) == 1
    assert normalize_neuron_output(NeuronState(0.3, False, None)) == 0
