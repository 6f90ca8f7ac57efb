"""Behavioral model of the analog similarity-detection pipeline.

One 3x3 window is processed in nine clock slots. In each slot the center
pixel is compared with one window pixel:

    difference amplifier -> comparator VCO -> integrate-and-fire neuron
    -> output normalization -> 9-bit SIPO register

After the last slot the register gates the switches of an averaging circuit,
which outputs the mean of the selected pixels.

Modeling level: ideal comparators, lossless charging, no leak, no device
noise. The neuron charge resets at every slot boundary. The SIPO register
latches each slot's bit with an ideal edge. Time advances in fixed ``dt``
steps. The charge added in a step is the exact pulse-high time inside that
step, so the total charge per slot does not depend on ``dt``.

Defaults follow the published circuit configuration: 3 V / 100 kHz sine,
V_ref = 1.12 V, 50 Hz clock. Capacitor sizes, supply rails, transistor
geometry and the clock's 2.5 % pulse width are not simulated. Their effect
on charging speed is lumped into ``charge_rate``.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .filters import SimilarityMask, _gated_mean
from .image_core import Window3x3

__all__ = [
    "AnalogParams",
    "CalibrationError",
    "COMPARISON_ORDER",
    "NeuronState",
    "NeuronTrace",
    "RegisterOverflowError",
    "SipoRegister",
    "SlotSamples",
    "TRACE_HEADER",
    "averaging_circuit",
    "calibrate",
    "diff_amp",
    "firing_boundary",
    "normalize_neuron_output",
    "run_window_pipeline",
    "simulate_neuron_slot",
    "vco_duty",
]

# Slot 1 compares the center with itself (always similar); slots 2-9 visit
# the neighbors in row-major order.
COMPARISON_ORDER = (4, 0, 1, 2, 3, 5, 6, 7, 8)

TRACE_HEADER = "time_s,slot,v_diff_v,vco_out,charge_v,neuron_out,clk,avg_out"

_V_SINE = 3.0
_GAIN = 3.0
_V_REF = 1.12
_CLK = 50.0
# Charge rate that places the similarity boundary at a difference of 0.3.
_DEFAULT_CHARGE_RATE = _V_REF / (math.acos(0.3 * _GAIN / _V_SINE) / math.pi / _CLK)


class CalibrationError(ValueError):
    """The requested threshold cannot be realized with the fixed analog rails."""


class RegisterOverflowError(RuntimeError):
    pass


@dataclass(frozen=True)
class AnalogParams:
    """Behavioral circuit parameters (SI units).

    Attributes:
        v_sine_amp: Amplitude of the VCO's reference sinusoid, volts.
        f_sine: Frequency of that sinusoid, hertz.
        gain: Difference-amplifier gain, volts per unit of normalized intensity.
        v_ref: Neuron firing threshold, volts.
        charge_rate: Neuron charging speed while the VCO output is high, volts/second.
        clk_freq: Slot clock frequency, hertz; one comparison per period.
        dt: Simulation time step, seconds.
        clk_duty: Width of the displayed clock pulse as a fraction of a slot.
            Only used when drawing the ``clk`` trace column.
    """

    v_sine_amp: float = _V_SINE
    f_sine: float = 100e3
    gain: float = _GAIN
    v_ref: float = _V_REF
    charge_rate: float = _DEFAULT_CHARGE_RATE
    clk_freq: float = _CLK
    dt: float = 1e-7
    clk_duty: float = field(default=0.025, compare=False)

    def __post_init__(self):
        for name in ("v_sine_amp", "f_sine", "gain", "v_ref", "charge_rate", "clk_freq", "dt"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and positive, got {value}")
        if self.dt > 1.0 / (20.0 * self.f_sine) * (1 + 1e-12):
            raise ValueError("dt must resolve each sine period with at least 20 steps")
        if abs(self.steps_per_slot * self.dt - self.slot_duration) > 1e-9 * self.slot_duration:
            raise ValueError("slot duration must be an integer number of dt steps")
        if not 0.0 <= self.clk_duty <= 1.0:
            raise ValueError("clk_duty must lie in [0, 1]")

    @property
    def slot_duration(self) -> float:
        return 1.0 / self.clk_freq

    @property
    def steps_per_slot(self) -> int:
        return int(round(self.slot_duration / self.dt))

    @property
    def firing_duty(self) -> float:
        """Smallest VCO duty cycle that charges the neuron to ``v_ref`` within one slot."""
        return self.v_ref / (self.charge_rate * self.slot_duration)

    @property
    def difference_threshold(self) -> float:
        """Largest normalized pixel difference that still makes the neuron fire.

        Negative when even identical pixels cannot fire.
        """
        d_min = self.firing_duty
        if d_min > 1.0:
            return -math.inf
        return self.v_sine_amp / self.gain * math.cos(math.pi * d_min)


@dataclass(frozen=True)
class NeuronState:
    charge: float = 0.0
    fired: bool = False
    fire_time: Optional[float] = None


@dataclass(frozen=True)
class SlotSamples:
    """Per-step samples of one slot; ``time`` is measured from the slot start."""

    time: np.ndarray
    vco_out: np.ndarray
    charge: np.ndarray
    neuron_out: np.ndarray


def diff_amp(p_center: float, p_neighbor: float, params: AnalogParams) -> float:
    """Difference-amplifier output in volts, saturating at the sine amplitude."""
    return min(max(params.gain * abs(p_center - p_neighbor), 0.0), params.v_sine_amp)


def vco_duty(v_diff: float, params: AnalogParams) -> float:
    """Fraction of a sine period during which the sinusoid exceeds ``v_diff``."""
    ratio = min(max(v_diff / params.v_sine_amp, 0.0), 1.0)
    return math.acos(ratio) / math.pi


def _high_time(t: np.ndarray, duty: float, period: float) -> np.ndarray:
    # Cumulative pulse-high time up to t; the pulse occupies the start of each period.
    cycles, phase = np.divmod(t, period)
    return cycles * (duty * period) + np.minimum(phase, duty * period)


def simulate_neuron_slot(duty: float, params: AnalogParams) -> tuple[NeuronState, SlotSamples]:
    """Charge the neuron from a VCO pulse train of the given duty for one slot.

    The neuron fires at the first step end where its charge reaches
    ``v_ref``; from then on the charge is held and the output stays high.
    """
    if not 0.0 <= duty <= 1.0:
        raise ValueError(f"duty must lie in [0, 1], got {duty}")
    n = params.steps_per_slot
    period = 1.0 / params.f_sine
    t = np.arange(1, n + 1, dtype=np.float64) * params.dt
    charge = params.charge_rate * _high_time(t, duty, period)
    vco_out = np.mod(t, period) < duty * period
    crossed = np.flatnonzero(charge >= params.v_ref)
    neuron_out = np.zeros(n, dtype=bool)
    if crossed.size:
        i = int(crossed[0])
        charge[i:] = charge[i]
        neuron_out[i:] = True
        state = NeuronState(float(charge[i]), True, float(t[i]))
    else:
        state = NeuronState(float(charge[-1]), False, None)
    return state, SlotSamples(t, vco_out, charge, neuron_out)


def normalize_neuron_output(state: NeuronState) -> int:
    """Logic level handed to the shift register: 1 if the neuron fired."""
    return 1 if state.fired else 0


class SipoRegister:
    """Nine-stage serial-in, parallel-out register.

    Bits are shifted in one per slot; the parallel outputs can be read only
    once all nine stages hold a value.
    """

    size = 9

    def __init__(self):
        self._bits = []

    @property
    def filled(self) -> int:
        return len(self._bits)

    @property
    def bits(self) -> tuple:
        """Current stage contents; stages not yet reached read as ``None``."""
        return tuple(self._bits) + (None,) * (self.size - len(self._bits))

    def shift(self, bit: int) -> "SipoRegister":
        if len(self._bits) >= self.size:
            raise RegisterOverflowError("shift into a full 9-bit register")
        if bit not in (0, 1):
            raise ValueError(f"register input must be 0 or 1, got {bit!r}")
        self._bits.append(int(bit))
        return self

    def read(self) -> tuple:
        if len(self._bits) < self.size:
            raise RuntimeError(f"register holds {len(self._bits)} of {self.size} bits; not readable yet")
        return tuple(self._bits)


def averaging_circuit(window: Window3x3, bits) -> float:
    """Mean of the window pixels whose switch is enabled."""
    bits = tuple(bits)
    if len(bits) != 9:
        raise ValueError("averaging circuit needs 9 gate bits")
    if not any(bits):
        raise ValueError("degenerate mask: no averaging branch is enabled")
    return _gated_mean(window.values, bits)


@dataclass
class NeuronTrace:
    """Sampled waveforms of one pipeline run.

    Columns are parallel arrays; ``avg_out`` is NaN until the averaging
    circuit output becomes valid. ``slot`` numbers run from 1 to 9.
    """

    time: np.ndarray
    slot: np.ndarray
    v_diff: np.ndarray
    vco_out: np.ndarray
    charge: np.ndarray
    neuron_out: np.ndarray
    clk: np.ndarray
    avg_out: np.ndarray
    slot_states: list = field(default_factory=list)
    activation_time: Optional[float] = None
    duration: Optional[float] = None

    def __len__(self):
        return len(self.time)

    def to_csv(self, dest: Union[str, Path, io.TextIOBase, None] = None) -> Optional[str]:
        """Write the trace as CSV (12 significant digits, empty ``avg_out`` while unset).

        Returns the text when ``dest`` is None.
        """
        lines = [TRACE_HEADER]
        columns = zip(self.time.tolist(), self.slot.tolist(), self.v_diff.tolist(),
                      self.vco_out.tolist(), self.charge.tolist(), self.neuron_out.tolist(),
                      self.clk.tolist(), self.avg_out.tolist())
        for t, s, v, vco, q, nout, clk, avg in columns:
            avg_s = "" if avg != avg else f"{avg:.12g}"
            lines.append(f"{t:.12g},{s},{v:.12g},{int(vco)},{q:.12g},{int(nout)},{int(clk)},{avg_s}")
        text = "\n".join(lines) + "\n"
        if dest is None:
            return text
        if isinstance(dest, (str, Path)):
            with open(dest, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        else:
            dest.write(text)
        return None


def run_window_pipeline(window: Window3x3, params: AnalogParams, trace_stride: int = 1):
    """Simulate the full nine-slot comparison for one window.

    Args:
        window: The 3x3 neighborhood to filter.
        params: Circuit parameters, normally produced by :func:`calibrate`.
        trace_stride: Keep every ``trace_stride``-th sample in the trace.
            The last sample is always kept.

    Returns:
        ``(mask, output, trace)``. ``mask`` holds the register contents in
        row-major window order. ``output`` is the averaging-circuit value.
        ``trace`` holds the sampled waveforms.

    The averaging output becomes valid once the ninth bit is known. That is
    at the ninth neuron's firing instant, or at the end of the ninth slot if
    that neuron stays silent.
    """
    if trace_stride < 1:
        raise ValueError("trace_stride must be a positive integer")
    n = params.steps_per_slot
    center = window.center
    register = SipoRegister()
    states = []
    v_diffs = []
    samples = []
    for k in COMPARISON_ORDER:
        v = diff_amp(center, window.values[k], params)
        state, slot_samples = simulate_neuron_slot(vco_duty(v, params), params)
        register.shift(normalize_neuron_output(state))
        states.append(state)
        v_diffs.append(v)
        samples.append(slot_samples)

    slot_bits = register.read()
    bits = [0] * 9
    for slot, k in enumerate(COMPARISON_ORDER):
        bits[k] = slot_bits[slot]
    mask = SimilarityMask(tuple(bits))
    output = averaging_circuit(window, bits)

    last = samples[-1]
    if states[-1].fired:
        local_index = int(np.argmax(last.neuron_out))
    else:
        local_index = n - 1
    activation_index = 8 * n + local_index

    total = 9 * n
    keep = np.arange(0, total, trace_stride)
    if keep[-1] != total - 1:
        keep = np.append(keep, total - 1)
    slot_of = keep // n
    local = keep % n
    time = (keep + 1) * params.dt
    vco = np.empty(keep.size, dtype=bool)
    charge = np.empty(keep.size)
    nout = np.empty(keep.size, dtype=bool)
    for s in range(9):
        sel = slot_of == s
        vco[sel] = samples[s].vco_out[local[sel]]
        charge[sel] = samples[s].charge[local[sel]]
        nout[sel] = samples[s].neuron_out[local[sel]]
    clk = local < params.clk_duty * n
    avg = np.where(keep >= activation_index, output, np.nan)

    trace = NeuronTrace(
        time=time,
        slot=slot_of + 1,
        v_diff=np.asarray(v_diffs)[slot_of],
        vco_out=vco,
        charge=charge,
        neuron_out=nout,
        clk=clk,
        avg_out=avg,
        slot_states=states,
        activation_time=(activation_index + 1) * params.dt,
        duration=total * params.dt,
    )
    return mask, output, trace


def _slot_fires(diff: float, params: AnalogParams) -> bool:
    state, _ = simulate_neuron_slot(vco_duty(diff_amp(0.0, diff, params), params), params)
    return state.fired


def firing_boundary(params: AnalogParams, levels: int = 255) -> int:
    """Largest quantized difference ``k / levels`` for which a slot still fires.

    Found by bisection over simulated slots, so it assumes firing is
    monotone in the difference. Returns -1 if not even a zero difference fires.
    """
    if not _slot_fires(0.0, params):
        return -1
    lo, hi = 0, levels
    if _slot_fires(1.0, params):
        return levels
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _slot_fires(mid / levels, params):
            lo = mid
        else:
            hi = mid
    return lo


def calibrate(theta: float, base: Optional[AnalogParams] = None, verify: bool = True) -> AnalogParams:
    """Choose ``charge_rate`` so that a slot fires iff ``|p_center - p_neighbor| <= theta``.

    ``v_ref``, the amplifier gain and the sine amplitude stay fixed. The
    boundary difference is ``(v_sine_amp / gain) * cos(pi * v_ref / (charge_rate * slot))``;
    solving it for ``charge_rate`` gives the closed form used here. With
    ``verify`` the result is checked by simulating slots at 8-bit
    difference levels.

    Raises:
        CalibrationError: ``theta`` is outside ``(0, v_sine_amp / gain)``, or
            the simulated boundary misses ``theta`` by more than one level.
    """
    base = AnalogParams() if base is None else base
    upper = base.v_sine_amp / base.gain
    if not (0.0 < theta < upper):
        raise CalibrationError(
            f"theta={theta} is not realizable; feasible range is (0, {upper:g}) "
            f"for gain {base.gain:g} V and sine amplitude {base.v_sine_amp:g} V"
        )
    d_min = math.acos(theta / upper) / math.pi
    params = replace(base, charge_rate=base.v_ref / (d_min * base.slot_duration))
    if verify:
        levels = 255
        expected = math.floor(theta * levels)
        found = firing_boundary(params, levels)
        if abs(found - expected) > 1:
            raise CalibrationError(
                f"simulated boundary at level {found}/{levels}, expected {expected}/{levels}"
            )
    return params
