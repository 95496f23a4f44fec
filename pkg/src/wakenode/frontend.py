"""Behavioral models of the analog chain: non-inverting amplifier,
peak-hold envelope detector, and the active-low wake comparator.

The models are input/output behavioral, not device-level: the comparator
transistors are reduced to a pointwise threshold, and diodes default to
ideal (zero drop) with a configurable constant drop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np
from numpy.typing import NDArray

from .signals import Signal

__all__ = [
    "CircuitParams",
    "BinarySignal",
    "amplifier_gain",
    "common_mode",
    "amplify",
    "envelope_detect",
    "threshold_out",
    "gain_db",
]


@dataclass(frozen=True)
class CircuitParams:
    """Component values of the prototype's analog board.

    r2..r4 and c1..c4 set bias and coupling points in the hardware; they
    are carried for completeness but do not enter the behavioral
    equations. The gain path uses rf/r1, the envelope uses r5/c5/r6.
    rf_ohm may be zero (a wire), collapsing the gain stage to a unity
    follower.
    """

    vdd_v: float = 3.3
    rf_ohm: float = 1e5
    r1_ohm: float = 1e3
    r2_ohm: float = 1e6
    r3_ohm: float = 1e7
    r4_ohm: float = 5e5
    r5_ohm: float = 1e7
    r6_ohm: float = 1e5
    c1_f: float = 22e-6
    c2_f: float = 100e-9
    c3_f: float = 4.5e-6
    c4_f: float = 1.5e-9
    c5_f: float = 9e-6
    diode_drop_v: float = 0.0

    def __post_init__(self) -> None:
        for f in fields(self):
            if f.name in ("diode_drop_v", "rf_ohm"):
                continue
            value = getattr(self, f.name)
            if not (value > 0):
                raise ValueError(f"{f.name} must be positive, got {value}")
        if self.rf_ohm < 0:
            raise ValueError(f"rf_ohm must be non-negative, got {self.rf_ohm}")
        if self.diode_drop_v < 0:
            raise ValueError(f"diode_drop_v must be non-negative, got {self.diode_drop_v}")


@dataclass(frozen=True)
class BinarySignal:
    """Two-level waveform; True is the high rail (V_dd), False is ground."""

    samples: NDArray[np.bool_]
    sample_rate_hz: float

    def __post_init__(self) -> None:
        arr = np.asarray(self.samples, dtype=bool).copy()
        if arr.ndim != 1:
            raise ValueError(f"samples must be one-dimensional, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        if not (self.sample_rate_hz > 0):
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz


def amplifier_gain(p: CircuitParams) -> float:
    """Voltage gain of the non-inverting stage: 1 + rf/r1."""
    return 1.0 + p.rf_ohm / p.r1_ohm


def common_mode(p: CircuitParams) -> float:
    """DC operating point of the amplifier output: half the supply."""
    return p.vdd_v / 2.0


def amplify(s: Signal, p: CircuitParams) -> Signal:
    """Amplify a zero-mean microphone waveform around the common mode.

    Output clamps to the supply rails [0, vdd], which models clipping of
    large inputs.
    """
    if len(s) == 0:
        raise ValueError("cannot amplify an empty signal")
    out = common_mode(p) + amplifier_gain(p) * s.samples
    return Signal(np.clip(out, 0.0, p.vdd_v), s.sample_rate_hz)


def envelope_detect(s: Signal, p: CircuitParams) -> Signal:
    """Peak detector with exponential decay, followed by the output divider.

    The internal state charges instantly to (input - diode drop) when that
    exceeds it and otherwise decays with time constant tau = r5 * c5. The
    output stage drops a second diode and divides by r6/(r5 + r6), which
    puts the quiescent level well under a 1.2 V ADC reference. Output is
    clamped non-negative.
    """
    if len(s) == 0:
        raise ValueError("cannot detect the envelope of an empty signal")
    tau_s = p.r5_ohm * p.c5_f
    decay = math.exp(-1.0 / (s.sample_rate_hz * tau_s))
    drive = s.samples - p.diode_drop_v

    state = np.empty(len(s), dtype=np.float64)
    level = 0.0
    for i, x in enumerate(drive):
        level *= decay
        if x > level:
            level = x
        state[i] = level

    divider = p.r6_ohm / (p.r5_ohm + p.r6_ohm)
    out = np.maximum(state - p.diode_drop_v, 0.0) * divider
    return Signal(out, s.sample_rate_hz)


def threshold_out(envelope: Signal, v_threshold: float) -> BinarySignal:
    """Active-low wake output: grounded while the envelope exceeds the threshold.

    High (V_dd) means quiet; low means the microcontroller interrupt fires.
    No hysteresis is modeled.
    """
    if not (v_threshold > 0):
        raise ValueError(f"v_threshold must be positive, got {v_threshold}")
    high = envelope.samples <= v_threshold
    return BinarySignal(high, envelope.sample_rate_hz)


def gain_db(gain_vv: float) -> float:
    """Voltage gain expressed in decibels: 20 log10(gain)."""
    if not (gain_vv > 0):
        raise ValueError(f"gain must be positive, got {gain_vv}")
    return 20.0 * math.log10(gain_vv)
