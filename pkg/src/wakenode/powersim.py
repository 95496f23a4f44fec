"""Sleep/transmit state machine simulation with energy accounting,
duty-cycle and savings computation, and battery-lifetime projection.

The simulator is event-driven over segment boundaries (exact interval
arithmetic); only the wake-signal bridge works per sample. All inputs
are immutable, so independent scenario/profile sweeps can run
concurrently.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from typing import Sequence

from .frontend import BinarySignal

__all__ = [
    "NodeState",
    "ComponentPower",
    "PowerProfile",
    "ScenarioSegment",
    "Scenario",
    "NodeConfig",
    "TraceInterval",
    "SimTrace",
    "simulate",
    "simulate_from_wake",
    "savings_percent",
    "battery_lifetime_days",
    "build_urban_scenario",
    "compose_profile",
    "BUILTIN_COMPONENTS",
    "BUILTIN_PROFILES",
]

URBAN_SOUND_SECONDS = 20.0
URBAN_SILENCE_SECONDS = 100.0
URBAN_CATEGORIES = ("human", "nature", "music", "mechanical")

# A composed profile whose totals stray further than this from a supplied
# expected value is probably mismeasured; warn, do not fail.
COMPOSE_TOLERANCE = 0.01


class NodeState(str, enum.Enum):
    SLEEP = "sleep"
    TRANSMIT = "transmit"


@dataclass(frozen=True)
class ComponentPower:
    """Measured draw of one hardware component in each node state."""

    name: str
    transmit_mw: float
    sleep_mw: float

    def __post_init__(self) -> None:
        if self.transmit_mw < 0 or self.sleep_mw < 0:
            raise ValueError(f"{self.name}: power figures must be non-negative")
        if self.sleep_mw > self.transmit_mw:
            raise ValueError(
                f"{self.name}: sleep power {self.sleep_mw} mW exceeds "
                f"transmit power {self.transmit_mw} mW"
            )


@dataclass(frozen=True)
class PowerProfile:
    """Total node draw per state for one hardware permutation.

    When a component list is attached the profile-level totals stay
    authoritative; measured totals and component sums can disagree.
    """

    name: str
    transmit_mw: float
    sleep_mw: float
    components: tuple[ComponentPower, ...] | None = None

    def __post_init__(self) -> None:
        if self.transmit_mw <= 0:
            raise ValueError(f"{self.name}: transmit_mw must be positive")
        if self.sleep_mw < 0:
            raise ValueError(f"{self.name}: sleep_mw must be non-negative")
        if self.sleep_mw >= self.transmit_mw:
            raise ValueError(
                f"{self.name}: sleep power {self.sleep_mw} mW must be below "
                f"transmit power {self.transmit_mw} mW"
            )


@dataclass(frozen=True)
class ScenarioSegment:
    duration_s: float
    sound_present: bool
    label: str = ""

    def __post_init__(self) -> None:
        if not (self.duration_s > 0):
            raise ValueError(f"segment duration must be positive, got {self.duration_s}")


@dataclass(frozen=True)
class Scenario:
    """Ordered acoustic timeline the node is exposed to."""

    segments: tuple[ScenarioSegment, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise ValueError("scenario has no segments")

    @property
    def duration_s(self) -> float:
        return sum(seg.duration_s for seg in self.segments)


@dataclass(frozen=True)
class NodeConfig:
    """Node hardware profile plus wake-hold and battery parameters."""

    profile: PowerProfile
    hold_time_s: float = 0.0
    battery_mah: float = 2900.0
    battery_v: float = 3.3

    def __post_init__(self) -> None:
        if self.hold_time_s < 0:
            raise ValueError(f"hold_time_s must be non-negative, got {self.hold_time_s}")
        if self.battery_mah <= 0 or self.battery_v <= 0:
            raise ValueError("battery capacity and voltage must be positive")


@dataclass(frozen=True)
class TraceInterval:
    t_start_s: float
    t_end_s: float
    state: NodeState


@dataclass(frozen=True)
class SimTrace:
    """Simulated state timeline with its integrated energy figures."""

    timeline: tuple[TraceInterval, ...]
    energy_mwh: float
    duty_cycle: float
    avg_power_mw: float

    @property
    def duration_s(self) -> float:
        return self.timeline[-1].t_end_s - self.timeline[0].t_start_s


def _merge_intervals(intervals: list[tuple[float, float]]) -> list[tuple[float, float]]:
    merged: list[tuple[float, float]] = []
    for start, end in sorted(intervals):
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


def _trace_from_wake_intervals(
    wake: list[tuple[float, float]], total_s: float, config: NodeConfig
) -> SimTrace:
    """Build the full timeline and integrate energy over exact intervals."""
    profile = config.profile
    timeline: list[TraceInterval] = []
    cursor = 0.0
    for start, end in wake:
        if start > cursor:
            timeline.append(TraceInterval(cursor, start, NodeState.SLEEP))
        timeline.append(TraceInterval(start, end, NodeState.TRANSMIT))
        cursor = end
    if cursor < total_s or not timeline:
        timeline.append(TraceInterval(cursor, total_s, NodeState.SLEEP))

    transmit_s = sum(end - start for start, end in wake)
    sleep_s = total_s - transmit_s
    energy_mws = transmit_s * profile.transmit_mw + sleep_s * profile.sleep_mw
    energy_mwh = energy_mws / 3600.0
    duty = transmit_s / total_s
    avg_power_mw = energy_mwh / (total_s / 3600.0)
    return SimTrace(tuple(timeline), energy_mwh, duty, avg_power_mw)


def simulate(scenario: Scenario, config: NodeConfig) -> SimTrace:
    """Run the node over a scenario: transmit during sound, plus hold time.

    The node transmits throughout every sound segment and for
    ``config.hold_time_s`` after it ends (capped at scenario end, merged
    with any wake interval it runs into); it sleeps otherwise. Energy is
    integrated exactly per interval.
    """
    total_s = scenario.duration_s
    wake: list[tuple[float, float]] = []
    t = 0.0
    for seg in scenario.segments:
        if seg.sound_present:
            wake.append((t, min(t + seg.duration_s + config.hold_time_s, total_s)))
        t += seg.duration_s
    return _trace_from_wake_intervals(_merge_intervals(wake), total_s, config)


def simulate_from_wake(wake: BinarySignal, config: NodeConfig) -> SimTrace:
    """Run the node from a comparator output signal.

    Low samples (active-low interrupt) mark transmit; each low run is
    extended by the hold time after its release edge. Energy accounting
    is identical to :func:`simulate`.
    """
    if len(wake) == 0:
        raise ValueError("wake signal is empty")
    dt = 1.0 / wake.sample_rate_hz
    total_s = len(wake) * dt

    intervals: list[tuple[float, float]] = []
    run_start: int | None = None
    for i, high in enumerate(wake.samples):
        if not high and run_start is None:
            run_start = i
        elif high and run_start is not None:
            intervals.append((run_start * dt, min(i * dt + config.hold_time_s, total_s)))
            run_start = None
    if run_start is not None:
        intervals.append((run_start * dt, total_s))
    return _trace_from_wake_intervals(_merge_intervals(intervals), total_s, config)


def savings_percent(profile: PowerProfile) -> float:
    """Idle power saved by sleeping instead of transmitting, in percent."""
    if profile.transmit_mw <= 0:
        raise ValueError("transmit power must be positive")
    return 100.0 * (1.0 - profile.sleep_mw / profile.transmit_mw)


def battery_lifetime_days(avg_power_mw: float, battery_mah: float, battery_v: float) -> float:
    """Days a battery of the given capacity sustains the average draw."""
    if avg_power_mw <= 0 or battery_mah <= 0 or battery_v <= 0:
        raise ValueError("power, capacity, and voltage must all be positive")
    energy_wh = battery_mah / 1000.0 * battery_v
    return energy_wh / (avg_power_mw / 1000.0) / 24.0


def build_urban_scenario() -> Scenario:
    """Four sound categories, each 20 s of audio then 100 s of silence (480 s)."""
    segments: list[ScenarioSegment] = []
    for label in URBAN_CATEGORIES:
        segments.append(ScenarioSegment(URBAN_SOUND_SECONDS, True, label))
        segments.append(ScenarioSegment(URBAN_SILENCE_SECONDS, False, f"{label}-silence"))
    return Scenario(tuple(segments))


def compose_profile(
    components: Sequence[ComponentPower],
    name: str,
    expected_transmit_mw: float | None = None,
    expected_sleep_mw: float | None = None,
) -> PowerProfile:
    """Sum per-component draws into a profile, keeping the component list.

    If expected totals are supplied (e.g. a measured whole-node figure)
    and the component sum deviates from them by more than 1%, a warning
    is emitted; measured totals stay authoritative elsewhere.
    """
    if not components:
        raise ValueError("component list is empty")
    transmit = sum(c.transmit_mw for c in components)
    sleep = sum(c.sleep_mw for c in components)
    for label, total, expected in (
        ("transmit", transmit, expected_transmit_mw),
        ("sleep", sleep, expected_sleep_mw),
    ):
        if expected is not None and expected > 0:
            deviation = abs(total - expected) / expected
            if deviation > COMPOSE_TOLERANCE:
                warnings.warn(
                    f"{name}: component {label} sum {total:.2f} mW deviates "
                    f"{deviation:.1%} from the expected {expected:.2f} mW",
                    stacklevel=2,
                )
    return PowerProfile(name, transmit, sleep, tuple(components))


# Per-component measurements, bit-exact as recorded.
BUILTIN_COMPONENTS: dict[str, ComponentPower] = {
    c.name: c
    for c in (
        ComponentPower("microphone", 0.35, 0.35),
        ComponentPower("amplifier", 0.20, 0.20),
        ComponentPower("threshold", 0.07, 0.07),
        ComponentPower("nodemcu", 91.84, 16.76),
        ComponentPower("wifi-radio", 265.75, 0.00),
        ComponentPower("ble-radio", 49.02, 8.47),
        ComponentPower("zigbee-radio", 33.68, 0.07),
    )
}

# Whole-prototype measurements; these totals are authoritative even where
# they disagree with the component sums.
BUILTIN_PROFILES: dict[str, PowerProfile] = {
    p.name: p
    for p in (
        PowerProfile("wifi", transmit_mw=357.59, sleep_mw=16.76),
        PowerProfile("ble", transmit_mw=140.86, sleep_mw=25.23),
        PowerProfile("zigbee", transmit_mw=160.43, sleep_mw=16.83),
        PowerProfile("zigbee-standalone", transmit_mw=34.30, sleep_mw=1.00),
    )
}
