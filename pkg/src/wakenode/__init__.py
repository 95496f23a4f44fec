"""Threshold-wake acoustic sensor node: behavioral simulation and analysis.

The package covers four concerns: waveform primitives and the coherence
scoring pipeline used to compare microphones, behavioral models of the
analog wake-up chain, a sleep/transmit power simulator with battery
projection, and the ADC-to-decibel calibration model.
"""

from .calibrate import (
    CalibrationCurve,
    CalibrationDomainError,
    CalPoint,
    FitError,
    adc_to_db,
    db_to_adc,
    fit_curve,
    r_squared,
)
from .coherence import (
    AlignmentError,
    CoherenceEstimate,
    MicCandidate,
    MicConfiguration,
    RankedMic,
    WelchParams,
    Window,
    coherence_score,
    cross_spectral_density,
    magnitude_squared_coherence,
    peak_envelope,
    rank_microphones,
    score_with_details,
)
from .frontend import (
    BinarySignal,
    CircuitParams,
    amplifier_gain,
    amplify,
    common_mode,
    envelope_detect,
    gain_db,
    threshold_out,
)
from .powersim import (
    BUILTIN_COMPONENTS,
    BUILTIN_PROFILES,
    ComponentPower,
    NodeConfig,
    NodeState,
    PowerProfile,
    Scenario,
    ScenarioSegment,
    SimTrace,
    battery_lifetime_days,
    build_urban_scenario,
    compose_profile,
    savings_percent,
    simulate,
    simulate_from_wake,
)
from .signals import Signal, clip, find_delay, resample
from .wavio import WavFormatError, read_wav

__version__ = "0.1.0"
