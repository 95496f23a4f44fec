"""Command-line entry point.

Subcommands: ``coherence`` (score a recording against its source),
``simulate`` (run the power model over a scenario or a WAV through the
analog chain), ``calibrate`` (fit the ADC-to-dB curve), and ``rank-mics``
(order microphone candidates). Every run writes a JSON report embedding
the effective configuration, so results are reproducible from their own
output; exit status is zero only if the report was fully written.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .calibrate import (
    CalibrationDomainError,
    FitError,
    fit_curve,
)
from .coherence import (
    AlignmentError,
    RankedMic,
    rank_microphones,
    score_with_details,
)
from .config import (
    ConfigError,
    RunConfig,
    load_cal_points,
    load_mic_table,
    load_run_config,
    load_scenario,
)
from .frontend import amplify, envelope_detect, threshold_out
from .powersim import (
    BUILTIN_PROFILES,
    NodeConfig,
    Scenario,
    ScenarioSegment,
    SimTrace,
    battery_lifetime_days,
    build_urban_scenario,
    savings_percent,
    simulate,
    simulate_from_wake,
)
from .signals import Signal
from .wavio import WavFormatError, read_wav

CONFIG_ENV_VAR = "WAKENODE_CONFIG"

MIN_SOURCE_RATE_HZ = 8_000.0
PREFERRED_SOURCE_RATE_HZ = 16_000.0

_ERROR_CODES: list[tuple[type[BaseException], str]] = [
    (ConfigError, "E_CONFIG"),
    (WavFormatError, "E_WAV"),
    (AlignmentError, "E_ALIGN"),
    (CalibrationDomainError, "E_DOMAIN"),
    (FitError, "E_FIT"),
    (FileNotFoundError, "E_INPUT"),
    (ValueError, "E_INPUT"),
]


class CliError(Exception):
    def __init__(self, code: str, message: str) -> None:
        super().__init__(message)
        self.code = code


def _error_code(exc: BaseException) -> str:
    for etype, code in _ERROR_CODES:
        if isinstance(exc, etype):
            return code
    return "E_INTERNAL"


def data_path(name: str) -> Path:
    """Path of a bundled data file (e.g. the microphone table)."""
    return Path(str(resources.files("wakenode") / "data" / name))


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def _input_entry(path: str | Path) -> dict[str, str]:
    p = Path(path)
    return {"path": str(p), "sha256": _sha256(p)}


def _write_report(out_dir: Path, name: str, report: dict[str, Any]) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return path


def _write_csv(out_dir: Path, name: str, header: str, rows: list[str]) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(header + "\n" + "".join(row + "\n" for row in rows))
    return path


def _format(value: float) -> str:
    return repr(float(value))


# ----------------------------------------------------------------------
# subcommands


def cmd_coherence(source_wav: str, recording_wav: str, cfg: RunConfig) -> dict[str, Any]:
    source = read_wav(source_wav)
    recording = read_wav(recording_wav)

    warnings: list[str] = []
    for label, sig in (("source", source), ("recording", recording)):
        if sig.sample_rate_hz < MIN_SOURCE_RATE_HZ:
            raise CliError(
                "E_WAV",
                f"{label} sample rate {sig.sample_rate_hz:.0f} Hz is below the "
                f"{MIN_SOURCE_RATE_HZ:.0f} Hz analysis rate",
            )
        if sig.sample_rate_hz < PREFERRED_SOURCE_RATE_HZ:
            warnings.append(
                f"{label} sample rate {sig.sample_rate_hz:.0f} Hz is below "
                f"{PREFERRED_SOURCE_RATE_HZ:.0f} Hz; the top of the analysis "
                "band has no headroom"
            )

    details = score_with_details(source, recording, cfg.welch)

    out_dir = Path(cfg.out_dir)
    rows = [
        f"{_format(f)},{_format(v)},{_format(e)}"
        for f, v, e in zip(
            details.estimate.frequencies_hz, details.estimate.values, details.envelope
        )
    ]
    csv_path = _write_csv(out_dir, "coherence.csv", "frequency_hz,coherence,envelope", rows)

    report = {
        "command": "coherence",
        "version": __version__,
        "inputs": {
            "source_wav": _input_entry(source_wav),
            "recording_wav": _input_entry(recording_wav),
        },
        "config": cfg.snapshot(),
        "results": {
            "score": details.score,
            "delay_samples": details.delay_samples,
            "bins": len(details.estimate.values),
            "coherence_csv": csv_path.name,
            "warnings": warnings,
        },
    }
    _write_report(out_dir, "coherence_report.json", report)
    return report


def _silence_scenario() -> Scenario:
    return Scenario((ScenarioSegment(480.0, False, "silence"),))


def _resolve_scenario(name_or_path: str) -> Scenario:
    if name_or_path == "urban":
        return build_urban_scenario()
    if name_or_path == "silence":
        return _silence_scenario()
    return load_scenario(name_or_path)


def _trace_rows(trace: SimTrace, node: NodeConfig) -> list[str]:
    power = {
        "sleep": node.profile.sleep_mw,
        "transmit": node.profile.transmit_mw,
    }
    return [
        f"{_format(iv.t_start_s)},{_format(iv.t_end_s)},{iv.state.value},"
        f"{_format(power[iv.state.value])}"
        for iv in trace.timeline
    ]


def cmd_simulate(
    cfg: RunConfig,
    scenario_name: str | None,
    wav_path: str | None,
    profile_name: str | None,
    threshold_v: float,
    mic_scale_v: float,
) -> dict[str, Any]:
    node = cfg.node
    if profile_name is not None:
        if profile_name not in BUILTIN_PROFILES:
            raise CliError(
                "E_INPUT",
                f"unknown profile {profile_name!r}; built-ins are "
                f"{sorted(BUILTIN_PROFILES)}",
            )
        node = NodeConfig(
            profile=BUILTIN_PROFILES[profile_name],
            hold_time_s=node.hold_time_s,
            battery_mah=node.battery_mah,
            battery_v=node.battery_v,
        )

    inputs: dict[str, Any] = {}
    if wav_path is not None:
        audio = read_wav(wav_path)
        inputs["wav"] = _input_entry(wav_path)
        mic = Signal(audio.samples * mic_scale_v, audio.sample_rate_hz)
        envelope = envelope_detect(amplify(mic, cfg.circuit), cfg.circuit)
        wake = threshold_out(envelope, threshold_v)
        trace = simulate_from_wake(wake, node)
        source_desc = {"kind": "wav", "threshold_v": threshold_v, "mic_scale_v": mic_scale_v}
    else:
        assert scenario_name is not None
        scenario = _resolve_scenario(scenario_name)
        if not (scenario_name in ("urban", "silence")):
            inputs["scenario"] = _input_entry(scenario_name)
        trace = simulate(scenario, node)
        source_desc = {"kind": "scenario", "name": scenario_name}

    out_dir = Path(cfg.out_dir)
    csv_path = _write_csv(
        out_dir, "trace.csv", "t_start_s,t_end_s,state,power_mw", _trace_rows(trace, node)
    )
    lifetime = battery_lifetime_days(trace.avg_power_mw, node.battery_mah, node.battery_v)

    report = {
        "command": "simulate",
        "version": __version__,
        "inputs": inputs,
        "config": cfg.snapshot(),
        "results": {
            "source": source_desc,
            "profile": node.profile.name,
            "duty_cycle": trace.duty_cycle,
            "avg_power_mw": trace.avg_power_mw,
            "energy_mwh": trace.energy_mwh,
            "lifetime_days": lifetime,
            "savings_percent": savings_percent(node.profile),
            "trace_csv": csv_path.name,
        },
    }
    _write_report(out_dir, "simulate_report.json", report)
    return report


def cmd_calibrate(points_csv: str, cfg: RunConfig) -> dict[str, Any]:
    points = load_cal_points(points_csv)
    curve, r2 = fit_curve(points)

    out_dir = Path(cfg.out_dir)
    rows = []
    for p in points:
        predicted = curve.a * (p.adc_value - curve.c) ** curve.b + curve.d
        rows.append(
            f"{_format(p.adc_value)},{_format(p.spl_db)},"
            f"{_format(predicted)},{_format(p.spl_db - predicted)}"
        )
    csv_path = _write_csv(
        out_dir, "residuals.csv", "adc_value,spl_db,predicted_db,residual_db", rows
    )

    report = {
        "command": "calibrate",
        "version": __version__,
        "inputs": {"points_csv": _input_entry(points_csv)},
        "config": cfg.snapshot(),
        "results": {
            "curve": {"a": curve.a, "b": curve.b, "c": curve.c, "d": curve.d},
            "r_squared": r2,
            "points": len(points),
            "residuals_csv": csv_path.name,
        },
    }
    _write_report(out_dir, "calibrate_report.json", report)
    return report


def _ranking_rows(ranking: list[RankedMic]) -> list[str]:
    rows = []
    for entry in ranking:
        c = entry.candidate
        rank = str(entry.rank) if entry.rank is not None else ""
        eligible = "yes" if entry.eligible else "no"
        reasons = "; ".join(entry.reasons)
        rows.append(
            f"{rank},{c.name},{_format(c.accuracy)},{_format(c.power_mw)},"
            f"{eligible},{reasons}"
        )
    return rows


def cmd_rank_mics(
    mic_csv: str, cfg: RunConfig, require_analog: bool, supply_v: float | None
) -> dict[str, Any]:
    candidates = load_mic_table(mic_csv)
    ranking = rank_microphones(candidates, require_analog=require_analog, supply_v=supply_v)

    out_dir = Path(cfg.out_dir)
    csv_path = _write_csv(
        out_dir,
        "ranking.csv",
        "rank,name,accuracy,power_mw,eligible,reasons",
        _ranking_rows(ranking),
    )

    report = {
        "command": "rank-mics",
        "version": __version__,
        "inputs": {"mic_csv": _input_entry(mic_csv)},
        "config": cfg.snapshot(),
        "results": {
            "require_analog": require_analog,
            "supply_v": supply_v,
            "ranking": [
                {
                    "rank": e.rank,
                    "name": e.candidate.name,
                    "accuracy": e.candidate.accuracy,
                    "power_mw": e.candidate.power_mw,
                    "eligible": e.eligible,
                    "reasons": list(e.reasons),
                }
                for e in ranking
            ],
            "ranking_csv": csv_path.name,
        },
    }
    _write_report(out_dir, "rank_mics_report.json", report)
    return report


# ----------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wakenode",
        description="Threshold-wake acoustic sensor node: analysis and simulation tools",
    )
    parser.add_argument("--config", help="run-config YAML (default: $WAKENODE_CONFIG)")
    parser.add_argument("--out-dir", help="report output directory (overrides config)")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("coherence", help="score a recording against its source")
    p.add_argument("source_wav")
    p.add_argument("recording_wav")

    p = sub.add_parser("simulate", help="simulate node power over a scenario or WAV")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--scenario", help="urban, silence, or a scenario YAML path")
    group.add_argument("--wav", help="drive the analog chain from a WAV file")
    p.add_argument("--profile", help=f"built-in profile: {', '.join(sorted(BUILTIN_PROFILES))}")
    p.add_argument(
        "--threshold-v",
        type=float,
        default=0.022,
        help="wake comparator threshold in volts (WAV route, default 0.022)",
    )
    p.add_argument(
        "--mic-scale-v",
        type=float,
        default=0.01,
        help="microphone volts per full-scale WAV unit (default 0.01)",
    )

    p = sub.add_parser("calibrate", help="fit the ADC-to-dB calibration curve")
    p.add_argument("points_csv")

    p = sub.add_parser("rank-mics", help="rank microphone candidates")
    p.add_argument("mic_csv")
    p.add_argument("--analog", action="store_true", help="require an analog microphone")
    p.add_argument("--supply", type=float, help="supply voltage candidates must accept")
    p.add_argument(
        "--no-constraints",
        action="store_true",
        help="rank purely by accuracy and power",
    )
    return parser


def _load_config(args: argparse.Namespace) -> RunConfig:
    path = args.config or os.environ.get(CONFIG_ENV_VAR)
    cfg = load_run_config(path) if path else RunConfig()
    if args.out_dir:
        cfg = RunConfig(
            circuit=cfg.circuit,
            welch=cfg.welch,
            node=cfg.node,
            calibration=cfg.calibration,
            out_dir=args.out_dir,
        )
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        if args.subcommand == "coherence":
            report = cmd_coherence(args.source_wav, args.recording_wav, cfg)
        elif args.subcommand == "simulate":
            report = cmd_simulate(
                cfg,
                scenario_name=args.scenario,
                wav_path=args.wav,
                profile_name=args.profile,
                threshold_v=args.threshold_v,
                mic_scale_v=args.mic_scale_v,
            )
        elif args.subcommand == "calibrate":
            report = cmd_calibrate(args.points_csv, cfg)
        else:
            if args.no_constraints and (args.analog or args.supply is not None):
                raise CliError(
                    "E_INPUT", "--no-constraints cannot be combined with --analog/--supply"
                )
            report = cmd_rank_mics(
                args.mic_csv,
                cfg,
                require_analog=args.analog and not args.no_constraints,
                supply_v=None if args.no_constraints else args.supply,
            )
    except CliError as exc:
        print(f"wakenode: error [{exc.code}]: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - boundary: map to coded diagnostics
        print(f"wakenode: error [{_error_code(exc)}]: {exc}", file=sys.stderr)
        return 1

    print(json.dumps(report["results"], indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
