import argparse
import dataclasses
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from src.audit.verification import (
    IsometryVerdict,
    SignalingVerdict,
    audit_pipeline_maps,
    no_signal_gap,
    require_isometric,
)
from src.errors import ConfigurationError, ParameterError, PhysicsAssertionError, SimulatorError
from src.experiment.config import (
    Evolution,
    Regime,
    ScenarioConfig,
    config_from_mapping,
    load_config_file,
    resolve_overlaps,
)
from src.experiment.scenario import FIXTURE_TAG, run_pipeline
from src.experiment.screen import coherence_visibility, compute_pattern, fringe_spacing
from src.quantum.qcore import PHYSICS_TOL
from src.utils.atomic_write import write_json_atomic, write_text_atomic
from src.utils.setup_directories import setup_directories

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PHYSICS = 3

# Sweepable parameter -> ScenarioConfig field
SWEEP_PARAMETERS = {
    "s-phi": "s_phi_override",
    "s-gamma": "s_gamma_override",
    "gamma-t": "gamma_t",
    "separation": "separation",
    "lambda-phi": "lambda_phi",
    "lambda-gamma": "lambda_gamma",
}

# Command-line flag dest -> ScenarioConfig key
CONFIG_FLAGS = (
    "lambda_gamma", "lambda_phi", "separation", "screen_distance", "screen_halfwidth",
    "grid_points", "s_phi", "s_gamma", "regime", "gamma_t", "alice_pulse", "evolution", "late_decay",
)


@dataclass
class RunManifest:
    """Resolved configuration, produced files and a human-readable summary of one run."""
    command: str
    config: ScenarioConfig
    outputs: List[str] = field(default_factory=list)
    summary: str = ""
    tags: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        overlaps = resolve_overlaps(self.config)
        return {
            "command": self.command,
            "config": self.config.to_dict(),
            "resolved_overlaps": {"s_gamma": overlaps.s_gamma, "s_phi": overlaps.s_phi},
            "outputs": list(self.outputs),
            "summary": self.summary,
            "tags": list(self.tags),
            "created_utc": datetime.now(timezone.utc).isoformat(),
        }


def _parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("true", "yes", "on", "1"):
        return True
    if value in ("false", "no", "off", "0"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=str, help='JSON or key=value config file (flags override it)')
    common.add_argument('--lambda-gamma', type=float, help='Wavelength of the gamma photon')
    common.add_argument('--lambda-phi', type=float, help='Wavelength of the phi photon')
    common.add_argument('--separation', type=float, help='Distance between the atoms')
    common.add_argument('--screen-distance', type=float, help='Distance from the atoms to the screen')
    common.add_argument('--screen-halfwidth', type=float, help='Half width of the screen grid')
    common.add_argument('--grid-points', type=int, help='Number of screen positions (odd, default 201)')
    common.add_argument('--s-phi', type=float, help='Override the phi mode overlap')
    common.add_argument('--s-gamma', type=float, help='Override the gamma mode overlap')
    common.add_argument('--regime', choices=[r.value for r in Regime], help='Emission regime (default instantaneous)')
    common.add_argument('--gamma-t', type=float, help='Dimensionless observation time (rate regime)')
    common.add_argument('--alice-pulse', type=_parse_bool, help='Apply the second pulse (default true)')
    common.add_argument('--evolution', choices=[e.value for e in Evolution], help='Evolution (default correct)')
    common.add_argument('--late-decay', type=_parse_bool, help='Include the late decay (default true)')
    common.add_argument('--out-dir', type=str, default='results', help='Directory for output files')
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument('--verbose', action='store_true', help='Log at DEBUG level')
    verbosity.add_argument('--quiet', action='store_true', help='Log warnings and errors only')

    parser = argparse.ArgumentParser(
        description='Two-atom delayed-choice eraser: interference patterns, unitarity and no-signaling audits.'
    )
    commands = parser.add_subparsers(dest='command', required=True)
    commands.add_parser('pattern', parents=[common], help="Bob's interference pattern")
    commands.add_parser('audit-unitarity', parents=[common], help='Isometry audit of the evolution maps')
    commands.add_parser('audit-signaling', parents=[common], help="Compare Bob's pattern across Alice's choices")
    sweep = commands.add_parser('sweep', parents=[common], help='Vary one parameter over a range')
    sweep.add_argument('--param', required=True, choices=sorted(SWEEP_PARAMETERS), help='Parameter to vary')
    sweep.add_argument('--from', dest='start', type=float, required=True, help='First value')
    sweep.add_argument('--to', dest='stop', type=float, required=True, help='Last value')
    sweep.add_argument('--steps', type=int, default=11, help='Number of values (default 11)')
    sweep.add_argument('--workers', type=int, default=1, help='Threads evaluating sweep points')
    return parser


def resolve_config(args: argparse.Namespace) -> ScenarioConfig:
    """Defaults < config file < command-line flags."""
    values = load_config_file(args.config) if args.config else {}
    cfg = config_from_mapping(values)
    flags = {name: getattr(args, name) for name in CONFIG_FLAGS if getattr(args, name) is not None}
    return config_from_mapping(flags, cfg)


def _render_table(title: str, rows: Sequence[Tuple[str, Any]]) -> str:
    width = max(len(name) for name, _ in rows)
    lines = [f"--- {title} ---"]
    lines += [f"  {name.ljust(width)}  {value}" for name, value in rows]
    return "\n".join(lines)


def run_pattern(cfg: ScenarioConfig, out_dir: str, manifest: RunManifest) -> None:
    run = run_pipeline(cfg)
    pattern = compute_pattern(run.state, cfg, run.overlaps.s_gamma)
    coherence = coherence_visibility(run.state, run.overlaps.s_gamma)
    if pattern.fit_visibility is None:
        logging.info("Grid step is a multiple of the fringe period; fringe fit cross-check skipped")
    elif abs(pattern.fit_visibility - coherence.value) > PHYSICS_TOL:
        raise PhysicsAssertionError(
            f"Grid visibility {pattern.fit_visibility!r} disagrees with coherence visibility {coherence.value!r}"
        )

    manifest.outputs.append(write_text_atomic(os.path.join(out_dir, "pattern.csv"), pattern.to_csv()))
    manifest.outputs.append(write_json_atomic(os.path.join(out_dir, "visibility.json"), {
        "visibility": pattern.visibility,
        "coherence_visibility": coherence.value,
        "fit_visibility": pattern.fit_visibility,
        "peak_visibility": pattern.peak_visibility,
        "single_source": coherence.single_source,
        "s_gamma": run.overlaps.s_gamma,
        "s_phi": run.overlaps.s_phi,
        "fringe_spacing": fringe_spacing(cfg),
        "stages": list(run.stages),
    }))
    manifest.summary = _render_table("Interference Pattern", [
        ("evolution", cfg.evolution.value),
        ("alice pulse", cfg.alice_pulse),
        ("s_gamma", f"{run.overlaps.s_gamma:.12g}"),
        ("s_phi", f"{run.overlaps.s_phi:.12g}"),
        ("visibility", f"{pattern.visibility:.12g}"),
        ("coherence visibility", f"{coherence.value:.12g}"),
    ])


def run_audit_unitarity(cfg: ScenarioConfig, out_dir: str, manifest: RunManifest) -> None:
    reports = audit_pipeline_maps(cfg)
    manifest.outputs.append(write_json_atomic(
        os.path.join(out_dir, "isometry.json"), {"reports": [report.to_dict() for report in reports]}
    ))
    manifest.summary = _render_table(
        "Isometry Audit", [(r.map_label, f"{r.verdict.value} (max deviation {r.max_deviation:.3e})") for r in reports]
    )
    if cfg.evolution is Evolution.CORRECT:
        for report in reports:
            require_isometric(report)
    elif any(r.verdict is IsometryVerdict.VIOLATION for r in reports):
        logging.warning(f"Isometry violation reported for the {FIXTURE_TAG}")


def run_audit_signaling(cfg: ScenarioConfig, out_dir: str, manifest: RunManifest) -> None:
    report = no_signal_gap(cfg)
    manifest.outputs.append(write_json_atomic(os.path.join(out_dir, "signaling.json"), report.to_dict()))
    manifest.outputs.append(write_text_atomic(os.path.join(out_dir, "pattern_pulse.csv"), report.pattern_pulse.to_csv()))
    manifest.outputs.append(write_text_atomic(
        os.path.join(out_dir, "pattern_nopulse.csv"), report.pattern_nopulse.to_csv()
    ))
    manifest.summary = _render_table("Signaling Audit", [
        ("evolution", cfg.evolution.value),
        ("visibility (pulse)", f"{report.pattern_pulse.visibility:.12g}"),
        ("visibility (no pulse)", f"{report.pattern_nopulse.visibility:.12g}"),
        ("visibility gap", f"{report.visibility_gap:.12g}"),
        ("max gap", f"{report.max_gap:.3e}"),
        ("verdict", report.verdict.value),
    ])
    if cfg.evolution is Evolution.CORRECT and report.verdict is SignalingVerdict.SIGNALING:
        raise PhysicsAssertionError(f"Correct evolution signals (max gap {report.max_gap:.3e})")


def _sweep_point(cfg: ScenarioConfig, field_name: str, value: float) -> Tuple[float, float, float, bool]:
    point = dataclasses.replace(cfg, **{field_name: float(value)})
    report = no_signal_gap(point)
    pattern = report.pattern_pulse if cfg.alice_pulse else report.pattern_nopulse
    signals = report.verdict is SignalingVerdict.SIGNALING
    return float(value), float(pattern.visibility), float(report.max_gap), signals


def run_sweep(cfg: ScenarioConfig, args: argparse.Namespace, out_dir: str, manifest: RunManifest) -> None:
    if args.steps < 1:
        raise ConfigurationError(f"--steps must be at least 1, got {args.steps}")
    if args.workers < 1:
        raise ConfigurationError(f"--workers must be at least 1, got {args.workers}")
    field_name = SWEEP_PARAMETERS[args.param]
    values = np.linspace(args.start, args.stop, args.steps)
    # Validate every point before any work is done
    for value in values:
        dataclasses.replace(cfg, **{field_name: float(value)})

    progress = dict(total=len(values), desc=f"sweep {args.param}", disable=args.quiet)
    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            rows = list(tqdm(pool.map(lambda v: _sweep_point(cfg, field_name, v), values), **progress))
    else:
        rows = [_sweep_point(cfg, field_name, v) for v in tqdm(values, **progress)]

    lines = ["parameter,visibility,max_gap"]
    lines += [
        f"{float(value)!r},{float(visibility)!r},{float(max_gap)!r}" for value, visibility, max_gap, _ in rows
    ]
    manifest.outputs.append(write_text_atomic(os.path.join(out_dir, "sweep.csv"), "\n".join(lines) + "\n"))

    signaling = [value for value, _, _, signals in rows if signals]
    manifest.summary = _render_table(f"Sweep over {args.param}", [
        ("points", len(rows)),
        ("visibility range", f"{min(r[1] for r in rows):.6g} .. {max(r[1] for r in rows):.6g}"),
        ("largest max gap", f"{max(r[2] for r in rows):.3e}"),
        ("signaling points", len(signaling)),
    ])
    if cfg.evolution is Evolution.CORRECT and signaling:
        raise PhysicsAssertionError(f"Correct evolution signals at {args.param} = {signaling}")


COMMANDS = {
    'pattern': lambda cfg, args, out_dir, manifest: run_pattern(cfg, out_dir, manifest),
    'audit-unitarity': lambda cfg, args, out_dir, manifest: run_audit_unitarity(cfg, out_dir, manifest),
    'audit-signaling': lambda cfg, args, out_dir, manifest: run_audit_signaling(cfg, out_dir, manifest),
    'sweep': run_sweep,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point for the application."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    elif args.quiet:
        logging.getLogger().setLevel(logging.WARNING)

    manifest = None
    try:
        cfg = resolve_config(args)
        directories = setup_directories(args.out_dir)
        manifest = RunManifest(args.command, cfg)
        if cfg.evolution is Evolution.INGRAHAM:
            manifest.tags.append(FIXTURE_TAG)
            logging.warning(f"Running the independent-emission evolution: outputs are a {FIXTURE_TAG}")

        logging.info(f"Running '{args.command}'")
        COMMANDS[args.command](cfg, args, directories['out_dir'], manifest)
    except (ConfigurationError, ParameterError) as e:
        logging.error(f"Configuration error: {e}")
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    except PhysicsAssertionError as e:
        logging.error(f"Physics assertion failed: {e}")
        manifest.tags.append("physics assertion failed")
        _write_manifest(manifest, directories['out_dir'])
        return EXIT_PHYSICS
    except SimulatorError as e:
        logging.error(f"Simulation failed: {e}")
        if manifest is not None:
            manifest.tags.append("simulation failed")
            _write_manifest(manifest, directories['out_dir'])
        return EXIT_PHYSICS

    _write_manifest(manifest, directories['out_dir'])
    print(manifest.summary)
    if manifest.tags:
        print(f"Tags: {', '.join(manifest.tags)}")
    return EXIT_OK


def _write_manifest(manifest: RunManifest, out_dir: str) -> None:
    try:
        write_json_atomic(os.path.join(out_dir, "manifest.json"), manifest.to_dict())
    except ConfigurationError as e:
        logging.error(f"Could not write the run manifest: {e}")


if __name__ == "__main__":
    sys.exit(main())
