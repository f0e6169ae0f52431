"""
Executable verdicts: isometry of evolution maps and no-signaling at Bob's screen.

Both verdicts use a 1e-9 threshold; double-precision noise in these audits
stays below 1e-12 and every genuine violation exercised here is at least 1e-2.
"""
import dataclasses
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List

import numpy as np

from src.errors import PhysicsAssertionError, StructuralError
from src.experiment.config import Evolution, ScenarioConfig, resolve_overlaps
from src.experiment.scenario import (
    FIXTURE_TAG,
    collective_emission_map,
    gamma_emission_map,
    ingraham_map,
    late_decay_map,
    pulse2_map,
    run_pipeline,
)
from src.experiment.screen import Pattern, compute_pattern
from src.quantum.qcore import INDEPENDENCE_TOL, PHYSICS_TOL, GammaSector, LinearMapSpec, basis_state, chain_map

logger = logging.getLogger(__name__)

ISOMETRY_THRESHOLD = PHYSICS_TOL
SIGNALING_THRESHOLD = PHYSICS_TOL


class IsometryVerdict(str, Enum):
    ISOMETRIC = "isometric"
    VIOLATION = "violation"


class SignalingVerdict(str, Enum):
    NO_SIGNALING = "no_signaling"
    SIGNALING = "signaling"


def _complex_matrix(matrix: np.ndarray) -> List[List[List[float]]]:
    return [[[float(z.real), float(z.imag)] for z in row] for row in matrix]


@dataclass(frozen=True, eq=False)
class IsometryReport:
    map_label: str
    gram_in: np.ndarray
    gram_out: np.ndarray
    max_deviation: float
    verdict: IsometryVerdict

    def to_dict(self) -> Dict[str, Any]:
        return {
            "map_label": self.map_label,
            "gram_in": _complex_matrix(self.gram_in),
            "gram_out": _complex_matrix(self.gram_out),
            "max_deviation": float(self.max_deviation),
            "verdict": self.verdict.value,
        }


@dataclass(frozen=True, eq=False)
class SignalingReport:
    pattern_pulse: Pattern
    pattern_nopulse: Pattern
    max_gap: float
    visibility_gap: float
    verdict: SignalingVerdict

    def to_dict(self) -> Dict[str, Any]:
        return {
            "pattern_pulse": self.pattern_pulse.to_dict(),
            "pattern_nopulse": self.pattern_nopulse.to_dict(),
            "max_gap": float(self.max_gap),
            "visibility_gap": float(self.visibility_gap),
            "verdict": self.verdict.value,
        }


def check_isometry(m: LinearMapSpec) -> IsometryReport:
    """Compare the Gram matrix of the map's inputs with that of their images."""
    gram_in, gram_out = m.gram_in, m.gram_out
    eigenvalues = np.linalg.eigvalsh(gram_in)
    if eigenvalues[0] <= INDEPENDENCE_TOL * max(eigenvalues[-1], 1.0):
        raise StructuralError(f"Map '{m.label}' has a degenerate input set")

    max_deviation = float(np.max(np.abs(gram_out - gram_in)))
    verdict = IsometryVerdict.VIOLATION if max_deviation > ISOMETRY_THRESHOLD else IsometryVerdict.ISOMETRIC
    logger.info(f"Isometry audit of '{m.label}': max deviation {max_deviation:.3e} -> {verdict.value}")
    return IsometryReport(m.label, gram_in, gram_out, max_deviation, verdict)


def excited_sector_basis() -> List:
    """|b1 c2> and |c1 b2> in every gamma branch, phi vacuum."""
    return [
        basis_state(*pair, gamma)
        for gamma in GammaSector
        for pair in (("b", "c"), ("c", "b"))
    ]


def correct_composite_map(s_phi: float, gamma_t=None, include_late_decay: bool = True) -> LinearMapSpec:
    """Second pulse, collective emission and (optionally) late decay as one map."""
    maps = [pulse2_map(), collective_emission_map(s_phi, gamma_t)]
    if include_late_decay:
        maps.append(late_decay_map(s_phi, gamma_t))
    return chain_map("correct-composite", excited_sector_basis(), *maps)


def audit_pipeline_maps(cfg: ScenarioConfig) -> List[IsometryReport]:
    """Isometry reports for the maps the configured evolution applies."""
    overlaps = resolve_overlaps(cfg)
    gamma_t = cfg.effective_gamma_t
    if cfg.evolution is Evolution.INGRAHAM:
        logger.warning(f"Auditing the independent-emission map ({FIXTURE_TAG})")
        maps = [ingraham_map(overlaps.s_phi)]
    else:
        maps = [
            collective_emission_map(overlaps.s_phi, gamma_t),
            correct_composite_map(overlaps.s_phi, gamma_t, cfg.include_late_decay),
        ]
    maps.append(gamma_emission_map(overlaps.s_gamma))
    return [check_isometry(m) for m in maps]


def require_isometric(report: IsometryReport) -> None:
    if report.verdict is not IsometryVerdict.ISOMETRIC:
        raise PhysicsAssertionError(
            f"Map '{report.map_label}' broke isometry (deviation {report.max_deviation:.3e})"
        )


def no_signal_gap(cfg: ScenarioConfig) -> SignalingReport:
    """Run the pipeline with and without Alice's pulse and compare Bob's patterns."""
    patterns = {}
    for alice_pulse in (True, False):
        run = run_pipeline(dataclasses.replace(cfg, alice_pulse=alice_pulse))
        patterns[alice_pulse] = compute_pattern(run.state, run.config, run.overlaps.s_gamma)

    pulse, nopulse = patterns[True], patterns[False]
    max_gap = float(np.max(np.abs(pulse.probabilities - nopulse.probabilities)))
    visibility_gap = pulse.visibility - nopulse.visibility
    verdict = SignalingVerdict.SIGNALING if max_gap > SIGNALING_THRESHOLD else SignalingVerdict.NO_SIGNALING

    suffix = f" ({FIXTURE_TAG})" if cfg.evolution is Evolution.INGRAHAM else ""
    logger.info(
        f"Signaling audit{suffix}: max gap {max_gap:.3e}, visibility gap {visibility_gap:.6f} -> {verdict.value}"
    )
    return SignalingReport(pulse, nopulse, max_gap, visibility_gap, verdict)
