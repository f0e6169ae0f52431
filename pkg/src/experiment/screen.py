"""
Bob's screen: far-field two-source interference of the gamma photon.

Source j sits at x_j = -+separation/2 and contributes the Fraunhofer phase
exp(i k x x_j / L) at screen position x. Amplitudes are taken in source
coordinates (the gamma1/gamma2 modes themselves, undoing the orthonormal
embedding) and summed coherently per orthonormal environment label, then
incoherently over environments.
"""
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from src.errors import ParameterError, PreconditionError, StructuralError
from src.experiment.config import ScenarioConfig, resolve_overlaps
from src.quantum.modes import gamma_modes
from src.quantum.qcore import ALGEBRA_TOL, SECTOR_AXES, SECTOR_LABELS, GammaSector, Sector, StateVector

logger = logging.getLogger(__name__)

# Rounding in the fit grows with the condition number of the design matrix
FIT_CONDITION_LIMIT = 1e6

_GAMMA_AXIS = SECTOR_AXES[Sector.GAMMA]
_SOURCE_ROWS = [SECTOR_LABELS[Sector.GAMMA].index(g) for g in (GammaSector.G1, GammaSector.G2)]


@dataclass(frozen=True, eq=False)
class Pattern:
    """
    Grid-normalized detection probabilities and the fringe visibility.

    `visibility` is the envelope visibility from the source coherence.
    `fit_visibility` is the least-squares value from the sampled grid, or None
    when the grid cannot resolve the fringe (step a multiple of the period).
    """

    positions: np.ndarray
    probabilities: np.ndarray
    visibility: float
    fit_visibility: Optional[float] = None

    def __post_init__(self):
        positions = np.array(self.positions, dtype=float)
        probabilities = np.array(self.probabilities, dtype=float)
        if positions.shape != probabilities.shape or positions.ndim != 1:
            raise StructuralError("Pattern positions and probabilities must be matching 1-D arrays")
        if np.any(probabilities < 0) or abs(np.sum(probabilities) - 1.0) > ALGEBRA_TOL:
            raise StructuralError("Pattern probabilities must be non-negative and sum to 1")
        if not 0.0 <= self.visibility <= 1.0:
            raise StructuralError(f"Visibility {self.visibility} outside [0, 1]")
        for array in (positions, probabilities):
            array.setflags(write=False)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "probabilities", probabilities)
        object.__setattr__(self, "visibility", float(self.visibility))
        if self.fit_visibility is not None:
            object.__setattr__(self, "fit_visibility", float(self.fit_visibility))

    @property
    def peak_visibility(self) -> float:
        """(max - min)/(max + min) over the sampled grid; a cross-check only."""
        high, low = float(np.max(self.probabilities)), float(np.min(self.probabilities))
        return (high - low) / (high + low)

    def to_csv(self) -> str:
        rows = ["x,probability"]
        rows += [f"{float(x)!r},{float(p)!r}" for x, p in zip(self.positions, self.probabilities)]
        return "\n".join(rows) + "\n"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "positions": [float(x) for x in self.positions],
            "probabilities": [float(p) for p in self.probabilities],
            "visibility": float(self.visibility),
        }


@dataclass(frozen=True)
class CoherenceVisibility:
    value: float
    single_source: bool


def fringe_spacing(cfg: ScenarioConfig) -> float:
    """lambda_gamma * L / d."""
    return cfg.lambda_gamma * cfg.screen_distance / cfg.separation


def source_amplitudes(s: StateVector, s_gamma: float = 0.0) -> np.ndarray:
    """
    c[j, E]: amplitude of gamma source j jointly with environment label E.

    E runs over the orthonormal atoms (x) phi labels. Raises
    PreconditionError when the state has no photon in g1 or g2.
    """
    if abs(s_gamma) >= 1.0:
        raise ParameterError(f"Sources are indistinguishable at s_gamma = {s_gamma}")
    coordinates = np.moveaxis(s.tensor, _GAMMA_AXIS, 0).reshape(len(SECTOR_LABELS[Sector.GAMMA]), -1)
    coordinates = coordinates[_SOURCE_ROWS]
    if np.sum(np.abs(coordinates) ** 2) <= ALGEBRA_TOL:
        raise PreconditionError("State has no gamma photon on the screen (zero g1/g2 support)")
    return np.linalg.solve(gamma_modes(float(s_gamma)).embedding, coordinates)


def _coherence(amplitudes: np.ndarray) -> CoherenceVisibility:
    rho = amplitudes @ amplitudes.conj().T
    weights = rho.diagonal().real
    if min(weights) <= ALGEBRA_TOL:
        logger.debug("Only one gamma source is populated; no fringes")
        return CoherenceVisibility(0.0, True)
    return CoherenceVisibility(float(abs(rho[0, 1]) / ((weights[0] + weights[1]) / 2.0)), False)


def _fit_visibility(positions: np.ndarray, probabilities: np.ndarray, q: float) -> Optional[float]:
    # A two-source pattern is exactly A + B cos(qx) + C sin(qx)
    design = np.column_stack([np.ones_like(positions), np.cos(q * positions), np.sin(q * positions)])
    singular_values = np.linalg.svd(design, compute_uv=False)
    if singular_values[-1] * FIT_CONDITION_LIMIT < singular_values[0]:
        logger.debug("Grid does not resolve the fringe period; skipping the fringe fit")
        return None
    (offset, cosine, sine), *_ = np.linalg.lstsq(design, probabilities, rcond=None)
    return float(min(1.0, max(0.0, math.hypot(cosine, sine) / offset)))


def compute_pattern(s: StateVector, cfg: ScenarioConfig, s_gamma: Optional[float] = None) -> Pattern:
    """Bob's detection pattern on the symmetric grid of `cfg`."""
    if s_gamma is None:
        s_gamma = resolve_overlaps(cfg).s_gamma
    spacing = fringe_spacing(cfg)
    if spacing > 2.0 * cfg.screen_halfwidth:
        logger.warning(
            f"Fringe spacing {spacing:.6g} exceeds the screen width {2.0 * cfg.screen_halfwidth:.6g}; "
            "not even one full fringe is sampled"
        )

    amplitudes = source_amplitudes(s, s_gamma)
    positions = np.linspace(-cfg.screen_halfwidth, cfg.screen_halfwidth, cfg.grid_points)
    k = 2.0 * math.pi / cfg.lambda_gamma
    sources = np.array([-cfg.separation / 2.0, cfg.separation / 2.0])
    phases = np.exp(1j * k * np.outer(sources, positions) / cfg.screen_distance)

    field = amplitudes.T @ phases
    intensity = np.sum(np.abs(field) ** 2, axis=0)
    probabilities = intensity / np.sum(intensity)

    q = k * cfg.separation / cfg.screen_distance
    visibility = min(1.0, _coherence(amplitudes).value)
    return Pattern(positions, probabilities, visibility, _fit_visibility(positions, probabilities, q))


def coherence_visibility(s: StateVector, s_gamma: float = 0.0) -> CoherenceVisibility:
    """2|rho12|/(rho11 + rho22) from the environment-traced source coherence."""
    return _coherence(source_amplitudes(s, s_gamma))


def visibility_from_coherence(s: StateVector, s_gamma: float = 0.0) -> float:
    return coherence_visibility(s, s_gamma).value
