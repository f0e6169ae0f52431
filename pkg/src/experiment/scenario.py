"""
Two-atom delayed-choice eraser: every evolution step as an auditable map.

Pipeline: the first pulse leaves (|a1 c2> + |c1 a2>)/sqrt(2); the excited atom
emits gamma and drops to b; Alice's optional second pulse lifts b to b';
the pair then emits phi collectively (symmetric Dicke state at rate
Gamma(1+s) into the bright mode, antisymmetric at Gamma(1-s) into the dark
mode); a channel with zero rate is metastable and eventually emits the late
photon phi'. The independent-emission map, in which each atom emits its own
phi_i, is kept as a nonphysical fixture for the audits.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from src.errors import ParameterError, PreconditionError, SequencingError
from src.experiment.config import Evolution, Regime, ResolvedOverlaps, ScenarioConfig, resolve_overlaps
from src.quantum.modes import PHI_MODES, gamma_modes, phi_modes
from src.quantum.qcore import (
    ALGEBRA_TOL,
    PHYSICS_TOL,
    SECTOR_LABELS,
    AtomLevel,
    GammaSector,
    LinearMapSpec,
    PhiSector,
    Sector,
    StateVector,
    apply_map,
    atom_pair_amplitudes,
    basis_state,
    inner_product,
    sector_vector,
    tensor,
)

logger = logging.getLogger(__name__)

SQRT_HALF = 1.0 / math.sqrt(2.0)
FIXTURE_TAG = "nonphysical fixture"

_LEVELS = SECTOR_LABELS[Sector.ATOM1]
_VAC = sector_vector(Sector.PHI, {PhiSector.VAC: 1.0})
_NO_GAMMA = sector_vector(Sector.GAMMA, {GammaSector.NONE: 1.0})


def dicke_state(sign: int, gamma=GammaSector.NONE, phi=PhiSector.VAC) -> StateVector:
    """(|b'1 c2> + sign |c1 b'2>)/sqrt(2) with the given photon labels."""
    atoms = atom_pair_amplitudes({("bp", "c"): SQRT_HALF, ("c", "bp"): sign * SQRT_HALF})
    return tensor(
        atoms,
        sector_vector(Sector.GAMMA, {gamma: 1.0}),
        sector_vector(Sector.PHI, {phi: 1.0}),
    )


def psi_plus(gamma=GammaSector.NONE) -> StateVector:
    return dicke_state(+1, gamma)


def psi_minus(gamma=GammaSector.NONE) -> StateVector:
    return dicke_state(-1, gamma)


@dataclass(frozen=True)
class DickeDecomposition:
    """Coefficients of |Psi+> and |Psi-> in one gamma branch."""
    plus_amplitude: complex
    minus_amplitude: complex

    @property
    def weight(self) -> float:
        return abs(self.plus_amplitude) ** 2 + abs(self.minus_amplitude) ** 2


def dicke_decompose(s: StateVector) -> Dict[GammaSector, DickeDecomposition]:
    return {
        gamma: DickeDecomposition(
            inner_product(psi_plus(gamma), s),
            inner_product(psi_minus(gamma), s),
        )
        for gamma in GammaSector
    }


def dicke_recompose(parts: Mapping[GammaSector, DickeDecomposition]) -> StateVector:
    state = StateVector.zeros()
    for gamma, part in parts.items():
        state = state + part.plus_amplitude * psi_plus(gamma) + part.minus_amplitude * psi_minus(gamma)
    return state


def _require_normalized(s: StateVector, stage: str) -> None:
    deviation = abs(s.norm() ** 2 - 1.0)
    if deviation > PHYSICS_TOL:
        raise PreconditionError(f"{stage} needs a normalized state (|norm^2 - 1| = {deviation:.3e})")


def _level_weight(s: StateVector, level: AtomLevel) -> float:
    index = _LEVELS.index(level)
    probabilities = np.abs(s.tensor) ** 2
    return float(np.sum(probabilities[index]) + np.sum(probabilities[:, index]))


def _forbid_levels(s: StateVector, levels, stage: str) -> None:
    for level in levels:
        weight = _level_weight(s, level)
        if weight > ALGEBRA_TOL:
            raise SequencingError(
                f"{stage} expects atoms in b' or c only, found weight {weight:.3e} on level '{level.value}'"
            )


def _check_overlap(s: float, name: str) -> float:
    if not -1.0 <= s <= 1.0:
        raise ParameterError(f"{name} must lie in [-1, 1], got {s}")
    return float(s)


def _check_gamma_t(gamma_t: Optional[float]) -> Optional[float]:
    if gamma_t is not None and not gamma_t >= 0:
        raise ParameterError(f"gamma_t must be non-negative, got {gamma_t}")
    return gamma_t


def _channels(s_phi: float) -> List[Tuple[int, float, PhiSector]]:
    """(Dicke sign, collective rate in units of Gamma, emission mode)."""
    return [(+1, 1.0 + s_phi, PhiSector.BRIGHT), (-1, 1.0 - s_phi, PhiSector.DARK)]


def _residual_amplitude(rate: float, gamma_t: Optional[float]) -> float:
    if rate <= ALGEBRA_TOL:
        return 1.0
    if gamma_t is None:
        return 0.0
    return math.exp(-rate * gamma_t / 2.0)


def _emitted_amplitude(rate: float, gamma_t: Optional[float]) -> float:
    if rate <= ALGEBRA_TOL:
        return 0.0
    if gamma_t is None:
        return 1.0
    return math.sqrt(-math.expm1(-rate * gamma_t))


# Map builders. Maps are immutable, so caching them is safe.

@lru_cache(maxsize=None)
def gamma_emission_map(s_gamma: float) -> LinearMapSpec:
    """
    |a1 c2> -> |b1 c2>|gamma1>, |c1 a2> -> |c1 b2>|gamma2>, gamma modes at overlap s_gamma.

    Completed to a unitary per atomic branch: the emitted state goes back to
    minus the excited one, and the photon state orthogonal to the emitted
    mode is left alone.
    """
    s_gamma = _check_overlap(s_gamma, "s_gamma")
    modes = gamma_modes(s_gamma)
    inputs, outputs = [], []
    for excited, marked, name in ((("a", "c"), ("b", "c"), "gamma1"), (("c", "a"), ("c", "b"), "gamma2")):
        x, y = modes.mode_vector(name)
        source = tensor(atom_pair_amplitudes({excited: 1.0}), _NO_GAMMA, _VAC)
        emitted = tensor(atom_pair_amplitudes({marked: 1.0}), np.array([0.0, x, y]), _VAC)
        spectator = tensor(atom_pair_amplitudes({marked: 1.0}), np.array([0.0, -np.conj(y), np.conj(x)]), _VAC)
        inputs += [source, emitted, spectator]
        outputs += [emitted, -source, spectator]
    return LinearMapSpec(tuple(inputs), tuple(outputs), "gamma-emission")


@lru_cache(maxsize=None)
def pulse2_map() -> LinearMapSpec:
    """Relabel b <-> b' on both atoms; an involutive permutation of the basis."""
    swap = {AtomLevel.B: AtomLevel.BP, AtomLevel.BP: AtomLevel.B}
    inputs, outputs = [], []
    for atom1 in AtomLevel:
        for atom2 in AtomLevel:
            if atom1 not in swap and atom2 not in swap:
                continue
            for gamma in GammaSector:
                for phi in PhiSector:
                    inputs.append(basis_state(atom1, atom2, gamma, phi))
                    outputs.append(basis_state(swap.get(atom1, atom1), swap.get(atom2, atom2), gamma, phi))
    return LinearMapSpec(tuple(inputs), tuple(outputs), "pulse2")


@lru_cache(maxsize=None)
def collective_emission_map(s_phi: float, gamma_t: Optional[float] = None) -> LinearMapSpec:
    """
    Collective phi emission per gamma branch.

    Psi+ decays at rate 1 + s_phi into the bright mode, Psi- at 1 - s_phi
    into the dark mode. gamma_t = None is the t -> infinity limit, in which a
    channel empties completely unless its rate is exactly zero. Each channel
    is a rotation on span{excited, emitted}, so an already emitted photon is
    never overwritten.
    """
    s_phi = _check_overlap(s_phi, "s_phi")
    gamma_t = _check_gamma_t(gamma_t)
    inputs, outputs = [], []
    for sign, rate, mode in _channels(s_phi):
        stay = _residual_amplitude(rate, gamma_t)
        emit = _emitted_amplitude(rate, gamma_t)
        for gamma in GammaSector:
            excited = dicke_state(sign, gamma)
            target = basis_state("c", "c", gamma, mode)
            inputs += [excited, target]
            outputs += [stay * excited + emit * target, stay * target - emit * excited]
    label = "correct" if gamma_t is None else "correct-rate"
    return LinearMapSpec(tuple(inputs), tuple(outputs), label)


@lru_cache(maxsize=None)
def late_decay_map(s_phi: float = 1.0, gamma_t: Optional[float] = None) -> LinearMapSpec:
    """
    Decay of whatever excitation the collective emission left behind.

    The emission history (s_phi, gamma_t) fixes what is left. A zero-rate
    channel is metastable and its residue emits phi' into the late mode. A
    decaying channel observed at finite gamma_t finishes into its own mode: the
    rotation on span{excited, emitted} takes a|excited> + b|emitted> to
    |emitted>. With the instantaneous history those channels are already
    empty and the rotation is the identity.
    """
    s_phi = _check_overlap(s_phi, "s_phi")
    gamma_t = _check_gamma_t(gamma_t)
    inputs, outputs = [], []
    for sign, rate, mode in _channels(s_phi):
        for gamma in GammaSector:
            excited = dicke_state(sign, gamma)
            if rate <= ALGEBRA_TOL:
                target = basis_state("c", "c", gamma, PhiSector.LATE)
                inputs += [excited, target]
                outputs += [target, -excited]
                continue
            residue = _residual_amplitude(rate, gamma_t)
            emitted = _emitted_amplitude(rate, gamma_t)
            target = basis_state("c", "c", gamma, mode)
            inputs += [excited, target]
            outputs += [emitted * excited + residue * target, emitted * target - residue * excited]
    return LinearMapSpec(tuple(inputs), tuple(outputs), "late-decay")


@lru_cache(maxsize=None)
def ingraham_map(s_phi: float) -> LinearMapSpec:
    """Independent emission |b'1 c2> -> |c1 c2>|phi1>, |c1 b'2> -> |c1 c2>|phi2> (nonphysical)."""
    s_phi = _check_overlap(s_phi, "s_phi")
    modes = phi_modes(s_phi)
    emitted = [np.concatenate([[0.0], modes.mode_vector(name), [0.0]]) for name in PHI_MODES]
    ground = atom_pair_amplitudes({("c", "c"): 1.0})
    inputs, outputs = [], []
    for gamma in GammaSector:
        gamma_vector = sector_vector(Sector.GAMMA, {gamma: 1.0})
        for pair, phi in ((("bp", "c"), emitted[0]), (("c", "bp"), emitted[1])):
            inputs.append(tensor(atom_pair_amplitudes({pair: 1.0}), gamma_vector, _VAC))
            outputs.append(tensor(ground, gamma_vector, phi))
    return LinearMapSpec(tuple(inputs), tuple(outputs), "ingraham")


# Scenario operations

def prepare_excited() -> StateVector:
    """(|a1 c2> + |c1 a2>)/sqrt(2), the state right after the first pulse."""
    atoms = atom_pair_amplitudes({("a", "c"): SQRT_HALF, ("c", "a"): SQRT_HALF})
    return tensor(atoms, _NO_GAMMA, _VAC)


def prepare_after_gamma(s_gamma: float) -> StateVector:
    """(|b1 c2>|gamma1> + |c1 b2>|gamma2>)/sqrt(2), explicitly renormalized."""
    if abs(s_gamma) > 1.0:
        raise ParameterError(f"s_gamma must lie in [-1, 1], got {s_gamma}")
    return apply_map(gamma_emission_map(float(s_gamma)), prepare_excited()).normalized()


def apply_pulse2(s: StateVector) -> StateVector:
    _require_normalized(s, "Second pulse")
    return apply_map(pulse2_map(), s)


def _emission_input(s: StateVector, s_phi: float, stage: str) -> float:
    _require_normalized(s, stage)
    s_phi = _check_overlap(s_phi, "s_phi")
    _forbid_levels(s, (AtomLevel.A, AtomLevel.B), stage)
    return s_phi


def collective_emission_instantaneous(s: StateVector, s_phi: float) -> StateVector:
    s_phi = _emission_input(s, s_phi, "Collective emission")
    return apply_map(collective_emission_map(s_phi), s)


def collective_emission_rate(s: StateVector, s_phi: float, gamma_t: float) -> StateVector:
    gamma_t = _check_gamma_t(float(gamma_t))
    s_phi = _emission_input(s, s_phi, "Collective emission")
    return apply_map(collective_emission_map(s_phi, gamma_t), s)


def late_decay(s: StateVector, s_phi: float = 1.0, gamma_t: Optional[float] = None) -> StateVector:
    _require_normalized(s, "Late decay")
    if gamma_t is not None:
        gamma_t = float(gamma_t)
    return apply_map(late_decay_map(float(s_phi), gamma_t), s)


def ingraham_emission(s: StateVector, s_phi: float) -> StateVector:
    """Independent-emission fixture; the output is deliberately not renormalized."""
    s_phi = _emission_input(s, s_phi, "Ingraham emission")
    logger.debug(f"Applying the independent-emission map ({FIXTURE_TAG})")
    return apply_map(ingraham_map(s_phi), s)


def prompt_emission_probability(s: StateVector) -> float:
    """Weight of |c1 c2> with a phi photon in the bright or dark mode."""
    c = _LEVELS.index(AtomLevel.C)
    phi_axis = SECTOR_LABELS[Sector.PHI]
    emitted = [phi_axis.index(PhiSector.BRIGHT), phi_axis.index(PhiSector.DARK)]
    return float(np.sum(np.abs(s.tensor[c, c, :, emitted]) ** 2))


@dataclass(frozen=True)
class ScenarioRun:
    config: ScenarioConfig
    overlaps: ResolvedOverlaps
    state: StateVector
    stages: Tuple[str, ...]

    @property
    def fixture(self) -> bool:
        return self.config.evolution is Evolution.INGRAHAM


def run_pipeline(cfg: ScenarioConfig) -> ScenarioRun:
    """Prepare, emit gamma, then apply Alice's choice and everything after it."""
    overlaps = resolve_overlaps(cfg)
    state = prepare_after_gamma(overlaps.s_gamma)
    stages = ["prepare_after_gamma"]

    if cfg.alice_pulse:
        state = apply_pulse2(state)
        stages.append("pulse2")
        if cfg.evolution is Evolution.INGRAHAM:
            state = ingraham_emission(state, overlaps.s_phi)
            stages.append("ingraham_emission")
        elif cfg.regime is Regime.RATE:
            state = collective_emission_rate(state, overlaps.s_phi, cfg.gamma_t)
            stages.append("collective_emission_rate")
        else:
            state = collective_emission_instantaneous(state, overlaps.s_phi)
            stages.append("collective_emission_instantaneous")

        if cfg.include_late_decay and cfg.evolution is Evolution.CORRECT:
            state = late_decay(state, overlaps.s_phi, cfg.effective_gamma_t)
            stages.append("late_decay")

    logger.debug(f"Pipeline stages: {' -> '.join(stages)}")
    return ScenarioRun(cfg, overlaps, state, tuple(stages))
