"""
Non-orthogonal single-photon modes.

Two emitters at distance d produce photon modes whose overlap follows the
isotropic point-source coherence kernel sin(kd)/(kd). The modes are written
in orthonormal sector coordinates either by symmetric (Loewdin)
orthogonalization, which keeps each mode closest to its own axis, or in the
collective bright/dark axes (phi1 +- phi2)/sqrt(2(1 +- s)).
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np

from src.errors import ParameterError, StructuralError
from src.quantum.qcore import ALGEBRA_TOL, DOMAIN_TOL

logger = logging.getLogger(__name__)

LOWDIN = "lowdin"
COLLECTIVE = "collective"

GAMMA_MODES = ("gamma1", "gamma2")
GAMMA_AXES = ("g1", "g2")
PHI_MODES = ("phi1", "phi2")
PHI_AXES = ("bright", "dark")


def overlap_isotropic(wavelength: float, separation: float) -> float:
    """sin(kd)/(kd) with k = 2*pi/wavelength; exactly 1 at d = 0."""
    if not wavelength > 0:
        raise ParameterError(f"Wavelength must be positive, got {wavelength}")
    if separation < 0:
        raise ParameterError(f"Separation must be non-negative, got {separation}")
    # np.sinc(t) = sin(pi t)/(pi t), and kd/pi = 2d/wavelength
    return float(np.sinc(2.0 * separation / wavelength))


class OverlapKind(str, Enum):
    ISOTROPIC_POINT_SOURCE = "isotropic_point_source"
    FIXED_VALUE = "fixed_value"


@dataclass(frozen=True)
class OverlapModel:
    kind: OverlapKind = OverlapKind.ISOTROPIC_POINT_SOURCE
    parameter: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", OverlapKind(self.kind))
        if self.kind is OverlapKind.FIXED_VALUE:
            if self.parameter is None or not -1.0 <= self.parameter <= 1.0:
                raise ParameterError(f"Fixed overlap must lie in [-1, 1], got {self.parameter}")

    @classmethod
    def fixed(cls, value: float) -> "OverlapModel":
        return cls(OverlapKind.FIXED_VALUE, float(value))

    def overlap(self, wavelength: float, separation: float) -> float:
        if self.kind is OverlapKind.FIXED_VALUE:
            return float(self.parameter)
        return overlap_isotropic(wavelength, separation)


@dataclass(frozen=True)
class Embedding:
    """Columns are the modes' coordinates in an orthonormal basis."""
    matrix: np.ndarray
    rank_deficient: bool


def _check_overlap(s: float) -> float:
    s = float(s)
    if not -1.0 - ALGEBRA_TOL <= s <= 1.0 + ALGEBRA_TOL:
        raise ParameterError(f"Mode overlap must lie in [-1, 1], got {s}")
    return min(1.0, max(-1.0, s))


def _lowdin_pair(s: float) -> np.ndarray:
    # S^(1/2) of [[1, s], [s, 1]] in closed form
    plus, minus = math.sqrt(1.0 + s), math.sqrt(1.0 - s)
    alpha, beta = (plus + minus) / 2.0, (plus - minus) / 2.0
    return np.array([[alpha, beta], [beta, alpha]], dtype=complex)


def bright_dark_coefficients(s: float) -> Tuple[float, float]:
    """Norms sqrt(2(1+s)) and sqrt(2(1-s)) of phi1 +- phi2."""
    if not 0.0 <= s <= 1.0:
        raise ParameterError(f"Overlap must lie in [0, 1], got {s}")
    return math.sqrt(2.0 * (1.0 + s)), math.sqrt(2.0 * (1.0 - s))


def collective_embedding(s: float) -> np.ndarray:
    """Columns phi1, phi2 in (bright, dark) coordinates for real overlap s."""
    s = _check_overlap(s)
    if s >= 0.0:
        bright_norm, dark_norm = bright_dark_coefficients(s)
    else:
        # a negative overlap swaps the two norms
        dark_norm, bright_norm = bright_dark_coefficients(-s)
    bright, dark = bright_norm / 2.0, dark_norm / 2.0
    return np.array([[bright, bright], [dark, -dark]], dtype=complex)


def _check_gram(gram: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a valid Gram matrix: square, Hermitian, unit diagonal, PSD."""
    if gram.ndim != 2 or gram.shape[0] != gram.shape[1]:
        raise StructuralError(f"Gram matrix must be square, got shape {gram.shape}")
    if not np.allclose(gram, gram.conj().T, rtol=0.0, atol=ALGEBRA_TOL):
        raise ParameterError("Gram matrix is not Hermitian")
    if not np.allclose(np.diag(gram), 1.0, rtol=0.0, atol=ALGEBRA_TOL):
        raise ParameterError("Gram matrix must have unit diagonal")
    eigenvalues, eigenvectors = np.linalg.eigh(gram)
    if eigenvalues[0] < -DOMAIN_TOL:
        raise ParameterError(f"Gram matrix is not positive semidefinite (eigenvalue {eigenvalues[0]:.3e})")
    return eigenvalues, eigenvectors


def embed(gram, axes: str = LOWDIN) -> Embedding:
    """
    Orthonormal embedding of modes with the given Gram matrix.

    LOWDIN (the default) is gram^(1/2): orthogonal modes embed as the
    identity, and at s = 1 both columns coincide. It is used for the gamma
    modes. COLLECTIVE, for two modes with real overlap, rotates it so that
    the symmetric combination lies on the first (bright) axis and the
    antisymmetric one on the second (dark) axis; at s = 1 both modes sit on
    the bright axis with a zero dark component. It is used for the phi modes.
    """
    gram = np.asarray(gram, dtype=complex)
    eigenvalues, eigenvectors = _check_gram(gram)
    rank_deficient = bool(eigenvalues[0] <= ALGEBRA_TOL)

    two_real = gram.shape == (2, 2) and abs(gram[0, 1].imag) <= ALGEBRA_TOL
    if axes == COLLECTIVE:
        if not two_real:
            raise StructuralError("Collective axes need two modes with a real overlap")
        matrix = collective_embedding(gram[0, 1].real)
    elif axes == LOWDIN:
        if two_real:
            matrix = _lowdin_pair(_check_overlap(gram[0, 1].real))
        else:
            roots = np.sqrt(np.clip(eigenvalues, 0.0, None))
            matrix = (eigenvectors * roots) @ eigenvectors.conj().T
    else:
        raise ParameterError(f"Unknown embedding axes '{axes}'")

    if rank_deficient:
        logger.debug("Gram matrix is singular; embedding has reduced rank")
    return Embedding(matrix, rank_deficient)


@dataclass(frozen=True, eq=False)
class ModeDictionary:
    """Named photon modes, their Gram matrix and their orthonormal embedding."""

    names: Tuple[str, ...]
    gram: np.ndarray
    embedding: np.ndarray
    axes: Tuple[str, ...]
    rank_deficient: bool = False

    def __post_init__(self):
        names = tuple(self.names)
        gram = np.array(self.gram, dtype=complex)
        embedding = np.array(self.embedding, dtype=complex)
        if gram.shape != (len(names), len(names)) or embedding.shape != (len(self.axes), len(names)):
            raise StructuralError("Mode dictionary shapes do not match its names and axes")
        _check_gram(gram)
        if np.max(np.abs(embedding.conj().T @ embedding - gram)) > ALGEBRA_TOL:
            raise StructuralError("Embedding does not reproduce the Gram matrix")
        for array in (gram, embedding):
            array.setflags(write=False)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "axes", tuple(self.axes))
        object.__setattr__(self, "gram", gram)
        object.__setattr__(self, "embedding", embedding)

    @classmethod
    def from_gram(cls, names: Sequence[str], gram, axis_names: Sequence[str],
                  axes: str = LOWDIN) -> "ModeDictionary":
        result = embed(gram, axes)
        return cls(tuple(names), gram, result.matrix, tuple(axis_names), result.rank_deficient)

    @classmethod
    def from_overlap(cls, names: Sequence[str], s: float, axis_names: Sequence[str],
                     axes: str = LOWDIN) -> "ModeDictionary":
        s = _check_overlap(s)
        return cls.from_gram(names, np.array([[1.0, s], [s, 1.0]]), axis_names, axes)

    def mode_vector(self, name: str) -> np.ndarray:
        try:
            return self.embedding[:, self.names.index(name)]
        except ValueError:
            raise StructuralError(f"Unknown mode '{name}'; known modes {self.names}") from None

    def overlap(self, first: str, second: str) -> complex:
        return complex(np.vdot(self.mode_vector(first), self.mode_vector(second)))


@lru_cache(maxsize=None)
def gamma_modes(s_gamma: float) -> ModeDictionary:
    """gamma1, gamma2 on the g1/g2 axes (Loewdin)."""
    return ModeDictionary.from_overlap(GAMMA_MODES, s_gamma, GAMMA_AXES, LOWDIN)


@lru_cache(maxsize=None)
def phi_modes(s_phi: float) -> ModeDictionary:
    """phi1, phi2 on the bright/dark axes; s_phi is their overlap."""
    return ModeDictionary.from_overlap(PHI_MODES, s_phi, PHI_AXES, COLLECTIVE)
