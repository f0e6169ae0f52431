"""
Composite-basis state algebra for the two-atom eraser.

The Hilbert space is the fixed product atom1 (x) atom2 (x) gamma (x) phi with
4 x 4 x 3 x 4 = 192 orthonormal basis states. States are dense complex
vectors in that basis; linear maps are given by the images of a set of
independent input vectors and act as the identity on basis vectors none of
those inputs touch.
"""
import json
import logging
from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import Dict, Iterable, List, Mapping, NamedTuple, Sequence, Tuple, Union

import numpy as np

from src.errors import DomainError, PreconditionError, StructuralError

logger = logging.getLogger(__name__)

# Algebraic identities, physical assertions, map-domain membership
ALGEBRA_TOL = 1e-12
PHYSICS_TOL = 1e-9
DOMAIN_TOL = 1e-10
INDEPENDENCE_TOL = 1e-10


class AtomLevel(str, Enum):
    A = "a"
    B = "b"
    BP = "bp"
    C = "c"


class GammaSector(str, Enum):
    NONE = "none"
    G1 = "g1"
    G2 = "g2"


class PhiSector(str, Enum):
    VAC = "vac"
    BRIGHT = "bright"
    DARK = "dark"
    LATE = "late"


class Sector(str, Enum):
    """Tensor factors of the composite basis, in axis order."""
    ATOM1 = "atom1"
    ATOM2 = "atom2"
    GAMMA = "gamma"
    PHI = "phi"


SECTOR_LABELS = {
    Sector.ATOM1: tuple(AtomLevel),
    Sector.ATOM2: tuple(AtomLevel),
    Sector.GAMMA: tuple(GammaSector),
    Sector.PHI: tuple(PhiSector),
}
SECTOR_AXES = {sector: axis for axis, sector in enumerate(Sector)}
ATOMS = (Sector.ATOM1, Sector.ATOM2)

SHAPE = tuple(len(SECTOR_LABELS[sector]) for sector in Sector)
DIM = int(np.prod(SHAPE))

SectorSelector = Union[Sector, str, Sequence[Union[Sector, str]]]


class BasisLabel(NamedTuple):
    atom1: AtomLevel
    atom2: AtomLevel
    gamma: GammaSector
    phi: PhiSector

    @classmethod
    def of(cls, atom1, atom2, gamma=GammaSector.NONE, phi=PhiSector.VAC) -> "BasisLabel":
        """Build a label from enum members or their string values."""
        return cls(AtomLevel(atom1), AtomLevel(atom2), GammaSector(gamma), PhiSector(phi))

    @classmethod
    def parse(cls, text: str) -> "BasisLabel":
        parts = text.split("|")
        if len(parts) != 4:
            raise StructuralError(f"Basis label must have four '|'-separated parts: {text!r}")
        try:
            return cls.of(*parts)
        except ValueError as e:
            raise StructuralError(f"Unknown basis label {text!r}: {e}") from e

    def __str__(self) -> str:
        return "|".join(part.value for part in self)


BASIS: Tuple[BasisLabel, ...] = tuple(
    BasisLabel(*labels) for labels in product(*(SECTOR_LABELS[sector] for sector in Sector))
)
_INDEX = {label: i for i, label in enumerate(BASIS)}


def index_of(label: BasisLabel) -> int:
    try:
        return _INDEX[label]
    except KeyError:
        raise StructuralError(f"Label {label!r} is not part of the basis") from None


def _as_amplitudes(value) -> np.ndarray:
    if isinstance(value, StateVector):
        return value.amplitudes
    array = np.asarray(value, dtype=complex)
    if array.size != DIM:
        raise StructuralError(f"Expected {DIM} amplitudes, got array of shape {array.shape}")
    return array.reshape(DIM)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitudes over the 192-label composite basis (immutable)."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = np.array(self.amplitudes, dtype=complex)
        if amplitudes.size != DIM:
            raise StructuralError(
                f"StateVector needs {DIM} amplitudes, got array of shape {amplitudes.shape}"
            )
        amplitudes = amplitudes.reshape(DIM)
        amplitudes.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)

    @classmethod
    def zeros(cls) -> "StateVector":
        return cls(np.zeros(DIM, dtype=complex))

    @property
    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to (atom1, atom2, gamma, phi) axes."""
        return self.amplitudes.reshape(SHAPE)

    def amplitude(self, label: Union[BasisLabel, Sequence[str]]) -> complex:
        """Amplitude of one basis label, given as a BasisLabel or four level names."""
        return complex(self.amplitudes[index_of(BasisLabel.of(*label))])

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tol: float = PHYSICS_TOL) -> bool:
        return abs(self.norm() ** 2 - 1.0) <= tol

    def normalized(self) -> "StateVector":
        norm = self.norm()
        if norm <= ALGEBRA_TOL:
            raise PreconditionError("Cannot normalize the zero vector")
        return StateVector(self.amplitudes / norm)

    def support(self, tol: float = ALGEBRA_TOL) -> List[BasisLabel]:
        return [BASIS[i] for i in np.flatnonzero(np.abs(self.amplitudes) > tol)]

    def __add__(self, other: "StateVector") -> "StateVector":
        return StateVector(self.amplitudes + _as_amplitudes(other))

    def __sub__(self, other: "StateVector") -> "StateVector":
        return StateVector(self.amplitudes - _as_amplitudes(other))

    def __neg__(self) -> "StateVector":
        return StateVector(-self.amplitudes)

    def __mul__(self, scalar: complex) -> "StateVector":
        return StateVector(self.amplitudes * complex(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar: complex) -> "StateVector":
        return StateVector(self.amplitudes / complex(scalar))

    def to_json(self) -> Dict[str, List[float]]:
        """Nonzero amplitudes as label -> [re, im], in basis order."""
        return {
            str(BASIS[i]): [float(self.amplitudes[i].real), float(self.amplitudes[i].imag)]
            for i in np.flatnonzero(self.amplitudes)
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    @classmethod
    def from_json(cls, data: Mapping[str, Sequence[float]]) -> "StateVector":
        amplitudes = np.zeros(DIM, dtype=complex)
        for text, (re, im) in data.items():
            amplitudes[index_of(BasisLabel.parse(text))] = complex(re, im)
        return cls(amplitudes)


def basis_state(atom1, atom2, gamma=GammaSector.NONE, phi=PhiSector.VAC) -> StateVector:
    amplitudes = np.zeros(DIM, dtype=complex)
    amplitudes[index_of(BasisLabel.of(atom1, atom2, gamma, phi))] = 1.0
    return StateVector(amplitudes)


def atom_pair_amplitudes(terms: Mapping[Tuple[str, str], complex]) -> np.ndarray:
    """4 x 4 atomic amplitude table from {(level1, level2): amplitude}."""
    levels = SECTOR_LABELS[Sector.ATOM1]
    table = np.zeros((len(levels), len(levels)), dtype=complex)
    for (level1, level2), amplitude in terms.items():
        table[levels.index(AtomLevel(level1)), levels.index(AtomLevel(level2))] += amplitude
    return table


def sector_vector(sector: Sector, terms: Mapping[str, complex]) -> np.ndarray:
    """Coordinate vector of a single sector from {label: amplitude}."""
    labels = SECTOR_LABELS[Sector(sector)]
    vector = np.zeros(len(labels), dtype=complex)
    for label, amplitude in terms.items():
        vector[labels.index(type(labels[0])(label))] += amplitude
    return vector


def tensor(atoms, gamma, phi) -> StateVector:
    """Product state atoms (x) gamma (x) phi from per-sector coordinate arrays."""
    atoms = np.asarray(atoms, dtype=complex)
    gamma = np.asarray(gamma, dtype=complex)
    phi = np.asarray(phi, dtype=complex)
    if atoms.shape != SHAPE[:2] or gamma.shape != SHAPE[2:3] or phi.shape != SHAPE[3:]:
        raise StructuralError(
            f"Sector shapes {atoms.shape}, {gamma.shape}, {phi.shape} do not match {SHAPE}"
        )
    return StateVector(np.einsum("ij,k,l->ijkl", atoms, gamma, phi))


def inner_product(u, v) -> complex:
    """
    <u|v> = sum(conj(u_i) * v_i).

    Summed from the real and imaginary parts so that swapping u and v gives
    the exact conjugate.
    """
    u, v = _as_amplitudes(u), _as_amplitudes(v)
    real = np.sum(u.real * v.real) + np.sum(u.imag * v.imag)
    imag = np.sum(u.real * v.imag) - np.sum(u.imag * v.real)
    return complex(float(real), float(imag))


def _resolve_sectors(keep: SectorSelector) -> Tuple[Sector, ...]:
    if isinstance(keep, str):
        if keep == "atoms":
            return ATOMS
        keep = (keep,)
    try:
        sectors = {Sector(item) for item in keep}
    except ValueError as e:
        raise StructuralError(f"Unknown sector selector {keep!r}") from e
    if not sectors:
        raise StructuralError("Sector selector is empty")
    return tuple(sector for sector in Sector if sector in sectors)


def marginal_distribution(s: StateVector, keep: SectorSelector) -> Dict[str, float]:
    """
    Probability table over the labels of the kept sector(s).

    Keys join the kept labels with '|' (for example "g1" or "c|c"); every
    label combination of the kept sectors is present, zeros included.
    """
    deviation = abs(s.norm() ** 2 - 1.0)
    if deviation > PHYSICS_TOL:
        raise PreconditionError(f"Marginal needs a normalized state (|norm^2 - 1| = {deviation:.3e})")
    sectors = _resolve_sectors(keep)
    dropped = tuple(SECTOR_AXES[sector] for sector in Sector if sector not in sectors)
    probabilities = np.sum(np.abs(s.tensor) ** 2, axis=dropped)
    labels = product(*(SECTOR_LABELS[sector] for sector in sectors))
    return {
        "|".join(label.value for label in combo): float(p)
        for combo, p in zip(labels, probabilities.reshape(-1))
    }


def reduced_density_matrix(s: StateVector, keep: SectorSelector) -> np.ndarray:
    """Partial trace of |s><s| over every sector not kept."""
    sectors = _resolve_sectors(keep)
    kept_axes = [SECTOR_AXES[sector] for sector in sectors]
    other_axes = [axis for axis in range(len(SHAPE)) if axis not in kept_axes]
    kept_dim = int(np.prod([SHAPE[axis] for axis in kept_axes]))
    matrix = np.transpose(s.tensor, kept_axes + other_axes).reshape(kept_dim, -1)
    rho = matrix @ matrix.conj().T
    rho.setflags(write=False)
    return rho


@dataclass(frozen=True, eq=False)
class LinearMapSpec:
    """
    Linear map given by the images of linearly independent input vectors.

    On basis vectors that no input touches the map is the identity. Applying
    it to amplitude that lies in neither the input span nor that identity
    complement is a DomainError.
    """

    input_vectors: Tuple[StateVector, ...]
    output_vectors: Tuple[StateVector, ...]
    label: str = "user"

    def __post_init__(self):
        inputs = tuple(self.input_vectors)
        outputs = tuple(self.output_vectors)
        if not inputs:
            raise StructuralError(f"Map '{self.label}' declares no input vectors")
        if len(inputs) != len(outputs):
            raise StructuralError(
                f"Map '{self.label}' has {len(inputs)} inputs but {len(outputs)} outputs"
            )
        object.__setattr__(self, "input_vectors", inputs)
        object.__setattr__(self, "output_vectors", outputs)

        a = np.column_stack([_as_amplitudes(v) for v in inputs])
        b = np.column_stack([_as_amplitudes(v) for v in outputs])
        gram_in = a.conj().T @ a
        eigenvalues = np.linalg.eigvalsh(gram_in)
        if eigenvalues[0] <= INDEPENDENCE_TOL * max(eigenvalues[-1], 1.0):
            raise StructuralError(
                f"Inputs of map '{self.label}' are linearly dependent "
                f"(smallest Gram eigenvalue {eigenvalues[0]:.3e})"
            )
        gram_inverse = np.linalg.inv(gram_in)
        passthrough = ~np.any(np.abs(a) > ALGEBRA_TOL, axis=1)
        matrix = b @ gram_inverse @ a.conj().T + np.diag(passthrough.astype(complex))

        derived = {
            "_inputs": a,
            "_outputs": b,
            "_gram_in": gram_in,
            "_gram_out": b.conj().T @ b,
            "_gram_inverse": gram_inverse,
            "_domain_projector": a @ gram_inverse @ a.conj().T,
            "_passthrough": passthrough,
            "_matrix": matrix,
        }
        for name, array in derived.items():
            array.setflags(write=False)
            object.__setattr__(self, name, array)
        logger.debug(f"Built map '{self.label}' on {len(inputs)} inputs")

    @classmethod
    def identity(cls, label: str = "identity") -> "LinearMapSpec":
        vectors = tuple(StateVector(row) for row in np.eye(DIM, dtype=complex))
        return cls(vectors, vectors, label)

    @property
    def size(self) -> int:
        return len(self.input_vectors)

    @property
    def gram_in(self) -> np.ndarray:
        return self._gram_in

    @property
    def gram_out(self) -> np.ndarray:
        return self._gram_out

    @property
    def matrix(self) -> np.ndarray:
        """Full DIM x DIM matrix: the declared map plus identity on the complement."""
        return self._matrix

    def coefficients(self, s: StateVector) -> np.ndarray:
        """Expansion coefficients of s over the input vectors."""
        return self._gram_inverse @ (self._inputs.conj().T @ _as_amplitudes(s))

    def domain_residual(self, s: StateVector) -> float:
        amplitudes = _as_amplitudes(s)
        inside = self._domain_projector @ amplitudes + np.where(self._passthrough, amplitudes, 0)
        return float(np.linalg.norm(amplitudes - inside))


def apply_map(m: LinearMapSpec, s: StateVector) -> StateVector:
    residual = m.domain_residual(s)
    if residual > DOMAIN_TOL:
        raise DomainError(
            f"State has amplitude {residual:.3e} outside the domain of map '{m.label}'"
        )
    return StateVector(m.matrix @ _as_amplitudes(s))


def chain_map(label: str, inputs: Iterable[StateVector], *maps: LinearMapSpec) -> LinearMapSpec:
    """Composite map: each input is pushed through `maps` in order."""
    inputs = tuple(inputs)
    outputs = []
    for vector in inputs:
        for m in maps:
            vector = apply_map(m, vector)
        outputs.append(vector)
    return LinearMapSpec(inputs, tuple(outputs), label)
