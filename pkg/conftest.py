import math

import numpy as np
import pytest

from src.experiment.config import ScenarioConfig
from src.quantum.qcore import DIM, StateVector, basis_state


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def headline_cfg():
    """s_gamma = 0 from the kernel, s_phi forced to exactly 1."""
    return ScenarioConfig(s_phi_override=1.0)


@pytest.fixture
def excited_input():
    """(|b'1 c2>|g1> + |c1 b'2>|g2>)/sqrt(2), the state right after the second pulse."""
    return (basis_state("bp", "c", "g1") + basis_state("c", "bp", "g2")) / math.sqrt(2.0)


@pytest.fixture
def random_state(rng):
    def make(indices=None):
        amplitudes = np.zeros(DIM, dtype=complex)
        slots = np.arange(DIM) if indices is None else np.asarray(indices)
        amplitudes[slots] = rng.normal(size=len(slots)) + 1j * rng.normal(size=len(slots))
        return StateVector(amplitudes).normalized()
    return make
