import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.errors import ParameterError, StructuralError
from src.quantum.modes import (
    COLLECTIVE,
    LOWDIN,
    ModeDictionary,
    OverlapKind,
    OverlapModel,
    bright_dark_coefficients,
    collective_embedding,
    embed,
    gamma_modes,
    overlap_isotropic,
    phi_modes,
)


class TestOverlapKernel:
    def test_coincident_emitters(self):
        assert overlap_isotropic(1.0, 0.0) == 1.0

    def test_first_zero_at_half_wavelength(self):
        assert abs(overlap_isotropic(0.5, 0.25)) < 1e-15
        assert abs(overlap_isotropic(0.5, 1.0)) < 1e-15

    def test_matches_sin_kd_over_kd(self):
        for wavelength, separation in [(0.5, 0.3), (2.0, 1.7), (1000.0, 1.0)]:
            kd = 2.0 * math.pi * separation / wavelength
            assert_allclose(overlap_isotropic(wavelength, separation), math.sin(kd) / kd, rtol=1e-13)

    def test_far_apart_sources_are_nearly_orthogonal(self):
        for separation in np.linspace(6.5, 50.0, 200):
            assert abs(overlap_isotropic(1.0, separation)) <= 0.05

    def test_long_wavelength_is_nearly_parallel(self):
        assert overlap_isotropic(1000.0, 1.0) > 0.9999

    def test_rejects_bad_inputs(self):
        with pytest.raises(ParameterError):
            overlap_isotropic(0.0, 1.0)
        with pytest.raises(ParameterError):
            overlap_isotropic(1.0, -1.0)


class TestOverlapModel:
    def test_fixed_value(self):
        assert OverlapModel.fixed(0.25).overlap(1.0, 1.0) == 0.25

    def test_isotropic_by_default(self):
        model = OverlapModel()
        assert model.kind is OverlapKind.ISOTROPIC_POINT_SOURCE
        assert model.overlap(0.5, 0.25) == overlap_isotropic(0.5, 0.25)

    def test_fixed_value_out_of_range(self):
        with pytest.raises(ParameterError):
            OverlapModel.fixed(1.5)


class TestEmbedding:
    @pytest.mark.parametrize("s", [0.0, 0.05, 0.3, 0.5, 0.9, 1.0, -0.4])
    @pytest.mark.parametrize("axes", [LOWDIN, COLLECTIVE])
    def test_reproduces_gram(self, s, axes):
        gram = np.array([[1.0, s], [s, 1.0]])
        matrix = embed(gram, axes).matrix
        assert_allclose(matrix.conj().T @ matrix, gram, atol=1e-12)

    def test_orthogonal_modes_embed_as_identity(self):
        assert_allclose(embed(np.eye(2)).matrix, np.eye(2), atol=1e-15)

    def test_lowdin_is_symmetric(self):
        matrix = embed(np.array([[1.0, 0.6], [0.6, 1.0]])).matrix
        assert_allclose(matrix, matrix.T)
        assert_allclose(matrix[0, 0], (math.sqrt(1.6) + math.sqrt(0.4)) / 2.0)

    def test_parallel_modes_are_rank_deficient(self):
        result = embed(np.ones((2, 2)))
        assert result.rank_deficient
        assert_allclose(result.matrix[:, 0], result.matrix[:, 1], atol=1e-15)

    def test_collective_axes_put_sum_on_bright(self):
        s = 0.3
        phi1, phi2 = collective_embedding(s).T
        assert_allclose(phi1 + phi2, [math.sqrt(2.0 * (1.0 + s)), 0.0], atol=1e-15)
        assert_allclose(phi1 - phi2, [0.0, math.sqrt(2.0 * (1.0 - s))], atol=1e-15)

    def test_general_gram_matrix(self):
        gram = np.array([[1.0, 0.2, 0.1j], [0.2, 1.0, 0.3], [-0.1j, 0.3, 1.0]])
        matrix = embed(gram).matrix
        assert_allclose(matrix.conj().T @ matrix, gram, atol=1e-12)

    def test_not_positive_semidefinite(self):
        with pytest.raises(ParameterError):
            embed(np.array([[1.0, 0.9, 0.9], [0.9, 1.0, -0.9], [0.9, -0.9, 1.0]]))

    def test_not_hermitian(self):
        with pytest.raises(ParameterError):
            embed(np.array([[1.0, 0.2], [0.3, 1.0]]))

    def test_collective_needs_two_modes(self):
        with pytest.raises(StructuralError):
            embed(np.eye(3), COLLECTIVE)


class TestBrightDark:
    def test_norms(self):
        plus, minus = bright_dark_coefficients(1.0)
        assert plus == 2.0
        assert minus == 0.0
        assert_allclose(bright_dark_coefficients(0.5), (math.sqrt(3.0), 1.0), atol=1e-15)
        assert_allclose(bright_dark_coefficients(0.0), (math.sqrt(2.0), math.sqrt(2.0)), atol=1e-15)

    def test_outside_range(self):
        with pytest.raises(ParameterError):
            bright_dark_coefficients(-0.1)


class TestModeDictionary:
    def test_overlap_round_trip(self):
        modes = ModeDictionary.from_overlap(("phi1", "phi2"), 0.7, ("bright", "dark"), COLLECTIVE)
        assert_allclose(modes.overlap("phi1", "phi2"), 0.7, atol=1e-15)
        assert_allclose(modes.overlap("phi1", "phi1"), 1.0, atol=1e-15)

    def test_unknown_mode(self):
        modes = ModeDictionary.from_overlap(("g1", "g2"), 0.0, ("g1", "g2"))
        with pytest.raises(StructuralError):
            modes.mode_vector("g3")

    def test_inconsistent_embedding(self):
        with pytest.raises(StructuralError):
            ModeDictionary(("x", "y"), np.eye(2), np.ones((2, 2)), ("u", "v"))


class TestKernelProperties:
    def test_bounded_by_one(self, rng):
        wavelengths = rng.uniform(0.01, 100.0, size=10_000)
        separations = rng.uniform(0.001, 100.0, size=10_000)
        for wavelength, separation in zip(wavelengths, separations):
            assert abs(overlap_isotropic(wavelength, separation)) < 1.0

    @pytest.mark.parametrize("wavelength", [0.5, 1.0, 1000.0])
    def test_decreasing_below_half_wavelength(self, wavelength):
        separations = np.linspace(0.0, wavelength / 2.0, 2001)
        values = [overlap_isotropic(wavelength, d) for d in separations]
        assert np.all(np.diff(values) < 0)


class TestGramValidation:
    def test_dictionary_rejects_non_hermitian_gram(self):
        with pytest.raises(ParameterError):
            ModeDictionary(("x", "y"), np.array([[1.0, 0.2], [0.3, 1.0]]), np.eye(2), ("u", "v"))

    def test_dictionary_rejects_non_unit_diagonal(self):
        gram = np.diag([2.0, 1.0])
        with pytest.raises(ParameterError):
            ModeDictionary(("x", "y"), gram, np.diag([math.sqrt(2.0), 1.0]), ("u", "v"))

    def test_dictionary_rejects_indefinite_gram(self):
        gram = np.array([[1.0, 0.9, 0.9], [0.9, 1.0, -0.9], [0.9, -0.9, 1.0]])
        with pytest.raises(ParameterError):
            ModeDictionary(("x", "y", "z"), gram, np.eye(3), ("u", "v", "w"))


class TestSectorModes:
    def test_orthogonal_gamma_modes_are_the_axes(self):
        modes = gamma_modes(0.0)
        assert modes.axes == ("g1", "g2")
        assert_allclose(modes.embedding, np.eye(2), atol=1e-15)

    def test_parallel_phi_modes_share_the_bright_axis(self):
        modes = phi_modes(1.0)
        assert modes.axes == ("bright", "dark")
        assert modes.rank_deficient
        assert_allclose(modes.mode_vector("phi1"), [1.0, 0.0], atol=1e-15)
        assert_allclose(modes.mode_vector("phi2"), [1.0, 0.0], atol=1e-15)

    @pytest.mark.parametrize("s", [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0])
    def test_phi_overlap_round_trip(self, s):
        assert_allclose(phi_modes(s).overlap("phi1", "phi2"), s, atol=1e-12)
        assert_allclose(gamma_modes(min(s, 0.9)).overlap("gamma1", "gamma2"), min(s, 0.9), atol=1e-12)

    def test_negative_overlap_swaps_bright_and_dark_norms(self):
        assert_allclose(collective_embedding(-0.5)[:, 0], [0.5, math.sqrt(3.0) / 2.0], atol=1e-15)
