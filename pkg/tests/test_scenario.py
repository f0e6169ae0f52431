import math
from itertools import product

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.errors import ParameterError, PreconditionError, SequencingError
from src.experiment.config import ScenarioConfig
from src.experiment.scenario import (
    apply_pulse2,
    collective_emission_instantaneous,
    collective_emission_map,
    collective_emission_rate,
    dicke_decompose,
    dicke_recompose,
    gamma_emission_map,
    ingraham_emission,
    late_decay,
    late_decay_map,
    prepare_after_gamma,
    prepare_excited,
    prompt_emission_probability,
    psi_minus,
    psi_plus,
    pulse2_map,
    run_pipeline,
)
from src.quantum.modes import gamma_modes, phi_modes
from src.quantum.qcore import (
    GammaSector,
    apply_map,
    basis_state,
    inner_product,
    marginal_distribution,
    reduced_density_matrix,
)


class TestPreparation:
    def test_excited_state(self):
        s = prepare_excited()
        assert_allclose(s.amplitude(("a", "c", "none", "vac")), 1 / math.sqrt(2.0))
        assert_allclose(s.amplitude(("c", "a", "none", "vac")), 1 / math.sqrt(2.0))
        assert len(s.support()) == 2

    def test_after_gamma_with_orthogonal_modes(self):
        s = prepare_after_gamma(0.0)
        expected = (basis_state("b", "c", "g1") + basis_state("c", "b", "g2")) / math.sqrt(2.0)
        assert_allclose(s.amplitudes, expected.amplitudes, atol=1e-15)

    def test_after_gamma_is_normalized_for_overlapping_modes(self):
        for s_gamma in (0.1, 0.3, -0.2):
            assert prepare_after_gamma(s_gamma).is_normalized(1e-12)

    def test_after_gamma_out_of_range(self):
        with pytest.raises(ParameterError):
            prepare_after_gamma(1.2)


class TestPulse2:
    def test_lifts_b_to_bp(self):
        s = apply_pulse2(prepare_after_gamma(0.0))
        expected = (basis_state("bp", "c", "g1") + basis_state("c", "bp", "g2")) / math.sqrt(2.0)
        assert_allclose(s.amplitudes, expected.amplitudes, atol=1e-15)

    def test_is_an_involution(self, random_state):
        for _ in range(10):
            s = random_state()
            assert_allclose(apply_pulse2(apply_pulse2(s)).amplitudes, s.amplitudes, atol=1e-14)

    def test_leaves_states_without_b_unchanged(self):
        s = (basis_state("a", "c", "none") + basis_state("c", "c", "g1", "bright")) / math.sqrt(2.0)
        assert_allclose(apply_pulse2(s).amplitudes, s.amplitudes)

    def test_is_unitary(self):
        matrix = pulse2_map().matrix
        assert_allclose(matrix.conj().T @ matrix, np.eye(matrix.shape[0]), atol=1e-14)

    def test_needs_normalized_input(self):
        with pytest.raises(PreconditionError):
            apply_pulse2(2 * basis_state("b", "c", "g1"))


class TestCollectiveEmission:
    def test_symmetric_state_emits_bright(self, excited_input):
        out = collective_emission_instantaneous(excited_input, 1.0)
        expected = (basis_state("c", "c", "g1", "bright") + basis_state("c", "c", "g2", "bright")) / 2.0
        expected = expected + (psi_minus("g1") - psi_minus("g2")) / 2.0
        assert_allclose(out.amplitudes, expected.amplitudes, atol=1e-15)

    def test_dicke_half_instantaneous(self, excited_input):
        out = collective_emission_instantaneous(excited_input, 1.0)
        assert abs(prompt_emission_probability(out) - 0.5) <= 1e-12

    def test_dicke_half_rate_regime(self, excited_input):
        out = collective_emission_rate(excited_input, 1.0, 50.0)
        assert abs(prompt_emission_probability(out) - 0.5) <= 1e-6

    @pytest.mark.parametrize("s_phi, gamma_t", list(product([0.0, 0.3, 0.6, 0.9, 1.0], [0.1, 0.5, 1.5, 4.0])))
    def test_rate_regime_matches_closed_form(self, excited_input, s_phi, gamma_t):
        out = collective_emission_rate(excited_input, s_phi, gamma_t)
        expected = -0.5 * math.expm1(-(1 + s_phi) * gamma_t) - 0.5 * math.expm1(-(1 - s_phi) * gamma_t)
        assert_allclose(prompt_emission_probability(out), expected, rtol=1e-12, atol=1e-15)

    @pytest.mark.parametrize("s_phi, gamma_t", [(1.0, None), (0.5, None), (0.5, 1.0), (0.0, 3.0), (-0.4, 0.7)])
    def test_map_is_unitary(self, s_phi, gamma_t):
        matrix = collective_emission_map(s_phi, gamma_t).matrix
        assert_allclose(matrix.conj().T @ matrix, np.eye(matrix.shape[0]), atol=1e-12)

    def test_emitted_photon_is_not_overwritten(self):
        bright = basis_state("c", "c", "g1", "bright")
        s = (psi_plus("g1") + bright) / math.sqrt(2.0)
        assert collective_emission_instantaneous(s, 1.0).is_normalized(1e-12)
        dark = basis_state("c", "c", "g1", "dark")
        s = (psi_minus("g1") + dark) / math.sqrt(2.0)
        assert collective_emission_rate(s, 0.5, 1.0).is_normalized(1e-12)

    def test_rate_regime_tends_to_instantaneous(self, excited_input):
        slow = collective_emission_rate(excited_input, 0.6, 200.0)
        fast = collective_emission_instantaneous(excited_input, 0.6)
        assert_allclose(slow.amplitudes, fast.amplitudes, atol=1e-12)

    def test_zero_time_is_identity(self, excited_input):
        out = collective_emission_rate(excited_input, 0.6, 0.0)
        assert_allclose(out.amplitudes, excited_input.amplitudes, atol=1e-15)

    def test_preserves_norm(self, rng):
        for _ in range(20):
            plus, minus = rng.normal(size=2) + 1j * rng.normal(size=2)
            s = (psi_plus("g2") * plus + psi_minus("g1") * minus).normalized()
            assert collective_emission_instantaneous(s, 0.8).is_normalized(1e-12)
            for gamma_t in (0.3, 4.0):
                assert collective_emission_rate(s, 0.8, gamma_t).is_normalized(1e-12)

    def test_map_label_tracks_regime(self):
        assert collective_emission_map(0.8).label == "correct"
        assert collective_emission_map(0.8, 1.0).label == "correct-rate"

    def test_rejects_atoms_in_b(self):
        with pytest.raises(SequencingError):
            collective_emission_instantaneous(prepare_after_gamma(0.0), 1.0)

    def test_rejects_atoms_in_a(self):
        with pytest.raises(SequencingError):
            collective_emission_instantaneous(prepare_excited(), 1.0)

    def test_rejects_unnormalized_input(self, excited_input):
        with pytest.raises(PreconditionError):
            collective_emission_instantaneous(2 * excited_input, 1.0)

    def test_rejects_overlap_out_of_range(self, excited_input):
        with pytest.raises(ParameterError):
            collective_emission_instantaneous(excited_input, 1.1)

    def test_untouched_labels_pass_through(self):
        s = (basis_state("bp", "bp", "g1") + basis_state("c", "c")) / math.sqrt(2.0)
        assert_allclose(collective_emission_instantaneous(s, 0.5).amplitudes, s.amplitudes)


class TestNormPreservation:
    MAPS = [
        lambda: gamma_emission_map(0.0),
        lambda: gamma_emission_map(0.2),
        pulse2_map,
        lambda: collective_emission_map(1.0),
        lambda: collective_emission_map(0.5),
        lambda: collective_emission_map(0.5, 1.0),
        lambda: late_decay_map(1.0),
        lambda: late_decay_map(0.3, 2.0),
    ]

    @pytest.mark.parametrize("build", MAPS)
    def test_random_domain_states_keep_their_norm(self, build, random_state):
        m = build()
        for _ in range(1000):
            assert apply_map(m, random_state()).is_normalized(1e-12)

    def test_gamma_emission_is_unitary(self):
        matrix = gamma_emission_map(0.25).matrix
        assert_allclose(matrix.conj().T @ matrix, np.eye(matrix.shape[0]), atol=1e-12)

    def test_gamma_emission_uses_the_gamma_modes(self):
        modes = gamma_modes(0.25)
        after = prepare_after_gamma(0.25)
        for atoms, name in ((("b", "c"), "gamma1"), (("c", "b"), "gamma2")):
            coordinates = [after.amplitude((*atoms, gamma, "vac")) for gamma in ("g1", "g2")]
            assert_allclose(coordinates, modes.mode_vector(name) / math.sqrt(2.0), atol=1e-15)


class TestDicke:
    def test_decompose_recompose(self, excited_input):
        parts = dicke_decompose(excited_input)
        assert_allclose(parts[GammaSector.G1].plus_amplitude, 0.5)
        assert_allclose(parts[GammaSector.G2].minus_amplitude, -0.5)
        assert_allclose(sum(part.weight for part in parts.values()), 1.0)
        assert_allclose(dicke_recompose(parts).amplitudes, excited_input.amplitudes, atol=1e-15)


class TestLateDecay:
    def test_metastable_dark_state_emits_late(self, excited_input):
        after = late_decay(collective_emission_instantaneous(excited_input, 1.0), 1.0)
        phi = marginal_distribution(after, "phi")
        assert phi == pytest.approx({"vac": 0.0, "bright": 0.5, "dark": 0.0, "late": 0.5}, abs=1e-12)
        atoms = marginal_distribution(after, "atoms")
        assert atoms["c|c"] == pytest.approx(1.0, abs=1e-12)

    def test_late_photon_environment_is_orthogonal_to_prompt(self, excited_input):
        after = late_decay(collective_emission_instantaneous(excited_input, 1.0), 1.0)
        for gamma in ("g1", "g2"):
            late = after.amplitude(("c", "c", gamma, "late"))
            bright = after.amplitude(("c", "c", gamma, "bright"))
            assert abs(late) > 0.1 and abs(bright) > 0.1
        rho_phi = reduced_density_matrix(after, "phi")
        assert abs(rho_phi[1, 3]) <= 1e-12

    def test_identity_after_full_emission(self, excited_input):
        s = collective_emission_instantaneous(excited_input, 0.5)
        assert_allclose(late_decay(s, 0.5).amplitudes, s.amplitudes, atol=1e-15)

    def test_finishes_rate_regime_emission(self, excited_input):
        partial = collective_emission_rate(excited_input, 0.5, 0.8)
        finished = late_decay(partial, 0.5, 0.8)
        assert_allclose(
            finished.amplitudes, collective_emission_instantaneous(excited_input, 0.5).amplitudes, atol=1e-12
        )

    def test_preserves_norm(self, random_state):
        for s_phi, gamma_t in ((1.0, None), (0.3, 2.0), (1.0, 0.5)):
            s = random_state()
            assert late_decay(s, s_phi, gamma_t).is_normalized(1e-12)


class TestIngraham:
    def test_parallel_modes_double_the_norm(self):
        out = ingraham_emission(psi_plus("g1"), 1.0)
        assert_allclose(out.norm() ** 2, 2.0, atol=1e-12)

    def test_orthogonal_modes_preserve_the_norm(self):
        out = ingraham_emission(psi_plus("g1"), 0.0)
        assert_allclose(out.norm() ** 2, 1.0, atol=1e-12)

    def test_each_atom_emits_its_own_phi_mode(self):
        out = ingraham_emission(basis_state("bp", "c", "g2"), 0.4)
        phi1 = phi_modes(0.4).mode_vector("phi1")
        coordinates = [out.amplitude(("c", "c", "g2", axis)) for axis in ("bright", "dark")]
        assert_allclose(coordinates, phi1, atol=1e-15)


class TestPipeline:
    def test_stages_with_pulse(self, headline_cfg):
        run = run_pipeline(headline_cfg)
        assert run.stages == ("prepare_after_gamma", "pulse2", "collective_emission_instantaneous", "late_decay")
        assert not run.fixture
        assert run.state.is_normalized(1e-12)

    def test_stages_without_pulse(self):
        run = run_pipeline(ScenarioConfig(alice_pulse=False))
        assert run.stages == ("prepare_after_gamma",)
        assert_allclose(run.state.amplitudes, prepare_after_gamma(0.0).amplitudes, atol=1e-15)

    def test_rate_regime(self):
        run = run_pipeline(ScenarioConfig(regime="rate", gamma_t=2.0, include_late_decay=False))
        assert run.stages[-1] == "collective_emission_rate"

    def test_ingraham_run_is_a_fixture(self):
        run = run_pipeline(ScenarioConfig(evolution="ingraham", s_phi_override=1.0))
        assert run.fixture
        assert "late_decay" not in run.stages

    def test_gamma_marginal_is_untouched_by_the_choice(self):
        for pulse in (True, False):
            run = run_pipeline(ScenarioConfig(alice_pulse=pulse, s_phi_override=0.7))
            gamma = marginal_distribution(run.state, "gamma")
            assert gamma == pytest.approx({"none": 0.0, "g1": 0.5, "g2": 0.5}, abs=1e-12)

    def test_inner_product_with_dicke_states(self, headline_cfg):
        state = run_pipeline(headline_cfg).state
        assert abs(inner_product(psi_plus("g1"), state)) < 1e-15
