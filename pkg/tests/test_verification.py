"""End-to-end agreement between the explicit oracle and the occupation-basis path."""

from __future__ import annotations

import math

import numpy as np
import pytest

from idemrdm.algebra import GradedVector, SingleParticleSpace, Statistics
from idemrdm.density import Bipartition, Mixture, Side, dephase_particle_number
from idemrdm.entanglement import (
    gns_restriction_check,
    reduced_density_matrix,
    ssr_project,
    von_neumann_entropy,
)
from idemrdm.oracle import LabeledEnsemble, PhaseAssignment, partial_trace_explicit
from idemrdm.verification import (
    EquivalenceResult,
    amplitude_correspondence,
    compare_formalisms,
    random_bipartition,
    random_graded_vector,
    random_hermitian,
    random_instance,
    random_mixture,
    run_equivalence_suite,
    verify_state,
)

FERMION = Statistics.FERMION
BOSON = Statistics.BOSON
INV_SQRT2 = 1 / math.sqrt(2)
HALVES_8 = Bipartition(frozenset(range(4)), frozenset(range(4, 8)))


def _three_fermion_state() -> GradedVector:
    return GradedVector.from_terms(
        FERMION, SingleParticleSpace(8), [([0, 1, 4], INV_SQRT2), ([0, 2, 5], INV_SQRT2)]
    )


# ===========================================================================
# Random instance generators
# ===========================================================================


class TestGenerators:
    """Tests for the random instance helpers."""

    def test_graded_vector_is_normalized(self):
        v = random_graded_vector(np.random.default_rng(0), BOSON, SingleParticleSpace(4), 3)
        assert v.norm == pytest.approx(1.0)
        assert v.grades == frozenset({3})

    def test_graded_vector_needs_states(self):
        with pytest.raises(ValueError, match="no fermion states"):
            random_graded_vector(np.random.default_rng(0), FERMION, SingleParticleSpace(2), 3)

    def test_mixture_weights(self):
        mixture = random_mixture(np.random.default_rng(1), FERMION, SingleParticleSpace(4), 2, 3)
        weights = [w for w, _ in mixture.components]
        assert sum(weights) == pytest.approx(1.0)
        assert min(weights) > 0.0

    def test_bipartition_has_two_regions(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            bipartition = random_bipartition(rng, 5)
            assert bipartition.left and bipartition.right
            assert bipartition.left | bipartition.right == frozenset(range(5))

    def test_hermitian(self):
        h = random_hermitian(np.random.default_rng(3), 4)
        assert np.allclose(h, h.conj().T)

    def test_instance_is_reproducible(self):
        first, _, _ = random_instance(9, 6)
        second, _, _ = random_instance(9, 6)
        assert isinstance(first, Mixture)
        assert all(
            dict(a.terms) == dict(b.terms)
            for (_, a), (_, b) in zip(first.components, second.components)
        )

    def test_instances_alternate_statistics(self):
        assert random_instance(0, 0)[0].statistics is BOSON
        assert random_instance(0, 1)[0].statistics is FERMION


# ===========================================================================
# Golden example
# ===========================================================================


class TestThreeFermionState:
    """The three-fermion state with one particle traced away."""

    def test_both_paths_give_one_bit(self):
        state = _three_fermion_state()
        sea = reduced_density_matrix(state, HALVES_8, Side.RIGHT)
        explicit = partial_trace_explicit(LabeledEnsemble.from_state(state), HALVES_8)
        for rho in (sea, explicit):
            assert np.allclose(rho.eigenvalues(), [0.5, 0.5], atol=1e-12)
            assert abs(von_neumann_entropy(rho) - 1.0) <= 1e-9

    def test_phase_trials(self):
        report = verify_state(_three_fermion_state(), HALVES_8, phase_trials=5, seed=7)
        assert report.passed
        assert report.instances == 6
        assert report.max_residual <= 1e-10


class TestMixedParticleNumbers:
    """States whose components carry different particle numbers."""

    def test_mixture_of_two_and_one_fermions(self):
        space = SingleParticleSpace(4)
        state = Mixture((
            (0.5, GradedVector.from_terms(FERMION, space, [([0, 2], 1.0)])),
            (0.5, GradedVector.from_terms(FERMION, space, [([1], 1.0)])),
        ))
        report = verify_state(state, Bipartition.contiguous(4, 2), phase_trials=3, seed=0)
        assert report.passed, report.to_dict()
        assert report.instances == 4

    def test_superposition_across_particle_numbers(self):
        space = SingleParticleSpace(4)
        state = GradedVector.from_terms(FERMION, space, [([0], 0.6), ([0, 1, 2], 0.8)])
        result = compare_formalisms(state, Bipartition.contiguous(4, 2))
        assert result.passed()
        assert result.entropy_gap == 0.0

    def test_boson_sectors_match_ssr_projection(self):
        space = SingleParticleSpace(3)
        state = GradedVector.from_terms(BOSON, space, [([0], 0.6), ([0, 0], 0.8)])
        bipartition = Bipartition.contiguous(3, 1)
        dephased = reduced_density_matrix(dephase_particle_number(state), bipartition)
        projected = ssr_project(reduced_density_matrix(state, bipartition))
        assert np.allclose(dephased.aligned(projected.basis), projected.matrix)
        assert np.allclose(projected.matrix, np.diag([0.36, 0.64]))
        assert compare_formalisms(state, bipartition).passed()

    def test_phase_assignment_must_fit_a_sector(self):
        state = GradedVector.from_terms(FERMION, SingleParticleSpace(4), [([0, 1], 1.0)])
        with pytest.raises(ValueError, match="phase assignment covers 3 slots"):
            compare_formalisms(state, Bipartition.contiguous(4, 2), PhaseAssignment.zeros(3))


class TestAmplitudeCorrespondence:
    """Tests for amplitude_correspondence() and its use in verify_state()."""

    @pytest.mark.parametrize("statistics", [BOSON, FERMION])
    def test_random_orbitals_agree(self, statistics):
        result = amplitude_correspondence(
            np.random.default_rng(6), statistics, SingleParticleSpace(8), 3
        )
        assert result.passed
        assert result.comparisons == 5

    def test_verify_state_reports_amplitude_residual(self):
        report = verify_state(_three_fermion_state(), HALVES_8, phase_trials=1, seed=2)
        assert report.to_dict()["max_amplitude_residual"] == report.max_amplitude_residual
        assert report.max_amplitude_residual <= 1e-10
        assert report.passed


# ===========================================================================
# Randomized equivalence
# ===========================================================================


class TestEquivalence:
    """Tests for compare_formalisms() and run_equivalence_suite()."""

    def test_result_thresholds(self):
        assert EquivalenceResult(1e-12, 1e-12, 5e-10).passed(1e-10)
        assert not EquivalenceResult(1e-9, 0.0, 0.0).passed(1e-10)

    def test_mixture_entropy_gap_is_zero(self):
        rng = np.random.default_rng(4)
        mixture = random_mixture(rng, BOSON, SingleParticleSpace(4), 2)
        result = compare_formalisms(mixture, Bipartition.contiguous(4, 2))
        assert result.entropy_gap == 0.0
        assert result.passed()

    def test_phased_fermions(self):
        rng = np.random.default_rng(5)
        state = random_graded_vector(rng, FERMION, SingleParticleSpace(6), 3)
        result = compare_formalisms(state, Bipartition.contiguous(6, 2), PhaseAssignment.random(3, rng))
        assert result.passed()

    def test_small_suite(self):
        report = run_equivalence_suite(60, seed=1)
        assert report.passed, report.to_dict()
        assert report.instances == 60

    def test_suite_is_worker_independent(self):
        single = run_equivalence_suite(8, seed=3)
        threaded = run_equivalence_suite(8, seed=3, workers=4)
        assert single.to_dict() == threaded.to_dict()

    @pytest.mark.parametrize(
        "kwargs,match",
        [
            ({"instances": 0}, "instances"),
            ({"instances": 1, "max_particles": 0}, "max_particles"),
            ({"instances": 1, "max_dim": 1}, "max_dim"),
        ],
    )
    def test_invalid_arguments(self, kwargs, match):
        with pytest.raises(ValueError, match=match):
            run_equivalence_suite(seed=0, **kwargs)

    @pytest.mark.slow
    def test_five_hundred_random_instances(self):
        report = run_equivalence_suite(500, seed=2024)
        assert report.passed, report.to_dict()
        assert report.max_residual <= 1e-10

    @pytest.mark.slow
    def test_restriction_holds_over_instance_set(self):
        for index in range(500):
            state, bipartition, _ = random_instance(2024, index)
            report = gns_restriction_check(state, bipartition, trials=20, seed=index)
            assert report.passed, (index, report.residuals())
