"""Randomized cross-checks between the explicit oracle and the SEA path.

Instances are drawn from ``numpy.random.default_rng([seed, index])`` so a
suite run is reproducible and independent of the worker count.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from idemrdm.algebra import (
    GradedVector,
    Orbital,
    SingleParticleSpace,
    Statistics,
    enumerate_occupations,
)
from idemrdm.density import (
    Bipartition,
    Mixture,
    Side,
    dephase_particle_number,
    max_entry_difference,
    spectrum_difference,
)
from idemrdm.entanglement import reduced_density_matrix, von_neumann_entropy
from idemrdm.oracle import (
    CORRESPONDENCE_MAX_PARTICLES,
    CorrespondenceResult,
    PhaseAssignment,
    partial_trace_sectors,
    sea_correspondence,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_PARTICLES = 4
DEFAULT_MAX_DIM = 8
DEFAULT_MAX_TERMS = 6
DEFAULT_TOLERANCE = 1e-10
DEFAULT_CORRESPONDENCE_BRAS = 4


# ==========================================================================
# Random instances
# ==========================================================================


def random_orbitals(rng: np.random.Generator, dim: int, count: int) -> list[Orbital]:
    return [
        Orbital(rng.normal(size=dim) + 1j * rng.normal(size=dim)) for _ in range(count)
    ]


def random_graded_vector(
    rng: np.random.Generator,
    statistics: Statistics,
    space: SingleParticleSpace,
    n_particles: int,
    max_terms: int = DEFAULT_MAX_TERMS,
) -> GradedVector:
    """Normalized random superposition of a few grade-N occupation states."""
    states = enumerate_occupations(space.orbital_ids(), n_particles, statistics)
    if not states:
        raise ValueError(
            f"no {statistics.value} states with {n_particles} particles in {space.dim} orbitals"
        )
    count = int(rng.integers(1, min(max_terms, len(states)) + 1))
    chosen = rng.choice(len(states), size=count, replace=False)
    amplitudes = rng.normal(size=count) + 1j * rng.normal(size=count)
    terms = {states[i]: a for i, a in zip(chosen, amplitudes)}
    return GradedVector(statistics, space, terms).normalized()


def random_mixture(
    rng: np.random.Generator,
    statistics: Statistics,
    space: SingleParticleSpace,
    n_particles: int,
    components: int = 2,
) -> Mixture:
    weights = rng.dirichlet(np.ones(components))
    # Floor the weights so none is numerically zero.
    weights = (weights + 0.05) / (1.0 + 0.05 * components)
    return Mixture(
        tuple(
            (float(w), random_graded_vector(rng, statistics, space, n_particles))
            for w in weights
        )
    )


def random_bipartition(rng: np.random.Generator, dim: int) -> Bipartition:
    """Random split with both regions non-empty whenever dim ≥ 2."""
    order = rng.permutation(dim)
    left_size = int(rng.integers(1, dim)) if dim >= 2 else 1
    return Bipartition(frozenset(order[:left_size].tolist()), frozenset(order[left_size:].tolist()))


def random_hermitian(rng: np.random.Generator, n: int) -> np.ndarray:
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (x + x.conj().T) / 2.0


# ==========================================================================
# Comparisons
# ==========================================================================


@dataclass(frozen=True)
class EquivalenceResult:
    """Agreement between the SEA and explicit partial traces for one state.

    Attributes:
        residual: Largest entrywise difference over both traced regions.
        spectrum_residual: Largest spectral deviation of a phased explicit
            trace from the zero-phase one.
        entropy_gap: |S(ρ_L) − S(ρ_R)| for pure states, 0 for mixtures.
    """

    residual: float
    spectrum_residual: float
    entropy_gap: float

    def passed(self, tolerance: float = DEFAULT_TOLERANCE) -> bool:
        return (
            self.residual <= tolerance
            and self.spectrum_residual <= tolerance
            and self.entropy_gap <= max(tolerance, 1e-9)
        )


def compare_formalisms(
    state: GradedVector | Mixture,
    bipartition: Bipartition,
    phases: PhaseAssignment | Mapping[int, PhaseAssignment] | None = None,
) -> EquivalenceResult:
    """Trace each region both ways and compare entries and spectra.

    A state mixing particle numbers is dephased into fixed-N sectors
    before either trace. ``phases`` is one assignment, used for the sector
    with its particle number, or a mapping N → assignment.
    """
    dephased = dephase_particle_number(state)
    sector_sizes = dephased.grades
    if isinstance(phases, PhaseAssignment):
        if phases.n_particles not in sector_sizes:
            raise ValueError(
                f"phase assignment covers {phases.n_particles} slots, state has particle "
                f"numbers {sorted(sector_sizes)}"
            )
        phases = {phases.n_particles: phases}
    residual = 0.0
    spectrum_residual = 0.0
    entropies: dict[Side, float] = {}
    for traced in (Side.RIGHT, Side.LEFT):
        sea = reduced_density_matrix(dephased, bipartition, traced)
        unphased = partial_trace_sectors(dephased, bipartition, None, traced)
        phased = partial_trace_sectors(dephased, bipartition, phases, traced)
        residual = max(
            residual, max_entry_difference(sea, unphased), max_entry_difference(sea, phased)
        )
        spectrum_residual = max(spectrum_residual, spectrum_difference(phased, unphased))
        entropies[traced.other] = von_neumann_entropy(sea)
    pure = len(dephased.components) == 1
    gap = abs(entropies[Side.LEFT] - entropies[Side.RIGHT]) if pure else 0.0
    return EquivalenceResult(residual, spectrum_residual, gap)


@dataclass(frozen=True)
class EquivalenceReport:
    """Summary of an equivalence run.

    Attributes:
        instances: Number of (state, bipartition, phases) cases checked.
        max_residual: Largest entrywise disagreement.
        max_spectrum_residual: Largest phase-induced spectral change.
        max_entropy_gap: Largest |S(ρ_L) − S(ρ_R)| over pure cases.
        max_amplitude_residual: Largest tensor vs Fock vs per/det amplitude
            disagreement, when amplitude checks were run.
        failures: Indices of failing cases.
        passed: No failures.
    """

    instances: int
    max_residual: float
    max_spectrum_residual: float
    max_entropy_gap: float
    failures: tuple[int, ...] = field(default_factory=tuple)
    max_amplitude_residual: float = 0.0
    passed: bool = True

    def to_dict(self) -> dict[str, Any]:
        return {
            "instances": self.instances,
            "max_residual": self.max_residual,
            "max_spectrum_residual": self.max_spectrum_residual,
            "max_entropy_gap": self.max_entropy_gap,
            "max_amplitude_residual": self.max_amplitude_residual,
            "failures": list(self.failures),
            "pass": self.passed,
        }


def _summarize(results: list[EquivalenceResult], tolerance: float) -> EquivalenceReport:
    failures = tuple(i for i, r in enumerate(results) if not r.passed(tolerance))
    return EquivalenceReport(
        instances=len(results),
        max_residual=max((r.residual for r in results), default=0.0),
        max_spectrum_residual=max((r.spectrum_residual for r in results), default=0.0),
        max_entropy_gap=max((r.entropy_gap for r in results), default=0.0),
        failures=failures,
        passed=not failures,
    )


def random_instance(
    seed: int,
    index: int,
    max_particles: int = DEFAULT_MAX_PARTICLES,
    max_dim: int = DEFAULT_MAX_DIM,
) -> tuple[GradedVector | Mixture, Bipartition, PhaseAssignment]:
    """Instance ``index`` of a suite: alternates statistics, every other pair mixed."""
    rng = np.random.default_rng([seed, index])
    statistics = Statistics.BOSON if index % 2 == 0 else Statistics.FERMION
    dim = int(rng.integers(2, max_dim + 1))
    top = max_particles if statistics is Statistics.BOSON else min(max_particles, dim)
    n_particles = int(rng.integers(1, top + 1))
    space = SingleParticleSpace(dim)
    state: GradedVector | Mixture
    if index % 4 >= 2:
        state = random_mixture(rng, statistics, space, n_particles, int(rng.integers(2, 4)))
    else:
        state = random_graded_vector(rng, statistics, space, n_particles)
    return state, random_bipartition(rng, dim), PhaseAssignment.random(n_particles, rng)


def run_equivalence_suite(
    instances: int,
    seed: int,
    max_particles: int = DEFAULT_MAX_PARTICLES,
    max_dim: int = DEFAULT_MAX_DIM,
    tolerance: float = DEFAULT_TOLERANCE,
    workers: int = 1,
) -> EquivalenceReport:
    """Compare both formalisms on ``instances`` random pure and mixed states."""
    if instances < 1:
        raise ValueError(f"instances must be at least 1, got {instances}")
    if max_particles < 1:
        raise ValueError(f"max_particles must be at least 1, got {max_particles}")
    if max_dim < 2:
        raise ValueError(f"max_dim must be at least 2, got {max_dim}")

    def run(index: int) -> EquivalenceResult:
        state, bipartition, phases = random_instance(seed, index, max_particles, max_dim)
        return compare_formalisms(state, bipartition, phases)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(instances)))
    else:
        results = [run(i) for i in range(instances)]
    report = _summarize(results, tolerance)
    logger.info(
        "equivalence suite: %d instances, max residual %.3e, %d failures",
        report.instances,
        report.max_residual,
        len(report.failures),
    )
    return report


def amplitude_correspondence(
    rng: np.random.Generator,
    statistics: Statistics,
    space: SingleParticleSpace,
    n_particles: int,
    bras: int = DEFAULT_CORRESPONDENCE_BRAS,
    tolerance: float = DEFAULT_TOLERANCE,
) -> CorrespondenceResult:
    """Tensor, Fock and per/det amplitudes for random N-orbital lists."""
    ket = random_orbitals(rng, space.dim, n_particles)
    bra_lists = [ket] + [random_orbitals(rng, space.dim, n_particles) for _ in range(bras)]
    return sea_correspondence(ket, statistics, bra_lists, tolerance)


def verify_state(
    state: GradedVector | Mixture,
    bipartition: Bipartition,
    phase_trials: int,
    seed: int,
    tolerance: float = DEFAULT_TOLERANCE,
) -> EquivalenceReport:
    """Check one state with zero phases and ``phase_trials`` random assignments.

    Every particle-number sector gets its own random assignment per trial.
    Sectors with 1..5 particles also get a random amplitude correspondence
    check in the state's single-particle space.
    """
    dephased = dephase_particle_number(state)
    sizes = sorted(dephased.grades)
    assignments: list[dict[int, PhaseAssignment]] = [{}]
    for t in range(phase_trials):
        rng = np.random.default_rng([seed, t])
        assignments.append({n: PhaseAssignment.random(n, rng) for n in sizes})
    results = [compare_formalisms(dephased, bipartition, p) for p in assignments]
    report = _summarize(results, tolerance)

    checks = [
        amplitude_correspondence(
            np.random.default_rng([seed, n]), dephased.statistics, dephased.space, n,
            tolerance=tolerance,
        )
        for n in sizes
        if 1 <= n <= CORRESPONDENCE_MAX_PARTICLES
    ]
    if not checks:
        return report
    return replace(
        report,
        max_amplitude_residual=max(c.residual for c in checks),
        passed=report.passed and all(c.passed for c in checks),
    )
