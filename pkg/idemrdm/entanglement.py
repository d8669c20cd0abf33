"""Reduced density matrices, entropies and the local-observable check.

Every occupation state factors across a bipartition as
sign · |L part⟩ ∧ |R part⟩ (L orbitals first). Tracing a region is then a
contraction of the coefficient matrix c(kept, traced), which is what
applying interior products with every traced-region basis bra amounts to.
Observables local to one region are lifted with the same convention, so
Tr(ρ_L K) and ⟨ψ|K ⊗ 1|ψ⟩ must agree exactly.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from idemrdm.algebra import (
    GradedVector,
    OccupationState,
    Orbital,
    SingleParticleSpace,
    Statistics,
    enumerate_occupations,
    merge_states,
    split_state,
)
from idemrdm.density import (
    Bipartition,
    DensityMatrix,
    Mixture,
    Side,
    as_mixture,
    sorted_basis,
)
from idemrdm.oracle import LabeledTensor, product_tensor, slot_partial_trace

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-8
NEGATIVE_EIGENVALUE_LIMIT = -1e-8
DEFAULT_GNS_TOLERANCE = 1e-10

# Local observables are drawn on the full region basis up to this size,
# otherwise on the support of the reduced state.
MAX_OBSERVABLE_BASIS = 256


# ==========================================================================
# Reduced density matrix
# ==========================================================================


def _coefficients(
    vector: GradedVector, bipartition: Bipartition, traced: Side
) -> dict[OccupationState, dict[OccupationState, complex]]:
    """kept state → {traced state → c(kept, traced)} under the L-first factorization."""
    table: dict[OccupationState, dict[OccupationState, complex]] = {}
    for state, amplitude in vector.terms.items():
        sign, left, right = split_state(state, bipartition.left, vector.statistics)
        kept_part, traced_part = (left, right) if traced is Side.RIGHT else (right, left)
        row = table.setdefault(kept_part, {})
        row[traced_part] = row.get(traced_part, 0j) + sign * amplitude
    return table


def reduced_density_matrix(
    state: GradedVector | Mixture, bipartition: Bipartition, traced: Side = Side.RIGHT
) -> DensityMatrix:
    """Trace out region ``traced`` and return the kept region's density matrix.

    The basis is the support of the kept-region factors, sorted by grade
    then orbitals. The result has unit trace.
    """
    mixture = as_mixture(state)
    bipartition.validate_for(mixture.space)
    for weight, vector in mixture.components:
        if abs(vector.norm - 1.0) > NORM_TOLERANCE:
            raise ValueError(
                f"state must be normalized to within {NORM_TOLERANCE}, got norm {vector.norm:.12g}"
            )

    tables = [(w, _coefficients(v, bipartition, traced)) for w, v in mixture.components]
    basis = sorted_basis(itertools.chain.from_iterable(t for _, t in tables))
    index = {s: i for i, s in enumerate(basis)}
    matrix = np.zeros((len(basis), len(basis)), dtype=np.complex128)
    for weight, table in tables:
        traced_states = sorted_basis(itertools.chain.from_iterable(table.values()))
        column = {s: j for j, s in enumerate(traced_states)}
        coefficients = np.zeros((len(basis), len(traced_states)), dtype=np.complex128)
        for kept_state, row in table.items():
            for traced_state, value in row.items():
                coefficients[index[kept_state], column[traced_state]] = value
        matrix += weight * (coefficients @ coefficients.conj().T)

    trace = float(np.real(np.trace(matrix)))
    kept = traced.other
    logger.debug(
        "reduced density matrix on %s: %d basis states, trace before normalization %.15f",
        kept.value,
        len(basis),
        trace,
    )
    return DensityMatrix(
        mixture.statistics, bipartition.orbitals(kept), basis, matrix / trace
    )


def superselection_block(state: OccupationState, statistics: Statistics) -> int:
    """Particle number for bosons, parity for fermions."""
    return state.grade if statistics is Statistics.BOSON else state.parity


def ssr_project(rho: DensityMatrix, statistics: Statistics | None = None) -> DensityMatrix:
    """Remove coherences between different superselection blocks.

    Bosons are blocked by particle number and fermions by parity. The
    diagonal, and hence the trace, is unchanged.
    """
    statistics = statistics or rho.statistics
    blocks = np.array([superselection_block(s, statistics) for s in rho.basis])
    mask = blocks[:, None] == blocks[None, :]
    return rho.with_matrix(np.where(mask, rho.matrix, 0.0))


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """S(ρ) = −Σ λ log₂ λ over the Jacobi spectrum, with 0 log 0 = 0."""
    eigenvalues = rho.eigenvalues()
    if eigenvalues.size and eigenvalues[0] < NEGATIVE_EIGENVALUE_LIMIT:
        raise ValueError(
            f"density matrix has eigenvalue {eigenvalues[0]:.3e} below {NEGATIVE_EIGENVALUE_LIMIT}"
        )
    clipped = np.clip(eigenvalues, 0.0, 1.0)
    positive = clipped[clipped > 0.0]
    return float(max(0.0, -np.sum(positive * np.log2(positive))))


# ==========================================================================
# Local observables
# ==========================================================================


@dataclass(frozen=True, eq=False)
class LocalObservable:
    """Operator on one region's occupation basis.

    Attributes:
        side: Region the operator acts on.
        basis: Occupation states labelling rows and columns; the operator
            is zero outside their span.
        matrix: Complex matrix over ``basis``.
        hermitian: Whether the operator is flagged (and checked) Hermitian.
    """

    side: Side
    basis: tuple[OccupationState, ...]
    matrix: np.ndarray
    hermitian: bool = True

    def __post_init__(self) -> None:
        basis = tuple(self.basis)
        matrix = np.array(self.matrix, dtype=np.complex128)
        if matrix.shape != (len(basis), len(basis)):
            raise ValueError(
                f"observable shape {matrix.shape} does not match basis size {len(basis)}"
            )
        if len(set(basis)) != len(basis):
            raise ValueError("observable basis contains duplicate states")
        if self.hermitian and matrix.size and np.max(np.abs(matrix - matrix.conj().T)) > 1e-12:
            raise ValueError("observable is flagged Hermitian but is not")
        matrix.setflags(write=False)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def identity(cls, side: Side, basis: Sequence[OccupationState]) -> LocalObservable:
        return cls(side, tuple(basis), np.eye(len(basis), dtype=np.complex128))

    @classmethod
    def projector(cls, side: Side, state: OccupationState) -> LocalObservable:
        return cls(side, (state,), np.ones((1, 1), dtype=np.complex128))

    @classmethod
    def random_hermitian(
        cls, side: Side, basis: Sequence[OccupationState], rng: np.random.Generator
    ) -> LocalObservable:
        n = len(basis)
        x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        return cls(side, tuple(basis), (x + x.conj().T) / 2.0)

    def index(self) -> dict[OccupationState, int]:
        return {state: i for i, state in enumerate(self.basis)}


def region_basis(
    bipartition: Bipartition, side: Side, statistics: Statistics, max_grade: int
) -> list[OccupationState]:
    """All occupation states of one region with grade 0 .. ``max_grade``."""
    orbitals = bipartition.orbitals(side)
    return [
        state
        for grade in range(max_grade + 1)
        for state in enumerate_occupations(orbitals, grade, statistics)
    ]


@dataclass(frozen=True)
class LiftedObservable:
    """K ⊗ 1 on the full Fock space, applied sparsely to graded vectors."""

    observable: LocalObservable
    bipartition: Bipartition
    space: SingleParticleSpace
    statistics: Statistics
    _index: dict[OccupationState, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_index", self.observable.index())

    def apply(self, vector: GradedVector) -> GradedVector:
        if vector.statistics is not self.statistics or vector.space.dim != self.space.dim:
            raise ValueError("vector does not live in the observable's Fock space")
        side = self.observable.side
        matrix = self.observable.matrix
        basis = self.observable.basis
        result: dict[OccupationState, complex] = {}
        for state, amplitude in vector.terms.items():
            sign, left, right = split_state(state, self.bipartition.left, self.statistics)
            local = left if side is Side.LEFT else right
            column = self._index.get(local)
            if column is None:
                continue
            for row in np.flatnonzero(matrix[:, column]):
                image = basis[row]
                pair = (image, right) if side is Side.LEFT else (left, image)
                merged_sign, merged = merge_states(*pair, self.statistics)
                if merged is None:
                    continue
                value = matrix[row, column] * sign * merged_sign * amplitude
                result[merged] = result.get(merged, 0j) + value
        return GradedVector(self.statistics, self.space, result)

    def expectation(self, state: GradedVector | Mixture) -> complex:
        """Tr(ρ · K ⊗ 1) for a pure state or mixture."""
        if not self.observable.hermitian:
            raise ValueError("expectation values require a Hermitian observable")
        total = 0j
        for weight, vector in as_mixture(state).components:
            image = self.apply(vector)
            total += weight * sum(
                vector.terms[s].conjugate() * a for s, a in image.terms.items() if s in vector.terms
            )
        return total

    def to_matrix(self, basis: Sequence[OccupationState]) -> np.ndarray:
        """Dense matrix ⟨b_i| K ⊗ 1 |b_j⟩ over full-space basis states."""
        index = {state: i for i, state in enumerate(basis)}
        out = np.zeros((len(basis), len(basis)), dtype=np.complex128)
        for j, state in enumerate(basis):
            image = self.apply(GradedVector(self.statistics, self.space, {state: 1.0}))
            for target, value in image.terms.items():
                if target not in index:
                    raise ValueError(f"image state {target.label()} lies outside the basis")
                out[index[target], j] = value
        return out


def lift_observable(
    observable: LocalObservable,
    bipartition: Bipartition,
    space: SingleParticleSpace,
    statistics: Statistics,
) -> LiftedObservable:
    """Lift a region-local operator to K ⊗ 1 on the full Fock space."""
    bipartition.validate_for(space)
    region = bipartition.orbitals(observable.side)
    for state in observable.basis:
        if not set(state.orbitals) <= region:
            raise ValueError(
                f"observable state {state.label()} leaves region {observable.side.value}"
            )
        if statistics is Statistics.FERMION and state.has_repeats():
            raise ValueError(f"fermionic observable state repeats an orbital: {state.label()}")
    return LiftedObservable(observable, bipartition, space, statistics)


def expectation(rho: DensityMatrix, observable: LocalObservable) -> complex:
    """Tr(ρ K), with K taken as zero outside its basis."""
    k_index = observable.index()
    rows = [i for i, s in enumerate(rho.basis) if s in k_index]
    if not rows:
        return 0j
    positions = [k_index[rho.basis[i]] for i in rows]
    rho_block = rho.matrix[np.ix_(rows, rows)]
    k_block = observable.matrix[np.ix_(positions, positions)]
    return complex(np.sum(rho_block * k_block.T))


# ==========================================================================
# Restriction to local observables
# ==========================================================================


@dataclass(frozen=True)
class GnsReport:
    """Outcome of comparing Tr(ρ_L K) with Tr(ρ · K ⊗ 1).

    Attributes:
        max_residual: Largest |lhs − rhs| over the random observables.
        trials: Number of random observables drawn.
        passed: Every residual below, including the fixtures, within tolerance.
        identity_residual: Deviation from 1 for K = identity.
        control_residual: Same comparison for distinguishable particles.
        proof_residual: Two-particle, one-per-region construction, or None
            when a region has no orbitals.
    """

    max_residual: float
    trials: int
    passed: bool
    identity_residual: float
    control_residual: float
    proof_residual: float | None

    def to_dict(self) -> dict[str, Any]:
        return {"max_residual": self.max_residual, "trials": self.trials, "pass": self.passed}

    def residuals(self) -> dict[str, float]:
        values = {
            "max_residual": self.max_residual,
            "identity_residual": self.identity_residual,
            "control_residual": self.control_residual,
        }
        if self.proof_residual is not None:
            values["proof_residual"] = self.proof_residual
        return values


def distinguishable_control_residual(rng: np.random.Generator, dim: int = 3) -> float:
    """Restriction check for two distinguishable particles.

    For a random entangled two-slot tensor, Tr(ρ_1 K) from the slot-wise
    partial trace must equal ⟨T| K ⊗ 1 |T⟩.
    """
    products = [
        product_tensor(
            [Orbital(rng.normal(size=dim) + 1j * rng.normal(size=dim)) for _ in range(2)]
        )
        for _ in range(3)
    ]
    values = sum(p.amplitudes for p in products)
    tensor = LabeledTensor(products[0].space, 2, values / np.linalg.norm(values))
    reduced = slot_partial_trace(tensor, (0,))
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    k = (x + x.conj().T) / 2.0
    lhs = complex(np.trace(reduced @ k))
    rhs = complex(np.vdot(tensor.amplitudes, k @ tensor.amplitudes))
    return abs(lhs - rhs)


def two_particle_restriction_residual(
    rng: np.random.Generator,
    statistics: Statistics,
    left_dim: int = 2,
    right_dim: int = 2,
) -> float:
    """Numerical version of the two-particle, one-per-region argument.

    The state Σ c_{cμ} |c⟩∧|μ⟩ (c in L, μ in R) gives
    X_cd = Σ_μ c_{cμ} conj(c_{dμ}), and for a one-particle observable
    α on L both Tr(ρ_L α) and ⟨ψ|α ⊗ 1|ψ⟩ must equal Σ_ab α_ab X_ba.
    """
    if left_dim < 1 or right_dim < 1:
        raise ValueError("both regions need at least one orbital")
    space = SingleParticleSpace(left_dim + right_dim)
    bipartition = Bipartition.contiguous(space.dim, left_dim)
    c = rng.normal(size=(left_dim, right_dim)) + 1j * rng.normal(size=(left_dim, right_dim))
    c /= np.linalg.norm(c)
    state = GradedVector.from_terms(
        statistics,
        space,
        [([a, left_dim + mu], c[a, mu]) for a in range(left_dim) for mu in range(right_dim)],
    )
    x = c @ c.conj().T
    single = [OccupationState((a,)) for a in range(left_dim)]
    alpha = LocalObservable.random_hermitian(Side.LEFT, single, rng)
    formula = complex(np.sum(alpha.matrix * x.T))
    rho_left = reduced_density_matrix(state, bipartition, Side.RIGHT)
    lifted = lift_observable(alpha, bipartition, space, statistics).expectation(state)
    return max(abs(expectation(rho_left, alpha) - formula), abs(lifted - formula))


def _observable_basis(
    rho: DensityMatrix, bipartition: Bipartition, statistics: Statistics, max_grade: int
) -> list[OccupationState]:
    full = region_basis(bipartition, Side.LEFT, statistics, max_grade)
    if len(full) <= MAX_OBSERVABLE_BASIS:
        return full
    return list(rho.basis)


def gns_restriction_check(
    state: GradedVector | Mixture,
    bipartition: Bipartition,
    trials: int,
    seed: int,
    tolerance: float = DEFAULT_GNS_TOLERANCE,
    workers: int = 1,
) -> GnsReport:
    """Compare Tr(ρ_L K) with Tr(ρ · lift(K)) for random Hermitian K on L.

    Trial t draws from ``default_rng([seed, t])``, so results do not depend
    on ``workers``. The identity observable, the distinguishable-particle
    control and the two-particle construction are checked alongside.
    """
    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}")
    mixture = as_mixture(state)
    statistics = mixture.statistics
    rho_left = reduced_density_matrix(mixture, bipartition, Side.RIGHT)
    max_grade = max(mixture.grades)
    basis = _observable_basis(rho_left, bipartition, statistics, max_grade)

    def run_trial(trial: int) -> float:
        rng = np.random.default_rng([seed, trial])
        observable = LocalObservable.random_hermitian(Side.LEFT, basis, rng)
        lhs = expectation(rho_left, observable)
        rhs = lift_observable(observable, bipartition, mixture.space, statistics).expectation(
            mixture
        )
        return abs(lhs - rhs)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            residuals = list(pool.map(run_trial, range(trials)))
    else:
        residuals = [run_trial(t) for t in range(trials)]
    max_residual = float(max(residuals))

    identity = LocalObservable.identity(Side.LEFT, basis)
    identity_lhs = expectation(rho_left, identity)
    identity_rhs = lift_observable(identity, bipartition, mixture.space, statistics).expectation(
        mixture
    )
    identity_residual = float(max(abs(identity_lhs - 1.0), abs(identity_rhs - 1.0)))

    fixture_rng = np.random.default_rng([seed, trials])
    control_residual = float(distinguishable_control_residual(fixture_rng))
    left_dim, right_dim = len(bipartition.left), len(bipartition.right)
    proof_residual = None
    if left_dim and right_dim:
        proof_residual = float(
            two_particle_restriction_residual(
                fixture_rng, statistics, min(left_dim, 4), min(right_dim, 4)
            )
        )

    checked = [max_residual, identity_residual, control_residual]
    if proof_residual is not None:
        checked.append(proof_residual)
    passed = all(r <= tolerance for r in checked)
    logger.info(
        "GNS restriction check: %d trials, max residual %.3e, %s",
        trials,
        max_residual,
        "pass" if passed else "FAIL",
    )
    return GnsReport(
        max_residual=max_residual,
        trials=trials,
        passed=passed,
        identity_residual=identity_residual,
        control_residual=control_residual,
        proof_residual=proof_residual,
    )


def entropy_pair(state: GradedVector | Mixture, bipartition: Bipartition) -> tuple[float, float]:
    """(S(ρ_L), S(ρ_R)); equal for pure states."""
    left = von_neumann_entropy(reduced_density_matrix(state, bipartition, Side.RIGHT))
    right = von_neumann_entropy(reduced_density_matrix(state, bipartition, Side.LEFT))
    return left, right
