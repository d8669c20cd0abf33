"""Dense first-quantization oracle with explicit particle pseudolabels.

An N-particle state is a rank-N tensor over the single-particle space;
slot k carries pseudolabel A_{k+1}. Identical particles are handled by
explicit (anti)symmetrization over slots, subsystem basis states are
spread over every choice of slots with arbitrary phases, and the partial
trace runs over those symmetrized states. Everything here is brute force
and exists to cross-check the sparse occupation-basis path.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from functools import reduce
from types import MappingProxyType

import numpy as np
from scipy.special import comb

from idemrdm.algebra import (
    GradedVector,
    OccupationState,
    Orbital,
    SingleParticleSpace,
    Statistics,
    enumerate_occupations,
    from_orbitals,
    inner_product,
    permutation_sign,
    transition_amplitude,
)
from idemrdm.density import (
    Bipartition,
    DensityMatrix,
    Mixture,
    Side,
    as_mixture,
    particle_number_sectors,
    sorted_basis,
)

logger = logging.getLogger(__name__)

# Largest number of tensor entries (d^N) the oracle will allocate.
MAX_TENSOR_ENTRIES = 10**7

CORRESPONDENCE_MAX_PARTICLES = 5
CORRESPONDENCE_MAX_DIM = 6

DEFAULT_TOLERANCE = 1e-10


def _check_tensor_size(dim: int, n_particles: int) -> None:
    if dim**n_particles > MAX_TENSOR_ENTRIES:
        raise ValueError(
            f"dense tensor of {dim}^{n_particles} entries exceeds the limit of "
            f"{MAX_TENSOR_ENTRIES}"
        )


@dataclass(frozen=True, eq=False)
class LabeledTensor:
    """Dense N-slot tensor; slot k belongs to pseudolabel A_{k+1}.

    Attributes:
        space: Single-particle space of every slot.
        n_particles: Number of slots N.
        amplitudes: Read-only complex array of shape ``(dim,) * N``.
        statistics: Set when the tensor is (anti)symmetrized, None for
            distinguishable particles.
    """

    space: SingleParticleSpace
    n_particles: int
    amplitudes: np.ndarray
    statistics: Statistics | None = None

    def __post_init__(self) -> None:
        if self.n_particles < 0:
            raise ValueError(f"n_particles must be non-negative, got {self.n_particles}")
        values = np.array(self.amplitudes, dtype=np.complex128)
        expected = (self.space.dim,) * self.n_particles
        if values.shape != expected:
            raise ValueError(f"tensor shape {values.shape} does not match {expected}")
        values.setflags(write=False)
        object.__setattr__(self, "amplitudes", values)

    @property
    def symmetrized(self) -> bool:
        return self.statistics is not None

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: LabeledTensor) -> complex:
        """Return ⟨self|other⟩ as a full contraction over all slots."""
        if other.amplitudes.shape != self.amplitudes.shape:
            raise ValueError(
                f"tensor shapes differ: {self.amplitudes.shape} vs {other.amplitudes.shape}"
            )
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def swap_slots(self, i: int, j: int) -> LabeledTensor:
        return LabeledTensor(
            self.space,
            self.n_particles,
            np.swapaxes(self.amplitudes, i, j),
            self.statistics,
        )

    def is_exchange_symmetric(self, tolerance: float = 1e-12) -> bool:
        """True when every adjacent slot swap multiplies the tensor by ±1."""
        if self.statistics is None:
            raise ValueError("exchange symmetry is only defined for symmetrized tensors")
        sign = self.statistics.sign
        return all(
            np.max(np.abs(np.swapaxes(self.amplitudes, k, k + 1) - sign * self.amplitudes),
                   initial=0.0) <= tolerance
            for k in range(self.n_particles - 1)
        )


@dataclass(frozen=True)
class PhaseAssignment:
    """Phase angles θ for the slot subsets of an N-slot tensor.

    Subsets are ascending tuples of 0-based slot indices. Any subset
    without an entry has angle 0.
    """

    n_particles: int
    angles: Mapping[tuple[int, ...], float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        cleaned: dict[tuple[int, ...], float] = {}
        for subset, angle in self.angles.items():
            key = tuple(int(i) for i in subset)
            if list(key) != sorted(set(key)) or any(
                not 0 <= i < self.n_particles for i in key
            ):
                raise ValueError(
                    f"phase subset {subset} is not an ascending subset of "
                    f"0..{self.n_particles - 1}"
                )
            cleaned[key] = float(angle)
        object.__setattr__(self, "angles", MappingProxyType(cleaned))

    @classmethod
    def zeros(cls, n_particles: int) -> PhaseAssignment:
        return cls(n_particles, {})

    @classmethod
    def random(cls, n_particles: int, rng: np.random.Generator) -> PhaseAssignment:
        """Independent uniform angles in [0, 2π) for every slot subset."""
        angles = {
            subset: float(rng.uniform(0.0, 2.0 * math.pi))
            for size in range(n_particles + 1)
            for subset in itertools.combinations(range(n_particles), size)
        }
        return cls(n_particles, angles)

    def angle(self, subset: Sequence[int]) -> float:
        return self.angles.get(tuple(subset), 0.0)

    def phase(self, subset: Sequence[int]) -> complex:
        return complex(np.exp(1j * self.angle(subset)))


def _complement(subset: Sequence[int], n_particles: int) -> tuple[int, ...]:
    chosen = set(subset)
    return tuple(i for i in range(n_particles) if i not in chosen)


def shuffle_sign(first: Sequence[int], second: Sequence[int], statistics: Statistics) -> int:
    """Exchange sign of the slot listing ``first`` followed by ``second``."""
    if statistics is Statistics.BOSON:
        return 1
    return permutation_sign(list(first) + list(second))


def complementary_phases(
    phases: PhaseAssignment, traced_size: int, traced: Side, statistics: Statistics
) -> PhaseAssignment:
    """Kept-side phases matching a traced-side phase assignment.

    For each traced subset a the kept subset ā gets angle −θ_a, shifted by
    π when the L-before-R slot listing of (a, ā) is odd. Only fermions pick
    up the shift.
    """
    n = phases.n_particles
    angles: dict[tuple[int, ...], float] = {}
    for subset in itertools.combinations(range(n), traced_size):
        rest = _complement(subset, n)
        listing = (rest, subset) if traced is Side.RIGHT else (subset, rest)
        shift = math.pi if shuffle_sign(*listing, statistics) < 0 else 0.0
        angles[rest] = -phases.angle(subset) + shift
    return PhaseAssignment(n, angles)


# ==========================================================================
# Symmetrization
# ==========================================================================


def _space_of(orbitals: Sequence[Orbital]) -> SingleParticleSpace:
    dims = {phi.dim for phi in orbitals}
    if len(dims) != 1:
        raise ValueError(f"orbitals live in different spaces: dims {sorted(dims)}")
    return SingleParticleSpace(dims.pop())


def product_tensor(orbitals: Sequence[Orbital]) -> LabeledTensor:
    """Unsymmetrized |Ψ_1⟩_1 ⊗ ... ⊗ |Ψ_N⟩_N of distinguishable particles."""
    if not orbitals:
        raise ValueError("orbital list must not be empty")
    space = _space_of(orbitals)
    _check_tensor_size(space.dim, len(orbitals))
    values = reduce(np.multiply.outer, [phi.amplitudes for phi in orbitals])
    return LabeledTensor(space, len(orbitals), values, None)


def symmetrize_explicit(
    orbitals: Sequence[Orbital], statistics: Statistics, normalize: bool = True
) -> LabeledTensor:
    """Σ_σ (±1)^σ |Ψ_1⟩_{A_σ(1)} ⋯ |Ψ_N⟩_{A_σ(N)} as a dense tensor.

    With ``normalize`` the result has unit norm and dependent fermionic
    orbitals raise ValueError. Without it the sum is divided by √N!, which
    is the tensor image of :func:`idemrdm.algebra.from_orbitals`; overlaps
    of such tensors are exactly permanents or determinants.
    """
    if not orbitals:
        raise ValueError("orbital list must not be empty")
    space = _space_of(orbitals)
    n = len(orbitals)
    _check_tensor_size(space.dim, n)
    values = np.zeros((space.dim,) * n, dtype=np.complex128)
    for perm in itertools.permutations(range(n)):
        term = reduce(np.multiply.outer, [orbitals[k].amplitudes for k in perm])
        if statistics is Statistics.FERMION and permutation_sign(perm) < 0:
            values -= term
        else:
            values += term
    if normalize:
        norm = float(np.linalg.norm(values))
        if norm <= 1e-12 * max(1.0, math.prod(phi.norm for phi in orbitals)):
            raise ValueError(
                f"symmetrized {statistics.value} state vanishes: orbitals are linearly dependent"
            )
        values /= norm
    else:
        values /= math.sqrt(math.factorial(n))
    return LabeledTensor(space, n, values, statistics)


def occupation_tensor(
    state: OccupationState, space: SingleParticleSpace, statistics: Statistics
) -> np.ndarray:
    """Unit-norm symmetrized tensor of one occupation basis state."""
    n = state.grade
    _check_tensor_size(space.dim, n)
    values = np.zeros((space.dim,) * n, dtype=np.complex128)
    if n == 0:
        values[()] = 1.0
        return values
    if statistics is Statistics.FERMION and state.has_repeats():
        raise ValueError(f"fermionic occupation state repeats an orbital: {state.label()}")
    for perm in itertools.permutations(range(n)):
        index = tuple(state.orbitals[k] for k in perm)
        sign = permutation_sign(perm) if statistics is Statistics.FERMION else 1
        values[index] += sign
    return values / np.linalg.norm(values)


def graded_to_tensor(vector: GradedVector) -> LabeledTensor:
    """Dense symmetrized tensor of a fixed-particle-number graded vector."""
    if len(vector.grades) != 1:
        raise ValueError(
            f"explicit tensors need a fixed particle number, got grades {sorted(vector.grades)}"
        )
    (n,) = vector.grades
    values = np.zeros((vector.space.dim,) * n, dtype=np.complex128)
    for state, amplitude in vector.terms.items():
        values += amplitude * occupation_tensor(state, vector.space, vector.statistics)
    return LabeledTensor(vector.space, n, values, vector.statistics)


def elementary_symmetrize(x: LabeledTensor, k: int) -> LabeledTensor:
    """Elementary symmetrizing map on the leading ``k`` slots.

    Components with a repeated index among those slots are removed, then
    the tensor is averaged over the k! slot permutations. Remaining slots
    are left untouched.
    """
    rank = x.n_particles
    if not 0 <= k <= rank:
        raise ValueError(f"grade {k} exceeds tensor rank {rank}")
    dim = x.space.dim
    if k < 2:
        return LabeledTensor(x.space, rank, x.amplitudes, x.statistics)
    grids = np.meshgrid(*([np.arange(dim)] * k), indexing="ij")
    distinct = np.ones((dim,) * k, dtype=bool)
    for a, b in itertools.combinations(range(k), 2):
        distinct &= grids[a] != grids[b]
    masked = x.amplitudes * distinct.reshape(distinct.shape + (1,) * (rank - k))
    tail = tuple(range(k, rank))
    total = np.zeros_like(masked)
    for perm in itertools.permutations(range(k)):
        total += np.transpose(masked, perm + tail)
    total /= math.factorial(k)
    statistics = Statistics.BOSON if k == rank else None
    return LabeledTensor(x.space, rank, total, statistics)


# ==========================================================================
# Subsystem basis states and ensembles
# ==========================================================================


@dataclass(frozen=True, eq=False)
class PartialTensor:
    """An n-particle state spread over n of the N pseudolabel slots.

    For every ascending slot subset a the symmetrized ``factor`` sits on
    slots a with coefficient ``coefficients[a]``. Different subsets are
    orthogonal, so the norm is ‖factor‖ · √Σ|w_a|².
    """

    space: SingleParticleSpace
    n_total: int
    factor: LabeledTensor
    coefficients: Mapping[tuple[int, ...], complex]

    @property
    def n_particles(self) -> int:
        return self.factor.n_particles

    def norm(self) -> float:
        weight = math.sqrt(sum(abs(w) ** 2 for w in self.coefficients.values()))
        return weight * self.factor.norm

    def as_tensor(self) -> LabeledTensor:
        """The full N-slot tensor; only defined when n = N."""
        if self.n_particles != self.n_total:
            raise ValueError(
                f"partial state on {self.n_particles} of {self.n_total} slots is not a full tensor"
            )
        ((subset, weight),) = self.coefficients.items()
        return LabeledTensor(
            self.space, self.n_total, weight * self.factor.amplitudes, self.factor.statistics
        )

    def contract(self, tensor: LabeledTensor) -> dict[tuple[int, ...], np.ndarray]:
        """Apply this state as a bra on each slot subset of ``tensor``.

        Returns subset → tensor over the remaining slots in ascending order.
        """
        if tensor.n_particles != self.n_total:
            raise ValueError(
                f"tensor has {tensor.n_particles} slots, partial state expects {self.n_total}"
            )
        bra = np.conj(self.factor.amplitudes)
        axes = tuple(range(self.n_particles))
        return {
            subset: np.conj(weight)
            * np.tensordot(bra, tensor.amplitudes, axes=(axes, subset))
            for subset, weight in self.coefficients.items()
        }


def subsystem_basis_states(
    sub_orbitals: Sequence[Orbital],
    n_total: int,
    phases: PhaseAssignment,
    statistics: Statistics,
    space: SingleParticleSpace | None = None,
) -> PartialTensor:
    """Σ_{a_1<…<a_n} e^{iθ_a} (symmetrized sub_orbitals on slots a), normalized.

    ``space`` is only needed when ``sub_orbitals`` is empty.
    """
    n = len(sub_orbitals)
    if n > n_total:
        raise ValueError(f"subsystem of {n} particles exceeds total {n_total}")
    if phases.n_particles != n_total:
        raise ValueError(
            f"phase assignment covers {phases.n_particles} slots, expected {n_total}"
        )
    if n:
        factor = symmetrize_explicit(sub_orbitals, statistics, normalize=True)
        space = factor.space
    else:
        if space is None:
            raise ValueError("space is required for an empty subsystem state")
        factor = LabeledTensor(space, 0, np.array(1.0 + 0j), statistics)
    scale = 1.0 / math.sqrt(comb(n_total, n, exact=True))
    coefficients = {
        subset: phases.phase(subset) * scale
        for subset in itertools.combinations(range(n_total), n)
    }
    return PartialTensor(space, n_total, factor, MappingProxyType(coefficients))


def explicit_subsystem_basis(
    orbital_ids: Sequence[int],
    grade: int,
    n_total: int,
    phases: PhaseAssignment,
    statistics: Statistics,
    space: SingleParticleSpace,
) -> list[tuple[OccupationState, PartialTensor]]:
    """Complete symmetrized subsystem basis at one grade over ``orbital_ids``."""
    basis = []
    for state in enumerate_occupations(orbital_ids, grade, statistics):
        orbitals = [space.basis(i) for i in state.orbitals]
        basis.append(
            (state, subsystem_basis_states(orbitals, n_total, phases, statistics, space))
        )
    return basis


@dataclass(frozen=True)
class LabeledEnsemble:
    """Density operator ρ = Σ_k w_k |T_k⟩⟨T_k| over symmetrized tensors."""

    members: tuple[tuple[float, LabeledTensor], ...]

    def __post_init__(self) -> None:
        members = tuple(self.members)
        if not members:
            raise ValueError("ensemble must have at least one member")
        for weight, tensor in members:
            if isinstance(weight, complex) and weight.imag != 0:
                raise ValueError(f"density operator is not Hermitian: complex weight {weight}")
            if float(np.real(weight)) < 0:
                raise ValueError(f"density operator is not positive: weight {weight}")
            if not tensor.symmetrized:
                raise ValueError("ensemble members must be symmetrized tensors")
        first = members[0][1]
        for _, tensor in members[1:]:
            if (
                tensor.statistics is not first.statistics
                or tensor.n_particles != first.n_particles
                or tensor.space.dim != first.space.dim
            ):
                raise ValueError(
                    "ensemble members must share statistics, particle number and space"
                )
        object.__setattr__(
            self, "members", tuple((float(np.real(w)), t) for w, t in members)
        )

    @classmethod
    def from_state(cls, state: GradedVector | Mixture) -> LabeledEnsemble:
        return cls(tuple((w, graded_to_tensor(v)) for w, v in as_mixture(state).components))

    @property
    def statistics(self) -> Statistics:
        return self.members[0][1].statistics  # type: ignore[return-value]

    @property
    def space(self) -> SingleParticleSpace:
        return self.members[0][1].space

    @property
    def n_particles(self) -> int:
        return self.members[0][1].n_particles


# ==========================================================================
# Symmetrized partial trace
# ==========================================================================


def partial_trace_explicit(
    rho: LabeledEnsemble | LabeledTensor,
    bipartition: Bipartition,
    phases: PhaseAssignment | None = None,
    traced: Side = Side.RIGHT,
) -> DensityMatrix:
    """Symmetrized partial trace over the orbitals of region ``traced``.

    For every traced grade m = 0..N, each traced-region basis state is
    embedded on every m-subset of slots with the phases of ``phases`` and
    contracted against the tensors. The remaining (N−m)-slot tensors are
    read out on kept-region basis states carrying the complementary phases,
    and the bra is counted once per slot subset. The result is expressed in
    the kept region's occupation basis, restricted to its support, with
    unit trace.
    """
    ensemble = rho if isinstance(rho, LabeledEnsemble) else LabeledEnsemble(((1.0, rho),))
    space = ensemble.space
    statistics = ensemble.statistics
    n_total = ensemble.n_particles
    bipartition.validate_for(space)
    if phases is None:
        phases = PhaseAssignment.zeros(n_total)
    if phases.n_particles != n_total:
        raise ValueError(
            f"phase assignment covers {phases.n_particles} slots, expected {n_total}"
        )
    kept = traced.other
    traced_ids = sorted(bipartition.orbitals(traced))
    kept_ids = sorted(bipartition.orbitals(kept))
    dim = space.dim

    blocks: dict[OccupationState, dict[tuple[int, OccupationState], complex]] = {}
    weights = [w for w, _ in ensemble.members]

    for traced_grade in range(n_total + 1):
        kept_grade = n_total - traced_grade
        traced_basis = explicit_subsystem_basis(
            traced_ids, traced_grade, n_total, phases, statistics, space
        )
        kept_basis = explicit_subsystem_basis(
            kept_ids,
            kept_grade,
            n_total,
            complementary_phases(phases, traced_grade, traced, statistics),
            statistics,
            space,
        )
        if not traced_basis or not kept_basis:
            continue
        traced_states = [state for state, _ in traced_basis]
        kept_factors = np.array(
            [partial.factor.amplitudes.ravel() for _, partial in kept_basis]
        ).reshape(len(kept_basis), dim**kept_grade)
        # The traced bra is counted once per slot subset.
        multiplicity = math.sqrt(comb(n_total, traced_grade, exact=True))

        for member, (_, tensor) in enumerate(ensemble.members):
            contracted = [bra.contract(tensor) for _, bra in traced_basis]
            amplitudes = np.zeros((len(kept_basis), len(traced_basis)), dtype=np.complex128)
            for subset in itertools.combinations(range(n_total), traced_grade):
                rest = _complement(subset, n_total)
                kept_rows = kept_factors * np.array(
                    [partial.coefficients[rest] for _, partial in kept_basis]
                )[:, None]
                remaining = np.array(
                    [slots[subset].ravel() for slots in contracted]
                ).reshape(len(traced_basis), dim**kept_grade)
                amplitudes += multiplicity * (kept_rows.conj() @ remaining.T)
            for k, (kept_state, _) in enumerate(kept_basis):
                row = amplitudes[k]
                if not np.any(row):
                    continue
                entries = blocks.setdefault(kept_state, {})
                for r, value in enumerate(row):
                    if value != 0:
                        key = (member, traced_states[r])
                        entries[key] = entries.get(key, 0j) + value

    basis = sorted_basis(blocks)
    matrix = np.zeros((len(basis), len(basis)), dtype=np.complex128)
    for i, a in enumerate(basis):
        for j, b in enumerate(basis):
            total = 0j
            for key, value in blocks[a].items():
                other = blocks[b].get(key)
                if other is not None:
                    total += weights[key[0]] * value * np.conj(other)
            matrix[i, j] = total
    trace = float(np.real(np.trace(matrix)))
    if trace <= 0.0:
        raise ValueError("ensemble has no weight on the given bipartition")
    logger.debug(
        "explicit partial trace over %s: %d kept states, N=%d", traced.value, len(basis), n_total
    )
    return DensityMatrix(statistics, frozenset(kept_ids), basis, matrix / trace)


def partial_trace_sectors(
    state: GradedVector | Mixture,
    bipartition: Bipartition,
    phases: Mapping[int, PhaseAssignment] | None = None,
    traced: Side = Side.RIGHT,
) -> DensityMatrix:
    """Explicit partial trace of a state that may mix particle numbers.

    Each fixed-N sector is traced with ``phases[N]`` (zero phases when
    missing) and the sector results are added with their probabilities.
    Coherences between particle numbers are dropped first, since a
    labelled tensor has a single rank.
    """
    phases = phases or {}
    parts = [
        (
            probability,
            partial_trace_explicit(
                LabeledEnsemble.from_state(sector), bipartition, phases.get(n), traced
            ),
        )
        for n, (probability, sector) in particle_number_sectors(state).items()
    ]
    if not parts:
        raise ValueError("state has no particle-number sectors")
    basis = sorted_basis(itertools.chain.from_iterable(rho.basis for _, rho in parts))
    matrix = np.zeros((len(basis), len(basis)), dtype=np.complex128)
    for probability, rho in parts:
        matrix += probability * rho.aligned(basis)
    first = parts[0][1]
    return DensityMatrix(first.statistics, first.orbitals, basis, matrix)


# ==========================================================================
# Amplitude correspondence and distinguishable baseline
# ==========================================================================


@dataclass(frozen=True)
class CorrespondenceResult:
    """Outcome of comparing dense, sparse and kernel amplitudes.

    Attributes:
        passed: Every comparison within tolerance.
        residual: Largest scaled disagreement.
        comparisons: Number of bra lists compared.
    """

    passed: bool
    residual: float
    comparisons: int


def _scaled_gap(a: complex, b: complex) -> float:
    return abs(a - b) / max(1.0, abs(b))


def sea_correspondence(
    orbitals: Sequence[Orbital],
    statistics: Statistics,
    bra_lists: Sequence[Sequence[Orbital]] | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> CorrespondenceResult:
    """Check that tensor, Fock-space and per/det amplitudes agree.

    Each bra list is compared against ``orbitals`` through (1) the overlap
    of unnormalized symmetrized tensors, (2) ``inner_product`` of the
    ``from_orbitals`` vectors and (3) ``transition_amplitude``. By default
    the bras are the ket itself plus every basis occupation list of the
    same length.
    """
    if not orbitals:
        raise ValueError("orbital list must not be empty")
    space = _space_of(orbitals)
    n = len(orbitals)
    if n > CORRESPONDENCE_MAX_PARTICLES or (
        bra_lists is None and space.dim > CORRESPONDENCE_MAX_DIM
    ):
        raise ValueError(
            f"correspondence check limited to N <= {CORRESPONDENCE_MAX_PARTICLES} and, "
            f"for the full basis of bras, d <= {CORRESPONDENCE_MAX_DIM}; got N={n}, d={space.dim}"
        )
    if bra_lists is None:
        bra_lists = [list(orbitals)] + [
            [space.basis(i) for i in state.orbitals]
            for state in enumerate_occupations(space.orbital_ids(), n, statistics)
        ]
    ket_tensor = symmetrize_explicit(orbitals, statistics, normalize=False)
    ket_vector = from_orbitals(orbitals, statistics)
    residual = 0.0
    for bra in bra_lists:
        if len(bra) != n:
            raise ValueError(f"bra list has {len(bra)} orbitals, expected {n}")
        dense = symmetrize_explicit(bra, statistics, normalize=False).overlap(ket_tensor)
        sparse = inner_product(from_orbitals(bra, statistics), ket_vector)
        kernel = transition_amplitude(bra, orbitals, statistics)
        residual = max(residual, _scaled_gap(sparse, dense), _scaled_gap(kernel, dense))
    return CorrespondenceResult(residual <= tolerance, residual, len(bra_lists))


def slot_partial_trace(tensor: LabeledTensor, kept_slots: Sequence[int]) -> np.ndarray:
    """Textbook partial trace of a pure tensor onto ``kept_slots``.

    Returns the dense unit-trace matrix over the kept slots' product basis
    (row-major in the listed slot order).
    """
    kept = tuple(int(k) for k in kept_slots)
    n = tensor.n_particles
    if len(set(kept)) != len(kept) or any(not 0 <= k < n for k in kept):
        raise ValueError(f"kept slots {kept_slots} are not distinct slots of 0..{n - 1}")
    dim = tensor.space.dim
    moved = np.moveaxis(tensor.amplitudes, kept, tuple(range(len(kept))))
    flat = moved.reshape(dim ** len(kept), dim ** (n - len(kept)))
    matrix = flat @ flat.conj().T
    trace = float(np.real(np.trace(matrix)))
    if trace == 0.0:
        raise ValueError("cannot trace the zero tensor")
    return matrix / trace
