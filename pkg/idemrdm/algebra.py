"""Occupation-basis Fock space for bosons and fermions.

States are sparse maps from occupation states (sorted orbital tuples) to
complex amplitudes. Symmetric and exterior products are realized through
ladder operators under the convention

    a†(e_i) |..., n_i, ...⟩ = √(n_i + 1) |..., n_i + 1, ...⟩      (bosons)
    a†(e_i) |i_1 < ... < i_n⟩ = (−1)^{#{i_k < i}} |sorted(i, i_1, ...)⟩  (fermions)

so that ``from_orbitals`` followed by ``inner_product`` reproduces the
permanent/determinant amplitude exactly, without 1/N prefactors.
"""

from __future__ import annotations

import bisect
import itertools
import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType

import numpy as np

from idemrdm.kernels import determinant, gram_matrix, permanent_ryser

logger = logging.getLogger(__name__)

# Amplitudes below this magnitude are dropped from every GradedVector.
PRUNE_THRESHOLD = 1e-15


class Statistics(Enum):
    """Exchange statistics of the particles."""

    BOSON = "boson"
    FERMION = "fermion"

    @property
    def sign(self) -> int:
        """Exchange sign: +1 for bosons, −1 for fermions."""
        return 1 if self is Statistics.BOSON else -1


@dataclass(frozen=True)
class SingleParticleSpace:
    """Finite single-particle space with orbital ids ``0 .. dim-1``."""

    dim: int

    def __post_init__(self) -> None:
        if isinstance(self.dim, bool) or not isinstance(self.dim, (int, np.integer)):
            raise ValueError(f"dim must be an integer, got {self.dim!r}")
        if self.dim < 1:
            raise ValueError(f"dim must be positive, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))

    def basis(self, index: int) -> Orbital:
        return Orbital.basis(self.dim, index)

    def orbital_ids(self) -> range:
        return range(self.dim)


@dataclass(frozen=True, eq=False)
class Orbital:
    """A single-particle ket as a dense complex amplitude vector.

    Normalization is not required; amplitudes only enter through overlaps.

    Attributes:
        amplitudes: Read-only complex vector of length ``dim``.
    """

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.amplitudes, dtype=np.complex128)
        if values.ndim != 1 or values.size == 0:
            raise ValueError(
                f"orbital amplitudes must be a non-empty vector, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("orbital amplitudes must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "amplitudes", values)

    @classmethod
    def basis(cls, dim: int, index: int) -> Orbital:
        """The unit orbital e_index of a ``dim``-dimensional space."""
        if not 0 <= index < dim:
            raise ValueError(f"orbital id {index} out of range for dim {dim}")
        values = np.zeros(dim, dtype=np.complex128)
        values[index] = 1.0
        return cls(values)

    @classmethod
    def superposition(cls, dim: int, coefficients: Mapping[int, complex]) -> Orbital:
        """Orbital Σ c_i e_i from a sparse coefficient map."""
        values = np.zeros(dim, dtype=np.complex128)
        for index, coefficient in coefficients.items():
            if not 0 <= index < dim:
                raise ValueError(f"orbital id {index} out of range for dim {dim}")
            values[index] += coefficient
        return cls(values)

    @property
    def dim(self) -> int:
        return int(self.amplitudes.shape[0])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: Orbital) -> complex:
        """Return ⟨self|other⟩."""
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True, order=False)
class OccupationState:
    """One Fock basis vector, labeled by its sorted orbital list.

    Bosonic states list an orbital once per occupying particle; fermionic
    states are strictly increasing and stand for e_{i1} ∧ ... ∧ e_{in}.
    """

    orbitals: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        orbitals = tuple(int(i) for i in self.orbitals)
        if any(i < 0 for i in orbitals):
            raise ValueError(f"orbital ids must be non-negative, got {orbitals}")
        if any(a > b for a, b in zip(orbitals, orbitals[1:])):
            raise ValueError(f"occupation state must be sorted, got {orbitals}")
        object.__setattr__(self, "orbitals", orbitals)

    @property
    def grade(self) -> int:
        return len(self.orbitals)

    @property
    def sort_key(self) -> tuple[int, tuple[int, ...]]:
        return (self.grade, self.orbitals)

    @property
    def parity(self) -> int:
        return self.grade % 2

    def has_repeats(self) -> bool:
        return any(a == b for a, b in zip(self.orbitals, self.orbitals[1:]))

    def occupation(self, orbital: int) -> int:
        """Number of particles in ``orbital``."""
        return self.orbitals.count(orbital)

    def occupation_numbers(self, dim: int) -> tuple[int, ...]:
        counts = [0] * dim
        for i in self.orbitals:
            counts[i] += 1
        return tuple(counts)

    def label(self) -> str:
        return "{" + ",".join(str(i) for i in self.orbitals) + "}"

    def __str__(self) -> str:
        return self.label()


def permutation_sign(sequence: Sequence[int]) -> int:
    """Sign of the permutation that sorts ``sequence`` (distinct entries)."""
    inversions = sum(
        1
        for a, b in itertools.combinations(range(len(sequence)), 2)
        if sequence[a] > sequence[b]
    )
    return -1 if inversions % 2 else 1


def canonical_state(
    orbitals: Iterable[int], statistics: Statistics
) -> tuple[int, OccupationState | None]:
    """Sort an orbital list into canonical order.

    Returns ``(sign, state)`` where ``sign`` is the reordering sign (always
    +1 for bosons). A fermionic list with a repeated orbital returns
    ``(0, None)``: the wedge product vanishes.
    """
    orbitals = [int(i) for i in orbitals]
    if statistics is Statistics.FERMION:
        if len(set(orbitals)) != len(orbitals):
            return 0, None
        return permutation_sign(orbitals), OccupationState(tuple(sorted(orbitals)))
    return 1, OccupationState(tuple(sorted(orbitals)))


def split_state(
    state: OccupationState, left: frozenset[int] | set[int], statistics: Statistics
) -> tuple[int, OccupationState, OccupationState]:
    """Factor ``state`` as sign · |left part⟩ ∧ |right part⟩.

    The fermion sign is (−1) raised to the number of right-side orbitals
    that precede a left-side orbital in canonical order.
    """
    left_part: list[int] = []
    right_part: list[int] = []
    crossings = 0
    for i in state.orbitals:
        if i in left:
            left_part.append(i)
            crossings += len(right_part)
        else:
            right_part.append(i)
    sign = -1 if statistics is Statistics.FERMION and crossings % 2 else 1
    return sign, OccupationState(tuple(left_part)), OccupationState(tuple(right_part))


def merge_states(
    left: OccupationState, right: OccupationState, statistics: Statistics
) -> tuple[int, OccupationState | None]:
    """Inverse of :func:`split_state`: canonicalize |left⟩ ∧ |right⟩."""
    return canonical_state(left.orbitals + right.orbitals, statistics)


def _check_state(state: OccupationState, statistics: Statistics, dim: int) -> None:
    if not isinstance(state, OccupationState):
        raise ValueError(f"expected OccupationState key, got {state!r}")
    if state.orbitals and state.orbitals[-1] >= dim:
        raise ValueError(f"orbital id {state.orbitals[-1]} out of range for dim {dim}")
    if statistics is Statistics.FERMION and state.has_repeats():
        raise ValueError(f"fermionic occupation state repeats an orbital: {state.label()}")


@dataclass(frozen=True, eq=False)
class GradedVector:
    """Sparse element of the bosonic or fermionic Fock space.

    Attributes:
        statistics: Boson or fermion.
        space: Single-particle space the orbitals belong to.
        terms: Read-only map OccupationState → complex amplitude, sorted by
            grade then orbitals, with negligible amplitudes removed.
    """

    statistics: Statistics
    space: SingleParticleSpace
    terms: Mapping[OccupationState, complex] = field(default_factory=dict)

    def __post_init__(self) -> None:
        cleaned: dict[OccupationState, complex] = {}
        for state, amplitude in self.terms.items():
            _check_state(state, self.statistics, self.space.dim)
            value = complex(amplitude)
            if not (math.isfinite(value.real) and math.isfinite(value.imag)):
                raise ValueError(f"amplitude of {state.label()} is not finite")
            if abs(value) >= PRUNE_THRESHOLD:
                cleaned[state] = value
        ordered = dict(sorted(cleaned.items(), key=lambda item: item[0].sort_key))
        object.__setattr__(self, "terms", MappingProxyType(ordered))

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, statistics: Statistics, space: SingleParticleSpace) -> GradedVector:
        return cls(statistics, space, {})

    @classmethod
    def vacuum(cls, statistics: Statistics, space: SingleParticleSpace) -> GradedVector:
        return cls(statistics, space, {OccupationState(()): 1.0})

    @classmethod
    def basis(
        cls,
        statistics: Statistics,
        space: SingleParticleSpace,
        orbitals: Iterable[int],
        amplitude: complex = 1.0,
    ) -> GradedVector:
        """The basis product of ``orbitals`` in the given order (sign applied)."""
        return cls.from_terms(statistics, space, [(orbitals, amplitude)])

    @classmethod
    def from_terms(
        cls,
        statistics: Statistics,
        space: SingleParticleSpace,
        terms: Iterable[tuple[Iterable[int], complex]],
    ) -> GradedVector:
        """Accumulate ``(orbital list, amplitude)`` pairs given in any order.

        Fermionic lists are reordered with their permutation sign; lists
        with a repeated fermionic orbital contribute nothing.
        """
        accumulated: dict[OccupationState, complex] = {}
        for orbitals, amplitude in terms:
            sign, state = canonical_state(orbitals, statistics)
            if state is None:
                continue
            accumulated[state] = accumulated.get(state, 0j) + sign * complex(amplitude)
        return cls(statistics, space, accumulated)

    # -- queries -----------------------------------------------------------

    @property
    def grades(self) -> frozenset[int]:
        return frozenset(state.grade for state in self.terms)

    @property
    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self.terms.values()))

    def is_zero(self) -> bool:
        return not self.terms

    def amplitude(self, state: OccupationState) -> complex:
        return self.terms.get(state, 0j)

    def grade_component(self, grade: int) -> GradedVector:
        return GradedVector(
            self.statistics,
            self.space,
            {s: a for s, a in self.terms.items() if s.grade == grade},
        )

    def normalized(self) -> GradedVector:
        norm = self.norm
        if norm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return self * (1.0 / norm)

    # -- arithmetic --------------------------------------------------------

    def _check_compatible(self, other: GradedVector) -> None:
        if not isinstance(other, GradedVector):
            raise ValueError(f"expected GradedVector, got {type(other).__name__}")
        if other.statistics is not self.statistics:
            raise ValueError(
                f"statistics mismatch: {self.statistics.value} vs {other.statistics.value}"
            )
        if other.space.dim != self.space.dim:
            raise ValueError(f"dimension mismatch: {self.space.dim} vs {other.space.dim}")

    def __add__(self, other: GradedVector) -> GradedVector:
        self._check_compatible(other)
        combined = dict(self.terms)
        for state, amplitude in other.terms.items():
            combined[state] = combined.get(state, 0j) + amplitude
        return GradedVector(self.statistics, self.space, combined)

    def __neg__(self) -> GradedVector:
        return self * -1.0

    def __sub__(self, other: GradedVector) -> GradedVector:
        return self + (-other)

    def __mul__(self, scalar: complex) -> GradedVector:
        return GradedVector(
            self.statistics,
            self.space,
            {s: a * complex(scalar) for s, a in self.terms.items()},
        )

    __rmul__ = __mul__


def _check_orbital(phi: Orbital, v: GradedVector) -> None:
    if phi.dim != v.space.dim:
        raise ValueError(f"dimension mismatch: orbital {phi.dim} vs space {v.space.dim}")


def create_apply(phi: Orbital, v: GradedVector) -> GradedVector:
    """Apply the creation operator a†(phi) to ``v``."""
    _check_orbital(phi, v)
    support = np.flatnonzero(phi.amplitudes)
    result: dict[OccupationState, complex] = {}
    for state, amplitude in v.terms.items():
        for i in support:
            i = int(i)
            if v.statistics is Statistics.BOSON:
                factor = math.sqrt(state.occupation(i) + 1)
            else:
                if i in state.orbitals:
                    continue
                factor = -1.0 if bisect.bisect_left(state.orbitals, i) % 2 else 1.0
            position = bisect.bisect_right(state.orbitals, i)
            new_state = OccupationState(
                state.orbitals[:position] + (i,) + state.orbitals[position:]
            )
            result[new_state] = (
                result.get(new_state, 0j) + factor * phi.amplitudes[i] * amplitude
            )
    return GradedVector(v.statistics, v.space, result)


def annihilate_apply(phi: Orbital, v: GradedVector) -> GradedVector:
    """Apply the interior product ⟨phi| (annihilation operator a(phi)) to ``v``.

    a(phi) = Σ_i conj(phi_i) a(e_i); the fermionic a(e_i) carries the sign
    (−1)^p for orbital i at position p of the canonical list.
    """
    _check_orbital(phi, v)
    weights = np.conj(phi.amplitudes)
    result: dict[OccupationState, complex] = {}
    for state, amplitude in v.terms.items():
        for i in sorted(set(state.orbitals)):
            if weights[i] == 0:
                continue
            position = bisect.bisect_left(state.orbitals, i)
            if v.statistics is Statistics.BOSON:
                factor = math.sqrt(state.occupation(i))
            else:
                factor = -1.0 if position % 2 else 1.0
            new_state = OccupationState(
                state.orbitals[:position] + state.orbitals[position + 1 :]
            )
            result[new_state] = result.get(new_state, 0j) + factor * weights[i] * amplitude
    return GradedVector(v.statistics, v.space, result)


def from_orbitals(orbitals: Sequence[Orbital], statistics: Statistics) -> GradedVector:
    """Return a†(Ψ_1) ⋯ a†(Ψ_N) |vac⟩, unnormalized."""
    if not orbitals:
        raise ValueError("orbital list must not be empty")
    dims = {phi.dim for phi in orbitals}
    if len(dims) != 1:
        raise ValueError(f"orbitals live in different spaces: dims {sorted(dims)}")
    space = SingleParticleSpace(dims.pop())
    vector = GradedVector.vacuum(statistics, space)
    for phi in reversed(orbitals):
        vector = create_apply(phi, vector)
    return vector


def normalize(v: GradedVector) -> GradedVector:
    return v.normalized()


def inner_product(u: GradedVector, v: GradedVector) -> complex:
    """Return ⟨u|v⟩ in the orthonormal occupation basis."""
    u._check_compatible(v)
    small, large = (u, v) if len(u.terms) <= len(v.terms) else (v, u)
    total = 0j
    for state in small.terms:
        if state in large.terms:
            total += u.terms[state].conjugate() * v.terms[state]
    return total


def transition_amplitude(
    bra: Sequence[Orbital], ket: Sequence[Orbital], statistics: Statistics
) -> complex:
    """per(A) for bosons, det(A) for fermions, with A_ij = ⟨bra_i|ket_j⟩."""
    if len(bra) != len(ket):
        raise ValueError(f"bra and ket lengths differ: {len(bra)} vs {len(ket)}")
    if not bra:
        raise ValueError("orbital lists must not be empty")
    matrix = gram_matrix(bra, ket)
    if statistics is Statistics.BOSON:
        return permanent_ryser(matrix)
    return determinant(matrix)


def product_amplitude(bra: Sequence[Orbital], ket: Sequence[Orbital]) -> complex:
    """Unsymmetrized amplitude ∏_i ⟨bra_i|ket_i⟩ of distinguishable particles."""
    if len(bra) != len(ket):
        raise ValueError(f"bra and ket lengths differ: {len(bra)} vs {len(ket)}")
    product = 1 + 0j
    for phi, psi in zip(bra, ket):
        product *= phi.overlap(psi)
    return product


def enumerate_occupations(
    orbital_ids: Iterable[int], grade: int, statistics: Statistics
) -> list[OccupationState]:
    """All occupation states of ``grade`` particles over ``orbital_ids``."""
    if grade < 0:
        raise ValueError(f"grade must be non-negative, got {grade}")
    ids = sorted(set(int(i) for i in orbital_ids))
    if statistics is Statistics.BOSON:
        combos = itertools.combinations_with_replacement(ids, grade)
    else:
        combos = itertools.combinations(ids, grade)
    return [OccupationState(combo) for combo in combos]
