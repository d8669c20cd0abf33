"""Subsystem types shared by the SEA fast path and the explicit oracle.

A bipartition assigns every orbital to detector region L or R; density
matrices live on the occupation basis of one region's orbitals.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np

from idemrdm.algebra import GradedVector, OccupationState, SingleParticleSpace, Statistics
from idemrdm.kernels import hermitian_eigenvalues

HERMITIAN_TOLERANCE = 1e-12
EIGENVALUE_FLOOR = -1e-10
TRACE_TOLERANCE = 1e-10
WEIGHT_SUM_TOLERANCE = 1e-8


class Side(Enum):
    """Detector region of a bipartition."""

    LEFT = "L"
    RIGHT = "R"

    @property
    def other(self) -> Side:
        return Side.RIGHT if self is Side.LEFT else Side.LEFT


@dataclass(frozen=True)
class Bipartition:
    """Split of the orbital ids into regions L and R.

    Attributes:
        left: Orbital ids seen by detector L.
        right: Orbital ids seen by detector R.
    """

    left: frozenset[int]
    right: frozenset[int]

    def __post_init__(self) -> None:
        left = frozenset(int(i) for i in self.left)
        right = frozenset(int(i) for i in self.right)
        if any(i < 0 for i in left | right):
            raise ValueError("orbital ids must be non-negative")
        overlap = left & right
        if overlap:
            raise ValueError(f"L and R overlap on orbitals {sorted(overlap)}")
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    @classmethod
    def contiguous(cls, dim: int, left_size: int) -> Bipartition:
        """L = {0 .. left_size-1}, R = the remaining orbitals."""
        if not 0 <= left_size <= dim:
            raise ValueError(f"left_size must be in [0, {dim}], got {left_size}")
        return cls(frozenset(range(left_size)), frozenset(range(left_size, dim)))

    def orbitals(self, side: Side) -> frozenset[int]:
        return self.left if side is Side.LEFT else self.right

    def side_of(self, orbital: int) -> Side:
        if orbital in self.left:
            return Side.LEFT
        if orbital in self.right:
            return Side.RIGHT
        raise ValueError(f"orbital {orbital} belongs to neither L nor R")

    def validate_for(self, space: SingleParticleSpace) -> None:
        """Raise ValueError unless L ∪ R is exactly ``0 .. dim-1``."""
        expected = frozenset(range(space.dim))
        covered = self.left | self.right
        if covered != expected:
            missing = sorted(expected - covered)
            extra = sorted(covered - expected)
            raise ValueError(
                f"L and R do not partition the {space.dim} orbitals "
                f"(missing {missing}, out of range {extra})"
            )


@dataclass(frozen=True)
class Mixture:
    """Weighted ensemble Σ_k w_k |v_k⟩⟨v_k| of graded vectors.

    Attributes:
        components: ``(weight, vector)`` pairs; weights positive, summing to 1.
    """

    components: tuple[tuple[float, GradedVector], ...]

    def __post_init__(self) -> None:
        components = tuple((w, v) for w, v in self.components)
        if not components:
            raise ValueError("mixture must have at least one component")
        for weight, vector in components:
            if isinstance(weight, complex) or not math.isfinite(float(weight)) or weight <= 0:
                raise ValueError(f"mixture weights must be positive reals, got {weight!r}")
            if not isinstance(vector, GradedVector):
                raise ValueError(f"mixture component must be a GradedVector, got {vector!r}")
        first = components[0][1]
        for _, vector in components[1:]:
            first._check_compatible(vector)
        total = sum(float(w) for w, _ in components)
        if abs(total - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise ValueError(f"mixture weights must sum to 1, got {total:.12g}")
        object.__setattr__(
            self, "components", tuple((float(w), v) for w, v in components)
        )

    @classmethod
    def pure(cls, vector: GradedVector) -> Mixture:
        return cls(((1.0, vector),))

    @property
    def statistics(self) -> Statistics:
        return self.components[0][1].statistics

    @property
    def space(self) -> SingleParticleSpace:
        return self.components[0][1].space

    @property
    def grades(self) -> frozenset[int]:
        return frozenset().union(*(v.grades for _, v in self.components))


def as_mixture(state: GradedVector | Mixture) -> Mixture:
    return state if isinstance(state, Mixture) else Mixture.pure(state)


def particle_number_sectors(state: GradedVector | Mixture) -> dict[int, tuple[float, Mixture]]:
    """Split ``state`` into fixed particle-number sectors.

    Returns N → (probability of finding N particles, normalized N-particle
    mixture). Coherences between different N are dropped.
    """
    pieces: dict[int, list[tuple[float, GradedVector]]] = {}
    for weight, vector in as_mixture(state).components:
        norm_sq = vector.norm**2
        for grade in sorted(vector.grades):
            part = vector.grade_component(grade)
            probability = weight * part.norm**2 / norm_sq
            if probability > 0.0:
                pieces.setdefault(grade, []).append((probability, part.normalized()))
    sectors: dict[int, tuple[float, Mixture]] = {}
    for grade in sorted(pieces):
        total = sum(p for p, _ in pieces[grade])
        sectors[grade] = (total, Mixture(tuple((p / total, v) for p, v in pieces[grade])))
    return sectors


def dephase_particle_number(state: GradedVector | Mixture) -> Mixture:
    """The mixture Σ_N p_N ρ_N with every fixed-N sector as its own component."""
    return Mixture(
        tuple(
            (total * weight, vector)
            for total, sector in particle_number_sectors(state).values()
            for weight, vector in sector.components
        )
    )


def sorted_basis(states: Iterable[OccupationState]) -> tuple[OccupationState, ...]:
    return tuple(sorted(set(states), key=lambda s: s.sort_key))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Density operator on the occupation basis of an orbital subset.

    Attributes:
        statistics: Boson or fermion.
        orbitals: Orbital ids the basis states are drawn from.
        basis: Ordered occupation states labelling rows and columns.
        matrix: Read-only complex matrix over ``basis``.
    """

    statistics: Statistics
    orbitals: frozenset[int]
    basis: tuple[OccupationState, ...]
    matrix: np.ndarray

    def __post_init__(self) -> None:
        basis = tuple(self.basis)
        orbitals = frozenset(int(i) for i in self.orbitals)
        matrix = np.array(self.matrix, dtype=np.complex128)
        if matrix.shape != (len(basis), len(basis)):
            raise ValueError(
                f"matrix shape {matrix.shape} does not match basis size {len(basis)}"
            )
        if len(set(basis)) != len(basis):
            raise ValueError("density matrix basis contains duplicate states")
        for state in basis:
            if not set(state.orbitals) <= orbitals:
                raise ValueError(
                    f"basis state {state.label()} uses orbitals outside {sorted(orbitals)}"
                )
        matrix.setflags(write=False)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "orbitals", orbitals)
        object.__setattr__(self, "matrix", matrix)

    @property
    def size(self) -> int:
        return len(self.basis)

    @property
    def grades(self) -> tuple[int, ...]:
        return tuple(state.grade for state in self.basis)

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def labels(self) -> list[str]:
        return [state.label() for state in self.basis]

    def index(self) -> dict[OccupationState, int]:
        return {state: i for i, state in enumerate(self.basis)}

    def is_hermitian(self, tolerance: float = HERMITIAN_TOLERANCE) -> bool:
        if self.size == 0:
            return True
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= tolerance)

    def eigenvalues(self) -> np.ndarray:
        if self.size == 0:
            return np.zeros(0)
        return hermitian_eigenvalues(self.matrix)

    def validate(self, tolerance: float = TRACE_TOLERANCE) -> list[str]:
        """Return a list of validation error messages. Empty list means valid."""
        errors: list[str] = []
        if not self.is_hermitian():
            errors.append("density matrix is not Hermitian")
            return errors
        if self.size:
            lowest = float(self.eigenvalues()[0])
            if lowest < EIGENVALUE_FLOOR:
                errors.append(f"density matrix has negative eigenvalue {lowest:.3e}")
        if abs(self.trace - 1.0) > tolerance:
            errors.append(f"density matrix trace is {self.trace.real:.12g}, expected 1")
        return errors

    def aligned(self, basis: Sequence[OccupationState]) -> np.ndarray:
        """The matrix re-expressed on ``basis``, zero outside the stored support."""
        target = {state: i for i, state in enumerate(basis)}
        missing = [s.label() for s in self.basis if s not in target]
        if missing:
            raise ValueError(f"target basis lacks states {missing}")
        positions = np.array([target[s] for s in self.basis], dtype=int)
        out = np.zeros((len(basis), len(basis)), dtype=np.complex128)
        if self.size:
            out[np.ix_(positions, positions)] = self.matrix
        return out

    def with_matrix(self, matrix: np.ndarray) -> DensityMatrix:
        return DensityMatrix(self.statistics, self.orbitals, self.basis, matrix)

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready form; complex entries as ``[re, im]`` pairs."""
        return {
            "statistics": self.statistics.value,
            "orbitals": sorted(self.orbitals),
            "basis": [list(state.orbitals) for state in self.basis],
            "matrix": [
                [[float(z.real), float(z.imag)] for z in row] for row in self.matrix
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> DensityMatrix:
        try:
            statistics = Statistics(data["statistics"])
            basis = tuple(OccupationState(tuple(state)) for state in data["basis"])
            matrix = np.array(
                [[complex(re, im) for re, im in row] for row in data["matrix"]],
                dtype=np.complex128,
            ).reshape(len(basis), len(basis))
            orbitals = frozenset(data["orbitals"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed density matrix document: {exc}") from exc
        return cls(statistics, orbitals, basis, matrix)


def max_entry_difference(a: DensityMatrix, b: DensityMatrix) -> float:
    """Largest entrywise difference after aligning both on their joint basis."""
    basis = sorted_basis(a.basis + b.basis)
    if not basis:
        return 0.0
    return float(np.max(np.abs(a.aligned(basis) - b.aligned(basis))))


def spectrum_difference(a: DensityMatrix, b: DensityMatrix) -> float:
    """Largest gap between sorted spectra, zero-padding the shorter one."""
    ea, eb = a.eigenvalues(), b.eigenvalues()
    size = max(ea.size, eb.size)
    if size == 0:
        return 0.0
    ea = np.sort(np.concatenate([ea, np.zeros(size - ea.size)]))
    eb = np.sort(np.concatenate([eb, np.zeros(size - eb.size)]))
    return float(np.max(np.abs(ea - eb)))
