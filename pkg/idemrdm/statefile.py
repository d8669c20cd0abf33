"""JSON input files: states with a bipartition, and orbital lists.

State file::

    {
      "statistics": "fermion",
      "dim": 8,
      "modes": {"L": [0, 1, 2, 3], "R": [4, 5, 6, 7]},
      "terms": [{"amplitude": [0.7071, 0.0], "orbitals": [0, 1, 4]}, ...]
    }

``terms`` may be replaced by ``"mixture": [{"weight": w, "terms": [...]}, ...]``.
Orbital file (for ``amplitude``)::

    {"statistics": "boson", "dim": 4, "orbitals": [0, [[0.7, 0], [0.7, 0], [0, 0], [0, 0]]]}

where an integer stands for a basis orbital. Every problem is reported as a
ValueError naming the file, the offending field and the reason; JSON
syntax errors also carry the line number.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from idemrdm.algebra import GradedVector, Orbital, SingleParticleSpace, Statistics, canonical_state
from idemrdm.density import Bipartition, Mixture

logger = logging.getLogger(__name__)

NORM_WARNING_THRESHOLD = 1e-6
WEIGHT_SUM_TOLERANCE = 1e-9


def _fail(path: Path, field: str, reason: str) -> ValueError:
    return ValueError(f"{path}: field '{field}': {reason}")


def _read_json(path: str | Path) -> tuple[Path, bytes, Any]:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ValueError(f"{path}: cannot read file: {exc.strerror or exc}") from exc
    try:
        data = json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise ValueError(f"{path}: file is not UTF-8 text") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: line {exc.lineno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ValueError(f"{path}: top-level JSON value must be an object")
    return path, raw, data


def _parse_statistics(path: Path, data: dict[str, Any]) -> Statistics:
    value = data.get("statistics")
    try:
        return Statistics(value)
    except ValueError:
        raise _fail(path, "statistics", f"must be 'boson' or 'fermion', got {value!r}") from None


def _parse_dim(path: Path, data: dict[str, Any]) -> int:
    value = data.get("dim")
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise _fail(path, "dim", f"must be a positive integer, got {value!r}")
    return value


def _parse_complex(path: Path, field: str, value: Any) -> complex:
    if (
        not isinstance(value, list)
        or len(value) != 2
        or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value)
    ):
        raise _fail(path, field, f"must be a [re, im] pair of numbers, got {value!r}")
    z = complex(value[0], value[1])
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise _fail(path, field, "must be finite")
    return z


def _parse_ids(path: Path, field: str, value: Any, dim: int) -> list[int]:
    if not isinstance(value, list) or not all(
        isinstance(i, int) and not isinstance(i, bool) for i in value
    ):
        raise _fail(path, field, f"must be a list of orbital ids, got {value!r}")
    for i in value:
        if not 0 <= i < dim:
            raise _fail(path, field, f"orbital id {i} out of range for dim {dim}")
    return list(value)


@dataclass(frozen=True)
class StateFile:
    """A parsed and validated state file.

    Attributes:
        path: Source file.
        statistics: Boson or fermion.
        dim: Number of orbitals.
        bipartition: Regions L and R from ``modes``.
        components: ``(weight, normalized vector)`` pairs; one pair with
            weight 1 for a pure ``terms`` file.
        digest: SHA-256 of the raw file bytes.
    """

    path: Path
    statistics: Statistics
    dim: int
    bipartition: Bipartition
    components: tuple[tuple[float, GradedVector], ...]
    digest: str

    @property
    def space(self) -> SingleParticleSpace:
        return SingleParticleSpace(self.dim)

    @property
    def is_pure(self) -> bool:
        return len(self.components) == 1

    def to_state(self) -> GradedVector | Mixture:
        if self.is_pure:
            return self.components[0][1]
        return Mixture(self.components)


def _parse_terms(
    path: Path, field: str, value: Any, statistics: Statistics, space: SingleParticleSpace
) -> GradedVector:
    if not isinstance(value, list):
        raise _fail(path, field, "must be a list")
    if not value:
        raise _fail(path, field, "no terms")
    entries = []
    for k, term in enumerate(value):
        where = f"{field}[{k}]"
        if not isinstance(term, dict):
            raise _fail(path, where, "must be an object with 'amplitude' and 'orbitals'")
        amplitude = _parse_complex(path, f"{where}.amplitude", term.get("amplitude"))
        orbitals = _parse_ids(path, f"{where}.orbitals", term.get("orbitals"), space.dim)
        if statistics is Statistics.FERMION:
            _, state = canonical_state(orbitals, statistics)
            if state is None:
                raise _fail(path, f"{where}.orbitals", f"duplicate orbital in fermion term {orbitals}")
        entries.append((orbitals, amplitude))
    vector = GradedVector.from_terms(statistics, space, entries)
    norm = vector.norm
    if norm == 0.0:
        raise _fail(path, field, "terms cancel to the zero vector")
    if abs(norm - 1.0) > NORM_WARNING_THRESHOLD:
        logger.warning("%s: %s has norm %.9f, normalizing", path, field, norm)
    return vector.normalized()


def _parse_modes(path: Path, data: dict[str, Any], dim: int) -> Bipartition:
    modes = data.get("modes")
    if not isinstance(modes, dict):
        raise _fail(path, "modes", "must be an object with 'L' and 'R' lists")
    left = _parse_ids(path, "modes.L", modes.get("L"), dim)
    right = _parse_ids(path, "modes.R", modes.get("R"), dim)
    overlap = sorted(set(left) & set(right))
    if overlap:
        raise _fail(path, "modes", f"L and R are not a partition: both contain {overlap}")
    missing = sorted(set(range(dim)) - set(left) - set(right))
    if missing:
        raise _fail(path, "modes", f"L and R are not a partition: orbitals {missing} unassigned")
    return Bipartition(frozenset(left), frozenset(right))


def parse_state_file(path: str | Path) -> StateFile:
    """Read and validate a state file.

    Raises:
        ValueError: If the file cannot be read, is not valid JSON, or
            violates the schema.
    """
    path, raw, data = _read_json(path)
    statistics = _parse_statistics(path, data)
    dim = _parse_dim(path, data)
    space = SingleParticleSpace(dim)
    bipartition = _parse_modes(path, data, dim)

    has_terms, has_mixture = "terms" in data, "mixture" in data
    if has_terms == has_mixture:
        raise _fail(path, "terms", "exactly one of 'terms' or 'mixture' is required")

    if has_terms:
        components = ((1.0, _parse_terms(path, "terms", data["terms"], statistics, space)),)
    else:
        mixture = data["mixture"]
        if not isinstance(mixture, list) or not mixture:
            raise _fail(path, "mixture", "must be a non-empty list")
        parsed = []
        for k, entry in enumerate(mixture):
            where = f"mixture[{k}]"
            if not isinstance(entry, dict):
                raise _fail(path, where, "must be an object with 'weight' and 'terms'")
            weight = entry.get("weight")
            if (
                isinstance(weight, bool)
                or not isinstance(weight, (int, float))
                or not math.isfinite(weight)
                or weight <= 0
            ):
                raise _fail(path, f"{where}.weight", f"must be a positive number, got {weight!r}")
            vector = _parse_terms(path, f"{where}.terms", entry.get("terms"), statistics, space)
            parsed.append((float(weight), vector))
        total = sum(w for w, _ in parsed)
        if abs(total - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise _fail(path, "mixture", f"weights sum to {total:.12g}, expected 1")
        components = tuple(parsed)

    logger.info(
        "Loaded %s state from %s: dim=%d, %d component(s)",
        statistics.value,
        path,
        dim,
        len(components),
    )
    return StateFile(
        path=path,
        statistics=statistics,
        dim=dim,
        bipartition=bipartition,
        components=components,
        digest=hashlib.sha256(raw).hexdigest(),
    )


@dataclass(frozen=True)
class OrbitalFile:
    """A parsed orbital list for amplitude calculations."""

    path: Path
    statistics: Statistics
    dim: int
    orbitals: tuple[Orbital, ...]
    digest: str


def parse_orbital_file(path: str | Path) -> OrbitalFile:
    """Read an orbital list; integers are basis orbitals, lists are [re, im] vectors."""
    path, raw, data = _read_json(path)
    statistics = _parse_statistics(path, data)
    dim = _parse_dim(path, data)
    entries = data.get("orbitals")
    if not isinstance(entries, list) or not entries:
        raise _fail(path, "orbitals", "must be a non-empty list")
    orbitals = []
    for k, entry in enumerate(entries):
        where = f"orbitals[{k}]"
        if isinstance(entry, int) and not isinstance(entry, bool):
            if not 0 <= entry < dim:
                raise _fail(path, where, f"orbital id {entry} out of range for dim {dim}")
            orbitals.append(Orbital.basis(dim, entry))
        elif isinstance(entry, list):
            if len(entry) != dim:
                raise _fail(path, where, f"expected {dim} amplitudes, got {len(entry)}")
            orbitals.append(
                Orbital([_parse_complex(path, f"{where}[{i}]", z) for i, z in enumerate(entry)])
            )
        else:
            raise _fail(path, where, f"must be an orbital id or amplitude list, got {entry!r}")
    return OrbitalFile(
        path=path,
        statistics=statistics,
        dim=dim,
        orbitals=tuple(orbitals),
        digest=hashlib.sha256(raw).hexdigest(),
    )
