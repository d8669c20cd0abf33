"""Scalar matrix kernels behind the transition amplitudes.

Permanents (Ryser and Glynn, both walked in Gray-code order, plus a naive
oracle), a partially pivoted LU determinant, the Gram matrix of two orbital
lists and a cyclic Jacobi eigensolver for Hermitian matrices.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from idemrdm.algebra import Orbital

logger = logging.getLogger(__name__)

PERMANENT_MAX_ORDER = 30
NAIVE_MAX_ORDER = 9

# Low subset bits tabulated once; the remaining bits are walked one by one.
GRAY_BLOCK_BITS = 10

DETERMINANT_PIVOT_THRESHOLD = 1e-14

DEFAULT_JACOBI_TOLERANCE = 1e-12
DEFAULT_JACOBI_SWEEPS = 100


def as_square_matrix(a: np.ndarray | Sequence[Sequence[complex]]) -> np.ndarray:
    """Validate and convert ``a`` to an n×n complex array with finite entries."""
    matrix = np.array(a, dtype=np.complex128)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {matrix.shape}")
    if matrix.shape[0] < 1:
        raise ValueError("matrix order must be at least 1")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("matrix entries must be finite")
    return matrix


# ==========================================================================
# Permanents
# ==========================================================================


def _gray_subset_sums(vectors: np.ndarray) -> np.ndarray:
    """Subset sums of the rows of ``vectors`` in Gray-code order.

    Row t of the result is Σ_{j ∈ g(t)} vectors[j], with g(t) = t ^ (t >> 1).
    Consecutive rows differ by one added or removed vector, so the subset
    size parity of row t equals the parity of t.
    """
    count, width = vectors.shape
    table = np.zeros((1 << count, width), dtype=np.complex128)
    if count == 0:
        return table
    steps = np.arange(1, 1 << count)
    flipped = np.frexp((steps & -steps).astype(np.float64))[1] - 1
    gray = steps ^ (steps >> 1)
    entering = ((gray >> flipped) & 1).astype(bool)
    deltas = vectors[flipped] * np.where(entering, 1.0, -1.0)[:, None]
    table[1:] = np.cumsum(deltas, axis=0)
    return table


def _gray_partition_sum(
    table: np.ndarray,
    signs: np.ndarray,
    high: np.ndarray,
    base: np.ndarray,
    start: int,
    stop: int,
) -> complex:
    """Σ over outer Gray steps [start, stop) of (−1)^u Σ_t (−1)^t ∏ (offset + table[t])."""
    gray = start ^ (start >> 1)
    chosen = [j for j in range(high.shape[0]) if (gray >> j) & 1]
    offset = base + (high[chosen].sum(axis=0) if chosen else 0.0)
    total = 0j
    for step in range(start, stop):
        if step > start:
            bit = (step & -step).bit_length() - 1
            gray = step ^ (step >> 1)
            if (gray >> bit) & 1:
                offset = offset + high[bit]
            else:
                offset = offset - high[bit]
        inner = complex(np.prod(table + offset, axis=1) @ signs)
        total += -inner if step % 2 else inner
    return total


def _tree_sum(values: list[complex]) -> complex:
    while len(values) > 1:
        paired = [values[i] + values[i + 1] for i in range(0, len(values) - 1, 2)]
        if len(values) % 2:
            paired.append(values[-1])
        values = paired
    return values[0] if values else 0j


def _signed_subset_product_sum(
    vectors: np.ndarray, base: np.ndarray, workers: int
) -> complex:
    """Σ_{S ⊆ rows} (−1)^{|S|} ∏_k (base + Σ_{j∈S} vectors[j])_k.

    Shared engine of the Ryser and Glynn formulas. The outer Gray walk is
    split into contiguous partitions, one per worker, and the partition
    sums are reduced in a fixed pairwise order.
    """
    low_bits = min(vectors.shape[0], GRAY_BLOCK_BITS)
    table = _gray_subset_sums(vectors[:low_bits])
    signs = np.where(np.arange(table.shape[0]) % 2, -1.0, 1.0)
    high = vectors[low_bits:]
    outer = 1 << high.shape[0]

    parts = max(1, min(int(workers), outer))
    bounds = [outer * p // parts for p in range(parts + 1)]
    ranges = list(zip(bounds[:-1], bounds[1:]))
    if parts == 1:
        partials = [_gray_partition_sum(table, signs, high, base, 0, outer)]
    else:
        with ThreadPoolExecutor(max_workers=parts) as pool:
            partials = list(
                pool.map(
                    lambda r: _gray_partition_sum(table, signs, high, base, r[0], r[1]),
                    ranges,
                )
            )
    return _tree_sum(partials)


def _check_permanent_order(matrix: np.ndarray) -> None:
    n = matrix.shape[0]
    if n > PERMANENT_MAX_ORDER:
        raise ValueError(
            f"matrix order {n} exceeds the permanent guard of {PERMANENT_MAX_ORDER}"
        )


def permanent_ryser(a: np.ndarray | Sequence[Sequence[complex]], workers: int = 1) -> complex:
    """Permanent by Ryser's inclusion–exclusion formula, O(2^n · n).

    per(A) = (−1)^n Σ_S (−1)^{|S|} ∏_i Σ_{j∈S} a_ij over column subsets S,
    enumerated in Gray-code order so each step changes the row sums by one
    column.
    """
    matrix = as_square_matrix(a)
    _check_permanent_order(matrix)
    n = matrix.shape[0]
    total = _signed_subset_product_sum(
        np.ascontiguousarray(matrix.T), np.zeros(n, dtype=np.complex128), workers
    )
    return -total if n % 2 else total


def permanent_glynn(a: np.ndarray | Sequence[Sequence[complex]], workers: int = 1) -> complex:
    """Permanent by Glynn's formula with Gray-code sign flips.

    per(A) = 2^{1−n} Σ_δ (∏_k δ_k) ∏_j Σ_i δ_i a_ij with δ_1 = +1.
    """
    matrix = as_square_matrix(a)
    _check_permanent_order(matrix)
    n = matrix.shape[0]
    total = _signed_subset_product_sum(
        np.ascontiguousarray(-2.0 * matrix[1:]), matrix.sum(axis=0), workers
    )
    return total / float(1 << (n - 1))


def permanent_naive(a: np.ndarray | Sequence[Sequence[complex]]) -> complex:
    """Permanent as the sum over all n! permutations (testing oracle)."""
    matrix = as_square_matrix(a)
    n = matrix.shape[0]
    if n > NAIVE_MAX_ORDER:
        raise ValueError(f"matrix order {n} exceeds the naive guard of {NAIVE_MAX_ORDER}")
    perms = np.array(list(itertools.permutations(range(n))))
    return complex(np.prod(matrix[np.arange(n), perms], axis=1).sum())


# ==========================================================================
# Determinant and Gram matrix
# ==========================================================================


def determinant(a: np.ndarray | Sequence[Sequence[complex]]) -> complex:
    """Determinant by LU decomposition with partial pivoting.

    Returns exactly 0 when a pivot falls below 1e-14 times the largest
    entry magnitude.
    """
    lu = as_square_matrix(a).copy()
    n = lu.shape[0]
    scale = float(np.max(np.abs(lu)))
    if scale == 0.0:
        return 0j
    threshold = DETERMINANT_PIVOT_THRESHOLD * scale
    det = 1 + 0j
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(lu[col:, col])))
        if abs(lu[pivot, col]) <= threshold:
            return 0j
        if pivot != col:
            lu[[col, pivot]] = lu[[pivot, col]]
            det = -det
        det *= lu[col, col]
        if col + 1 < n:
            factors = lu[col + 1 :, col] / lu[col, col]
            lu[col + 1 :, col:] -= np.outer(factors, lu[col, col:])
    return complex(det)


def gram_matrix(bra: Sequence[Orbital], ket: Sequence[Orbital]) -> np.ndarray:
    """Overlap matrix A_ij = ⟨bra_i|ket_j⟩."""
    if len(bra) != len(ket):
        raise ValueError(f"bra and ket lengths differ: {len(bra)} vs {len(ket)}")
    if not bra:
        raise ValueError("orbital lists must not be empty")
    dims = {phi.dim for phi in bra} | {psi.dim for psi in ket}
    if len(dims) != 1:
        raise ValueError(f"orbitals live in different spaces: dims {sorted(dims)}")
    left = np.array([phi.amplitudes for phi in bra])
    right = np.array([psi.amplitudes for psi in ket])
    return left.conj() @ right.T


# ==========================================================================
# Hermitian eigenvalues
# ==========================================================================


def hermitian_eigenvalues(
    h: np.ndarray | Sequence[Sequence[complex]],
    tolerance: float = DEFAULT_JACOBI_TOLERANCE,
    max_sweeps: int = DEFAULT_JACOBI_SWEEPS,
) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations.

    Each rotation first removes the phase of a_pq, then applies the real
    symmetric rotation that zeroes it. Sweeps stop once the off-diagonal
    Frobenius norm is at most ``tolerance`` (scaled by the matrix norm when
    that exceeds 1). Returns the eigenvalues in ascending order.
    """
    a = as_square_matrix(h)
    a = (a + a.conj().T) / 2.0
    n = a.shape[0]
    threshold = tolerance * max(1.0, float(np.linalg.norm(a)))

    def off_norm() -> float:
        return float(np.sqrt(max(0.0, np.sum(np.abs(a) ** 2) - np.sum(np.abs(np.diag(a)) ** 2))))

    sweeps = 0
    off = off_norm()
    while off > threshold and sweeps < max_sweeps:
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r < 1e-300:
                    continue
                phase = apq / r
                theta = (a[q, q].real - a[p, p].real) / (2.0 * r)
                t = 1.0 / (abs(theta) + np.hypot(theta, 1.0))
                if theta < 0:
                    t = -t
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q] * np.conj(phase)
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q

                row_p = a[p, :].copy()
                row_q = a[q, :] * phase
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q

                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
        off = off_norm()

    if off > threshold:
        logger.warning(
            "Jacobi eigensolver stopped after %d sweeps with off-diagonal norm %.3e",
            sweeps,
            off,
        )
    else:
        logger.debug("Jacobi eigensolver converged in %d sweeps (n=%d)", sweeps, n)
    return np.sort(np.real(np.diag(a)))
