"""Tests for idemrdm.kernels — permanents, determinant, Gram matrix, Jacobi."""

from __future__ import annotations

import itertools
import math
import time

import numpy as np
import pytest

from idemrdm.algebra import Orbital
from idemrdm.kernels import (
    as_square_matrix,
    determinant,
    gram_matrix,
    hermitian_eigenvalues,
    permanent_glynn,
    permanent_naive,
    permanent_ryser,
)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _random_complex(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))


def _close(a: complex, b: complex, tol: float = 1e-10) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(b))


def _cofactor_determinant(a: np.ndarray) -> complex:
    n = a.shape[0]
    if n == 1:
        return complex(a[0, 0])
    total = 0j
    for j in range(n):
        minor = np.delete(np.delete(a, 0, axis=0), j, axis=1)
        total += (-1) ** j * a[0, j] * _cofactor_determinant(minor)
    return total


# ===========================================================================
# Input validation
# ===========================================================================


class TestSquareMatrix:
    """Tests for as_square_matrix()."""

    def test_accepts_nested_lists(self):
        m = as_square_matrix([[1, 2], [3, 4]])
        assert m.dtype == np.complex128
        assert m.shape == (2, 2)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError, match="square"):
            as_square_matrix(np.ones((2, 3)))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            as_square_matrix(np.ones((0, 0)))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError, match="finite"):
            as_square_matrix([[1.0, np.nan], [0.0, 1.0]])


# ===========================================================================
# Permanents
# ===========================================================================


class TestPermanentNaive:
    """Tests for permanent_naive()."""

    def test_one_by_one(self):
        assert permanent_naive([[2 + 3j]]) == 2 + 3j

    def test_two_by_two(self):
        a, b, c, d = 1 + 1j, 2.0, 3j, -4.0
        assert _close(permanent_naive([[a, b], [c, d]]), a * d + b * c)

    def test_all_ones_four(self):
        assert _close(permanent_naive(np.ones((4, 4))), 24.0)

    def test_order_guard(self):
        with pytest.raises(ValueError, match="naive guard"):
            permanent_naive(np.ones((10, 10)))


class TestPermanentRyser:
    """Tests for permanent_ryser()."""

    def test_all_ones_three(self):
        assert _close(permanent_ryser(np.ones((3, 3))), 6.0)

    def test_identity(self):
        assert _close(permanent_ryser(np.eye(4)), 1.0)

    def test_one_by_one(self):
        assert _close(permanent_ryser([[1.5 - 2j]]), 1.5 - 2j)

    @pytest.mark.parametrize("n", range(1, 11))
    def test_all_ones_is_factorial(self, n: int):
        value = permanent_ryser(np.ones((n, n)))
        assert abs(value - math.factorial(n)) <= 1e-6 * math.factorial(n)

    def test_matches_naive_on_random_matrices(self):
        rng = np.random.default_rng(20240601)
        for trial in range(1000):
            n = 1 + trial % 8
            a = _random_complex(rng, n)
            assert _close(permanent_ryser(a), permanent_naive(a))

    def test_blocked_walk_matches_glynn_beyond_block(self):
        rng = np.random.default_rng(5)
        a = _random_complex(rng, 13) / np.sqrt(13)
        assert _close(permanent_ryser(a), permanent_glynn(a))

    def test_workers_do_not_change_result(self):
        rng = np.random.default_rng(11)
        a = _random_complex(rng, 13) / np.sqrt(13)
        single = permanent_ryser(a, workers=1)
        assert _close(permanent_ryser(a, workers=3), single, 1e-12)
        assert _close(permanent_ryser(a, workers=8), single, 1e-12)

    def test_row_and_column_permutation_invariance(self):
        rng = np.random.default_rng(3)
        a = _random_complex(rng, 6)
        reference = permanent_ryser(a)
        rows, cols = rng.permutation(6), rng.permutation(6)
        assert _close(permanent_ryser(a[rows][:, cols]), reference)

    def test_transpose_invariance(self):
        a = _random_complex(np.random.default_rng(4), 7)
        assert _close(permanent_ryser(a.T), permanent_ryser(a))

    def test_order_guard(self):
        with pytest.raises(ValueError, match="permanent guard"):
            permanent_ryser(np.ones((31, 31)))

    def test_non_finite_entries(self):
        with pytest.raises(ValueError, match="finite"):
            permanent_ryser([[np.inf]])

    @pytest.mark.slow
    def test_order_twenty_under_ten_seconds(self):
        a = _random_complex(np.random.default_rng(20), 20) / np.sqrt(40)
        started = time.perf_counter()
        permanent_ryser(a)
        assert time.perf_counter() - started < 10.0


class TestPermanentGlynn:
    """Tests for permanent_glynn()."""

    @pytest.mark.parametrize("n", [1, 2, 5, 8])
    def test_matches_naive(self, n: int):
        a = _random_complex(np.random.default_rng(n), n)
        assert _close(permanent_glynn(a), permanent_naive(a))

    def test_all_ones(self):
        assert _close(permanent_glynn(np.ones((6, 6))), 720.0)


# ===========================================================================
# Determinant
# ===========================================================================


class TestDeterminant:
    """Tests for determinant()."""

    @pytest.mark.parametrize("n", [1, 3, 6])
    def test_identity(self, n: int):
        assert determinant(np.eye(n)) == 1.0

    def test_equal_rows_give_exact_zero(self):
        a = _random_complex(np.random.default_rng(9), 4)
        a[2] = a[0]
        assert determinant(a) == 0j

    def test_zero_matrix(self):
        assert determinant(np.zeros((3, 3))) == 0j

    def test_matches_cofactor_expansion(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            a = _random_complex(rng, 5)
            assert _close(determinant(a), _cofactor_determinant(a))

    def test_transposition_flips_sign(self):
        a = _random_complex(np.random.default_rng(8), 4)
        swapped = a[[1, 0, 2, 3]]
        assert _close(determinant(swapped), -determinant(a))

    def test_transpose_invariance(self):
        a = _random_complex(np.random.default_rng(10), 5)
        assert _close(determinant(a.T), determinant(a))


# ===========================================================================
# Gram matrix
# ===========================================================================


class TestGramMatrix:
    """Tests for gram_matrix()."""

    def test_orthonormal_lists_give_identity(self):
        basis = [Orbital.basis(3, i) for i in range(3)]
        assert np.allclose(gram_matrix(basis, basis), np.eye(3))

    def test_orthogonal_pair(self):
        assert np.allclose(gram_matrix([Orbital.basis(2, 0)], [Orbital.basis(2, 1)]), [[0.0]])

    def test_hermitian_when_bra_equals_ket(self):
        rng = np.random.default_rng(1)
        orbitals = [Orbital(rng.normal(size=4) + 1j * rng.normal(size=4)) for _ in range(3)]
        g = gram_matrix(orbitals, orbitals)
        assert np.allclose(g, g.conj().T)

    def test_entries_are_conjugate_linear_in_bra(self):
        phi = Orbital([1j, 0.0])
        psi = Orbital([1.0, 0.0])
        assert gram_matrix([phi], [psi])[0, 0] == pytest.approx(-1j)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="lengths differ"):
            gram_matrix([Orbital.basis(2, 0)], [])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="different spaces"):
            gram_matrix([Orbital.basis(2, 0)], [Orbital.basis(3, 0)])


# ===========================================================================
# Hermitian eigenvalues
# ===========================================================================


class TestJacobiEigenvalues:
    """Tests for hermitian_eigenvalues()."""

    def test_diagonal_matrix(self):
        values = hermitian_eigenvalues(np.diag([3.0, -1.0, 2.0]))
        assert np.allclose(values, [-1.0, 2.0, 3.0])

    def test_two_by_two_complex(self):
        h = np.array([[0.5, 0.5j], [-0.5j, 0.5]])
        assert np.allclose(hermitian_eigenvalues(h), [0.0, 1.0], atol=1e-12)

    @pytest.mark.parametrize("n", [2, 5, 12, 30])
    def test_matches_numpy(self, n: int):
        rng = np.random.default_rng(n)
        x = _random_complex(rng, n)
        h = (x + x.conj().T) / 2
        assert np.allclose(hermitian_eigenvalues(h), np.linalg.eigvalsh(h), atol=1e-10)

    def test_degenerate_spectrum(self):
        rng = np.random.default_rng(2)
        q, _ = np.linalg.qr(_random_complex(rng, 4))
        h = q @ np.diag([0.5, 0.5, 0.0, 0.0]) @ q.conj().T
        assert np.allclose(hermitian_eigenvalues(h), [0.0, 0.0, 0.5, 0.5], atol=1e-12)

    def test_non_convergence_is_logged(self, caplog: pytest.LogCaptureFixture):
        x = _random_complex(np.random.default_rng(6), 6)
        with caplog.at_level("WARNING", logger="idemrdm.kernels"):
            hermitian_eigenvalues((x + x.conj().T) / 2, max_sweeps=0)
        assert any("Jacobi" in r.message for r in caplog.records)

    def test_one_by_one(self):
        assert np.allclose(hermitian_eigenvalues([[0.25]]), [0.25])


def test_permutation_expansion_of_three_by_three():
    a = np.arange(1, 10, dtype=float).reshape(3, 3)
    expected = sum(
        a[0, p[0]] * a[1, p[1]] * a[2, p[2]] for p in itertools.permutations(range(3))
    )
    assert _close(permanent_ryser(a), expected)
