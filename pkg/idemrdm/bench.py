"""Timing rows for the permanent kernels."""

from __future__ import annotations

import csv
import io
import logging
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from idemrdm.kernels import NAIVE_MAX_ORDER, permanent_glynn, permanent_naive, permanent_ryser

logger = logging.getLogger(__name__)

CSV_HEADER = ("n", "method", "seconds", "checksum")
MONOTONE_FROM_ORDER = 14


@dataclass(frozen=True)
class BenchmarkRow:
    """Best-of-reps timing for one kernel at one matrix order."""

    n: int
    method: str
    seconds: float
    checksum: str


def bench_matrix(n: int, seed: int = 0) -> np.ndarray:
    """Seeded complex matrix with entries of magnitude ~ 1/√n."""
    rng = np.random.default_rng([seed, n])
    return (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2.0 * n)


def _checksum(value: complex) -> str:
    return f"{value.real:.12e}{value.imag:+.12e}j"


def benchmark_permanent(
    min_order: int,
    max_order: int,
    reps: int = 1,
    workers: int = 1,
    seed: int = 0,
    methods: Sequence[str] = ("ryser", "glynn", "naive"),
) -> list[BenchmarkRow]:
    """Time each method for every order in ``[min_order, max_order]``.

    The naive oracle only runs up to its own order guard.
    """
    if min_order < 1 or max_order < min_order:
        raise ValueError(f"invalid order range [{min_order}, {max_order}]")
    if reps < 1:
        raise ValueError(f"reps must be at least 1, got {reps}")
    kernels: dict[str, Callable[[np.ndarray], complex]] = {
        "ryser": lambda a: permanent_ryser(a, workers=workers),
        "glynn": lambda a: permanent_glynn(a, workers=workers),
        "naive": permanent_naive,
    }
    unknown = [m for m in methods if m not in kernels]
    if unknown:
        raise ValueError(f"unknown permanent methods: {unknown}")

    rows: list[BenchmarkRow] = []
    for n in range(min_order, max_order + 1):
        matrix = bench_matrix(n, seed)
        for method in methods:
            if method == "naive" and n > NAIVE_MAX_ORDER:
                continue
            best = float("inf")
            value = 0j
            for _ in range(reps):
                started = time.perf_counter()
                value = kernels[method](matrix)
                best = min(best, time.perf_counter() - started)
            rows.append(BenchmarkRow(n, method, best, _checksum(value)))
            logger.debug("permanent %s n=%d: %.6f s", method, n, best)
    return rows


def monotone_cost(
    rows: Sequence[BenchmarkRow], method: str = "ryser", from_order: int = MONOTONE_FROM_ORDER
) -> bool:
    """True when time(n+1) > time(n) for every consecutive pair with n ≥ from_order."""
    timings = sorted((r.n, r.seconds) for r in rows if r.method == method and r.n >= from_order)
    return all(b[1] > a[1] for a, b in zip(timings, timings[1:]) if b[0] == a[0] + 1)


def rows_to_csv(rows: Sequence[BenchmarkRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([row.n, row.method, f"{row.seconds:.6f}", row.checksum])
    return buffer.getvalue()
