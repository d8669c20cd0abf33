"""Runtime configuration for idemrdm.

Loads settings from environment variables (with optional .env file support).
Command-line flags override whatever is loaded here, except that an
explicit IDEMRDM_THREADS caps the worker count.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, replace
from pathlib import Path

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

DEFAULT_THREADS = 1
DEFAULT_TOLERANCE = 1e-10
DEFAULT_LOG_LEVEL = "INFO"

_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass(frozen=True)
class RuntimeConfig:
    """Settings shared by the library entry points and the CLI.

    Attributes:
        threads: Upper bound on worker threads used by the permanent kernel
            and the verification suites.
        tolerance: Absolute tolerance for every pass/fail comparison.
        log_level: Name of the root logging level.
        max_threads: Cap on worker threads, set when IDEMRDM_THREADS is
            given explicitly. None means no cap.
    """

    threads: int = DEFAULT_THREADS
    tolerance: float = DEFAULT_TOLERANCE
    log_level: str = DEFAULT_LOG_LEVEL
    max_threads: int | None = None

    def validate(self) -> list[str]:
        """Return a list of validation error messages. Empty list means valid."""
        errors: list[str] = []
        if self.threads < 1:
            errors.append(f"IDEMRDM_THREADS must be at least 1, got {self.threads}")
        if not 0.0 < self.tolerance < 1.0:
            errors.append(
                f"IDEMRDM_TOLERANCE must be in (0, 1), got {self.tolerance}"
            )
        if self.log_level not in _LOG_LEVELS:
            errors.append(
                f"IDEMRDM_LOG_LEVEL must be one of {', '.join(_LOG_LEVELS)}, "
                f"got '{self.log_level}'"
            )
        return errors

    @property
    def logging_level(self) -> int:
        return getattr(logging, self.log_level, logging.INFO)

    def with_overrides(
        self, *, threads: int | None = None, tolerance: float | None = None
    ) -> RuntimeConfig:
        """Return a copy with the given non-None fields replaced and re-validated.

        A thread override above ``max_threads`` is lowered to the cap.
        """
        if threads is not None and self.max_threads is not None and threads > self.max_threads:
            logger.info(
                "capping %d worker threads at IDEMRDM_THREADS=%d", threads, self.max_threads
            )
            threads = self.max_threads
        updated = replace(
            self,
            threads=self.threads if threads is None else threads,
            tolerance=self.tolerance if tolerance is None else tolerance,
        )
        errors = updated.validate()
        if errors:
            raise ValueError(
                "Invalid idemrdm configuration:\n" + "\n".join(f"  - {e}" for e in errors)
            )
        return updated


def _read_number(name: str, default: str, kind: type) -> tuple[float | int | None, str | None]:
    raw = os.environ.get(name, default).strip()
    try:
        return kind(raw), None
    except ValueError:
        return None, f"{name} must be a number, got '{raw}'"


def load_config(env_path: str | Path | None = None) -> RuntimeConfig:
    """Load runtime configuration from environment variables.

    Args:
        env_path: Optional path to a .env file. If None, looks for .env
                  in the current working directory.

    Returns:
        A validated RuntimeConfig instance.

    Raises:
        ValueError: If a variable cannot be parsed or is out of range.
    """
    if env_path is not None:
        load_dotenv(env_path, override=True)
    else:
        load_dotenv(override=True)

    threads, threads_error = _read_number("IDEMRDM_THREADS", str(DEFAULT_THREADS), int)
    tolerance, tolerance_error = _read_number(
        "IDEMRDM_TOLERANCE", repr(DEFAULT_TOLERANCE), float
    )
    parse_errors = [e for e in (threads_error, tolerance_error) if e]
    thread_cap = threads if threads is not None and "IDEMRDM_THREADS" in os.environ else None

    config = RuntimeConfig(
        threads=DEFAULT_THREADS if threads is None else int(threads),
        tolerance=DEFAULT_TOLERANCE if tolerance is None else float(tolerance),
        log_level=os.environ.get("IDEMRDM_LOG_LEVEL", DEFAULT_LOG_LEVEL).strip().upper(),
        max_threads=None if thread_cap is None else int(thread_cap),
    )

    errors = parse_errors + config.validate()
    if errors:
        raise ValueError(
            "Invalid idemrdm configuration:\n" + "\n".join(f"  - {e}" for e in errors)
        )

    return config
