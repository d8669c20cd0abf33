"""Command reports: JSON and aligned-text rendering with a stable digest."""

from __future__ import annotations

import hashlib
import json
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any

import numpy as np


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and complex numbers to plain JSON values."""
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


@dataclass(frozen=True)
class Report:
    """Outcome of one CLI command.

    Attributes:
        command: Subcommand name.
        argv: Arguments as given on the command line.
        inputs_digest: SHA-256 over the input files (empty if none).
        results: Numeric results.
        residuals: Named residuals compared against the tolerance.
        checks: Named pass/fail flags.
        seconds: Wall-clock time; kept out of the digest.
        timings: Further named durations, also kept out of the digest.
    """

    command: str
    argv: tuple[str, ...]
    inputs_digest: str
    results: dict[str, Any] = field(default_factory=dict)
    residuals: dict[str, float] = field(default_factory=dict)
    checks: dict[str, bool] = field(default_factory=dict)
    seconds: float = 0.0
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def digested_section(self) -> dict[str, Any]:
        return to_jsonable(
            {
                "command": self.command,
                "argv": list(self.argv),
                "inputs_digest": self.inputs_digest,
                "results": self.results,
                "residuals": self.residuals,
                "checks": self.checks,
                "pass": self.passed,
            }
        )

    @property
    def report_digest(self) -> str:
        canonical = json.dumps(self.digested_section(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def to_dict(self, include_timing: bool = True) -> dict[str, Any]:
        data = self.digested_section()
        data["report_digest"] = self.report_digest
        if include_timing:
            data["timing"] = {"seconds": self.seconds, **to_jsonable(self.timings)}
        return data

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing), sort_keys=True, indent=2)

    def to_text(self) -> str:
        rows: list[tuple[str, str]] = [("command", self.command)]
        rows += [(k, _format_value(v)) for k, v in sorted(self.results.items())]
        rows += [(k, f"{v:.3e}") for k, v in sorted(self.residuals.items())]
        rows += [(k, "pass" if v else "FAIL") for k, v in sorted(self.checks.items())]
        rows.append(("status", "PASS" if self.passed else "FAIL"))
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows)


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, complex):
        return f"{value.real:.10g}{value.imag:+.10g}j"
    if isinstance(value, float):
        return f"{value:.10g}" if math.isfinite(value) else str(value)
    if isinstance(value, Mapping):
        return ", ".join(f"{k}={_format_value(v)}" for k, v in sorted(value.items()))
    if isinstance(value, (list, tuple, np.ndarray)):
        return ", ".join(_format_value(v) for v in value)
    if isinstance(value, np.floating):
        return _format_value(float(value))
    return str(value)


def format_density_matrix(labels: list[str], matrix: np.ndarray) -> str:
    """Aligned table of a matrix with occupation labels on both axes."""
    cells = [
        [f"{z.real:.6f}{z.imag:+.6f}j" if abs(z.imag) > 5e-13 else f"{z.real:.6f}" for z in row]
        for row in matrix
    ]
    width = max([len(label) for label in labels] + [len(c) for row in cells for c in row] + [1])
    header = " " * width + "  " + "  ".join(label.rjust(width) for label in labels)
    body = [
        label.rjust(width) + "  " + "  ".join(c.rjust(width) for c in row)
        for label, row in zip(labels, cells)
    ]
    return "\n".join([header] + body)
