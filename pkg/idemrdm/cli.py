"""Command-line front end.

Usage:
    python -m idemrdm amplitude BRA.json KET.json
    python -m idemrdm rdm STATE.json --trace R [--ssr]
    python -m idemrdm entropy STATE.json --trace R
    python -m idemrdm verify-equivalence STATE.json [--random 500 --seed 1 --max-particles 4]
    python -m idemrdm verify-gns STATE.json --trials 100 --seed 7
    python -m idemrdm bench-permanent --min 4 --max 22 --reps 3

Exit codes: 0 when every check passes, 1 when a check fails, 2 on usage,
input or validation errors. Reports go to stdout, logs to stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass, replace
from pathlib import Path

from idemrdm.algebra import transition_amplitude
from idemrdm.bench import MONOTONE_FROM_ORDER, benchmark_permanent, monotone_cost, rows_to_csv
from idemrdm.config import RuntimeConfig, load_config
from idemrdm.density import Side
from idemrdm.entanglement import (
    gns_restriction_check,
    reduced_density_matrix,
    ssr_project,
    von_neumann_entropy,
)
from idemrdm.report import Report, format_density_matrix
from idemrdm.statefile import parse_orbital_file, parse_state_file
from idemrdm.verification import run_equivalence_suite, verify_state

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

FORMATS = ("text", "json", "csv")


def setup_logging(level: int = logging.INFO) -> None:
    """Configure logging to stderr for command-line runs."""
    root = logging.getLogger()
    root.setLevel(level)
    if not root.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(
            logging.Formatter(
                fmt="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
                datefmt="%Y-%m-%d %H:%M:%S",
            )
        )
        root.addHandler(handler)


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose errors raise instead of exiting the process."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise ValueError(f"usage error: {message}")


def build_parser() -> argparse.ArgumentParser:
    # Shared options are attached to every subcommand so they follow it on
    # the command line.
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tolerance", type=float, default=None,
                        help="absolute tolerance for pass/fail checks (default 1e-10)")
    common.add_argument("--format", choices=FORMATS, default="text", dest="output_format")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (overrides IDEMRDM_THREADS)")

    parser = _Parser(
        prog="idemrdm",
        description="Reduced density matrices and entropies of identical-particle states.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("amplitude", parents=[common], help="per/det transition amplitude")
    p.add_argument("bra", type=Path)
    p.add_argument("ket", type=Path)

    for name, text in (("rdm", "reduced density matrix"), ("entropy", "von Neumann entropy")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("state", type=Path)
        p.add_argument("--trace", choices=("L", "R"), default="R",
                       help="region to trace out (default R)")
        if name == "rdm":
            p.add_argument("--ssr", action="store_true",
                           help="apply the superselection projection")

    p = sub.add_parser("verify-equivalence", parents=[common],
                       help="explicit oracle vs SEA reduced states")
    p.add_argument("state", type=Path, nargs="?")
    p.add_argument("--random", type=int, default=0, help="number of random instances")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-particles", type=int, default=4)
    p.add_argument("--max-dim", type=int, default=8)
    p.add_argument("--phases", type=int, default=8,
                   help="random phase assignments tried on the given state")

    p = sub.add_parser("verify-gns", parents=[common], help="local-observable restriction check")
    p.add_argument("state", type=Path)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("bench-permanent", parents=[common], help="permanent timing rows")
    p.add_argument("--min", type=int, default=4, dest="min_order")
    p.add_argument("--max", type=int, default=22, dest="max_order")
    p.add_argument("--reps", type=int, default=1)
    return parser


@dataclass(frozen=True)
class CommandResult:
    """Exit code, report and rendered stdout of one command."""

    exit_code: int
    report: Report | None
    output: str


def _digest(*parts: str) -> str:
    return hashlib.sha256("\n".join(parts).encode("utf-8")).hexdigest() if parts else ""


def _cmd_amplitude(args: argparse.Namespace, config: RuntimeConfig) -> tuple[Report, str | None]:
    bra = parse_orbital_file(args.bra)
    ket = parse_orbital_file(args.ket)
    if bra.statistics is not ket.statistics:
        raise ValueError(
            f"bra is {bra.statistics.value} but ket is {ket.statistics.value}"
        )
    value = transition_amplitude(list(bra.orbitals), list(ket.orbitals), ket.statistics)
    report = Report(
        command="amplitude",
        argv=(),
        inputs_digest=_digest(bra.digest, ket.digest),
        results={"amplitude": value, "statistics": ket.statistics.value,
                 "n_particles": len(ket.orbitals)},
    )
    return report, None


def _cmd_rdm(args: argparse.Namespace, config: RuntimeConfig) -> tuple[Report, str | None]:
    parsed = parse_state_file(args.state)
    rho = reduced_density_matrix(parsed.to_state(), parsed.bipartition, Side(args.trace))
    if args.ssr:
        rho = ssr_project(rho, parsed.statistics)
    eigenvalues = rho.eigenvalues()
    errors = rho.validate(config.tolerance)
    report = Report(
        command="rdm",
        argv=(),
        inputs_digest=parsed.digest,
        results={
            "traced": args.trace,
            "ssr": bool(args.ssr),
            "density_matrix": rho.to_dict(),
            "eigenvalues": eigenvalues,
        },
        residuals={"trace_deviation": abs(rho.trace - 1.0)},
        checks={"valid_density_matrix": not errors},
    )
    for error in errors:
        logger.error("%s", error)
    if args.output_format == "csv":
        return report, "eigenvalue\n" + "\n".join(f"{v:.15g}" for v in eigenvalues)
    if args.output_format == "text":
        return report, format_density_matrix(rho.labels(), rho.matrix)
    return report, None


def _cmd_entropy(args: argparse.Namespace, config: RuntimeConfig) -> tuple[Report, str | None]:
    parsed = parse_state_file(args.state)
    rho = reduced_density_matrix(parsed.to_state(), parsed.bipartition, Side(args.trace))
    entropy = von_neumann_entropy(rho)
    eigenvalues = rho.eigenvalues()
    report = Report(
        command="entropy",
        argv=(),
        inputs_digest=parsed.digest,
        results={"traced": args.trace, "entropy": entropy, "eigenvalues": eigenvalues},
        checks={"valid_density_matrix": not rho.validate(config.tolerance)},
    )
    if args.output_format == "csv":
        return report, "eigenvalue\n" + "\n".join(f"{v:.15g}" for v in eigenvalues)
    if args.output_format == "text":
        return report, f"{entropy:.6f}"
    return report, None


def _cmd_verify_equivalence(
    args: argparse.Namespace, config: RuntimeConfig
) -> tuple[Report, str | None]:
    if args.state is None and args.random < 1:
        raise ValueError("verify-equivalence needs a state file or --random N")
    results: dict[str, object] = {}
    residuals: dict[str, float] = {}
    checks: dict[str, bool] = {}
    digest = ""
    if args.state is not None:
        parsed = parse_state_file(args.state)
        digest = parsed.digest
        state_report = verify_state(
            parsed.to_state(), parsed.bipartition, args.phases, args.seed, config.tolerance
        )
        results["state"] = state_report.to_dict()
        residuals["state_residual"] = state_report.max_residual
        residuals["state_spectrum_residual"] = state_report.max_spectrum_residual
        residuals["state_amplitude_residual"] = state_report.max_amplitude_residual
        checks["state"] = state_report.passed
    if args.random > 0:
        suite = run_equivalence_suite(
            args.random,
            args.seed,
            max_particles=args.max_particles,
            max_dim=args.max_dim,
            tolerance=config.tolerance,
            workers=config.threads,
        )
        results["random"] = suite.to_dict()
        residuals["random_residual"] = suite.max_residual
        residuals["random_spectrum_residual"] = suite.max_spectrum_residual
        checks["random"] = suite.passed
    report = Report(
        command="verify-equivalence",
        argv=(),
        inputs_digest=digest,
        results=results,
        residuals=residuals,
        checks=checks,
    )
    return report, None


def _cmd_verify_gns(args: argparse.Namespace, config: RuntimeConfig) -> tuple[Report, str | None]:
    parsed = parse_state_file(args.state)
    gns = gns_restriction_check(
        parsed.to_state(),
        parsed.bipartition,
        trials=args.trials,
        seed=args.seed,
        tolerance=config.tolerance,
        workers=config.threads,
    )
    report = Report(
        command="verify-gns",
        argv=(),
        inputs_digest=parsed.digest,
        results=gns.to_dict(),
        residuals=gns.residuals(),
        checks={"gns": gns.passed},
    )
    return report, None


def _cmd_bench(args: argparse.Namespace, config: RuntimeConfig) -> tuple[Report, str | None]:
    rows = benchmark_permanent(args.min_order, args.max_order, args.reps, config.threads)
    checks: dict[str, bool] = {}
    if args.max_order > MONOTONE_FROM_ORDER:
        checks["monotone_cost"] = monotone_cost(rows)
    report = Report(
        command="bench-permanent",
        argv=(),
        inputs_digest="",
        results={"rows": [[r.n, r.method, r.checksum] for r in rows]},
        checks=checks,
        timings={f"{r.method}_n{r.n}": r.seconds for r in rows},
    )
    if args.output_format in ("csv", "text"):
        return report, rows_to_csv(rows).rstrip("\n")
    return report, None


_COMMANDS: dict[str, Callable[[argparse.Namespace, RuntimeConfig], tuple[Report, str | None]]] = {
    "amplitude": _cmd_amplitude,
    "rdm": _cmd_rdm,
    "entropy": _cmd_entropy,
    "verify-equivalence": _cmd_verify_equivalence,
    "verify-gns": _cmd_verify_gns,
    "bench-permanent": _cmd_bench,
}

_CSV_COMMANDS = ("rdm", "entropy", "bench-permanent")


def run_command(argv: Sequence[str], env_path: str | Path | None = None) -> CommandResult:
    """Parse ``argv``, run the subcommand and render its output.

    Never raises for bad input; problems become exit code 2.
    """
    argv = list(argv)
    try:
        args = build_parser().parse_args(argv)
        config = load_config(env_path).with_overrides(
            threads=args.threads, tolerance=args.tolerance
        )
        if args.output_format == "csv" and args.command not in _CSV_COMMANDS:
            raise ValueError(f"--format csv is not available for {args.command}")
        started = time.perf_counter()
        report, rendered = _COMMANDS[args.command](args, config)
        elapsed = time.perf_counter() - started
    except (ValueError, OSError) as exc:
        logger.error("%s", exc)
        return CommandResult(EXIT_USAGE, None, "")
    except SystemExit as exc:
        # --help exits 0 from inside argparse
        code = exc.code if isinstance(exc.code, int) else EXIT_USAGE
        return CommandResult(code, None, "")

    report = replace(report, argv=tuple(argv), seconds=elapsed)
    if args.output_format == "json":
        output = report.to_json()
    elif rendered is not None:
        output = rendered
    else:
        output = report.to_text()
    exit_code = EXIT_PASS if report.passed else EXIT_FAILURE
    logger.info("%s finished in %.3f s: %s", report.command, elapsed,
                "pass" if report.passed else "FAIL")
    return CommandResult(exit_code, report, output)


def main(argv: Sequence[str] | None = None) -> None:
    """Entry point for ``python -m idemrdm``."""
    argv = sys.argv[1:] if argv is None else argv
    try:
        level = load_config().logging_level
    except ValueError:
        level = logging.INFO
    setup_logging(level)
    result = run_command(argv)
    if result.output:
        print(result.output)
    raise SystemExit(result.exit_code)
