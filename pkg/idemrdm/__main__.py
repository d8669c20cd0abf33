"""idemrdm CLI entry point.

Usage:
    python -m idemrdm <command> [options]    # see ``python -m idemrdm --help``
"""

from idemrdm.cli import main

main()
