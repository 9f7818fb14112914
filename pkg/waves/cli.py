"""
Console entry point: `idewave <subcommand> --config PATH [options]`.

Dispatches to the waves management commands and turns every outcome into
an exit code (0 success, 1 failed check with report written, 2 invalid
input).
"""

import os
import sys
from typing import List, Optional

SUBCOMMANDS = ('speed', 'roots', 'bounds', 'profile', 'rectangle', 'converge', 'simulate')

USAGE = "usage: idewave {%s} --config PATH [--out DIR] [--seed N] [options]" % ','.join(SUBCOMMANDS)


def run_command(argv: List[str]) -> int:
    """Run one subcommand and return its exit code."""
    if not argv or argv[0] in ('-h', '--help'):
        sys.stderr.write(USAGE + '\n')
        return 0 if argv else 2
    if argv[0] not in SUBCOMMANDS:
        sys.stderr.write(f"idewave: unknown subcommand '{argv[0]}'\n{USAGE}\n")
        return 2

    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'idewave.settings')
    from django.core.management import execute_from_command_line

    try:
        execute_from_command_line(['idewave'] + list(argv))
    except SystemExit as exc:
        code = exc.code
        if code is None:
            return 0
        return code if isinstance(code, int) else 2
    return 0


def main(argv: Optional[List[str]] = None) -> None:
    sys.exit(run_command(sys.argv[1:] if argv is None else argv))
