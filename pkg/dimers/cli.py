"""Single command-line entry point: ``python -m dimers <subcommand> ...``.

Every subcommand is a Django management command of the ``dimers`` app
(hyphenated names map to the underscored modules), so ``manage.py count``
and ``python -m dimers count`` behave the same.  The return value of
:func:`run` is the process exit code: 0 on success, 1 for malformed input or
a parse error, 2 for infeasible input, 3 when a numeric tolerance is missed.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Sequence, TextIO

import dimerlab

SUBCOMMANDS = (
    "count",
    "tileable",
    "height",
    "sample",
    "stats",
    "charpoly",
    "torus-z",
    "height-dist",
    "amoeba",
    "ronkin",
    "free-energy",
    "surface-tension",
    "phase",
    "limit-shape",
    "fluctuations",
)
DATABASE_FLAGS = ("--save", "--from-db")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dimerlab",
        description="Exact, spectral and statistical computations for planar bipartite dimer models.",
        epilog="Run 'dimerlab <subcommand> --help' for the flags of one subcommand.",
    )
    parser.add_argument("--version", action="version", version=f"dimerlab {dimerlab.__version__}")
    parser.add_argument("--threads", type=int, default=None, help="Worker thread cap for every subcommand (default: 1).")
    parser.add_argument("--seed", type=int, default=None, help="Master random seed for every subcommand (default: 0).")
    parser.add_argument("subcommand", choices=SUBCOMMANDS, help="What to compute.")
    parser.add_argument("arguments", nargs=argparse.REMAINDER, help="Flags of the subcommand.")
    return parser


def _prepare_database() -> None:
    from django.conf import settings
    from django.core.management import call_command

    Path(settings.DATABASES["default"]["NAME"]).parent.mkdir(parents=True, exist_ok=True)
    call_command("migrate", "dimers", verbosity=0, interactive=False)


def run(argv: Sequence[str] | None = None, stdout: TextIO | None = None, stderr: TextIO | None = None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        namespace = parser.parse_args(list(sys.argv[1:] if argv is None else argv))
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1

    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "dimerlab.settings")
    import django
    from django.core.management import call_command
    from django.core.management.base import CommandError

    django.setup()

    arguments = list(namespace.arguments)
    overrides = {}
    for flag in ("seed", "threads"):
        value = getattr(namespace, flag)
        if value is not None and f"--{flag}" not in arguments:
            overrides[flag] = value
    try:
        if any(flag in arguments for flag in DATABASE_FLAGS):
            _prepare_database()
        call_command(namespace.subcommand.replace("-", "_"), *arguments, stdout=stdout, stderr=stderr, **overrides)
    except CommandError as exc:
        stderr.write(f"dimerlab {namespace.subcommand}: {exc}\n")
        return exc.returncode
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    return 0


def main() -> None:
    sys.exit(run())


__all__ = ["SUBCOMMANDS", "build_parser", "main", "run"]
