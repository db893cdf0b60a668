from __future__ import annotations

import argparse
import json
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from ..conf import dimers_setting
from ..exceptions import DimerError, MalformedSpec
from ..graphs import BipartiteGraph, torus_cover
from ..polynomials import LaurentPoly2, polynomial
from ..regions import load_region
from ..rendering import write_text
from ..torus import characteristic_polynomial


class DimerCommand(BaseCommand):
    """Shared flags and error translation for the dimer subcommands.

    Subclasses implement ``add_command_arguments`` and ``run``; a DimerError
    raised by the library leaves the command as a CommandError carrying the
    error's exit code.
    """

    requires_system_checks = []
    requires_migrations_checks = False

    def add_arguments(self, parser):
        parser.add_argument(
            "--seed",
            type=int,
            default=None,
            help=f"Master random seed (default: {dimers_setting('SEED')}).",
        )
        parser.add_argument(
            "--threads",
            type=int,
            default=None,
            help=f"Upper bound on worker threads (default: {dimers_setting('SAMPLER_THREADS')}).",
        )
        parser.add_argument(
            "--output",
            "-o",
            type=str,
            default="-",
            help="Main output file; '-' writes to standard output (default: -).",
        )
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def handle(self, *args, **options):
        try:
            self.run(**options)
        except DimerError as exc:
            raise CommandError(str(exc), returncode=exc.exit_code) from exc

    def run(self, **options):
        raise NotImplementedError

    # --- helpers shared by the subcommands ------------------------------------------

    def emit(self, text: str, path: str | None = "-", what: str = "output") -> None:
        """Plain text to stdout, or to a file with a one-line confirmation."""
        if path in (None, "-", ""):
            self.stdout.write(text, ending="" if text.endswith("\n") else "\n")
            return
        write_text(path, text)
        self.stdout.write(self.style.SUCCESS(f"Wrote {what} to {path}."))

    def side_file(self, path: str | None, text: str, what: str) -> None:
        if path:
            write_text(path, text)
            self.stdout.write(self.style.SUCCESS(f"Wrote {what} to {path}."))

    def load_graph(self, path: str, torus_n: int | None = None) -> BipartiteGraph:
        g = load_region(path)
        if torus_n is not None:
            if not g.is_periodic:
                raise MalformedSpec("--torus-n needs a torus region document.")
            g = torus_cover(g, torus_n)
        return g

    def load_matchings(self, path: str) -> list[frozenset[int]]:
        """Covers from a matching document (as written by `sample`) or a bare JSON list of edge indices."""
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise MalformedSpec(f"Cannot read matchings from {path}: {exc}") from exc
        rows = doc.get("samples") if isinstance(doc, dict) else doc
        if not isinstance(rows, list):
            raise MalformedSpec(f"{path} holds no matchings.")
        if rows and all(isinstance(v, int) for v in rows):
            rows = [rows]
        try:
            return [frozenset(int(v) for v in row) for row in rows]
        except (TypeError, ValueError) as exc:
            raise MalformedSpec(f"Malformed matching in {path}: {exc}") from exc

    def load_polynomial(self, value: str) -> LaurentPoly2:
        """A polynomial given as text, as a polynomial JSON file or through a torus region document."""
        candidate = Path(value)
        if value.endswith(".json") and candidate.exists():
            try:
                doc = json.loads(candidate.read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                raise MalformedSpec(f"{value} is not valid JSON: {exc}") from exc
            if "lattice" in doc:
                return characteristic_polynomial(load_region(candidate))
            return polynomial(doc)
        return polynomial(value)


def region_argument(parser, torus: bool = True) -> None:
    parser.add_argument("region", type=str, help="Path to a region JSON document.")
    if torus:
        parser.add_argument(
            "--torus-n",
            type=int,
            default=None,
            help="Build the n x n cover of a torus fundamental domain (default: none).",
        )


def polynomial_argument(parser) -> None:
    parser.add_argument(
        "polynomial",
        type=str,
        help="Polynomial text such as '1 + z + w', a polynomial JSON file or a torus region JSON file.",
    )


def pair(text: str) -> tuple[float, float]:
    try:
        first, second = (float(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}") from exc
    return (first, second)


__all__ = ["DimerCommand", "pair", "polynomial_argument", "region_argument"]
