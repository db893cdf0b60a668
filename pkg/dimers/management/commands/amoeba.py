from ...amoeba import spectral_report
from ...conf import dimers_setting
from ...rendering import amoeba_svg, dumps
from ..base import DimerCommand, polynomial_argument


class Command(DimerCommand):
    help = "Rasterise the amoeba of P(z, w) and report its complement components as JSON."

    def add_command_arguments(self, parser):
        polynomial_argument(parser)
        parser.add_argument(
            "--window",
            type=float,
            default=None,
            help=f"Half-width of the square window (default: fitted to P, at least {dimers_setting('AMOEBA_WINDOW')}).",
        )
        parser.add_argument(
            "--size",
            type=int,
            default=None,
            help=f"Raster cells per side (default: {dimers_setting('AMOEBA_RASTER')}).",
        )
        parser.add_argument("--svg", type=str, default=None, help="Draw the raster as SVG to this file (default: none).")

    def run(self, **options):
        poly = self.load_polynomial(options["polynomial"])
        report = spectral_report(poly, options["window"], options["size"])
        raster = report.raster
        payload = {
            "polynomial": str(poly),
            "window": [float(raster.xs[0]), float(raster.xs[-1]), float(raster.ys[0]), float(raster.ys[-1])],
            "size": len(raster.xs),
            "newton_polygon": [list(v) for v in report.polygon.vertices],
            "bounded": len(raster.bounded),
            "unbounded": len(raster.unbounded),
            "components": [
                {
                    "label": c.label,
                    "bounded": c.bounded,
                    "cells": c.cells,
                    "point": list(c.point),
                    "slope": list(c.lattice_point),
                    "gradient": list(c.gradient),
                }
                for c in raster.components
            ],
            "phases": [{"slope": list(k), "phase": v} for k, v in sorted(report.phases.items())],
        }
        self.emit(dumps(payload), options["output"], "amoeba report")
        if options["svg"]:
            self.side_file(options["svg"], amoeba_svg(raster, f"amoeba of {poly}"), "amoeba")
