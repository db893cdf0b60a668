import json
from pathlib import Path

import numpy as np
from django.core.management.base import CommandError

from ...conf import dimers_setting
from ...exceptions import MalformedSpec
from ...limit_shape import (
    FACET_ORDER,
    facet_boundary_heights,
    fit_tangency_curve,
    frozen_boundary,
    heart_polygon,
    height_from_slopefield,
    hexagon_boundary_heights,
    hexagon_polygon,
    minimize_surface_tension,
    polygon_from_json,
    slope_field,
    tangency_residuals,
)
from ...rendering import csv_text, dumps, limit_shape_svg
from ..base import DimerCommand


class Command(DimerCommand):
    help = "Limit shape of a lozenge-tiled polygon: slope field CSV, height CSV and frozen-boundary SVG."

    def add_command_arguments(self, parser):
        parser.add_argument("polygon", nargs="?", default=None, help="Path to a polygon JSON document.")
        parser.add_argument(
            "--hexagon",
            type=float,
            nargs=3,
            metavar=("A", "B", "C"),
            default=None,
            help="Use the A x B x C hexagon instead of a polygon file (default: none).",
        )
        parser.add_argument("--heart", action="store_true", help="Use the built-in nine-sided heart polygon.")
        parser.add_argument(
            "--curve",
            type=str,
            default=None,
            help="Curve Q0(u, v) as polynomial text in z and w (default: fitted to the polygon edges).",
        )
        parser.add_argument("--grid", type=int, default=101, help="Slope-field nodes per side (default: 101).")
        parser.add_argument(
            "--boundary-grid",
            type=int,
            default=201,
            help="Nodes per side used to trace the frozen boundary (default: 201).",
        )
        parser.add_argument("--heights", type=str, default=None, help="CSV file for the integrated heights (default: none).")
        parser.add_argument("--svg", type=str, default=None, help="SVG file for the frozen-boundary overlay (default: none).")
        parser.add_argument("--report", type=str, default=None, help="JSON summary file (default: none).")
        parser.add_argument("--minimize", action="store_true", help="Also minimise the surface tension on a mesh.")
        parser.add_argument("--mesh", type=float, default=0.1, help="Mesh size for --minimize (default: 0.1).")
        parser.add_argument(
            "--minimizer-output",
            type=str,
            default=None,
            help="CSV file for the minimiser's vertex heights (default: none).",
        )
        parser.add_argument(
            "--max-iter",
            type=int,
            default=None,
            help=f"Minimiser iteration cap (default: {dimers_setting('MINIMIZER_MAX_ITER')}).",
        )

    def polygon(self, options):
        chosen = [options["polygon"] is not None, options["hexagon"] is not None, options["heart"]]
        if sum(chosen) != 1:
            raise CommandError("Give exactly one of a polygon file, --hexagon or --heart.")
        if options["hexagon"]:
            return hexagon_polygon(*options["hexagon"])
        if options["heart"]:
            return heart_polygon()
        try:
            doc = json.loads(Path(options["polygon"]).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise MalformedSpec(f"Cannot read polygon {options['polygon']}: {exc}") from exc
        return polygon_from_json(doc)

    def run(self, **options):
        polygon = self.polygon(options)
        curve = options["curve"] or fit_tangency_curve(polygon).curve
        field = slope_field(curve, polygon, options["grid"])

        rows = []
        for j, i in np.argwhere(field.inside):
            phase = "liquid" if field.liquid[j, i] else "frozen"
            facet = FACET_ORDER[field.facet[j, i]] if field.facet[j, i] >= 0 else ""
            rows.append((field.xs[i], field.ys[j], field.s[j, i], field.t[j, i], phase, facet))
        self.emit(csv_text(("x", "y", "s", "t", "phase", "facet"), rows), options["output"], "slope field")

        surface = None
        if options["heights"] or options["report"]:
            surface = height_from_slopefield(field)
        if options["heights"]:
            heights = [
                (field.xs[i], field.ys[j], surface.h[j, i]) for j, i in np.argwhere(np.isfinite(surface.h))
            ]
            self.side_file(options["heights"], csv_text(("x", "y", "h"), heights), "heights")

        boundary = None
        if options["svg"] or options["report"]:
            boundary = frozen_boundary(curve, polygon, options["boundary_grid"])
        if options["svg"]:
            self.side_file(options["svg"], limit_shape_svg(polygon, boundary, field), "limit shape")

        minimizer = None
        if options["minimize"]:
            if options["hexagon"]:
                boundary_heights = hexagon_boundary_heights(polygon)
            else:
                boundary_heights = facet_boundary_heights(field)
            minimizer = minimize_surface_tension(
                polygon, boundary_heights, options["mesh"], max_iter=options["max_iter"]
            )
            if options["minimizer_output"]:
                vertex_rows = [(x, y, h) for (x, y), h in zip(minimizer.vertices, minimizer.heights)]
                self.side_file(options["minimizer_output"], csv_text(("x", "y", "h"), vertex_rows), "minimiser heights")

        if options["report"]:
            payload = {
                "polygon": polygon.to_json(),
                "curve": field.curve.to_json(),
                "grid": options["grid"],
                "liquid_fraction": float(field.liquid.sum() / max(field.inside.sum(), 1)),
                "height_residual": surface.residual,
                "boundary_points": int(len(boundary.points)),
                "tangency_residuals": tangency_residuals(boundary, polygon),
            }
            if minimizer is not None:
                payload["minimizer"] = {
                    "objective": minimizer.objective,
                    "residual": minimizer.residual,
                    "iterations": len(minimizer.history),
                }
            self.side_file(options["report"], dumps(payload), "report")
