import math

from django.core.management.base import CommandError

from ...fluctuations import (
    empirical_moment,
    gff_second_moment,
    kinv_asymptotic,
    kinv_infinite,
    nearest_face,
    variance_log_fit,
    wick_comparison,
)
from ...rendering import csv_text
from ...sampler import METHOD_EXACT, METHOD_GLAUBER, sample_batch
from ..base import DimerCommand, pair

DEFAULT_KS = (100, 300, 1000, 3000, 10000)
DEFAULT_RADII = (10, 20, 40, 80)
# fractions of the two torus periods
DEFAULT_POINTS = ((0.3, 0.3), (0.55, 0.3), (0.3, 0.55), (0.55, 0.55))


class Command(DimerCommand):
    help = (
        "Height fluctuation checks as CSV rows (kind, key, value, reference, stderr): column variance "
        "against log k, K^-1 against its asymptotic form and, with a torus region, sampled moments "
        "against the free-field predictions."
    )

    def add_command_arguments(self, parser):
        parser.add_argument(
            "--theta",
            type=float,
            default=math.pi / 3,
            help="Angle theta_a of the a-edges (default: pi/3, uniform weights).",
        )
        parser.add_argument("--ks", type=int, nargs="*", default=DEFAULT_KS, help="Column lengths k (default: 100 ... 10000).")
        parser.add_argument("--radii", type=int, nargs="*", default=DEFAULT_RADII, help="Distances r (default: 10 20 40 80).")
        parser.add_argument(
            "--direction",
            type=pair,
            default=(1.0, 2.0),
            help="Lattice direction x,y along which K^-1 is compared (default: 1,2).",
        )
        parser.add_argument("--region", type=str, default=None, help="Torus region document for moments (default: none).")
        parser.add_argument("--torus-n", type=int, default=60, help="Torus cover size for moments (default: 60).")
        parser.add_argument("--samples", type=int, default=0, help="Samples for the moment rows; 0 skips them (default: 0).")
        parser.add_argument(
            "--point",
            type=pair,
            action="append",
            default=None,
            help="Four points u,v as fractions of the torus periods (default: 0.3,0.3 0.55,0.3 0.3,0.55 0.55,0.55).",
        )

    def run(self, **options):
        rows = []
        if options["ks"]:
            fit = variance_log_fit(options["theta"], options["ks"])
            for k, value in zip(fit.ks, fit.values):
                rows.append(("variance", k, value, fit.intercept + math.log(k) / math.pi**2, None))
            rows.append(("variance_slope", "", fit.slope, 1 / math.pi**2, None))

        dx, dy = options["direction"]
        for r in options["radii"]:
            x, y = int(round(r * dx)), int(round(r * dy))
            rows.append(("asymptotic", r, kinv_infinite(x, y), kinv_asymptotic(x, y), None))

        if options["samples"] > 0:
            rows.extend(self.moment_rows(options))
        self.emit(csv_text(("kind", "key", "value", "reference", "stderr"), rows), options["output"], "fluctuations")

    def moment_rows(self, options):
        if not options["region"]:
            raise CommandError("Moment rows need --region with a torus fundamental domain.")
        points = options["point"] or DEFAULT_POINTS
        if len(points) != 4:
            raise CommandError("Give exactly four --point values.")
        g = self.load_graph(options["region"], options["torus_n"])
        (ax, ay), (bx, by) = g.periods
        plane = [(u * ax + v * bx, u * ay + v * by) for u, v in points]
        faces = [nearest_face(g, p) for p in plane]
        method = METHOD_GLAUBER if g.is_periodic else METHOD_EXACT
        batch = sample_batch(g, options["samples"], options["seed"], method, options["threads"])

        z = [complex(*g.face_centroid(g.faces[f])) for f in faces]
        second = empirical_moment(g, [(faces[0], faces[1]), (faces[2], faces[3])], batch)
        rows = [("moment2", "12x34", second.mean, gff_second_moment(*z), second.stderr)]
        wick = wick_comparison(batch, [(faces[0], faces[1]), (faces[2], faces[3]), (faces[0], faces[2]), (faces[1], faces[3])])
        rows.append(("moment4", "wick", wick.fourth.mean, wick.prediction, wick.fourth.stderr))
        return rows
