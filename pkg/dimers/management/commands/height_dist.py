from ...exceptions import MalformedSpec
from ...rendering import csv_text, dumps
from ...torus import fit_discrete_gaussian, height_change_distribution
from ..base import DimerCommand, region_argument


class Command(DimerCommand):
    help = "Number of n x n torus covers per height change (hx, hy), as a CSV matrix."

    def add_command_arguments(self, parser):
        region_argument(parser, torus=False)
        parser.add_argument("--n", type=int, required=True, help="Torus size n (no default).")
        parser.add_argument(
            "--fit",
            type=str,
            default=None,
            help="Write the quadratic log fit around the mode as JSON to this file (default: none).",
        )
        parser.add_argument("--radius", type=int, default=1, help="Half-width of the fit window (default: 1).")

    def run(self, **options):
        if options["n"] < 1:
            raise MalformedSpec("--n must be a positive integer.")
        domain = self.load_graph(options["region"])
        counts = height_change_distribution(domain, options["n"])
        if not counts:
            raise MalformedSpec("The torus has no covers.")
        xs = range(min(k[0] for k in counts), max(k[0] for k in counts) + 1)
        ys = range(min(k[1] for k in counts), max(k[1] for k in counts) + 1)
        header = ["hx\\hy"] + [str(hy) for hy in ys]
        rows = [[hx] + [counts.get((hx, hy), 0) for hy in ys] for hx in xs]
        self.emit(csv_text(header, rows), options["output"], "height-change distribution")
        if options["fit"]:
            fit = fit_discrete_gaussian(counts, options["radius"])
            payload = {
                "n": options["n"],
                "centre": list(fit.centre),
                "c0": fit.c0,
                "curvature": fit.curvature,
                "r_squared": fit.r_squared,
            }
            self.side_file(options["fit"], dumps(payload), "fit")
