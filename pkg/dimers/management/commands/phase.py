from ...amoeba import amoeba_raster, phase_classify, spectral_report
from ...rendering import csv_text
from ..base import DimerCommand, pair, polynomial_argument


class Command(DimerCommand):
    help = (
        "Classify slopes or points of the plane as frozen, liquid or gas (CSV). "
        "Without queries every lattice slope of the Newton polygon is classified."
    )

    def add_command_arguments(self, parser):
        polynomial_argument(parser)
        parser.add_argument("--slope", type=pair, action="append", default=None, help="Slope s,t; repeatable (default: none).")
        parser.add_argument("--point", type=pair, action="append", default=None, help="Point X,Y; repeatable (default: none).")
        parser.add_argument("--window", type=float, default=None, help="Amoeba window half-width (default: fitted to P).")
        parser.add_argument("--size", type=int, default=None, help="Amoeba raster cells per side (default: configured).")

    def run(self, **options):
        poly = self.load_polynomial(options["polynomial"])
        header = ("query", "phase", "s", "t", "X", "Y")
        rows = []
        if not options["slope"] and not options["point"]:
            report = spectral_report(poly, options["window"], options["size"])
            for (s, t), phase in sorted(report.phases.items()):
                rows.append(("slope", phase, s, t, None, None))
            self.emit(csv_text(header, rows), options["output"], "phases")
            return
        raster = amoeba_raster(poly, options["window"], options["size"]) if options["slope"] else None
        for slope in options["slope"] or ():
            label = phase_classify(poly, slope=slope, raster=raster)
            point = label.point or (None, None)
            rows.append(("slope", label.phase, slope[0], slope[1], point[0], point[1]))
        for point in options["point"] or ():
            label = phase_classify(poly, point=point)
            rows.append(("point", label.phase, label.slope[0], label.slope[1], point[0], point[1]))
        self.emit(csv_text(header, rows), options["output"], "phases")
