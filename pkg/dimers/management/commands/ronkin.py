from ...amoeba import ronkin, ronkin_gradient
from ...conf import dimers_setting
from ...rendering import csv_text
from ..base import DimerCommand, pair, polynomial_argument


class Command(DimerCommand):
    help = "Ronkin function R(X, Y) and its gradient at points of the plane (CSV)."

    def add_command_arguments(self, parser):
        polynomial_argument(parser)
        parser.add_argument(
            "--at",
            type=pair,
            action="append",
            default=None,
            help="Point X,Y; repeat for several points (default: 0,0).",
        )
        parser.add_argument(
            "--tol",
            type=float,
            default=None,
            help=f"Quadrature tolerance (default: {dimers_setting('RONKIN_TOL')}).",
        )

    def run(self, **options):
        poly = self.load_polynomial(options["polynomial"])
        rows = []
        for X, Y in options["at"] or [(0.0, 0.0)]:
            s, t = ronkin_gradient(poly, X, Y)
            rows.append((X, Y, ronkin(poly, X, Y, tol=options["tol"]), s, t))
        self.emit(csv_text(("X", "Y", "ronkin", "s", "t"), rows), options["output"], "Ronkin values")
