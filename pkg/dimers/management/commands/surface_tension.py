from django.core.management.base import CommandError

from ...amoeba import surface_tension, surface_tension_honeycomb
from ...rendering import csv_text
from ..base import DimerCommand, pair, polynomial_argument

METHODS = ("legendre", "lobachevsky")
UNIFORM_HONEYCOMB = {(0, 0): 1, (1, 0): 1, (0, 1): 1}


class Command(DimerCommand):
    help = "Surface tension sigma(s, t) at slopes inside the Newton polygon (CSV)."

    def add_command_arguments(self, parser):
        polynomial_argument(parser)
        parser.add_argument(
            "--slope",
            type=pair,
            action="append",
            required=True,
            help="Slope s,t; repeat for several slopes (no default).",
        )
        parser.add_argument(
            "--method",
            choices=METHODS,
            default="legendre",
            help="Legendre dual of the Ronkin function, or the closed form for the uniform honeycomb "
            "(default: legendre).",
        )

    def run(self, **options):
        poly = self.load_polynomial(options["polynomial"])
        if options["method"] == "lobachevsky" and poly.coefficients != UNIFORM_HONEYCOMB:
            raise CommandError("The Lobachevsky closed form applies to the honeycomb polynomial 1 + z + w only.")
        rows = []
        for s, t in options["slope"]:
            if options["method"] == "lobachevsky":
                value = surface_tension_honeycomb(s, t, method="dilog")
            else:
                value = surface_tension(poly, s, t)
            rows.append((s, t, value))
        self.emit(csv_text(("s", "t", "sigma"), rows), options["output"], "surface tension")
