from ...amoeba import free_energy
from ...conf import dimers_setting
from ..base import DimerCommand, polynomial_argument


class Command(DimerCommand):
    help = "Free energy R(0, 0) of the periodic dimer model with characteristic polynomial P."

    def add_command_arguments(self, parser):
        polynomial_argument(parser)
        parser.add_argument(
            "--per-site",
            type=int,
            default=1,
            help="Divide by this many sites, e.g. the vertex count of the fundamental domain (default: 1).",
        )
        parser.add_argument("--digits", type=int, default=6, help="Decimal places printed (default: 6).")
        parser.add_argument(
            "--tol",
            type=float,
            default=None,
            help=f"Quadrature tolerance (default: {dimers_setting('RONKIN_TOL')}).",
        )

    def run(self, **options):
        poly = self.load_polynomial(options["polynomial"])
        value = free_energy(poly, options["per_site"], tol=options["tol"])
        self.emit(f"{value:.{options['digits']}f}\n", options["output"], "free energy")
