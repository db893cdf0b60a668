from ...amoeba import newton_polygon
from ...rendering import dumps
from ...torus import characteristic_polynomial
from ..base import DimerCommand, region_argument


class Command(DimerCommand):
    help = "Characteristic polynomial P(z, w) of a torus fundamental domain, as JSON."

    def add_command_arguments(self, parser):
        region_argument(parser, torus=False)

    def run(self, **options):
        domain = self.load_graph(options["region"])
        poly = characteristic_polynomial(domain)
        payload = {
            "region": domain.name,
            "polynomial": str(poly),
            "coefficients": poly.to_json(),
            "newton_polygon": [list(v) for v in newton_polygon(poly).vertices],
        }
        self.emit(dumps(payload), options["output"], "characteristic polynomial")
