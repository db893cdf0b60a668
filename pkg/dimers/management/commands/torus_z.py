from ...exceptions import MalformedSpec
from ...rendering import dumps, exact_text
from ...torus import torus_partition
from ..base import DimerCommand, region_argument


def class_key(cls) -> str:
    return f"{cls[0]}{cls[1]}"


class Command(DimerCommand):
    help = "Exact partition function of the n x n torus from the four twisted products, as JSON."

    def add_command_arguments(self, parser):
        region_argument(parser, torus=False)
        parser.add_argument("--n", type=int, required=True, help="Torus size n (no default).")
        parser.add_argument(
            "--class-signs",
            type=int,
            nargs=4,
            default=None,
            help="Signs of the winding classes 00 10 01 11 (default: resolved from a small torus).",
        )

    def run(self, **options):
        if options["n"] < 1:
            raise MalformedSpec("--n must be a positive integer.")
        domain = self.load_graph(options["region"])
        result = torus_partition(domain, options["n"], options["class_signs"])
        payload = {
            "region": domain.name,
            "n": result.n,
            "products": {class_key(k): exact_text(v) for k, v in sorted(result.products.items())},
            "class_signs": list(result.class_signs),
            "class_totals": {class_key(k): exact_text(v) for k, v in sorted(result.class_totals.items())},
            "total": exact_text(result.total),
        }
        self.emit(dumps(payload), options["output"], "torus partition function")
