from ...kasteleyn import edge_probabilities, kasteleyn_matrix, partition_function
from ...rendering import csv_text, exact_text
from ...torus import torus_partition
from ..base import DimerCommand, region_argument


class Command(DimerCommand):
    help = "Print the exact weighted number of dimer covers of a region."

    def add_command_arguments(self, parser):
        region_argument(parser)
        parser.add_argument(
            "--edges",
            type=str,
            default=None,
            help="Also write the exact single-edge probabilities as CSV to this file (default: none).",
        )

    def run(self, **options):
        g = self.load_graph(options["region"])
        torus_n = options["torus_n"]
        if torus_n is not None:
            result = torus_partition(g, torus_n)
            self.emit(exact_text(result.total) + "\n", options["output"], "count")
            return
        z = partition_function(g)
        self.emit(exact_text(z) + "\n", options["output"], "count")
        if options["edges"] and z:
            K = kasteleyn_matrix(g)
            rows = [
                (index, edge.white, edge.black, edge.label, probability)
                for index, (edge, probability) in enumerate(zip(g.edges, edge_probabilities(K)))
            ]
            self.side_file(
                options["edges"],
                csv_text(("edge", "white", "black", "label", "probability"), rows),
                "edge probabilities",
            )
