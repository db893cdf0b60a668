from django.core.management.base import CommandError

from ...exceptions import MalformedSpec
from ...kasteleyn import edge_probabilities, kasteleyn_matrix
from ...models import Region
from ...rendering import csv_text
from ...sampler import METHOD_EXACT, METHODS, SampleBatch, StatsQuery, collect_stats, sample_batch
from ..base import DimerCommand


class Command(DimerCommand):
    help = "Estimate edge frequencies, face height moments and label densities from samples (CSV)."

    def add_command_arguments(self, parser):
        parser.add_argument("region", nargs="?", default=None, help="Path to a region JSON document.")
        parser.add_argument(
            "--torus-n",
            type=int,
            default=None,
            help="Build the n x n cover of a torus fundamental domain (default: none).",
        )
        parser.add_argument(
            "--from-db",
            type=str,
            default=None,
            help="Use the batch stored by 'sample --save NAME' instead of sampling (default: none).",
        )
        parser.add_argument("--count", type=int, default=1000, help="Number of samples (default: 1000).")
        parser.add_argument("--method", choices=METHODS, default=METHOD_EXACT, help="Sampling method (default: exact).")
        parser.add_argument("--steps", type=int, default=None, help="Flip proposals per Glauber chain (default: burn-in).")
        parser.add_argument(
            "--compare",
            action="store_true",
            help="Add exact edge probabilities and z-scores (finite regions only).",
        )
        parser.add_argument(
            "--faces",
            type=int,
            nargs="*",
            default=(),
            help="Faces whose height mean and variance are reported (default: none).",
        )
        parser.add_argument("--base-face", type=int, default=None, help="Face of height 0 (default: first bounded face).")
        parser.add_argument("--heights", type=str, default=None, help="CSV file for the face height moments (default: none).")
        parser.add_argument("--grid", type=int, default=None, help="Bins per side of the label density grid (default: none).")
        parser.add_argument("--density", type=str, default=None, help="CSV file for the label densities (default: none).")

    def batch(self, **options) -> SampleBatch:
        if options["from_db"]:
            try:
                region = Region.objects.get(name=options["from_db"])
            except Region.DoesNotExist as exc:
                raise CommandError(f"No stored region named {options['from_db']!r}.") from exc
            records = region.samples.filter(method=options["method"])
            if options["seed"] is not None:
                records = records.filter(seed=options["seed"])
            records = list(records)
            if not records:
                raise MalformedSpec(f"No stored {options['method']} samples for {region.name!r}.")
            return SampleBatch(
                graph=region.graph(),
                matchings=tuple(frozenset(r.matching) for r in records),
                seed=records[0].seed,
                method=options["method"],
            )
        if not options["region"]:
            raise CommandError("Give a region file or --from-db NAME.")
        g = self.load_graph(options["region"], options["torus_n"])
        return sample_batch(
            g, options["count"], options["seed"], options["method"], options["threads"], steps=options["steps"]
        )

    def run(self, **options):
        batch = self.batch(**options)
        g = batch.graph
        query = StatsQuery(faces=tuple(options["faces"]), grid=options["grid"], base_face=options["base_face"])
        report = collect_stats(batch, query)

        header = ["edge", "label", "frequency", "stderr"]
        columns = [
            list(range(len(g.edges))),
            [edge.label for edge in g.edges],
            report.edge_frequency,
            report.edge_stderr,
        ]
        if options["compare"]:
            probabilities = edge_probabilities(kasteleyn_matrix(g))
            header += ["probability", "z"]
            columns += [probabilities, report.z_scores(probabilities)]
        self.emit(csv_text(header, zip(*columns)), options["output"], "edge statistics")

        if options["heights"]:
            rows = [(face, report.height_mean[face], report.height_variance[face]) for face in query.faces]
            self.side_file(options["heights"], csv_text(("face", "mean", "variance"), rows), "height moments")
        if options["density"] and report.density:
            rows = []
            for label, grid in sorted(report.density.items()):
                for (ix, iy), value in _cells(grid):
                    rows.append((label, ix, iy, value))
            self.side_file(options["density"], csv_text(("label", "ix", "iy", "density"), rows), "densities")


def _cells(grid):
    for ix in range(grid.shape[0]):
        for iy in range(grid.shape[1]):
            yield (ix, iy), float(grid[ix, iy])
