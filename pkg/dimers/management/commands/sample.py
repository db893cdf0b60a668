import math
from pathlib import Path

from django.db import transaction

from ...models import Region, SampleRecord
from ...regions import region_to_json
from ...rendering import dumps, tiling_svg
from ...sampler import METHOD_EXACT, METHODS, sample_batch
from ..base import DimerCommand, region_argument


def numbered(path: str, index: int, count: int) -> str:
    if count == 1:
        return path
    target = Path(path)
    return str(target.with_name(f"{target.stem}-{index}{target.suffix}"))


class Command(DimerCommand):
    help = "Draw random dimer covers of a region and write them as matching JSON."

    def add_command_arguments(self, parser):
        region_argument(parser)
        parser.add_argument("--count", type=int, default=1, help="Number of samples (default: 1).")
        parser.add_argument(
            "--method",
            choices=METHODS,
            default=METHOD_EXACT,
            help="Exact sequential sampling or Glauber face flips (default: exact).",
        )
        parser.add_argument(
            "--steps",
            type=int,
            default=None,
            help="Flip proposals per Glauber chain (default: the configured burn-in sweeps times the face count).",
        )
        parser.add_argument(
            "--svg",
            type=str,
            default=None,
            help="Draw the samples as SVG; with several samples '-k' is added to the file name (default: none).",
        )
        parser.add_argument(
            "--save",
            type=str,
            default=None,
            help="Store the region and the batch in the database under this name (default: none).",
        )

    def run(self, **options):
        g = self.load_graph(options["region"], options["torus_n"])
        batch = sample_batch(
            g,
            options["count"],
            options["seed"],
            options["method"],
            options["threads"],
            steps=options["steps"],
        )
        payload = {
            "region": g.name,
            "method": batch.method,
            "seed": batch.seed,
            "count": len(batch),
            "samples": [sorted(m) for m in batch.matchings],
        }
        if all(math.isfinite(p) for p in batch.log_probabilities):
            payload["log_probabilities"] = list(batch.log_probabilities)
        self.emit(dumps(payload), options["output"], "samples")

        if options["svg"]:
            for index, matching in enumerate(batch.matchings):
                path = numbered(options["svg"], index, len(batch))
                self.side_file(path, tiling_svg(g, matching, f"{g.name or 'sample'} #{index}"), "tiling")

        if options["save"]:
            with transaction.atomic():
                region = Region.store(options["save"], region_to_json(g))
                region.samples.filter(method=batch.method, seed=batch.seed).delete()
                SampleRecord.objects.bulk_create(
                    SampleRecord(region=region, method=batch.method, seed=batch.seed, index=k, matching=sorted(m))
                    for k, m in enumerate(batch.matchings)
                )
            self.stdout.write(self.style.SUCCESS(f"Saved {len(batch)} samples as {options['save']!r}."))
