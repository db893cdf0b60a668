from ...heights import tileable
from ...rendering import dumps
from ..base import DimerCommand, region_argument


class Command(DimerCommand):
    help = "Decide whether a region has a dimer cover; prints 'true' or 'false'."

    def add_command_arguments(self, parser):
        region_argument(parser)
        parser.add_argument(
            "--witness",
            type=str,
            default=None,
            help="Write a witness cover as matching JSON to this file when one exists (default: none).",
        )

    def run(self, **options):
        g = self.load_graph(options["region"], options["torus_n"])
        ok, matching = tileable(g)
        self.emit("true\n" if ok else "false\n", options["output"], "answer")
        if ok and options["witness"]:
            document = dumps({"region": g.name, "samples": [sorted(matching)]})
            self.side_file(options["witness"], document, "witness cover")
