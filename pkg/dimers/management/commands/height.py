from ...exceptions import MalformedSpec
from ...graphs import check_perfect
from ...heights import height_function, require_tileable
from ...rendering import csv_text, tiling_svg
from ..base import DimerCommand, region_argument


class Command(DimerCommand):
    help = "Write the height function of a dimer cover as CSV (face, x, y, height)."

    def add_command_arguments(self, parser):
        region_argument(parser)
        parser.add_argument(
            "--matching",
            type=str,
            default=None,
            help="Matching JSON to use; without it a maximum matching of the region is used (default: none).",
        )
        parser.add_argument(
            "--index",
            type=int,
            default=0,
            help="Which cover of the matching document to use (default: 0).",
        )
        parser.add_argument(
            "--base-face",
            type=int,
            default=None,
            help="Face whose height is 0 (default: the first bounded face).",
        )
        parser.add_argument(
            "--svg",
            type=str,
            default=None,
            help="Also draw the cover as SVG to this file (default: none).",
        )

    def run(self, **options):
        g = self.load_graph(options["region"], options["torus_n"])
        if options["matching"]:
            covers = self.load_matchings(options["matching"])
            if not 0 <= options["index"] < len(covers):
                raise MalformedSpec(f"The matching document has no cover {options['index']}.")
            matching = check_perfect(g, covers[options["index"]])
        else:
            matching = require_tileable(g)
        heights = height_function(g, matching, f0=options["base_face"], cut_seams=g.is_periodic)
        rows = []
        for face_index in sorted(heights.values):
            x, y = g.face_centroid(g.faces[face_index])
            rows.append((face_index, x, y, heights.scaled(face_index)))
        self.emit(csv_text(("face", "x", "y", "height"), rows), options["output"], "heights")
        if options["svg"]:
            self.side_file(options["svg"], tiling_svg(g, matching), "tiling")
