import json
import math
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, override_settings

from dimers.amoeba import surface_tension_honeycomb
from dimers.polynomials import polynomial
from dimers.regions import honeycomb_domain
from dimers.rendering import exact_text, read_csv
from dimers.torus import torus_partition

BOARD = {"version": 1, "lattice": "square", "rectangle": [8, 8]}
SMALL = {"version": 1, "lattice": "square", "rectangle": [2, 2]}
CORNERS = {"version": 1, "lattice": "square", "rectangle": [8, 8], "remove": [[0, 0], [7, 7]]}
HEXAGON = {"version": 1, "lattice": "honeycomb", "hexagon": [2, 2, 2]}
TORUS = {"version": 1, "lattice": "honeycomb", "torus": {"ell": 1}}


class CommandTestMixin:
    def setUp(self):
        super().setUp()
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()
        super().tearDown()

    def region(self, document, name="region.json") -> str:
        path = self.tmp / name
        path.write_text(json.dumps(document), encoding="utf-8")
        return str(path)

    def call(self, name, *args, **options) -> str:
        out = StringIO()
        call_command(name, *args, stdout=out, stderr=StringIO(), **options)
        return out.getvalue()


class CountCommandTests(CommandTestMixin, SimpleTestCase):
    def test_chessboard(self):
        self.assertEqual(self.call("count", self.region(BOARD)), "12988816\n")

    def test_edge_probabilities(self):
        edges = self.tmp / "edges.csv"
        self.call("count", self.region(SMALL), "--edges", str(edges))
        header, rows = read_csv(edges.read_text())
        self.assertEqual(header, ["edge", "white", "black", "label", "probability"])
        self.assertEqual([row[-1] for row in rows], ["1/2"] * 4)

    def test_torus(self):
        expected = exact_text(torus_partition(honeycomb_domain(), 2).total)
        self.assertEqual(self.call("count", self.region(TORUS), "--torus-n", "2").strip(), expected)

    def test_output_file(self):
        target = self.tmp / "count.txt"
        message = self.call("count", self.region(SMALL), "--output", str(target))
        self.assertEqual(target.read_text(), "2\n")
        self.assertIn("Wrote count", message)

    def test_malformed_region(self):
        path = self.tmp / "broken.json"
        path.write_text("{", encoding="utf-8")
        with self.assertRaises(CommandError) as caught:
            self.call("count", str(path))
        self.assertEqual(caught.exception.returncode, 1)


class TileabilityCommandTests(CommandTestMixin, SimpleTestCase):
    def test_corner_deleted_board(self):
        self.assertEqual(self.call("tileable", self.region(CORNERS)), "false\n")

    def test_witness(self):
        witness = self.tmp / "witness.json"
        out = self.call("tileable", self.region(SMALL), "--witness", str(witness))
        self.assertTrue(out.startswith("true\n"))
        document = json.loads(witness.read_text())
        self.assertEqual(len(document["samples"][0]), 2)

    def test_heights(self):
        header, rows = read_csv(self.call("height", self.region(SMALL)))
        self.assertEqual(header, ["face", "x", "y", "height"])
        self.assertEqual(len(rows), 1)
        self.assertEqual(rows[0][-1], "0")


class SampleCommandTests(CommandTestMixin, SimpleTestCase):
    def test_samples_document(self):
        document = json.loads(self.call("sample", self.region(HEXAGON), "--count", "3", "--seed", "4"))
        self.assertEqual(document["count"], 3)
        self.assertEqual(document["seed"], 4)
        self.assertEqual(len(document["samples"]), 3)
        for log_p in document["log_probabilities"]:
            self.assertAlmostEqual(log_p, -math.log(20), delta=1e-7)

    def test_same_seed_same_samples(self):
        path = self.region(HEXAGON)
        first = self.call("sample", path, "--count", "4", "--seed", "9")
        second = self.call("sample", path, "--count", "4", "--seed", "9", "--threads", "2")
        self.assertEqual(first, second)

    def test_svg_files(self):
        target = self.tmp / "tiling.svg"
        self.call("sample", self.region(HEXAGON), "--count", "2", "--svg", str(target))
        self.assertTrue((self.tmp / "tiling-0.svg").exists())
        self.assertTrue((self.tmp / "tiling-1.svg").exists())

    def test_untileable_region(self):
        with self.assertRaises(CommandError) as caught:
            self.call("sample", self.region(CORNERS))
        self.assertEqual(caught.exception.returncode, 2)

    def test_stats_with_exact_comparison(self):
        header, rows = read_csv(self.call("stats", self.region(SMALL), "--count", "40", "--compare"))
        self.assertEqual(header, ["edge", "label", "frequency", "stderr", "probability", "z"])
        self.assertEqual(len(rows), 4)
        self.assertTrue(all(row[4] == "1/2" for row in rows))

    def test_stats_needs_a_source(self):
        with self.assertRaises(CommandError):
            self.call("stats")


class StoredSampleTests(CommandTestMixin, TestCase):
    def test_save_then_stats(self):
        out = self.call("sample", self.region(HEXAGON), "--count", "5", "--seed", "2", "--save", "hex")
        self.assertIn("Saved 5 samples as 'hex'.", out)
        header, rows = read_csv(self.call("stats", "--from-db", "hex", "--seed", "2"))
        self.assertEqual(header[:3], ["edge", "label", "frequency"])
        self.assertAlmostEqual(sum(float(row[2]) for row in rows), 12.0)

    def test_unknown_name(self):
        with self.assertRaises(CommandError):
            self.call("stats", "--from-db", "missing")


class TorusCommandTests(CommandTestMixin, SimpleTestCase):
    def test_charpoly(self):
        document = json.loads(self.call("charpoly", self.region(TORUS)))
        self.assertEqual(polynomial(document["polynomial"]), polynomial("1 + z + w"))
        self.assertEqual(sorted(map(tuple, document["newton_polygon"])), [(0, 0), (0, 1), (1, 0)])

    def test_torus_z(self):
        document = json.loads(self.call("torus_z", self.region(TORUS), "--n", "3"))
        self.assertEqual(document["total"], exact_text(torus_partition(honeycomb_domain(), 3).total))
        self.assertEqual(document["n"], 3)

    def test_torus_z_size(self):
        with self.assertRaises(CommandError) as caught:
            self.call("torus_z", self.region(TORUS), "--n", "0")
        self.assertEqual(caught.exception.returncode, 1)

    def test_height_distribution(self):
        header, rows = read_csv(self.call("height_dist", self.region(TORUS), "--n", "3"))
        self.assertEqual(header[0], "hx\\hy")
        total = sum(int(v) for row in rows for v in row[1:])
        self.assertEqual(str(total), exact_text(torus_partition(honeycomb_domain(), 3).total))


class SpectralCommandTests(CommandTestMixin, SimpleTestCase):
    def test_free_energy(self):
        self.assertEqual(self.call("free_energy", "1 + z + w"), "0.323066\n")

    def test_free_energy_of_a_torus_document(self):
        self.assertEqual(self.call("free_energy", self.region(TORUS)), "0.323066\n")

    def test_bad_polynomial(self):
        with self.assertRaises(CommandError) as caught:
            self.call("free_energy", "1 + x")
        self.assertEqual(caught.exception.returncode, 1)

    def test_ronkin(self):
        header, rows = read_csv(self.call("ronkin", "1 + z + w", "--at", "5,0"))
        self.assertEqual(header, ["X", "Y", "ronkin", "s", "t"])
        self.assertAlmostEqual(float(rows[0][2]), 5.0, delta=1e-6)
        self.assertAlmostEqual(float(rows[0][3]), 1.0, delta=1e-6)

    def test_surface_tension(self):
        _, rows = read_csv(self.call("surface_tension", "1 + z + w", "--slope", "0.3,0.2", "--method", "lobachevsky"))
        self.assertAlmostEqual(float(rows[0][2]), surface_tension_honeycomb(0.3, 0.2), delta=1e-9)

    def test_closed_form_needs_the_uniform_honeycomb(self):
        with self.assertRaises(CommandError):
            self.call("surface_tension", "2 + z + w", "--slope", "0.3,0.2", "--method", "lobachevsky")

    def test_phase(self):
        _, rows = read_csv(self.call("phase", "1 + z + w", "--slope", "0,0", "--point", "0,0", "--size", "60"))
        self.assertEqual([row[1] for row in rows], ["frozen", "liquid"])

    def test_amoeba(self):
        svg = self.tmp / "amoeba.svg"
        report = self.tmp / "amoeba.json"
        self.call("amoeba", "1 + z + w", "--size", "60", "--svg", str(svg), "--output", str(report))
        document = json.loads(report.read_text())
        self.assertEqual(document["unbounded"], 3)
        self.assertEqual(document["bounded"], 0)
        self.assertTrue(svg.read_text().startswith("<?xml"))


class LimitShapeCommandTests(CommandTestMixin, SimpleTestCase):
    def test_hexagon_report(self):
        report = self.tmp / "report.json"
        field = self.tmp / "field.csv"
        self.call(
            "limit_shape",
            "--hexagon", "1", "1", "1",
            "--grid", "31",
            "--boundary-grid", "61",
            "--report", str(report),
            "--output", str(field),
        )
        header, _ = read_csv(field.read_text())
        self.assertEqual(header, ["x", "y", "s", "t", "phase", "facet"])
        document = json.loads(report.read_text())
        self.assertGreater(document["liquid_fraction"], 0.5)
        self.assertLess(document["liquid_fraction"], 1.0)
        self.assertGreater(document["boundary_points"], 0)

    def test_one_polygon_source(self):
        with self.assertRaises(CommandError):
            self.call("limit_shape", "--hexagon", "1", "1", "1", "--heart")


class FluctuationCommandTests(CommandTestMixin, SimpleTestCase):
    def test_rows(self):
        header, rows = read_csv(self.call("fluctuations", "--ks", "10", "20", "--radii", "3"))
        self.assertEqual(header, ["kind", "key", "value", "reference", "stderr"])
        self.assertEqual([row[0] for row in rows], ["variance", "variance", "variance_slope", "asymptotic"])

    def test_moments_need_a_region(self):
        with self.assertRaises(CommandError):
            self.call("fluctuations", "--ks", "--radii", "--samples", "5")

    @override_settings(DIMERS={"KINV_MAX_GRID": 10})
    def test_missed_tolerance(self):
        with self.assertRaises(CommandError) as caught:
            self.call("fluctuations", "--ks", "--radii", "3")
        self.assertEqual(caught.exception.returncode, 3)
