"""
Tests for the mkdv-transform command line.
"""

import json
import os
import tempfile
import unittest

import numpy as np

from mkdv_transform import __version__
from mkdv_transform.cli import (
    EXIT_INCOMPATIBLE,
    EXIT_INPUT,
    EXIT_NUMERICAL,
    EXIT_OK,
    build_parser,
    main,
)
from mkdv_transform.renderer import TableRenderer, read_manifest, read_table

SMALL = {
    "N_x": 16,
    "N_t": 32,
    "K_max": 2.0,
    "panels_per_unit": 1,
    "nodes_per_panel": 4,
    "rh_x": [0.0, 0.5, 1.0],
    "rh_t": [0.0, 0.25],
}


class CliTestCase(unittest.TestCase):
    """
    Base test case with a temporary run directory.
    """

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = self.tmp.name

    def write_config(self, name="run.json", **overrides):
        path = os.path.join(self.dir, name)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(dict(SMALL, **overrides), fh)
        return path

    def cli(self, *argv):
        return main([*argv, "--quiet"])

    def out(self, name):
        return os.path.join(self.dir, name)


class ZeroDataTestCase(CliTestCase):
    """
    Test case for the full pipeline on zero data.
    """

    def setUp(self):
        super().setUp()
        self.config = self.write_config(kappa=0.0)
        self.assertEqual(self.cli("generate", "--config", self.config), EXIT_OK)

    def test_generate(self):
        """
        Test that generate writes the data set with provenance.
        """
        for name in ("profile.dat", "traces.dat", "final_row.dat", "field.dat"):
            self.assertTrue(os.path.exists(self.out(name)), name)
        with open(self.out("profile.dat"), encoding="utf-8") as fh:
            self.assertTrue(fh.readline().startswith(f"# mkdv-transform {__version__} config="))
        columns, rows = read_table(self.out("traces.dat"))
        self.assertEqual(columns, ["t", "g0", "g1", "g2", "f0", "f1", "f2"])
        self.assertEqual(rows.shape, (33, 7))
        manifest = read_manifest(self.out("manifest.txt"))
        self.assertEqual(manifest["generator"], "exact")
        self.assertEqual(manifest["corner_violations"], "0")

    def test_spectra(self):
        """
        Test that spectra writes the three tables and passes its audit.
        """
        self.assertEqual(self.cli("spectra", "--config", self.config), EXIT_OK)
        for name in ("s", "S", "S1"):
            columns, rows = read_table(self.out(f"spectra_{name}.dat"))
            self.assertEqual(len(columns), 8)
            np.testing.assert_allclose(rows[:, 2], 1.0, atol=1e-12)
        self.assertEqual(read_manifest(self.out("spectra_summary.txt"))["audit"], "pass")

    def test_grcheck(self):
        """
        Test that zero data is compatible.
        """
        self.assertEqual(self.cli("grcheck", "--config", self.config), EXIT_OK)
        summary = read_manifest(self.out("gr_summary.txt"))
        self.assertEqual(summary["verdict"], "compatible")
        self.assertEqual(float(summary["max_residual"]), 0.0)

    def test_rhsolve(self):
        """
        Test that rhsolve reconstructs q = 0 on every configured point.
        """
        self.assertEqual(self.cli("rhsolve", "--config", self.config), EXIT_OK)
        columns, rows = read_table(self.out("rh_field.dat"))
        self.assertEqual(columns, ["x", "t", "q"])
        np.testing.assert_array_equal(rows[:, 0], [0.0, 0.5, 1.0, 0.0, 0.5, 1.0])
        np.testing.assert_array_equal(rows[:, 1], [0.0, 0.0, 0.0, 0.25, 0.25, 0.25])
        np.testing.assert_array_equal(rows[:, 2], 0.0)
        summary = read_manifest(self.out("rh_summary.txt"))
        self.assertEqual(summary["gr_verdict"], "compatible")
        self.assertEqual(float(summary["R"]), 1.0)
        self.assertEqual(float(summary["field_max_error"]), 0.0)
        self.assertEqual(summary["status"], "ok")
        self.assertEqual(float(summary["max_refinement_change"]), 0.0)
        self.assertGreater(int(summary["refined_nodes"]), int(summary["nodes"]))
        _, nodes = read_table(self.out("rh_nodes.dat"))
        self.assertEqual(nodes.shape, (int(summary["nodes"]), 11))

    def test_out_override(self):
        """
        Test that --out redirects the outputs.
        """
        target = os.path.join(self.dir, "elsewhere")
        self.assertEqual(self.cli("spectra", "--config", self.config, "--out", target), EXIT_OK)
        self.assertTrue(os.path.exists(os.path.join(target, "spectra_summary.txt")))

    def test_compare_identical(self):
        """
        Test that a field compared with itself has no difference.
        """
        field = self.out("field.dat")
        self.assertEqual(self.cli("compare", "--config", self.config, field, field), EXIT_OK)
        summary = read_manifest(self.out("compare_summary.txt"))
        self.assertEqual(summary["max_diff"], "0")
        self.assertEqual(summary["points"], str(17 * 33))

    def test_compare_mismatch(self):
        """
        Test that fields on different grids exit with the input error code.
        """
        other = self.write_config("coarse.json", kappa=0.0, N_x=8)
        coarse_dir = os.path.join(self.dir, "coarse")
        self.assertEqual(self.cli("generate", "--config", other, "--out", coarse_dir), EXIT_OK)
        code = self.cli(
            "compare",
            "--config",
            self.config,
            self.out("field.dat"),
            os.path.join(coarse_dir, "field.dat"),
        )
        self.assertEqual(code, EXIT_INPUT)


class ErrorExitTestCase(CliTestCase):
    """
    Test case for the error exit codes.
    """

    def test_missing_config(self):
        """
        Test that a missing configuration file exits with the input error code.
        """
        code = self.cli("spectra", "--config", os.path.join(self.dir, "absent.json"))
        self.assertEqual(code, EXIT_INPUT)

    def test_missing_profile(self):
        """
        Test that a missing data file exits with the input error code.
        """
        config = self.write_config()
        self.assertEqual(self.cli("spectra", "--config", config), EXIT_INPUT)

    def test_rough_profile(self):
        """
        Test that a profile failing the smoothness check exits with the input error
        code.
        """
        config = self.write_config(kappa=0.0)
        self.assertEqual(self.cli("generate", "--config", config), EXIT_OK)
        x = np.linspace(0.0, 1.0, 17)
        spike = np.zeros_like(x)
        spike[8] = 1.0
        TableRenderer().write(
            self.out("profile.dat"), {"columns": ["x", "q0"], "rows": np.column_stack((x, spike))}
        )
        self.assertEqual(self.cli("spectra", "--config", config), EXIT_INPUT)

    def test_certification_failure(self):
        """
        Test that a failed certification exits with the numerical error code.
        """
        config = self.write_config(**{"lambda": 1, "kappa": 1.0})
        self.assertEqual(self.cli("generate", "--config", config), EXIT_NUMERICAL)

    def test_incompatible_data(self):
        """
        Test that a wrong q(., T) is rejected unless --override-gr is given.
        """
        config = self.write_config(kappa=1.0, N_x=32, N_t=64)
        self.assertEqual(self.cli("generate", "--config", config), EXIT_OK)
        x = np.linspace(0.0, 1.0, 33)
        TableRenderer().write(
            self.out("final_row.dat"),
            {"columns": ["x", "qT"], "rows": np.column_stack((x, np.zeros_like(x)))},
        )
        self.assertEqual(self.cli("grcheck", "--config", config), EXIT_INCOMPATIBLE)
        self.assertEqual(read_manifest(self.out("gr_summary.txt"))["verdict"], "incompatible")
        self.assertEqual(self.cli("grcheck", "--config", config, "--override-gr"), EXIT_OK)
        self.assertEqual(read_manifest(self.out("gr_summary.txt"))["override"], "True")

    def test_rhsolve_without_verdict(self):
        """
        Test that rhsolve refuses data whose global relation was not evaluated.
        """
        config = self.write_config(kappa=0.0)
        self.assertEqual(self.cli("generate", "--config", config), EXIT_OK)
        os.remove(self.out("final_row.dat"))
        self.assertEqual(self.cli("rhsolve", "--config", config), EXIT_INCOMPATIBLE)
        self.assertFalse(os.path.exists(self.out("rh_field.dat")))
        self.assertEqual(self.cli("rhsolve", "--config", config, "--override-gr"), EXIT_OK)
        summary = read_manifest(self.out("rh_summary.txt"))
        self.assertEqual(summary["gr_verdict"], "not evaluated")

    def test_truncated_jump(self):
        """
        Test that a jump left large beyond K_max fails the run after the outputs
        are written.
        """
        config = self.write_config(kappa=0.3, refine_check=False)
        self.assertEqual(self.cli("generate", "--config", config), EXIT_OK)
        code = self.cli("rhsolve", "--config", config, "--override-gr")
        self.assertEqual(code, EXIT_NUMERICAL)
        summary = read_manifest(self.out("rh_summary.txt"))
        self.assertEqual(summary["status"], "failed")
        self.assertGreater(float(summary["truncation_error"]), 1e-2)
        self.assertTrue(os.path.exists(self.out("rh_field.dat")))


class ParserTestCase(unittest.TestCase):
    """
    Test case for the argument parser.
    """

    def test_requires_config(self):
        """
        Test that every verb requires --config.
        """
        with self.assertRaises(SystemExit):
            build_parser().parse_args(["spectra"])

    def test_compare_arguments(self):
        """
        Test that compare takes two positional field tables.
        """
        args = build_parser().parse_args(["compare", "--config", "c.json", "a.dat", "b.dat"])
        self.assertEqual((args.field_a, args.field_b), ("a.dat", "b.dat"))
        self.assertFalse(args.override_gr)
