"""
Tests for the global relation residuals and reports.
"""

import unittest

import numpy as np
import pytest

from mkdv_transform.core import ModelParams
from mkdv_transform.data import BoundaryTraces, InitialProfile
from mkdv_transform.exceptions import ConfigurationError, SectorError
from mkdv_transform.global_relation import (
    VERDICT_COMPATIBLE,
    VERDICT_INCOMPATIBLE,
    VERDICT_INCONCLUSIVE,
    GRReport,
    compute_c,
    default_k_samples,
    default_sector_samples,
    fit_decay_constant,
    global_relation_report,
    gr_matrix_residual,
    gr_residual_finite_T,
    gr_residual_T_inf,
    gr_T_sweep,
)
from mkdv_transform.oracle import exact_traveling_wave
from mkdv_transform.spectral import SpectralData
from tests.helpers import PARAMS, wave_dataset, wave_spectral, zero_spectral


class SampleSetTestCase(unittest.TestCase):
    """
    Test case for the default sample sets.
    """

    def test_default_samples(self):
        """
        Test the real-axis and ray samples of the finite-T report.
        """
        k = default_k_samples(1.0, 6.0, n_real=8, n_ray=4)
        self.assertEqual(k.size, 16)
        np.testing.assert_allclose(np.abs(k[8:]), np.tile(np.linspace(1.0, 6.0, 4), 2))
        with self.assertRaises(ConfigurationError):
            default_k_samples(2.0, 1.0)

    def test_sector_samples(self):
        """
        Test that the T = infinity samples lie in sectors I, III and V.
        """
        k = default_sector_samples(1.0, 4.0, n=5)
        sectors = set(np.floor((np.angle(k) % (2 * np.pi)) / (np.pi / 3)).astype(int) + 1)
        self.assertEqual(sectors, {1, 3, 5})


class ZeroDataTestCase(unittest.TestCase):
    """
    Test case for the global relation on zero data.
    """

    def test_residual_vanishes(self):
        """
        Test that every residual is exactly zero.
        """
        spec = zero_spectral()
        final_row = InitialProfile(np.zeros(17), 1.0)
        report = global_relation_report(spec, PARAMS, final_row=final_row)
        self.assertEqual(report.max_residual, 0.0)
        self.assertEqual(report.verdict(1e-4), VERDICT_COMPATIBLE)
        k = default_sector_samples(1.0, 4.0)
        self.assertEqual(np.max(np.abs(gr_residual_T_inf(spec, k, PARAMS))), 0.0)


class WaveRelationTestCase(unittest.TestCase):
    """
    Test case for the global relation on the exact traveling wave.
    """

    def setUp(self):
        self.data = wave_dataset()
        self.spec = wave_spectral()
        self.k = default_k_samples(1.0, 6.0, n_real=16, n_ray=8)

    def test_compatible_data(self):
        """
        Test that the data of an exact solution satisfy the relation.
        """
        report = global_relation_report(
            self.spec, PARAMS, k=self.k, final_row=self.data.final_row
        )
        self.assertEqual(report.clamp_count, 0)
        self.assertLess(report.max_residual, 1e-4)
        self.assertEqual(report.verdict(1e-4), VERDICT_COMPATIBLE)

    def test_mismatched_final_row(self):
        """
        Test that a wrong q(., T) makes the data incompatible.
        """
        final_row = InitialProfile(np.zeros(self.data.final_row.values.size), 1.0)
        report = global_relation_report(self.spec, PARAMS, k=self.k, final_row=final_row)
        self.assertGreater(report.max_residual, 1e-1)
        self.assertEqual(report.verdict(1e-4), VERDICT_INCOMPATIBLE)

    def test_c_methods_agree(self):
        """
        Test that the quadrature and endpoint forms of c(k) agree.
        """
        k = np.linspace(-6.0, 6.0, 9)
        quad = compute_c(self.data.final_row, k, -1)
        end = compute_c(self.data.final_row, k, -1, method="endpoint")
        np.testing.assert_allclose(quad, end, atol=1e-6)
        with self.assertRaises(ConfigurationError):
            compute_c(self.data.final_row, k, -1, method="spline")

    def test_matrix_entry_matches_scalar(self):
        """
        Test that the (1,2) entry of the matrix residual is the scalar residual.
        """
        k = np.array([-2.5, -0.7, 0.4, 1.9, 3.3])
        matrix = gr_matrix_residual(self.spec, self.data.final_row, k, PARAMS)
        c = compute_c(self.data.final_row, k, -1)
        scalar = gr_residual_finite_T(self.spec, lambda _: c, k, PARAMS)
        np.testing.assert_allclose(matrix[:, 0, 1], scalar, atol=1e-8)

    def test_infinite_T_sector_check(self):
        """
        Test that the T = infinity form refuses points outside sectors I, III, V.
        """
        with self.assertRaises(SectorError):
            gr_residual_T_inf(self.spec, np.array([1j]), PARAMS)
        with self.assertRaises(ConfigurationError):
            global_relation_report(self.spec, PARAMS, k=self.k, mode="finite")

    def test_decay_constant(self):
        """
        Test that the fitted decay constant bounds |c(k)| on the samples.
        """
        c = compute_c(self.data.final_row, self.k, -1, method="endpoint")
        C = fit_decay_constant(self.k, c, 1.0)
        bound = C * (1.0 + np.exp(2.0 * self.k.imag)) / np.abs(self.k)
        self.assertTrue(np.all(np.abs(c) <= bound * (1.0 + 1e-12)))
        self.assertLess(C, 10.0)

    @pytest.mark.slow
    def test_compatible_on_default_samples(self):
        """
        Test that the exact data stay compatible up to |k| = 12, scaled and raw.
        """
        report = global_relation_report(self.spec, PARAMS, final_row=self.data.final_row)
        self.assertEqual(report.clamp_count, 0)
        self.assertLess(report.max_residual, 1e-4)
        self.assertLess(report.max_real_residual, 2e-4)

    @pytest.mark.slow
    def test_mismatched_traces(self):
        """
        Test that exact q0 and q(., T) with zero boundary traces are incompatible
        on the default samples.
        """
        traces = BoundaryTraces.zeros(self.data.traces.N_t, PARAMS.T)
        spec = SpectralData(self.data.profile, traces, PARAMS)
        report = global_relation_report(spec, PARAMS, final_row=self.data.final_row)
        self.assertGreater(report.max_residual, 1e-1)
        self.assertEqual(report.verdict(1e-4), VERDICT_INCOMPATIBLE)

    def test_decay_asymptotics(self):
        """
        Test |k c(k)| against the endpoint values of q(., T): on the ray
        arg k = pi/3 only x = L contributes, on the real axis both ends do.
        """
        q0, qL = abs(self.data.final_row.values[0]), abs(self.data.final_row.values[-1])
        constants = {}
        for name, direction in (("real", 1.0), ("ray", np.exp(1j * np.pi / 3.0))):
            for lo, hi in ((10.0, 50.0), (50.0, 100.0)):
                k = np.linspace(lo, hi, 12) * direction
                c = compute_c(self.data.final_row, k, -1, method="endpoint")
                constants[name, lo] = fit_decay_constant(k, c, 1.0)
        for name in ("real", "ray"):
            ratio = constants[name, 50.0] / constants[name, 10.0]
            self.assertGreater(ratio, 0.5)
            self.assertLess(ratio, 2.0)
        self.assertAlmostEqual(constants["ray", 50.0], 0.5 * qL, delta=0.05 * qL)
        self.assertLessEqual(constants["real", 50.0], 0.55 * (q0 + qL))
        self.assertGreaterEqual(constants["real", 50.0], 0.45 * abs(q0 - qL))


class ReportTestCase(unittest.TestCase):
    """
    Test case for GRReport verdicts.
    """

    def make_report(self, scaled, clamped=None):
        scaled = np.asarray(scaled, dtype=float)
        clamped = np.zeros(scaled.size, dtype=bool) if clamped is None else np.asarray(clamped)
        return GRReport(
            k=np.arange(1, scaled.size + 1, dtype=complex),
            residual=scaled,
            scaled=scaled,
            clamped=clamped,
            c=np.zeros(scaled.size, dtype=complex),
        )

    def test_verdicts(self):
        """
        Test the three verdict bands around the ceiling.
        """
        self.assertEqual(self.make_report([1e-6, 5e-5]).verdict(1e-4), VERDICT_COMPATIBLE)
        self.assertEqual(self.make_report([1e-6, 5e-3]).verdict(1e-4), VERDICT_INCONCLUSIVE)
        self.assertEqual(self.make_report([1e-6, 5e-2]).verdict(1e-4), VERDICT_INCOMPATIBLE)

    def test_clamped_points_are_ignored(self):
        """
        Test that clamped samples do not enter the statistics.
        """
        report = self.make_report([1e-6, np.nan], clamped=[False, True])
        self.assertEqual(report.clamp_count, 1)
        self.assertEqual(report.max_residual, 1e-6)
        everything = self.make_report([np.nan], clamped=[True])
        self.assertEqual(everything.verdict(1e-4), VERDICT_INCONCLUSIVE)

    def test_summary(self):
        """
        Test the summary keys written to gr_summary.txt.
        """
        summary = self.make_report([1e-6, 2e-6]).summary(1e-4)
        self.assertEqual(summary["max_raw_residual"], 2e-6)
        self.assertEqual(summary["max_real_residual"], 2e-6)
        self.assertEqual(summary["verdict"], VERDICT_COMPATIBLE)
        self.assertEqual(summary["samples"], 2)
        self.assertAlmostEqual(summary["rms_residual"], np.sqrt(2.5e-12))


@pytest.mark.slow
class SweepTestCase(unittest.TestCase):
    """
    Test case for the T = infinity residual of finite-T data.
    """

    def test_sweep_runs(self):
        """
        Test that the sweep returns one finite row per final time.
        """

        def build(T):
            params = ModelParams(lam=-1, L=1.0, T=T)
            data = exact_traveling_wave(1.0, 0.5, params, 64, int(256 * T))
            return SpectralData(data.profile, data.traces, params), params

        k = default_sector_samples(1.0, 3.0, n=4)
        out = gr_T_sweep(build, [0.25, 0.5], k)
        self.assertEqual(out.shape, (2, k.size))
        self.assertTrue(np.all(np.isfinite(out)))

    def test_sweep_decreases_with_T(self):
        """
        Test that the T = infinity residual of finite-T data shrinks as T grows.
        """

        def build(T):
            params = ModelParams(lam=-1, L=1.0, T=T)
            data = exact_traveling_wave(1.0, 0.5, params, 64, int(256 * T))
            return SpectralData(data.profile, data.traces, params), params

        out = gr_T_sweep(build, [0.25, 0.5], default_sector_samples(1.0, 1.5, n=3))
        self.assertTrue(np.all(out[1] < out[0]))
