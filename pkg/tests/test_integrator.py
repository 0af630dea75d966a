"""
Tests for the Lax-pair integrators.
"""

import unittest

import numpy as np
from scipy.linalg import expm

from mkdv_transform.core import det2, sigma3_exp, t_generator, x_generator
from mkdv_transform.exceptions import (
    ConfigurationError,
    ExponentRangeError,
    IntegratorError,
)
from mkdv_transform.integrator import (
    IntegratorOptions,
    integrate_t_system,
    integrate_x_system,
    x_integrator,
)


class XIntegratorTestCase(unittest.TestCase):
    """
    Test case for the x-part integrator.
    """

    def setUp(self):
        self.grid = np.linspace(0.0, 1.0, 17)
        self.k = np.array([-3.0, -0.5, 0.25, 2.0, 1.0 + 0.5j, -2.0 - 0.75j])

    def test_free_propagation(self):
        """
        Test that zero data propagate exp(ik x sigma3) exactly.
        """
        out = integrate_x_system(self.grid, np.zeros(17), self.k, -1, np.eye(2))
        np.testing.assert_allclose(out, sigma3_exp(-1j * self.k), rtol=1e-13)

    def test_constant_data(self):
        """
        Test that constant data reproduce the matrix exponential of the generator.
        """
        for method, rtol in (("magnus", 1e-10), ("rk4", 1e-6)):
            options = IntegratorOptions(method=method)
            out = integrate_x_system(
                self.grid, np.full(17, 0.6), self.k, 1, np.eye(2), "left", options
            )
            for kk, value in zip(self.k, out):
                expected = expm(x_generator(0.6, kk, 1))
                np.testing.assert_allclose(value, expected, rtol=rtol, atol=rtol)

    def order_of(self, method):
        q = 0.8 * np.sin(2.0 * np.pi * self.grid)
        k = 3.0
        reference = x_integrator(
            self.grid, q, -1, IntegratorOptions(substeps=64)
        ).propagate(k, np.eye(2), 0.0, 1.0)
        errors = []
        for substeps in (4, 8):
            options = IntegratorOptions(method=method, substeps=substeps, max_phase_step=100.0)
            value = x_integrator(self.grid, q, -1, options).propagate(k, np.eye(2), 0.0, 1.0)
            errors.append(np.max(np.abs(value - reference)))
        return np.log2(errors[0] / errors[1])

    def test_rk4_is_fourth_order(self):
        """
        Test that halving the RK4 step cuts the error by about sixteen.
        """
        self.assertLess(abs(self.order_of("rk4") - 4.0), 0.3)

    def test_magnus_is_fourth_order(self):
        """
        Test that halving the Magnus step cuts the error by about sixteen.
        """
        self.assertLess(abs(self.order_of("magnus") - 4.0), 0.3)

    def test_overflow_within_guard(self):
        """
        Test that a product overflowing inside the growth guard is reported as a
        range error.
        """
        integ = x_integrator(self.grid, np.full(17, 0.1), -1)
        with np.errstate(over="ignore", invalid="ignore"):
            with self.assertRaises(ExponentRangeError):
                integ.propagate(-300j, 1e200 * np.eye(2), 0.0, 1.0)

    def test_magnus_preserves_determinant(self):
        """
        Test that the Magnus method keeps det = 1 on varying data.
        """
        q = np.cos(3.0 * self.grid) - 0.4
        out = x_integrator(self.grid, q, -1).propagate(self.k, np.eye(2), 1.0, 0.0)
        np.testing.assert_allclose(det2(out), np.ones(self.k.size), atol=1e-12)

    def test_trajectory(self):
        """
        Test that the trajectory ends at the value returned without it.
        """
        q = np.cos(self.grid)
        integ = x_integrator(self.grid, q, -1)
        points, values = integ.propagate(self.k, np.eye(2), 1.0, 0.0, trajectory=True)
        self.assertEqual(points[0], 1.0)
        self.assertEqual(points[-1], 0.0)
        self.assertEqual(values.shape, (points.size, self.k.size, 2, 2))
        np.testing.assert_allclose(values[0], np.broadcast_to(np.eye(2), (self.k.size, 2, 2)))
        self.assertTrue(np.all(np.isfinite(values[-1])))

    def test_range_and_growth_errors(self):
        """
        Test the refusals: outside the grid, exponential overflow, step underflow.
        """
        integ = x_integrator(self.grid, np.zeros(17), -1)
        with self.assertRaises(ConfigurationError):
            integ.propagate(1.0, np.eye(2), 0.0, 1.5)
        with self.assertRaises(ExponentRangeError):
            integ.propagate(1000j, np.eye(2), 0.0, 1.0)
        tight = x_integrator(self.grid, np.zeros(17), -1, IntegratorOptions(max_substeps=2))
        with self.assertRaises(IntegratorError):
            tight.propagate(100.0, np.eye(2), 0.0, 1.0)

    def test_options_validation(self):
        """
        Test that unknown methods and non-positive step bounds are refused.
        """
        with self.assertRaises(ConfigurationError):
            IntegratorOptions(method="euler")
        with self.assertRaises(ConfigurationError):
            IntegratorOptions(substeps=0)
        with self.assertRaises(ConfigurationError):
            IntegratorOptions(max_phase_step=0.0)


class TIntegratorTestCase(unittest.TestCase):
    """
    Test case for the t-part integrator.
    """

    def test_constant_traces(self):
        """
        Test constant traces against the matrix exponential of the t-generator.
        """
        t = np.linspace(0.0, 0.5, 33)
        traces = (np.full(33, 0.4), np.zeros(33), np.zeros(33))
        k = np.array([0.5, -1.0, 1.5, 0.3 + 0.1j])
        out = integrate_t_system(t, traces, k, -1, np.eye(2), "left")
        for kk, value in zip(k, out):
            expected = expm(0.5 * t_generator(0.4, 0.0, 0.0, kk, -1))
            np.testing.assert_allclose(value, expected, rtol=1e-9, atol=1e-11)
