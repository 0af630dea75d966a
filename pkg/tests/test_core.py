"""
Tests for the 2x2 matrix kernel.
"""

import unittest

import numpy as np
from scipy.linalg import expm

from mkdv_transform.core import (
    SIGMA3,
    ModelParams,
    build_Q,
    build_Qtilde,
    det2,
    expm_traceless,
    guarded_exp,
    inv2,
    mat2,
    sigma3_exp,
    sigma3_hat_conj,
    t_generator,
)
from mkdv_transform.exceptions import (
    ConfigurationError,
    ExponentRangeError,
    SingularMatrixError,
)


class MatrixHelpersTestCase(unittest.TestCase):
    """
    Test case for the batched 2x2 helpers.
    """

    def setUp(self):
        rng = np.random.default_rng(7)
        self.batch = rng.normal(size=(5, 2, 2)) + 1j * rng.normal(size=(5, 2, 2))

    def test_mat2_layout(self):
        """
        Test that mat2 places the four entries row by row.
        """
        m = mat2(1, 2, 3, 4)
        np.testing.assert_array_equal(m, np.array([[1, 2], [3, 4]], dtype=complex))

    def test_inverse_of_batch(self):
        """
        Test that inv2 inverts every matrix of a batch.
        """
        product = inv2(self.batch) @ self.batch
        np.testing.assert_allclose(product, np.broadcast_to(np.eye(2), (5, 2, 2)), atol=1e-12)

    def test_singular_inverse(self):
        """
        Test that a zero determinant is refused.
        """
        with self.assertRaises(SingularMatrixError):
            inv2(mat2(1, 2, 2, 4))

    def test_hat_conjugation(self):
        """
        Test sigma3_hat_conj against the explicit product of diagonal exponentials.
        """
        theta = np.array([0.3 + 0.2j, -1.1j, 0.5, 2.0, -0.7 + 0.1j])
        expected = sigma3_exp(theta) @ self.batch @ sigma3_exp(-theta)
        np.testing.assert_allclose(sigma3_hat_conj(self.batch, theta), expected, rtol=1e-13)

    def test_hat_conjugation_composes(self):
        """
        Test that conjugating by theta1 and then by theta2 is conjugating by
        theta1 + theta2.
        """
        t1 = np.array([0.2 - 0.1j, 1.5j, -0.3, 0.0, 0.8 + 0.4j])
        t2 = np.array([-0.7j, 0.25, 1.1 + 0.2j, -2.0j, 0.5])
        twice = sigma3_hat_conj(sigma3_hat_conj(self.batch, t1), t2)
        np.testing.assert_allclose(twice, sigma3_hat_conj(self.batch, t1 + t2), rtol=1e-12)

    def test_hat_conjugation_keeps_determinant(self):
        """
        Test that sigma3_hat_conj leaves the determinant unchanged.
        """
        theta = np.array([0.3 + 0.2j, -1.1j, 0.5, 2.0, -0.7 + 0.1j])
        np.testing.assert_allclose(
            det2(sigma3_hat_conj(self.batch, theta)), det2(self.batch), rtol=1e-12, atol=1e-12
        )
        unit = self.batch / np.sqrt(det2(self.batch))[:, None, None]
        np.testing.assert_allclose(det2(sigma3_hat_conj(unit, theta)), 1.0, atol=1e-12)

    def test_guarded_exp(self):
        """
        Test that exponents beyond the guard raise instead of overflowing.
        """
        self.assertAlmostEqual(guarded_exp(1.0), np.e)
        with self.assertRaises(ExponentRangeError):
            guarded_exp(np.array([1.0, 800.0 + 1j]))


class ExponentialTestCase(unittest.TestCase):
    """
    Test case for the closed-form exponential of trace-free matrices.
    """

    def test_matches_scipy(self):
        """
        Test expm_traceless against scipy.linalg.expm on random trace-free matrices.
        """
        rng = np.random.default_rng(3)
        for _ in range(10):
            a, b, c = rng.normal(size=3) + 1j * rng.normal(size=3)
            omega = mat2(a, b, c, -a)
            np.testing.assert_allclose(expm_traceless(omega), expm(omega), rtol=1e-12, atol=1e-14)

    def test_nilpotent(self):
        """
        Test the nu = 0 limit on a nilpotent matrix.
        """
        out = expm_traceless(mat2(0, 1, 0, 0))
        np.testing.assert_allclose(out, mat2(1, 1, 0, 1), atol=1e-15)

    def test_unit_determinant(self):
        """
        Test that the exponential of a trace-free matrix has determinant one.
        """
        omega = mat2(0.4j, 2.0, -1.5, -0.4j)
        self.assertAlmostEqual(abs(det2(expm_traceless(omega)) - 1.0), 0.0, places=13)


class LaxPairTestCase(unittest.TestCase):
    """
    Test case for the Lax pair building blocks.
    """

    def test_qtilde_closed_form(self):
        """
        Test build_Qtilde against the matrix expression it simplifies.
        """
        q, qx, qxx, lam = 0.7, -0.3, 1.2, -1
        for k in (0.5, 1.0 + 2.0j, -2.0 - 0.5j):
            Q = build_Q(q, lam)
            Qx = build_Q(qx, lam)
            Qxx = build_Q(qxx, lam)
            expected = (
                -4.0 * k**2 * Q
                - 2j * k * (Q @ Q + Qx) @ SIGMA3
                - 2.0 * Q @ Q @ Q
                + Qxx
            )
            np.testing.assert_allclose(build_Qtilde(q, qx, qxx, k, lam), expected, atol=1e-13)

    def test_t_generator_is_trace_free(self):
        """
        Test that the t-part generator has zero trace.
        """
        gen = t_generator(0.5, 0.1, -0.2, 1.5 + 0.5j, 1)
        self.assertAlmostEqual(abs(gen[0, 0] + gen[1, 1]), 0.0, places=14)

    def test_model_params_validation(self):
        """
        Test that lambda must be +1 or -1 and the rectangle must be non-empty.
        """
        with self.assertRaises(ConfigurationError):
            ModelParams(lam=0)
        with self.assertRaises(ConfigurationError):
            ModelParams(L=-1.0)
        with self.assertRaises(ConfigurationError):
            ModelParams(T=float("inf"))
