"""
Two-by-two complex matrix kernel for the mKdV Lax pair.

Matrices are numpy arrays of shape (..., 2, 2) with complex entries, so every
helper works on a single matrix and on a batch of matrices alike. The Lax pair is

    Phi_x = (i k sigma3 + Q) Phi,        Psi_t = (-4 i k^3 sigma3 + Qtilde) Psi,

with Q = [[0, q], [lambda q, 0]] and
Qtilde = -4k^2 Q - 2ik(Q^2 + Q_x) sigma3 - 2Q^3 + Q_xx.
"""

import logging
from dataclasses import dataclass

import numpy as np

from mkdv_transform.exceptions import (
    ConfigurationError,
    ExponentRangeError,
    SingularMatrixError,
)

logger = logging.getLogger(__name__)

# Largest |Re z| accepted before forming exp(z).
EXPONENT_GUARD = 700.0

SIGMA3 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class ModelParams:
    """
    Sign of the nonlinearity and size of the space-time rectangle.

    lam is the lambda of q_t - q_xxx + 6 lambda q^2 q_x = 0 (+1 or -1).
    """

    lam: int = -1
    L: float = 1.0
    T: float = 0.5

    def __post_init__(self):
        if self.lam not in (1, -1):
            raise ConfigurationError(f"lambda must be +1 or -1, got {self.lam!r}")
        if not np.isfinite(self.L) or self.L <= 0:
            raise ConfigurationError(f"L must be finite and positive, got {self.L!r}")
        if not np.isfinite(self.T) or self.T <= 0:
            raise ConfigurationError(f"T must be finite and positive, got {self.T!r}")


@dataclass(frozen=True)
class PhaseArgs:
    """
    Spectral parameter and space-time point of the phase i(kx - 4k^3 t).
    """

    k: complex
    x: float
    t: float

    def check(self, params):
        if not (0.0 <= self.x <= params.L and 0.0 <= self.t <= params.T):
            raise ConfigurationError(
                f"(x, t)=({self.x}, {self.t}) outside [0, {params.L}]x[0, {params.T}]"
            )
        return self

    @property
    def theta(self):
        return 1j * (self.k * self.x - 4.0 * self.k**3 * self.t)


def mat2(m11, m12, m21, m22):
    """
    Stack four (broadcastable) entry arrays into matrices of shape (..., 2, 2).
    """
    m11, m12, m21, m22 = np.broadcast_arrays(
        np.asarray(m11, dtype=complex),
        np.asarray(m12, dtype=complex),
        np.asarray(m21, dtype=complex),
        np.asarray(m22, dtype=complex),
    )
    out = np.empty(m11.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = m11
    out[..., 0, 1] = m12
    out[..., 1, 0] = m21
    out[..., 1, 1] = m22
    return out


def det2(m):
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


def inv2(m):
    """
    Inverse of 2x2 matrices via the adjugate.
    """
    det = det2(m)
    if np.any(np.abs(det) == 0.0):
        raise SingularMatrixError("2x2 matrix with zero determinant")
    return mat2(m[..., 1, 1], -m[..., 0, 1], -m[..., 1, 0], m[..., 0, 0]) / det[
        ..., None, None
    ]


def commutator(a, b):
    return a @ b - b @ a


def check_exponent(z, where=""):
    """
    Raise ExponentRangeError when exp(z) would leave the representable range.
    """
    re = np.abs(np.real(np.asarray(z)))
    if np.any(re > EXPONENT_GUARD) or not np.all(np.isfinite(re)):
        worst = np.asarray(z).ravel()[np.argmax(re.ravel())] if re.size else z
        raise ExponentRangeError(worst, where)


def guarded_exp(z, where=""):
    check_exponent(z, where)
    return np.exp(z)


def sigma3_exp(theta, where=""):
    """
    The diagonal matrix exp(theta sigma3) for (arrays of) complex theta.
    """
    theta = np.asarray(theta, dtype=complex)
    zero = np.zeros_like(theta)
    return mat2(
        guarded_exp(theta, where), zero, zero, guarded_exp(-theta, where)
    )


def sigma3_hat_conj(a, theta):
    """
    Return exp(theta sigma3) A exp(-theta sigma3).

    The diagonal is unchanged, the (1,2) entry is scaled by exp(2 theta) and the
    (2,1) entry by exp(-2 theta). theta broadcasts against the batch shape of A.
    """
    a = np.asarray(a, dtype=complex)
    theta = np.asarray(theta, dtype=complex)
    out = np.array(np.broadcast_to(a, np.broadcast_shapes(a.shape, theta.shape + (2, 2))))
    out[..., 0, 1] *= guarded_exp(2.0 * theta, "sigma3_hat_conj")
    out[..., 1, 0] *= guarded_exp(-2.0 * theta, "sigma3_hat_conj")
    return out


def build_Q(qval, lam):
    """
    Q = [[0, q], [lambda q, 0]].
    """
    qval = np.asarray(qval, dtype=float)
    return mat2(0.0, qval, lam * qval, 0.0)


def build_Qtilde(qval, qx, qxx, k, lam):
    """
    Qtilde = -4k^2 Q - 2ik(Q^2 + Q_x) sigma3 - 2Q^3 + Q_xx in closed form.

    Uses Q^2 = lambda q^2 I and Q^3 = lambda q^2 Q, so

        (1,1) = -2ik lambda q^2                  (2,2) = +2ik lambda q^2
        (1,2) = -4k^2 q + 2ik q_x - 2 lambda q^3 + q_xx
        (2,1) = lambda (-4k^2 q - 2ik q_x + q_xx) - 2 q^3
    """
    qval, qx, qxx = (np.asarray(v, dtype=float) for v in (qval, qx, qxx))
    k = np.asarray(k, dtype=complex)
    k2 = k * k
    diag = -2j * k * lam * qval**2
    upper = -4.0 * k2 * qval + 2j * k * qx - 2.0 * lam * qval**3 + qxx
    lower = lam * (-4.0 * k2 * qval - 2j * k * qx + qxx) - 2.0 * qval**3
    return mat2(diag, upper, lower, -diag)


def x_generator(qval, k, lam):
    """
    Generator i k sigma3 + Q of the x-part.
    """
    k = np.asarray(k, dtype=complex)
    return mat2(1j * k, qval, lam * np.asarray(qval), -1j * k)


def t_generator(h0, h1, h2, k, lam):
    """
    Generator -4 i k^3 sigma3 + Qtilde of the t-part, from the traces (q, q_x, q_xx).
    """
    k = np.asarray(k, dtype=complex)
    gen = build_Qtilde(h0, h1, h2, k, lam)
    gen[..., 0, 0] += -4j * k**3
    gen[..., 1, 1] += 4j * k**3
    return gen


def expm_traceless(omega):
    """
    exp(Omega) for trace-free 2x2 matrices: cosh(nu) I + sinh(nu)/nu Omega.

    nu^2 = -det(Omega). Both cosh and sinh(nu)/nu are even in nu, so the branch of
    the square root does not matter; sinh(nu)/nu is evaluated as sinc(i nu / pi).
    """
    nu = np.sqrt(-det2(omega) + 0j)
    check_exponent(nu, "expm_traceless")
    c = np.cosh(nu)
    s = np.sinc(1j * nu / np.pi)
    out = s[..., None, None] * omega
    out[..., 0, 0] += c
    out[..., 1, 1] += c
    return out
