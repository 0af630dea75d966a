"""
Sampled data sets: initial profile, boundary traces and space-time fields.

All three live on equispaced grids over [0, L] and [0, T]. FieldGrid stores
values[n, j] = q(x_j, t_n), so row n is the profile at time t_n.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from mkdv_transform.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

MIN_INTERVALS = 8

# Bound on max |q[j+1] - 2 q[j] + q[j-1]| accepted as "smooth".
DEFAULT_SECOND_DIFFERENCE_BOUND = 0.5


def fd_weights(offsets, order):
    """
    Finite-difference weights for the derivative of the given order on a stencil.

    offsets are node positions in units of the grid spacing (e.g. [-2, -1, 0, 1, 2]);
    the result w satisfies f^(order)(0) ~ sum_j w_j f(offsets_j) / h^order and is exact
    for polynomials of degree len(offsets) - 1.
    """
    offsets = np.asarray(offsets, dtype=float)
    n = offsets.size
    if order >= n:
        raise ConfigurationError(
            f"a stencil of {n} points cannot approximate derivative order {order}"
        )
    powers = np.arange(n)
    vander = offsets[None, :] ** powers[:, None]
    rhs = np.zeros(n)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(vander, rhs)


def boundary_derivatives(values, h, side, width=6):
    """
    (q, q_x, q_xx) at one end of a sampled row from one-sided stencils.

    width 6 gives fourth order for the second derivative and fifth for the first.
    """
    values = np.asarray(values, dtype=float)
    offsets = np.arange(width)
    if side == "left":
        samples = values[..., :width]
        sign = 1.0
    elif side == "right":
        samples = values[..., -1 : -width - 1 : -1]
        sign = -1.0
    else:
        raise ConfigurationError(f"side must be 'left' or 'right', got {side!r}")
    d1 = samples @ fd_weights(offsets, 1) * sign / h
    d2 = samples @ fd_weights(offsets, 2) / h**2
    return samples[..., 0], d1, d2


@dataclass(frozen=True)
class InitialProfile:
    """
    Samples of q0 at x_j = j L / N_x, j = 0..N_x.
    """

    values: np.ndarray
    L: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 1:
            raise ConfigurationError("profile samples must be one-dimensional")
        if values.size - 1 < MIN_INTERVALS:
            raise ConfigurationError(
                f"profile needs at least {MIN_INTERVALS} intervals, got {values.size - 1}"
            )
        if not np.all(np.isfinite(values)):
            raise ConfigurationError("profile samples must be finite")
        if not (np.isfinite(self.L) and self.L > 0):
            raise ConfigurationError(f"L must be finite and positive, got {self.L!r}")

    @property
    def N_x(self):
        return self.values.size - 1

    @property
    def h(self):
        return self.L / self.N_x

    @property
    def x(self):
        return np.linspace(0.0, self.L, self.N_x + 1)

    @property
    def is_zero(self):
        return not np.any(self.values)

    def second_difference(self):
        return float(np.max(np.abs(np.diff(self.values, 2))))

    def check_smooth(self, bound=DEFAULT_SECOND_DIFFERENCE_BOUND):
        """
        Refuse data whose discrete second differences exceed bound.
        """
        worst = self.second_difference()
        if worst > bound:
            raise ConfigurationError(
                f"profile is too rough: max second difference {worst:.3g} > {bound:.3g}"
            )
        return self

    def corner_values(self):
        """
        (q0, q0', q0'') at x=0 and at x=L by one-sided differences.
        """
        return (
            boundary_derivatives(self.values, self.h, "left"),
            boundary_derivatives(self.values, self.h, "right"),
        )

    def at(self, points):
        return CubicSpline(self.x, self.values)(points)


@dataclass(frozen=True)
class BoundaryTraces:
    """
    Samples on t_n = n T / N_t of (g0, g1, g2) at x=0 and (f0, f1, f2) at x=L.

    left and right have shape (3, N_t + 1).
    """

    left: np.ndarray
    right: np.ndarray
    T: float

    def __post_init__(self):
        left = np.asarray(self.left, dtype=float)
        right = np.asarray(self.right, dtype=float)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        if left.ndim != 2 or left.shape[0] != 3 or left.shape != right.shape:
            raise ConfigurationError(
                "traces must be two (3, N_t+1) arrays of equal shape, "
                f"got {left.shape} and {right.shape}"
            )
        if left.shape[1] < 3:
            raise ConfigurationError("traces need at least two time intervals")
        if not (np.all(np.isfinite(left)) and np.all(np.isfinite(right))):
            raise ConfigurationError("trace samples must be finite")
        if not (np.isfinite(self.T) and self.T > 0):
            raise ConfigurationError(f"T must be finite and positive, got {self.T!r}")

    @classmethod
    def zeros(cls, N_t, T):
        return cls(np.zeros((3, N_t + 1)), np.zeros((3, N_t + 1)), T)

    @property
    def N_t(self):
        return self.left.shape[1] - 1

    @property
    def t(self):
        return np.linspace(0.0, self.T, self.N_t + 1)

    @property
    def is_zero(self):
        return not (np.any(self.left) or np.any(self.right))

    def side(self, which):
        if which == "left":
            return self.left
        if which == "right":
            return self.right
        raise ConfigurationError(f"side must be 'left' or 'right', got {which!r}")

    def corner_mismatch(self, profile):
        """
        Differences between the traces at t=0 and the profile's corner values.

        Keys are g0..g2 (x=0) and f0..f2 (x=L).
        """
        left, right = profile.corner_values()
        out = {}
        for i in range(3):
            out[f"g{i}"] = float(self.left[i, 0] - left[i])
            out[f"f{i}"] = float(self.right[i, 0] - right[i])
        return out

    def check_corners(self, profile, tol):
        """
        Log corner-compatibility violations; they are reported, never fatal.

        Derivative tolerances scale with the profile's finite-difference error.
        """
        mismatch = self.corner_mismatch(profile)
        scale = {"0": 1.0, "1": profile.h**-1, "2": profile.h**-2}
        bad = {
            name: diff
            for name, diff in mismatch.items()
            if abs(diff) > tol * scale[name[1]]
        }
        for name, diff in sorted(bad.items()):
            logger.warning("corner compatibility: %s differs from q0 by %.3e", name, diff)
        return bad


@dataclass(frozen=True)
class FieldGrid:
    """
    q(x_j, t_n) on the equispaced (N_t+1) x (N_x+1) grid over [0,L] x [0,T].
    """

    values: np.ndarray
    L: float
    T: float
    _splines: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 2 or min(values.shape) < 2:
            raise ConfigurationError(f"field must be a 2-D grid, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ConfigurationError("field values must be finite")

    @property
    def N_x(self):
        return self.values.shape[1] - 1

    @property
    def N_t(self):
        return self.values.shape[0] - 1

    @property
    def x(self):
        return np.linspace(0.0, self.L, self.N_x + 1)

    @property
    def t(self):
        return np.linspace(0.0, self.T, self.N_t + 1)

    @property
    def dx(self):
        return self.L / self.N_x

    @property
    def dt(self):
        return self.T / self.N_t

    def row_at(self, t):
        """
        The profile q(., t); rows off the time grid come from a cubic spline in t.
        """
        if not (0.0 <= t <= self.T):
            raise ConfigurationError(f"t={t} outside [0, {self.T}]")
        n = t / self.dt
        nearest = int(round(n))
        if abs(n - nearest) < 1e-12:
            return self.values[nearest].copy()
        if "t" not in self._splines:
            self._splines["t"] = CubicSpline(self.t, self.values, axis=0)
        return self._splines["t"](t)

    def profile_at(self, t):
        return InitialProfile(self.row_at(t), self.L)

    def initial_profile(self):
        return InitialProfile(self.values[0].copy(), self.L)

    def final_profile(self):
        return InitialProfile(self.values[-1].copy(), self.L)

    def at(self, x, t):
        """
        q at an arbitrary point, by splines in t then x.
        """
        return float(CubicSpline(self.x, self.row_at(t))(x))
