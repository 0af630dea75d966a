"""
Integrators for the two halves of the Lax pair on sampled data.

Both the x-part Phi_x = (ik sigma3 + Q) Phi and the t-part
Psi_t = (-4ik^3 sigma3 + Qtilde) Psi are linear systems Y' = A(s, k) Y with a
trace-free generator. The integrators step on the data grid (optionally with
equal sub-steps per data interval) and evaluate the sampled data at stage points
through a cubic spline.

Two one-step methods are available:

- "magnus": fourth-order Magnus method with two Gauss stages,
  Omega = h/2 (A1 + A2) + sqrt(3)/12 h^2 [A2, A1], Y <- exp(Omega) Y.
  The exponential is the exact 2x2 one, so the determinant is preserved to
  rounding and constant coefficients are integrated exactly.
- "rk4": the classical fourth-order Runge-Kutta method.

Solutions are propagated for a whole batch of spectral parameters at once; the
batch is split into groups that share a sub-step count.
"""

import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicSpline

from mkdv_transform.core import (
    check_exponent,
    commutator,
    expm_traceless,
    t_generator,
    x_generator,
)
from mkdv_transform.exceptions import (
    ConfigurationError,
    ExponentRangeError,
    IntegratorError,
)

logger = logging.getLogger(__name__)

GAUSS_OFFSETS = (0.5 - np.sqrt(3.0) / 6.0, 0.5 + np.sqrt(3.0) / 6.0)
MAGNUS_COMMUTATOR = np.sqrt(3.0) / 12.0

METHODS = ("magnus", "rk4")

# Default bound on |generator| * step for each method.
DEFAULT_PHASE_STEP = {"magnus": 1.0, "rk4": 0.05}


@dataclass(frozen=True)
class IntegratorOptions:
    """
    Step control shared by the x- and t-integrators.

    substeps is the minimum number of equal steps per data interval; more are
    taken when |generator| * step would exceed max_phase_step. max_substeps bounds
    the refinement; needing more is reported as step-size underflow.
    """

    method: str = "magnus"
    substeps: int = 1
    max_phase_step: float = None
    max_substeps: int = 100000

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(
                f"unknown integrator {self.method!r}, expected one of {METHODS}"
            )
        if self.substeps < 1:
            raise ConfigurationError("substeps must be at least 1")
        if self.max_phase_step is not None and self.max_phase_step <= 0:
            raise ConfigurationError("max_phase_step must be positive")

    @property
    def phase_step(self):
        if self.max_phase_step is None:
            return DEFAULT_PHASE_STEP[self.method]
        return self.max_phase_step

    def with_substeps(self, substeps):
        return replace(self, substeps=substeps)


def _x_scale(channel_max, k):
    return np.abs(k) + channel_max[0]


def _t_scale(channel_max, k):
    h0, h1, h2 = channel_max
    ak = np.abs(k)
    return (
        4.0 * ak**3
        + 4.0 * ak**2 * h0
        + 2.0 * ak * (h0**2 + h1)
        + 2.0 * h0**3
        + h2
    )


def _x_growth(k, length):
    return np.abs(np.imag(k)) * length


def _t_growth(k, length):
    return 4.0 * np.abs(np.imag(np.asarray(k) ** 3)) * length


class LaxIntegrator:
    """
    Propagates solutions of one half of the Lax pair along sampled data.

    grid is the increasing sample grid, channels an array of shape
    (n_channels, len(grid)) holding the data needed by the generator: (q,) for
    the x-part and (q, q_x, q_xx) traces for the t-part.
    """

    def __init__(self, grid, channels, lam, kind, options=None):
        self.grid = np.asarray(grid, dtype=float)
        self.channels = np.atleast_2d(np.asarray(channels, dtype=float))
        self.lam = lam
        self.kind = kind
        self.options = options or IntegratorOptions()

        if self.grid.ndim != 1 or self.grid.size < 2:
            raise ConfigurationError("integration grid needs at least two nodes")
        if np.any(np.diff(self.grid) <= 0):
            raise ConfigurationError("integration grid must be increasing")
        if self.channels.shape[1] != self.grid.size:
            raise ConfigurationError("sampled data do not match the grid")
        if not np.all(np.isfinite(self.channels)):
            raise IntegratorError("sampled data contain non-finite values")

        if kind == "x":
            self._generator = lambda data, k: x_generator(data[0], k, lam)
            self._scale = _x_scale
            self._growth = _x_growth
        elif kind == "t":
            self._generator = lambda data, k: t_generator(
                data[0], data[1], data[2], k, lam
            )
            self._scale = _t_scale
            self._growth = _t_growth
        else:
            raise ConfigurationError(f"unknown system kind {kind!r}")

        self.is_zero = not np.any(self.channels)
        self._spline = CubicSpline(self.grid, self.channels, axis=1)
        self._channel_max = np.max(np.abs(self.channels), axis=1)
        self._spacing = float(np.max(np.diff(self.grid)))

    def data_at(self, points):
        """
        Interpolated data channels at the given points, shape (n_channels, n).
        """
        return self._spline(np.asarray(points, dtype=float))

    def generator(self, points, k):
        """
        Generator matrices at points for every k, shape (len(points), len(k), 2, 2).
        """
        data = self.data_at(points)
        return self._generator(data[:, :, None], np.asarray(k)[None, :])

    def substeps_for(self, k):
        """
        Number of equal steps per data interval needed for each k.
        """
        opts = self.options
        scale = self._scale(self._channel_max, np.asarray(k))
        needed = np.ceil(scale * self._spacing / opts.phase_step).astype(int)
        needed = np.maximum(needed, opts.substeps)
        if np.any(needed > opts.max_substeps):
            raise IntegratorError(
                f"{self.kind}-system needs {int(needed.max())} sub-steps per interval "
                f"(limit {opts.max_substeps}); reduce |k| or refine the data grid"
            )
        # Round up to powers of two so that batches share few step counts.
        return (2 ** np.ceil(np.log2(needed))).astype(int)

    def step_points(self, start, stop, substeps):
        """
        Points visited from start to stop: the data nodes strictly between the
        endpoints, each interval split into substeps equal pieces.
        """
        lo, hi = min(start, stop), max(start, stop)
        inner = self.grid[(self.grid > lo) & (self.grid < hi)]
        knots = np.concatenate(([lo], inner, [hi]))
        if stop < start:
            knots = knots[::-1]
        frac = np.arange(substeps) / substeps
        pts = knots[:-1, None] + np.diff(knots)[:, None] * frac[None, :]
        return np.concatenate((pts.ravel(), knots[-1:]))

    def propagate(self, k, value, start, stop, trajectory=False):
        """
        Advance Y from s=start to s=stop for every k.

        k is a scalar or 1-D array; value is a (2, 2) matrix or a batch matching
        k. Returns the batch at stop, or (points, values) with values of shape
        (len(points), len(k), 2, 2) when trajectory is True. In trajectory mode
        every k uses the largest sub-step count of the batch.
        """
        scalar = np.ndim(k) == 0
        k = np.atleast_1d(np.asarray(k, dtype=complex))
        value = np.broadcast_to(np.asarray(value, dtype=complex), k.shape + (2, 2))

        lo, hi = self.grid[0], self.grid[-1]
        tol = 1e-12 * (hi - lo)
        if not (lo - tol <= start <= hi + tol and lo - tol <= stop <= hi + tol):
            raise ConfigurationError(
                f"integration range [{start}, {stop}] outside data grid [{lo}, {hi}]"
            )
        start = min(max(start, lo), hi)
        stop = min(max(stop, lo), hi)
        check_exponent(
            self._growth(k, abs(stop - start)), f"{self.kind}-system growth"
        )

        if start == stop:
            out = np.array(value)
            if trajectory:
                return np.array([start]), out[None]
            return out[0] if scalar else out

        substeps = self.substeps_for(k)
        if trajectory:
            points = self.step_points(start, stop, int(substeps.max()))
            values = self._run(points, k, np.array(value), keep=True)
            return points, values

        out = np.empty(k.shape + (2, 2), dtype=complex)
        for count in np.unique(substeps):
            sel = substeps == count
            points = self.step_points(start, stop, int(count))
            logger.debug(
                "%s-system: %d k values, %d steps from %s to %s",
                self.kind,
                int(sel.sum()),
                points.size - 1,
                start,
                stop,
            )
            out[sel] = self._run(points, k[sel], np.array(value[sel]))
        return out[0] if scalar else out

    def _run(self, points, k, value, keep=False):
        step = self._magnus_step if self.options.method == "magnus" else self._rk4_step
        history = [value] if keep else None
        for a, b in zip(points[:-1], points[1:]):
            value = step(a, b - a, k, value)
            if keep:
                history.append(value)
        if not np.all(np.isfinite(value)):
            # Growth within the guard can still overflow the products of the steps.
            bad = ~np.all(np.isfinite(value), axis=(-2, -1))
            growth = self._growth(k[bad], abs(points[-1] - points[0]))
            raise ExponentRangeError(
                np.max(growth), f"{self.kind}-system at k={k[bad][0]!r}"
            )
        return np.stack(history) if keep else value

    def _magnus_step(self, s, h, k, value):
        c1, c2 = GAUSS_OFFSETS
        gen = self.generator([s + c1 * h, s + c2 * h], k)
        a1, a2 = gen[0], gen[1]
        omega = 0.5 * h * (a1 + a2) + MAGNUS_COMMUTATOR * h * h * commutator(a2, a1)
        return expm_traceless(omega) @ value

    def _rk4_step(self, s, h, k, value):
        gen = self.generator([s, s + 0.5 * h, s + h], k)
        k1 = gen[0] @ value
        k2 = gen[1] @ (value + 0.5 * h * k1)
        k3 = gen[1] @ (value + 0.5 * h * k2)
        k4 = gen[2] @ (value + h * k3)
        return value + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def x_integrator(grid, qrow, lam, options=None):
    return LaxIntegrator(grid, [qrow], lam, "x", options)


def t_integrator(grid, h0, h1, h2, lam, options=None):
    return LaxIntegrator(grid, [h0, h1, h2], lam, "t", options)


def integrate_x_system(grid, qrow, k, lam, value_at_from, from_end="right", options=None):
    """
    Solve Phi_x = (ik sigma3 + Q) Phi across the sampled row.

    from_end names the endpoint where value_at_from is prescribed ("left" is
    grid[0], "right" is grid[-1]); the value at the opposite endpoint is returned.
    """
    integ = x_integrator(grid, qrow, lam, options)
    start, stop = _endpoints(integ.grid, from_end)
    return integ.propagate(k, value_at_from, start, stop)


def integrate_t_system(grid, traces, k, lam, value_at_from, from_end="right", options=None):
    """
    Solve Psi_t = (-4ik^3 sigma3 + Qtilde) Psi with Qtilde built from the traces
    (h0, h1, h2) = (q, q_x, q_xx) at a fixed x.
    """
    h0, h1, h2 = traces
    integ = t_integrator(grid, h0, h1, h2, lam, options)
    start, stop = _endpoints(integ.grid, from_end)
    return integ.propagate(k, value_at_from, start, stop)


def _endpoints(grid, from_end):
    if from_end == "right":
        return grid[-1], grid[0]
    if from_end == "left":
        return grid[0], grid[-1]
    raise ConfigurationError(f"from_end must be 'left' or 'right', got {from_end!r}")
