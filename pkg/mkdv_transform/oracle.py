"""
Reference data for q_t - q_xxx + 6 lambda q^2 q_x = 0 on [0, L] x [0, T].

Two generators are provided:

- exact_traveling_wave: q = kappa sech(kappa (x - c t - x0)). The speed c is fitted
  by least squares after substituting the profile into the equation, and the
  resulting field must pass pde_residual on a refined grid before it is used.
- fd_solve_ibvp: method of lines with fourth-order stencils and BDF2 time
  stepping (Newton on the cubic term), driven by q0, g0, g1 at x=0 and f0 at x=L.

extract_traces recovers the six boundary traces and q(., T) from any field.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from mkdv_transform.core import ModelParams
from mkdv_transform.data import (
    BoundaryTraces,
    FieldGrid,
    InitialProfile,
    boundary_derivatives,
    fd_weights,
)
from mkdv_transform.exceptions import (
    CertificationError,
    ConfigurationError,
    InstabilityError,
)

logger = logging.getLogger(__name__)

CERTIFICATION_LIMIT = 1e-6
CERTIFICATION_DX = 1.0 / 256.0
CERTIFICATION_DT = 2.5e-4

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 25
BLOWUP_FACTOR = 1e3

X_FIRST = fd_weights(np.arange(-2, 3), 1)
X_THIRD = fd_weights(np.arange(-3, 4), 3)


def pde_residual(field, lam):
    """
    Max-norm of the discretised equation over interior points: centred differences,
    fourth order in x and second order in t.
    """
    q = field.values
    if field.N_x < 7 or field.N_t < 2:
        raise ConfigurationError(
            f"grid {field.N_x}x{field.N_t} too small for the residual stencils"
        )
    dx, dt = field.dx, field.dt
    inner = q[1:-1]
    qt = (q[2:, 3:-3] - q[:-2, 3:-3]) / (2.0 * dt)
    nx = q.shape[1]
    qx = sum(w * inner[:, 3 + o : nx - 3 + o] for o, w in zip(range(-2, 3), X_FIRST)) / dx
    qxxx = (
        sum(w * inner[:, 3 + o : nx - 3 + o] for o, w in zip(range(-3, 4), X_THIRD)) / dx**3
    )
    centre = inner[:, 3:-3]
    residual = qt - qxxx + 6.0 * lam * centre**2 * qx
    return float(np.max(np.abs(residual)))


@dataclass
class OracleDataSet:
    """
    A compatible data set with the field it came from.
    """

    field: FieldGrid
    profile: InitialProfile
    traces: BoundaryTraces
    final_row: InitialProfile
    params: ModelParams
    generator: str
    speed: float = float("nan")
    certification_residual: float = float("nan")
    notes: dict = field(default_factory=dict)

    def manifest(self):
        info = {
            "generator": self.generator,
            "lambda": self.params.lam,
            "L": self.params.L,
            "T": self.params.T,
            "N_x": self.field.N_x,
            "N_t": self.field.N_t,
            "speed": self.speed,
            "certification_residual": self.certification_residual,
        }
        info.update(self.notes)
        return info


class SechProfile:
    """
    f(xi) = kappa sech(kappa xi) and its first three derivatives in closed form.
    """

    def __init__(self, kappa):
        self.kappa = kappa

    def derivatives(self, xi):
        k = self.kappa
        u = k * np.asarray(xi, dtype=float)
        sech = 1.0 / np.cosh(u)
        tanh = np.tanh(u)
        f0 = k * sech
        f1 = -(k**2) * sech * tanh
        f2 = k**3 * (sech - 2.0 * sech**3)
        f3 = k**4 * sech * tanh * (6.0 * sech**2 - 1.0)
        return f0, f1, f2, f3

    def fitted_speed(self, lam, xi):
        """
        Least-squares c in -c f' - f''' + 6 lambda f^2 f' = 0 over the samples xi.
        """
        f0, f1, _, f3 = self.derivatives(xi)
        norm = np.sum(f1 * f1)
        if norm == 0.0:
            return 0.0
        return float(np.sum((-f3 + 6.0 * lam * f0**2 * f1) * f1) / norm)


def _wave_field(profile, speed, x0, L, T, N_x, N_t):
    x = np.linspace(0.0, L, N_x + 1)
    t = np.linspace(0.0, T, N_t + 1)
    xi = x[None, :] - speed * t[:, None] - x0
    return FieldGrid(profile.derivatives(xi)[0], L, T)


def exact_traveling_wave(kappa, x0, params, N_x, N_t, certification_limit=CERTIFICATION_LIMIT):
    """
    Certified sech-type traveling wave on the (N_x, N_t) grid.

    kappa = 0 gives the zero data set. The fitted (profile, speed) pair is checked
    by pde_residual on a grid refined with kappa; CertificationError is raised when
    it fails (for instance lambda = +1, which has no sech wave).
    """
    if kappa < 0:
        raise ConfigurationError(f"kappa must be non-negative, got {kappa!r}")
    L, T, lam = params.L, params.T, params.lam
    wave = SechProfile(kappa)
    if kappa == 0:
        speed, residual = 0.0, 0.0
    else:
        xi = np.linspace(-(L + T), L + T, 1025)
        speed = wave.fitted_speed(lam, xi)
        scale = max(1.0, kappa)
        cert_nx = math.ceil(L / (CERTIFICATION_DX / scale))
        cert_nt = math.ceil(T / (CERTIFICATION_DT / scale**3))
        fine = _wave_field(wave, speed, x0, L, T, cert_nx, cert_nt)
        residual = pde_residual(fine, lam)
        logger.info(
            "traveling wave kappa=%s: speed %.12g, certification residual %.3e on %dx%d",
            kappa,
            speed,
            residual,
            cert_nx,
            cert_nt,
        )
        if residual > certification_limit:
            raise CertificationError(residual, certification_limit)

    grid = _wave_field(wave, speed, x0, L, T, N_x, N_t)
    t = grid.t
    left = np.stack(wave.derivatives(-speed * t - x0)[:3])
    right = np.stack(wave.derivatives(L - speed * t - x0)[:3])
    return OracleDataSet(
        field=grid,
        profile=grid.initial_profile(),
        traces=BoundaryTraces(left, right, T),
        final_row=grid.final_profile(),
        params=params,
        generator="exact",
        speed=speed,
        certification_residual=residual,
        notes={"kappa": kappa, "x0": x0},
    )


def derivative_matrix(n_points, h, order, width):
    """
    Dense (n_points, n_points) matrix of width-point finite differences, centred
    where possible and one-sided near the ends.
    """
    out = np.zeros((n_points, n_points))
    for i in range(n_points):
        start = min(max(i - width // 2, 0), n_points - width)
        offsets = np.arange(start, start + width) - i
        out[i, start : start + width] = fd_weights(offsets, order) / h**order
    return out


def fd_solve_ibvp(profile, g0, g1, f0, params):
    """
    Method-of-lines solution with q(0,t)=g0, q_x(0,t)=g1 and q(L,t)=f0.

    The controls are sampled on an equispaced time grid over [0, T]; the
    equation is imposed at nodes 2..N_x-1, q_x(0) replaces it at node 1. Time
    stepping is BDF2 after one backward Euler step, each step solved by Newton.
    """
    g0, g1, f0 = (np.asarray(v, dtype=float) for v in (g0, g1, f0))
    if not (g0.shape == g1.shape == f0.shape) or g0.ndim != 1 or g0.size < 2:
        raise ConfigurationError("controls must be equal-length 1-D arrays")
    lam = params.lam
    N = profile.N_x
    n_t = g0.size - 1
    dt = params.T / n_t
    D1 = derivative_matrix(N + 1, profile.h, 1, 5)
    D3 = derivative_matrix(N + 1, profile.h, 3, 7)
    ode = np.arange(2, N)
    eye = np.eye(N + 1)

    def rate(q):
        return D3 @ q - 6.0 * lam * q**2 * (D1 @ q)

    def rate_jacobian(q):
        return D3 - 6.0 * lam * (np.diag(2.0 * q * (D1 @ q)) + q[:, None] ** 2 * D1)

    values = np.empty((n_t + 1, N + 1))
    values[0] = profile.values
    bound = BLOWUP_FACTOR * (1.0 + np.max(np.abs(profile.values)))
    previous, q = None, profile.values.copy()
    for n in range(n_t):
        if previous is None:
            history, beta = q, dt
        else:
            history, beta = (4.0 * q - previous) / 3.0, 2.0 * dt / 3.0
        guess = q.copy()
        for it in range(NEWTON_MAX_ITER):
            residual = np.empty(N + 1)
            jac = np.zeros((N + 1, N + 1))
            residual[0] = guess[0] - g0[n + 1]
            jac[0, 0] = 1.0
            residual[1] = D1[0] @ guess - g1[n + 1]
            jac[1] = D1[0]
            residual[N] = guess[N] - f0[n + 1]
            jac[N, N] = 1.0
            residual[ode] = guess[ode] - history[ode] - beta * rate(guess)[ode]
            jac[ode] = eye[ode] - beta * rate_jacobian(guess)[ode]
            step = lu_solve(lu_factor(jac), -residual)
            guess = guess + step
            if np.max(np.abs(step)) <= NEWTON_TOL * (1.0 + np.max(np.abs(guess))):
                break
        else:
            raise InstabilityError(
                f"Newton did not converge at step {n + 1}; refine N_t", step=n + 1
            )
        if not np.all(np.isfinite(guess)) or np.max(np.abs(guess)) > bound:
            raise InstabilityError(
                f"solution blew up at step {n + 1}; refine N_t or N_x", step=n + 1
            )
        previous, q = q, guess
        values[n + 1] = q
    logger.debug("fd_solve_ibvp: %d steps of %.3e on %d intervals", n_t, dt, N)
    return FieldGrid(values, params.L, params.T)


def extract_traces(field):
    """
    (BoundaryTraces, q(., T)) from a field, with one-sided differences at x=0, L.
    """
    left = np.stack(boundary_derivatives(field.values, field.dx, "left"))
    right = np.stack(boundary_derivatives(field.values, field.dx, "right"))
    left[0] = field.values[:, 0]
    right[0] = field.values[:, -1]
    return BoundaryTraces(left, right, field.T), field.final_profile()


def build_dataset(generator, kappa, x0, params, N_x, N_t):
    """
    Oracle data set from the named generator ("exact" or "fd").

    "fd" drives fd_solve_ibvp with the exact wave's q0, g0, g1, f0 and takes all
    traces from the computed field; if the scheme is unstable the exact data set
    is used instead and the fallback is recorded in the notes.
    """
    exact = exact_traveling_wave(kappa, x0, params, N_x, N_t)
    if generator == "exact":
        return exact
    if generator != "fd":
        raise ConfigurationError(f"unknown generator {generator!r}")
    try:
        grid = fd_solve_ibvp(
            exact.profile, exact.traces.left[0], exact.traces.left[1], exact.traces.right[0], params
        )
    except InstabilityError as exc:
        logger.warning("FD generator unstable (%s); using the exact wave instead", exc)
        exact.notes["fd_fallback"] = str(exc)
        return exact
    traces, final_row = extract_traces(grid)
    error = float(np.max(np.abs(grid.values - exact.field.values)))
    return OracleDataSet(
        field=grid,
        profile=grid.initial_profile(),
        traces=traces,
        final_row=final_row,
        params=params,
        generator="fd",
        speed=exact.speed,
        certification_residual=exact.certification_residual,
        notes={"kappa": kappa, "x0": x0, "fd_error_vs_exact": error},
    )
