"""
Collocation solver for the matrix Riemann-Hilbert problem.

M = I + C[u] with a matrix density u on the nodes of Sigma. With
C+ u - C- u = u the jump condition M- = M+ J becomes, at every node,

    u J + (C- u)(J - I) = I - J.

The two rows of u decouple, so the system is solved as one complex system of
size 2N with two right-hand sides (one per row of u).
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import get_lapack_funcs, lu_factor, lu_solve

from mkdv_transform.cauchy import CauchyOperator
from mkdv_transform.exceptions import MkdvTransformError, SolverError

logger = logging.getLogger(__name__)

DEFAULT_CONDITION_LIMIT = 1e12
DEFAULT_IMAGINARY_TOLERANCE = 1e-2
DEFAULT_REFINEMENT_TOLERANCE = 1e-2


@dataclass
class DensityU:
    """
    Nodal values (N, 2, 2) of the density on a contour.
    """

    contour: object
    values: np.ndarray

    @property
    def weights(self):
        return self.contour.quadrature_weights

    def integral(self):
        """
        int_Sigma u(s) ds by the node quadrature.
        """
        return np.einsum("m,mab->ab", self.weights, self.values)


@dataclass
class RHSolveReport:
    x: float
    t: float
    size: int
    collocation_residual: float
    jump_residual: float = float("nan")
    imaginary_part: float = float("nan")
    condition: float = float("nan")
    refinement_change: float = float("nan")

    def as_row(self):
        return [
            self.x,
            self.t,
            float(self.size),
            self.collocation_residual,
            self.jump_residual,
            self.imaginary_part,
            self.condition,
            self.refinement_change,
        ]


REPORT_COLUMNS = [
    "x",
    "t",
    "size",
    "collocation_residual",
    "jump_residual",
    "imaginary_part",
    "condition",
    "refinement_change",
]


def _condition_estimate(lu, anorm):
    gecon = get_lapack_funcs("gecon", (lu,))
    rcond, info = gecon(lu, anorm, norm="1")
    if info != 0 or rcond == 0.0:
        return float("inf")
    return 1.0 / rcond


class RHSolver:
    """
    Solves the jump problem on a fixed contour for any number of jump fields;
    the Cauchy boundary matrix is assembled once.
    """

    def __init__(self, contour, cauchy=None, condition_limit=DEFAULT_CONDITION_LIMIT):
        self.contour = contour
        self.cauchy = cauchy or CauchyOperator(contour)
        self.condition_limit = condition_limit

    def system(self, J):
        """
        Collocation matrix (2N, 2N) and right-hand sides (2N, 2).

        Unknowns are ordered (node m, column alpha) for each row r of u.
        """
        N = self.contour.size
        C = self.cauchy.minus_matrix()
        eye = np.eye(2)
        jump_minus = J - eye
        # A[j, beta, m, alpha] = C[j, m] (J - I)_j[alpha, beta] + delta_jm J_j[alpha, beta]
        A = np.einsum("jm,jab->jbma", C, jump_minus)
        idx = np.arange(N)
        A[idx, :, idx, :] += np.swapaxes(J, 1, 2)
        rhs = np.swapaxes(eye - J, 1, 2)
        return A.reshape(2 * N, 2 * N), rhs.reshape(2 * N, 2)

    def solve(self, J, x=float("nan"), t=float("nan"), J_probes=None):
        """
        Density for the jump field J (nodal values (N, 2, 2)) and its report.
        """
        N = self.contour.size
        J = np.asarray(J, dtype=complex)
        if J.shape != (N, 2, 2):
            raise SolverError(f"jump field has shape {J.shape}, expected {(N, 2, 2)}")
        if not np.all(np.isfinite(J)):
            raise SolverError("jump field contains non-finite values")

        A, rhs = self.system(J)
        lu, piv = lu_factor(A, check_finite=False)
        condition = _condition_estimate(lu, np.linalg.norm(A, 1))
        if condition > self.condition_limit:
            raise SolverError(
                f"collocation system is ill-conditioned (estimate {condition:.3e}); "
                "change R or refine the contour",
                condition=condition,
            )
        X = lu_solve((lu, piv), rhs, check_finite=False)

        scale = np.max(np.abs(rhs))
        residual = float(np.max(np.abs(A @ X - rhs)) / scale) if scale > 0 else float(
            np.max(np.abs(A @ X - rhs))
        )
        values = np.swapaxes(X.reshape(N, 2, 2), 1, 2)
        u = DensityU(self.contour, values)
        report = RHSolveReport(x, t, 2 * N, residual, condition=condition)
        if J_probes is not None:
            report.jump_residual = self.jump_residual(u, J_probes)
        logger.debug(
            "RH solve at (%s, %s): size %d, residual %.3e, condition %.3e",
            x,
            t,
            2 * N,
            residual,
            condition,
        )
        return u, report

    def jump_residual(self, u, J_probes):
        """
        max |M-(s*) - M+(s*) J(s*)| over the off-node probe points.
        """
        panels, tau, _ = self.contour.probes()
        minus, plus = self.cauchy.cauchy_boundary(u.values, panels, tau)
        eye = np.eye(2)
        return float(np.max(np.abs((eye + minus) - (eye + plus) @ J_probes)))


def solve_rhp(contour, J, cauchy=None, condition_limit=DEFAULT_CONDITION_LIMIT):
    return RHSolver(contour, cauchy, condition_limit).solve(J)


def reconstruct_q(u):
    """
    (q, imaginary part) from q = -2i lim k M_12 = (1/pi) int u_12 ds.
    """
    value = u.integral()[0, 1] / np.pi
    return float(value.real), float(value.imag)


@dataclass
class FieldSolution:
    x: np.ndarray
    t: np.ndarray
    q: np.ndarray
    reports: list
    failures: list = field(default_factory=list)

    def rows(self):
        return np.column_stack((self.x, self.t, self.q))


def solve_field(
    contour,
    jump_field,
    points,
    condition_limit=DEFAULT_CONDITION_LIMIT,
    imaginary_tolerance=DEFAULT_IMAGINARY_TOLERANCE,
    strict=True,
    reference=None,
    refinement_tol=DEFAULT_REFINEMENT_TOLERANCE,
):
    """
    Solve and reconstruct at every (x, t) of points, in the given order.

    reference is an optional (contour, jump_field) pair on a finer node set. Each
    point is solved there too; |q_fine - q| is the refinement_change of the
    report, and a change above refinement_tol marks the point unconverged. Its
    coarse value is kept.

    Per-point failures are collected with their indices; with strict set they
    are raised together as one SolverError once every point has been tried.
    """
    solver = RHSolver(contour, condition_limit=condition_limit)
    if reference is not None:
        fine_contour, fine_field = reference
        fine_solver = RHSolver(fine_contour, condition_limit=condition_limit)
    points = [(float(x), float(t)) for x, t in points]
    xs = np.array([p[0] for p in points])
    ts = np.array([p[1] for p in points])
    q = np.full(len(points), np.nan)
    reports, failures = [], []
    for i, (x, t) in enumerate(points):
        try:
            u, report = solver.solve(
                jump_field.at(x, t), x, t, J_probes=jump_field.probes_at(x, t)
            )
        except MkdvTransformError as exc:
            logger.error("RH solve failed at point %d (x=%s, t=%s): %s", i, x, t, exc)
            failures.append((i, x, t, str(exc)))
            continue
        q[i], report.imaginary_part = reconstruct_q(u)
        if abs(report.imaginary_part) > imaginary_tolerance:
            logger.warning(
                "reconstruction at (%s, %s) has imaginary part %.3e",
                x,
                t,
                report.imaginary_part,
            )
        reports.append(report)
        logger.info("q(%.6g, %.6g) = %.10g", x, t, q[i])
        if reference is None:
            continue
        try:
            u_fine, _ = fine_solver.solve(fine_field.at(x, t), x, t)
        except MkdvTransformError as exc:
            logger.error("refined RH solve failed at point %d: %s", i, exc)
            failures.append((i, x, t, f"refined solve failed: {exc}"))
            continue
        report.refinement_change = abs(reconstruct_q(u_fine)[0] - q[i])
        if report.refinement_change > refinement_tol:
            logger.warning(
                "q(%s, %s) changed by %.3e under node refinement",
                x,
                t,
                report.refinement_change,
            )
            failures.append(
                (i, x, t, f"unconverged: refinement change {report.refinement_change:.3e}")
            )

    solution = FieldSolution(xs, ts, q, reports, failures)
    if failures and strict:
        detail = "; ".join(f"#{i} (x={x}, t={t}): {msg}" for i, x, t, msg in failures)
        error = SolverError(f"{len(failures)} of {len(points)} points failed: {detail}")
        error.failures = failures
        error.solution = solution
        raise error
    return solution
