"""
Exceptions raised by mkdv-transform.

Every error carries the values that triggered it so that the command line can
report them without re-deriving anything.
"""


class MkdvTransformError(Exception):
    """
    Base class for every error raised by the package.
    """


class ExponentRangeError(MkdvTransformError):
    """
    An exponential factor would leave the double-precision range.

    This means the caller evaluated in an unbounded-growth direction; it is a
    configuration or usage bug, not a property of the data.
    """

    def __init__(self, exponent, where=""):
        self.exponent = exponent
        self.where = where
        super().__init__(
            f"exponent with real part {float(abs(complex(exponent).real)):.6g} "
            f"exceeds the guard{' in ' + where if where else ''}"
        )


class SingularMatrixError(MkdvTransformError):
    """
    A 2x2 matrix with vanishing determinant was inverted.
    """


class IntegratorError(MkdvTransformError):
    """
    The Lax-pair integrator could not advance (step underflow or non-finite state).
    """


class SingularJumpError(MkdvTransformError):
    """
    A denominator of the jump data is below the configured floor.
    """

    def __init__(self, function, k, value):
        self.function = function
        self.k = k
        self.value = value
        super().__init__(
            f"{function}: denominator {abs(value):.3e} below floor at k={k!r}; "
            "a zero of a, d or d1 lies on the contour"
        )


class SectorError(MkdvTransformError):
    """
    A spectral point lies outside the sectors where an identity is valid.
    """

    def __init__(self, k, sector, allowed):
        self.k = k
        self.sector = sector
        self.allowed = tuple(allowed)
        super().__init__(
            f"k={k!r} lies in sector {sector}, expected one of {self.allowed}"
        )


class ContourError(MkdvTransformError):
    """
    The contour cannot be built or a point does not lie on it.
    """


class ProximityError(MkdvTransformError):
    """
    An off-contour Cauchy evaluation was requested too close to the contour.
    """

    def __init__(self, k, distance, guard):
        self.k = k
        self.distance = distance
        self.guard = guard
        super().__init__(
            f"k={k!r} is {distance:.3e} from the contour (guard {guard:.3e})"
        )


class ConfigurationError(MkdvTransformError):
    """
    Invalid configuration, or a configured limit was reached.
    """


class SolverError(MkdvTransformError):
    """
    The collocation system is singular or too ill-conditioned to trust.
    """

    def __init__(self, message, condition=None, index=None):
        self.condition = condition
        self.index = index
        super().__init__(message)


class ReconstructionError(MkdvTransformError):
    """
    A reconstructed field failed its truncation, convergence or accuracy checks.
    """

    def __init__(self, problems):
        self.problems = problems
        super().__init__("reconstruction rejected: " + "; ".join(problems))


class CertificationError(MkdvTransformError):
    """
    A candidate exact solution failed the PDE residual certification.
    """

    def __init__(self, residual, limit):
        self.residual = residual
        self.limit = limit
        super().__init__(
            f"PDE residual {residual:.3e} exceeds certification limit {limit:.1e}"
        )


class InstabilityError(MkdvTransformError):
    """
    The finite-difference IBVP solver blew up or Newton failed to converge.
    """

    def __init__(self, message, step=None):
        self.step = step
        super().__init__(message)


class InputFileError(MkdvTransformError):
    """
    A table or manifest file is malformed.
    """

    def __init__(self, path, line, column, message):
        self.path = path
        self.line = line
        self.column = column
        super().__init__(f"{path}:{line}:{column}: {message}")


class GridMismatchError(MkdvTransformError):
    """
    Two fields do not share the same grid.
    """


class IncompatibleDataError(MkdvTransformError):
    """
    The global relation rejects the data and no override was given.
    """

    def __init__(self, verdict, max_residual, ceiling):
        self.verdict = verdict
        self.max_residual = max_residual
        self.ceiling = ceiling
        super().__init__(
            f"global relation verdict is {verdict!r} (max scaled residual "
            f"{max_residual:.3e}, ceiling {ceiling:.1e}); use --override-gr to proceed"
        )
