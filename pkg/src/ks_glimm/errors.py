from __future__ import annotations


class KSGlimmError(Exception):
    """Base class for every error raised by ks_glimm."""


class ConfigError(KSGlimmError, ValueError):
    """Invalid configuration. ``line`` points into the key=value source when known."""

    def __init__(self, message: str, *, line: int | None = None) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class HypothesisError(ConfigError):
    """Initial data violating the decay hypotheses (e.g. decay power r <= 3/2)."""


class RegimeError(KSGlimmError, ValueError):
    """Model parameters outside the supported regime (e.g. chi*mu <= 0)."""


class DomainError(KSGlimmError, ValueError):
    """Argument outside the domain of a transform (log of nonpositive values etc.)."""


class GuardAbort(KSGlimmError):
    """A run was aborted by a guard. ``strip`` is the strip index when known."""

    def __init__(self, message: str, *, strip: int | None = None) -> None:
        self.strip = strip
        super().__init__(f"strip {strip}: {message}" if strip is not None else message)


class AmplitudeGuardError(GuardAbort):
    """A state left the rho0 ball."""


class CFLViolationError(GuardAbort):
    """A wave speed reached the mesh ratio."""


class BoundaryInfluenceError(GuardAbort):
    """A disturbance reached the truncation boundary."""


class SolverError(KSGlimmError):
    """Numerical failure inside a solver."""


class SingularityError(SolverError):
    """1 + w2 <= 0, the flux Jacobian is not invertible."""


class HyperbolicityError(SolverError):
    """Nonpositive discriminant, eigenvalues are not real and distinct."""


class RiemannSolverError(SolverError):
    """Wave-curve or middle-state iteration did not converge."""

    def __init__(self, message: str, *, left=None, right=None, theta=None) -> None:
        self.left = left
        self.right = right
        self.theta = theta
        super().__init__(message)


class FitError(SolverError):
    """Decay fit on a degenerate series."""


EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GUARD = 3
EXIT_SOLVER = 4


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the CLI exit code."""
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, GuardAbort):
        return EXIT_GUARD
    if isinstance(exc, SolverError):
        return EXIT_SOLVER
    if isinstance(exc, (RegimeError, DomainError)):
        return EXIT_CONFIG
    return EXIT_SOLVER
