class SpecpartError(RuntimeError):
    """Base class for errors raised by specpart."""


class ConfigError(SpecpartError, ValueError):
    """Raised for malformed or inconsistent run configurations."""


class DomainError(SpecpartError, ValueError):
    """Raised when a domain cannot be discretized or a mask file is invalid."""


class EigenSolverError(SpecpartError):
    """Raised when inverse iteration does not reach the requested residual.

    Parameters
    ----------
    message : str
    residual : float
        L2 residual ``||-Delta_h u - lambda u||`` of the last iterate.
    iterations : int
        Number of outer iterations performed.
    """

    def __init__(self, message, residual=None, iterations=None):
        super(EigenSolverError, self).__init__(message)
        self.residual = residual
        self.iterations = iterations


class PhaseCollapseError(SpecpartError):
    """Raised when a phase is annihilated (projection, deformation, extraction)."""

    def __init__(self, message, phase=None):
        super(PhaseCollapseError, self).__init__(message)
        self.phase = phase


class SolverStalledError(SpecpartError):
    """Raised when backtracking exhausts its halvings without an acceptable step."""
