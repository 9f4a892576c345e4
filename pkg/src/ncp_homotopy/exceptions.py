"""Exception types shared across the solver."""


class NcpError(Exception):
    """Base class for solver errors."""


class SingularMatrix(NcpError):
    """A pivot fell below the singularity threshold."""


class RankDeficient(SingularMatrix):
    """J J^T is singular, so the pseudoinverse is not defined by normal equations."""


class DomainError(NcpError):
    """A problem function was asked to evaluate outside its domain."""


class SingularStart(NcpError):
    """The Jacobian of psi at the start point is singular."""


class DegenerateStart(NcpError):
    """Some component of psi at the start point is (numerically) zero."""


class NoCandidate(NcpError):
    """The grid oracle found no point with an acceptable residual."""
