"""Exception types shared across the package."""


class QwlabError(Exception):
    """Base class for all package-specific failures."""


class IndeterminateError(QwlabError):
    """A step-capped computation ended without converging or stalling."""


class ThresholdUnreachableError(QwlabError):
    """Requested cumulative arrival probability exceeds the total arrival mass."""

    def __init__(self, message, arrival_mass=None):
        super().__init__(message)
        self.arrival_mass = arrival_mass


class GroupOrderError(QwlabError):
    """Group closure exceeded the configured maximum order."""


class NotAnAutomorphismError(QwlabError):
    """A candidate permutation does not preserve the colored graph."""


class SymmetryError(QwlabError):
    """An operator or measurement is incompatible with the requested subgroup."""


class OracleMismatchError(QwlabError):
    """Two independent computations of the same quantity disagree."""
