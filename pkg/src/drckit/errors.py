"""Shared exception types for the toolkit."""


class DrckitError(Exception):
    """Base class for toolkit errors."""


class GeometryError(DrckitError):
    """Block/strip/substrip sizes do not divide evenly or do not match."""


class ParameterError(DrckitError):
    """Code parameters out of range or inconsistent."""


class InsufficientDataError(DrckitError):
    """Fewer blocks supplied than the code needs to decode."""


class MdsViolationError(DrckitError):
    """A decode matrix that should be invertible is singular."""


class ConstructionError(DrckitError):
    """A code construction failed its rank or validation checks."""


class UnsupportedScenarioError(DrckitError):
    """Repair request outside the single-failure model."""


class IncompleteRackError(DrckitError):
    """A relayer is missing expected inputs from its rack."""
