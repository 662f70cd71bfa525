"""Exception hierarchy for the registration pipeline.

Each pipeline-stage error carries a ``stage`` attribute so callers (CLI
exit codes, service job records) can report which stage failed without
string matching.
"""


class RegistrationError(Exception):
    """Base class for all craqreg errors."""

    stage: str | None = None


class DegeneratePoint(RegistrationError):
    """Projective transfer hit a vanishing denominator."""


class DegenerateConfiguration(RegistrationError):
    """Point configuration does not determine a homography."""


class DegenerateHomography(RegistrationError):
    """Matrix is not a valid (invertible, finite) homography."""


class EmptyDetection(RegistrationError):
    """No keypoint passed the confidence threshold."""

    stage = "detection"


class NoMatches(RegistrationError):
    """Mutual nearest-neighbor matching produced no pairs."""

    stage = "matching"


class EstimationFailed(RegistrationError):
    """No homography hypothesis reached the minimum consensus."""

    stage = "estimation"


class DimensionMismatch(RegistrationError):
    """Two images expected to share dimensions do not."""


class AlphaOutOfRange(RegistrationError):
    """Blend factor outside [0, 1]."""


class InvalidPolicy(RegistrationError):
    """Resize policy string or parameter is invalid."""


class ConfigError(RegistrationError):
    """A configuration field violates its invariant.

    ``field`` names the offending entry so interfaces can surface it.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class EmptyErrorList(RegistrationError):
    """Metric requested over an empty error list."""


class EmptyDataset(RegistrationError):
    """Evaluation requested over an empty dataset."""
