"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration problems exit 2, data
problems (unreadable/ill-formed files, failed mask extraction) exit 3,
and runtime failures exit 4.
"""


class DespeckleError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(DespeckleError):
    """Invalid configuration value or spec."""


class DataError(DespeckleError):
    """Problem with input data (files, directory layout, image format)."""


class FormatError(DataError):
    """Image file exists but is not a supported single-channel format."""


class MaskExtractionError(DespeckleError):
    """No usable retina/signal contour could be extracted from an image."""


class InsufficientStructureError(DespeckleError):
    """A feature map did not yield enough curve structure to skeletonize."""


class TrainingError(DespeckleError):
    """Training produced a non-finite loss or otherwise failed.

    Carries a ``diagnostics`` dict with the offending loss components.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class UnknownSessionError(DespeckleError):
    """A rating session id does not exist in the store."""


class RatingValidationError(DespeckleError):
    """A submitted rating is malformed or targets the wrong sample."""


class DuplicateRatingError(DespeckleError):
    """A rating was already recorded for this sample."""
