"""Exception types raised by edgetrace.

Everything derives from EdgetraceError so callers (and the CLI) can catch
package failures with a single except clause.
"""


class EdgetraceError(Exception):
    """Base class for all edgetrace errors."""


# ---------------------------------------------------------------- raster I/O

class PgmError(EdgetraceError):
    """A PGM byte stream could not be decoded."""


class MalformedHeaderError(PgmError):
    """Bad magic number, non-numeric token, or nonsensical dimensions."""


class TruncatedDataError(PgmError):
    """The raster holds fewer samples than the header promises."""


class UnsupportedMaxvalError(PgmError):
    """Declared maxval above 255; only 8-bit samples are supported."""


# ------------------------------------------------------- imgproc parameters

class NonPositiveSigmaError(EdgetraceError):
    """Gaussian sigma must be strictly positive."""


class ThresholdOrderError(EdgetraceError):
    """Edge thresholds must satisfy 0 <= low < high."""


class ZeroIterationsError(EdgetraceError):
    """Morphological closing needs at least one iteration."""


# ------------------------------------------------------------------ geometry

class EmptyInputError(EdgetraceError):
    """An operation that needs at least one element got none."""


# ---------------------------------------------------------------- distancing

class NonPositiveCalibrationError(EdgetraceError):
    """Reference widths must be finite and strictly positive."""


class NonPositiveThresholdError(EdgetraceError):
    """The compliance distance threshold must be strictly positive."""


# ----------------------------------------------------------------- detection

class MalformedAnnotationError(EdgetraceError):
    """An annotation record does not match the expected schema."""


class UnknownClassError(EdgetraceError):
    """A detection class outside the supported vocabulary."""


class MissingLabelMapError(EdgetraceError):
    """No label map stored for the requested frame."""


class DimensionMismatchError(EdgetraceError):
    """Two rasters that must share dimensions do not."""


class BadThresholdError(EdgetraceError):
    """An IoU threshold outside [0, 1]."""


class LabelOutOfRangeError(EdgetraceError):
    """A segmentation label >= the declared class count."""


# ---------------------------------------------------------- edge node runtime

class ConfigInvalidError(EdgetraceError):
    """Pipeline configuration failed validation."""


class ManifestMissingError(EdgetraceError):
    """The frame manifest file does not exist."""


class IoFailureError(EdgetraceError):
    """Writing to an event sink failed."""


class EndpointUnreachableError(EdgetraceError):
    """The collector endpoint stayed unreachable after all retries.

    Carries the delivery report so callers can see what was spooled.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class BindFailureError(EdgetraceError):
    """The collector could not bind its listen address."""


# --------------------------------------------------------------------- bench

class MalformedRowError(EdgetraceError):
    """A fixture CSV row could not be parsed."""


class UnknownMetricError(EdgetraceError):
    """Requested ranking metric is not a fixture field."""
