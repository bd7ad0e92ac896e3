"""Exception taxonomy shared across the package.

Every error raised on bad input derives from :class:`SpectrasegError` so
callers can catch one base class; most also derive from ``ValueError`` so
they behave well with generic validation code.
"""


class SpectrasegError(Exception):
    """Base class for all spectraseg errors."""


class FormatError(SpectrasegError, ValueError):
    """A file does not conform to its declared byte layout."""


class BadMagic(FormatError):
    """Missing or wrong magic sequence / unsupported format version."""


class BadHeader(FormatError):
    """Header present but malformed or out of the supported range."""


class UnsupportedDtype(FormatError):
    """Array element type outside the supported little-endian subset."""


class UnsupportedOrder(FormatError):
    """Array stored in Fortran (column-major) order."""


class TruncatedPayload(FormatError):
    """Declared payload size does not match the bytes available."""


class NonFiniteError(SpectrasegError, ValueError):
    """NaN or Inf encountered where finite values are required."""


class IoFailure(SpectrasegError, OSError):
    """Underlying OS-level read/write failure."""


class BadFold(SpectrasegError, ValueError):
    """Fold index outside 0..3 or unknown dataset/scheme."""


class DimMismatch(SpectrasegError, ValueError):
    """Feature and anchor dimensions disagree."""


class ZeroAnchor(SpectrasegError, ValueError):
    """An anchor embedding has zero Euclidean norm."""


class LabelOutOfFold(SpectrasegError, ValueError):
    """Ground-truth label is neither ignored nor in the seen class set."""


class TooSmall(SpectrasegError, ValueError):
    """Input grid smaller than the operation's minimum size."""


class SizeMismatch(SpectrasegError, ValueError):
    """Two matrices or grids that must agree in size do not."""


class ShapeMismatch(SpectrasegError, ValueError):
    """Two masks that must share a shape do not."""


class GraphTooLarge(SpectrasegError, ValueError):
    """Pixel graph exceeds the dense-solve cap; downsample the input."""


class TooFewPixels(SpectrasegError, ValueError):
    """Fewer points than KNN neighbours requested."""


class NoConvergence(SpectrasegError, RuntimeError):
    """Iterative eigensolver exhausted its restarts."""


class EmptyMask(SpectrasegError, ValueError):
    """Mask has no foreground pixels."""


class TooFewAnchors(SpectrasegError, ValueError):
    """Anchor set too small for the requested statistic."""


class DegenerateInput(SpectrasegError, ValueError):
    """Statistic undefined on this input (e.g. constant sequence)."""


class StreamMismatch(SpectrasegError, ValueError):
    """Prediction and ground-truth streams disagree in length or shape."""


class ManifestError(SpectrasegError, ValueError):
    """Manifest file malformed or references missing inputs."""


class StageDependencyError(SpectrasegError, RuntimeError):
    """A pipeline stage's required input artifacts are missing."""
