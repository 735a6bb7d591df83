"""Exception hierarchy.

Everything raised on bad input derives from :class:`FlowMotionError`; the CLI
maps that family to exit status 1 and anything else to 2.
"""


class FlowMotionError(Exception):
    """Base class for all errors raised by this package."""


# -- fitting ---------------------------------------------------------------

class FitError(FlowMotionError):
    """A background model could not be estimated for a frame."""


class EmptySelection(FitError):
    """Grid sampling selected zero pieces."""


class InsufficientSamples(FitError):
    """Fewer samples than the minimal subset size."""


class SingularDesign(FitError):
    """Least-squares design matrix is rank deficient."""


class DegenerateModel(FitError):
    """Every RANSAC hypothesis produced a singular fit."""


class EmptyInput(FlowMotionError, ValueError):
    pass


# -- data / metrics --------------------------------------------------------

class DimensionMismatch(FlowMotionError, ValueError):
    pass


class EmptySequence(FlowMotionError, ValueError):
    pass


class MissingFrame(FlowMotionError):
    pass


class InvalidSpec(FlowMotionError, ValueError):
    pass


class UnknownPreset(FlowMotionError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class ConfigError(FlowMotionError, ValueError):
    pass


# -- file formats ----------------------------------------------------------

class FormatError(FlowMotionError):
    """Malformed flow, mask or manifest file."""


class BadMagic(FormatError):
    pass


class TruncatedFile(FormatError):
    pass


class NonPositiveDims(FormatError):
    pass


class NonFiniteValues(FormatError, ValueError):
    pass


class BadHeader(FormatError):
    pass


class BadPixelValue(FormatError):
    pass


class ParseError(FormatError):
    pass


class NonMonotoneIndices(FormatError):
    pass


class IoFailure(FlowMotionError, OSError):
    pass
