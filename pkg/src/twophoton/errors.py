"""Exception types raised across the toolkit."""


class TwoPhotonError(Exception):
    """Base class for toolkit errors."""


class StackFormatError(TwoPhotonError, ValueError):
    """A stack header or payload does not follow the on-disk format."""


class HeaderParseError(StackFormatError):
    """The JSON header could not be parsed."""


class SizeMismatchError(StackFormatError):
    """Binary payload size disagrees with the header dimensions."""


class DataIntegrityError(StackFormatError):
    """Non-finite values found in loaded data."""


class BioSignalFormatError(TwoPhotonError, ValueError):
    """Malformed biosignal or schedule CSV."""


class InsufficientFramesError(TwoPhotonError, ValueError):
    pass


class DegenerateFrameError(TwoPhotonError, ValueError):
    """A frame has non-positive mean intensity and cannot be equalized."""


class AlignmentError(TwoPhotonError, RuntimeError):
    """No candidate transform left enough valid pixels to score."""


class ConfigError(TwoPhotonError, ValueError):
    pass
