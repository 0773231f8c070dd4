"""Exception types raised across the toolkit."""


class BreathError(ValueError):
    """Base class for all toolkit errors."""


class UnsupportedFormat(BreathError):
    pass


class CorruptHeader(BreathError):
    pass


class EmptyAudio(BreathError):
    pass


class TooShort(BreathError):
    pass


class DegenerateBank(BreathError):
    pass


class TooFewExemplars(BreathError):
    pass


class ShapeMismatch(BreathError):
    pass


class ConfigMismatch(BreathError):
    pass


class FingerprintMismatch(ConfigMismatch):
    pass


class CorruptFile(BreathError):
    pass


class SingularSystem(BreathError):
    pass


class SilentFrame(BreathError):
    pass


class DimensionMismatch(BreathError):
    pass


class TooSmall(BreathError):
    pass


class IllConditioned(BreathError):
    pass


class NonMonotonic(BreathError):
    pass


class OverlapError(BreathError):
    pass
