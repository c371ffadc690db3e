"""Exception hierarchy shared across the package.

Every error a caller is expected to handle derives from ActsegError, so the
CLI can map validation failures to exit code 1 and everything else to 2.
"""


class ActsegError(Exception):
    """Base class for all validation / contract errors raised by this package."""


class InvalidGraph(ActsegError):
    pass


class InvalidPermutation(ActsegError):
    pass


class FormatError(ActsegError):
    pass


class DegenerateSequence(ActsegError):
    pass


class InsufficientData(ActsegError):
    pass


class RangeError(ActsegError):
    pass


class ShapeError(ActsegError):
    pass


class ConfigError(ActsegError):
    pass


class EmptyInput(ActsegError):
    pass


class InvalidSegmentation(ActsegError):
    pass


class NonFiniteGradient(ActsegError):
    pass


class ChecksumError(ActsegError):
    pass


class CompatibilityError(ActsegError):
    pass
