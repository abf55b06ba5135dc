"""Exception types shared across the package."""


class RomoptError(Exception):
    """Base class for all package errors."""


class DomainError(RomoptError):
    """An input lies outside its declared bounds."""


class ExtrapolationError(RomoptError):
    """A surrogate input falls outside the tabulated grid span."""


class UnknownOutputError(RomoptError):
    """The requested output name is not present in the surrogate."""


class FormatError(RomoptError):
    """A model or data file is malformed."""


class EmptyDatasetError(RomoptError):
    """No training rows available for the requested output."""


class SingularSolveError(RomoptError):
    """A least-squares subproblem stayed singular even after regularization."""


class IllConditionedError(RomoptError):
    """Kernel factorization failed at the maximum permitted jitter."""


class EmptyInputError(RomoptError):
    """An operation that needs at least one value received none."""


class ConfigError(RomoptError):
    """Invalid run configuration."""
