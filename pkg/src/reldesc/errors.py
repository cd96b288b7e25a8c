"""Exception types shared across the package.

Everything semantic derives from DescriptorError (a ValueError), so callers
can catch one base class for input-contract violations. I/O problems use the
built-in OSError family.
"""


class DescriptorError(ValueError):
    """Base class for all validation errors raised by this package."""


class BadMagicError(DescriptorError):
    """File does not start with the expected matrix-format magic bytes."""


class ShapeMismatchError(DescriptorError):
    """Declared shape disagrees with the payload length."""


class NonFiniteError(DescriptorError):
    """A matrix contains NaN or Inf entries."""


class ZeroColumnError(DescriptorError):
    """A column has (near-)zero L2 norm and cannot be normalized."""


class ZeroRowError(DescriptorError):
    """A row has (near-)zero L2 norm and cannot be normalized."""


class DimensionMismatchError(DescriptorError):
    """Operands have incompatible dimensions."""


class AnchorMismatchError(DescriptorError):
    """Descriptors were produced from different anchor banks."""


class NOutOfRangeError(DescriptorError):
    """Requested selection size is outside [1, C]."""


class KOutOfRangeError(DescriptorError):
    """Requested reduced dimension is outside [1, d]."""


class TooFewIndicesError(DescriptorError):
    """At least two indices are required."""


class IndexOutOfRangeError(DescriptorError):
    """A selection index does not address a bank column."""


class LabelOutOfRangeError(DescriptorError):
    """A training label falls outside [0, num_classes)."""


class LengthMismatchError(DescriptorError):
    """Parallel sequences have different lengths."""


class EmptyGalleryError(DescriptorError):
    """Evaluation requires a non-empty gallery."""


class ConfigError(DescriptorError):
    """A configuration value or file is invalid."""
