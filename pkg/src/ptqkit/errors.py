"""Exception types shared across the toolkit."""


class QuantizationError(Exception):
    """Base class for all ptqkit errors."""


class EmptyInput(QuantizationError):
    """An operation received a tensor with no elements."""


class InvalidArgument(QuantizationError):
    """An argument is outside its documented domain."""


class ShapeError(QuantizationError):
    """Tensor shapes or per-channel parameter lengths do not agree."""


class FormatError(QuantizationError):
    """A serialized file is malformed or uses an unsupported layout."""
