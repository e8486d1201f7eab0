class RandistillError(Exception):
    """Base class for library errors."""


class ParameterError(RandistillError, ValueError):
    """Invalid family or protocol parameters."""


class ShapeError(RandistillError, ValueError):
    """Dimension or party mismatch between operands."""


class ContractError(RandistillError, ValueError):
    """An operand violates its structural contract (e.g. incomplete projectors)."""
