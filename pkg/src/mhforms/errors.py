"""Exception types shared across the package."""


class DomainError(Exception):
    """A request that is outside the mathematical domain of an operation."""


class ShapeError(DomainError):
    """Invalid block layout, or operands whose block layouts do not match."""


class ParityError(ShapeError):
    """An operation that needs even block degrees received an odd one."""


class ParseError(DomainError):
    """Malformed polynomial / shape / point text."""


class DimensionCapError(DomainError):
    """Exact computation refused because the space dimension exceeds the cap."""
