class HierarchyError(Exception):
    """Base class for every error raised by the hierarchy toolkit."""


# Series engine
class BasePointMismatch(HierarchyError, ValueError):
    """Operands are expanded around different base points."""


class DegenerateSeries(HierarchyError, ValueError):
    """A series operation would leave no valid coefficient."""


class OutsideRadius(HierarchyError, ValueError):
    """Certified rebase requested outside the estimated radius."""


class AllZeroTail(HierarchyError, ValueError):
    """Every coefficient of the radius window vanishes."""


class InsufficientCoefficients(HierarchyError, ValueError):
    """Too few coefficients for a radius estimate."""


# Hierarchies
class PoleAtBasePoint(HierarchyError, ValueError):
    """A coefficient function has a pole at the expansion point."""


class PoleEvaluation(HierarchyError, ValueError):
    """Pointwise evaluation at a pole."""


class TransformSingular(HierarchyError, ValueError):
    """A transformation denominator vanishes."""


class DependencyConeViolation(HierarchyError, ValueError):
    """Not enough constants or series order for the requested truncation."""


class MissingConstants(HierarchyError, ValueError):
    """Integration constants missing for levels below the free level."""


class ClosureRequired(HierarchyError, ValueError):
    """The a = 0 recurrence needs a top-level seed."""


class WrongDirection(HierarchyError, ValueError):
    """Operation requires a different recurrence direction."""


class DomainError(HierarchyError, ValueError):
    """Argument outside the domain of a closed form."""


class InternalInconsistency(HierarchyError, RuntimeError):
    """Two independent computations of the same quantity disagree."""
