"""Exception types shared across the package."""


class FacLocError(Exception):
    """Base class for all errors raised by outlierfl."""


class StructuralError(FacLocError, ValueError):
    """A solution or certificate does not fit its instance."""


class InfeasibleError(FacLocError):
    """The coverage requirement cannot be met."""


class GuardError(FacLocError):
    """Input exceeds an enumeration or size guard."""


class UnknownVertexError(FacLocError, KeyError):
    pass


class AccountingError(FacLocError):
    """A simulated primitive exceeded its bandwidth budget."""
