"""Exception types raised by the cavity models."""


class CavityError(Exception):
    """Base class for all model errors."""


class NumericFailure(CavityError):
    """A numerical procedure could not produce a result."""


class NoResonanceInWindow(NumericFailure):
    pass


class NoConvergence(NumericFailure):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NegativeGap(CavityError, ValueError):
    pass


class UnclassifiedMode(CavityError, ValueError):
    pass


class UnstableCavity(CavityError, ValueError):
    pass


class InvalidBudget(CavityError, ValueError):
    pass
