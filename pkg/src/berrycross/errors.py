"""Exception hierarchy shared by all berrycross modules."""


class BerryCrossError(Exception):
    """Base class for every error raised by this package."""


class DomainError(BerryCrossError, ValueError):
    """An argument lies outside the domain of the operation (e.g. t > T)."""


class ContractError(BerryCrossError, ValueError):
    """A structural precondition is violated (open path where a loop is needed, bad config)."""


class DegeneracyError(BerryCrossError):
    """The field magnitude is at or below the degeneracy threshold.

    At the crossing point the two levels coincide and there is no
    preferred eigenframe, so callers must decide what to do.
    """

    def __init__(self, message, r=None):
        super().__init__(message)
        self.r = r


class SingularityError(DegeneracyError):
    """The instantaneous eigenframe is singular somewhere along a path."""

    def __init__(self, message, r=None, t=None):
        super().__init__(message, r=r)
        self.t = t


class StencilError(SingularityError):
    """A finite-difference stencil straddles a pole or degeneracy."""


class IntegrationError(BerryCrossError):
    """Time integration could not meet its tolerances."""

    def __init__(self, message, t_reached=None, steps=None):
        super().__init__(message)
        self.t_reached = t_reached
        self.steps = steps
