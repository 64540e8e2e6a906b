"""Exceptions shared across the package."""


class MasplitError(Exception):
    """Base class for all package-specific errors."""


class NonConvergence(MasplitError):
    """An iteration ran out of budget before meeting its tolerance.

    Carries whatever diagnostic object the caller attached (a trace, a
    residual, a node index) so the failure can be inspected instead of
    rerun blind.
    """

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic


class AmbiguousProjection(MasplitError):
    """The closest-point problem has no unique answer at this input.

    Raised when two candidate feet of the projection are equidistant to
    within roundoff, or when the input lies on the wrong side of the
    constraint set (trace bound violated) so no positive branch exists.
    """

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class ContractivityViolated(MasplitError):
    """A linearization was requested where its Neumann series diverges.

    The closed-form derivative of the pointwise projection inverts
    (I - d*L); when d*||L|| >= 1 that inverse is meaningless and the
    caller must not trust any local-rate conclusion drawn from it.
    """

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class InsufficientData(MasplitError):
    """A fit or estimate was asked for on fewer samples than it needs."""
