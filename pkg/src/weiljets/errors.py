"""Exception types shared across the kernel and the CLI."""


class WeilJetsError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(WeilJetsError):
    """Operands live in different ambient spaces or variable counts."""


class EmptyQuotientError(WeilJetsError):
    """The requested ideal contains a unit, so the quotient collapses."""


class HintTooSmallError(WeilJetsError):
    """Order detection hit the truncation ceiling; retry with a larger hint."""


class NotAnIdealError(WeilJetsError):
    """A subspace is not closed under multiplication by the generators."""


class NotWellDefinedError(WeilJetsError):
    """Generator images do not kill the defining ideal of the source."""

    def __init__(self, witness: str):
        super().__init__(f"defining relation maps to a nonzero element: {witness}")
        self.witness = witness


class NotEpimorphismError(WeilJetsError):
    """A morphism required to be surjective is not."""


class NotInIdealError(WeilJetsError):
    """A differential was requested for a function outside the ideal."""


class ClassicalityError(WeilJetsError):
    """Internal consistency failure: a graph jet missed its model invariants."""


class InternalCheckError(WeilJetsError):
    """An identity the construction guarantees failed to verify; a bug."""


class SessionError(WeilJetsError):
    """Base class for session-file problems."""


class SessionParseError(SessionError):
    """The session text is not valid against the documented schema."""


class UnknownNameError(SessionError):
    """A command referenced a name that was never bound."""
