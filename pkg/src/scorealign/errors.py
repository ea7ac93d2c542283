"""Exception hierarchy.

Everything the library raises on bad input derives from ``DomainError`` so
the CLI can map it to exit code 1 in one place.
"""


class DomainError(Exception):
    """Input is well-formed but violates a precondition of the operation."""


class QuerySyntaxError(DomainError):
    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class InstanceFormatError(DomainError):
    """Malformed instance or probabilistic-database document."""


class QueryMismatchError(DomainError):
    """Query and instance disagree on a relation's arity."""


class CapExceededError(DomainError):
    """Exhaustive enumeration would exceed the configured size limit."""


class UnsupportedQueryError(DomainError):
    """Query shape outside what an operation handles (self-joins, constants)."""

    def __init__(self, message, kind):
        super().__init__(message)
        self.kind = kind


class HypothesisError(DomainError):
    """A constructor's structural precondition does not hold for the query."""


class VerificationError(RuntimeError):
    """A generated artifact failed its own check; indicates a bug."""
