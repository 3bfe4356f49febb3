class ParameterError(ValueError):
    """Invalid input to a sampler, model or bound."""


class InvariantViolation(RuntimeError):
    """A structural invariant of an exploration failed at runtime."""

    def __init__(self, message, dump=None):
        super().__init__(message)
        self.dump = dump


class VerificationFailure(RuntimeError):
    """A verification step (oracle comparison, bound check) failed."""
