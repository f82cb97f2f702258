"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class InvariantViolation(RuntimeError):
    """A structural assumption on the delay measure was found to be broken."""


class ModeError(ValueError):
    """An operation was requested under the wrong hypothesis set."""


class StepFailure(RuntimeError):
    """The per-step fixed-point iteration did not converge."""

    def __init__(self, message, time=None, iterations=None):
        super().__init__(message)
        self.time = time
        self.iterations = iterations


class ConfigError(ValueError):
    """One or more configuration problems; ``problems`` lists them all."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
