"""Exception hierarchy.

Each leaf class carries the CLI exit code it maps to, so the command layer
never has to guess.
"""


class PolysemiError(Exception):
    exit_code = 1


class ConfigError(PolysemiError, ValueError):
    exit_code = 2


class InadmissibleGeneratorError(PolysemiError, ValueError):
    """A generator list violates the polynomial-semigroup conditions."""

    exit_code = 3


class DegenerateGeneratorError(InadmissibleGeneratorError):
    pass


class MissingExpandingGeneratorError(InadmissibleGeneratorError):
    pass


class NumericalError(PolysemiError, ArithmeticError):
    exit_code = 4


class SolverError(NumericalError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegreeCapError(NumericalError):
    pass


class EnumerationCapError(NumericalError):
    pass


class IndeterminateOrderError(NumericalError):
    pass


class UndecidedRedundancyError(NumericalError):
    def __init__(self, message, generator=None):
        super().__init__(message)
        self.generator = generator


class HypothesisViolationError(NumericalError):
    pass


class InsufficientDataError(NumericalError, ValueError):
    pass


class OutputError(PolysemiError, OSError):
    exit_code = 5
