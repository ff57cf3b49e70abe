"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class NLFormsError(Exception):
    exit_code = 1


class InvalidInputError(NLFormsError, ValueError):
    exit_code = 2


class NumericalError(NLFormsError, ArithmeticError):
    exit_code = 3


class DiagnosticsError(NumericalError):
    """An MCMC run left its configured guard region."""


class ResourceLimitError(NLFormsError):
    exit_code = 4


class PreconditionError(NLFormsError):
    exit_code = 5


class UnsupportedModelError(NLFormsError):
    exit_code = 6
