"""Exception types shared across the package."""


class MaptError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(MaptError):
    """Bad syntax in a model file, cut list, expression or query."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            where = f"line {line}" if column is None else f"line {line}, column {column}"
            message = f"{message} ({where})"
        super().__init__(message)


class MalformedModel(MaptError):
    """Structurally invalid model (bad shapes, duplicate names, broken DAG)."""


class UnknownReference(MaptError):
    """A name refers to a component, transform, locality or agent that does not exist."""


class MalformedState(MaptError):
    """A state does not fit the model it is used with."""


class ValidationError(MaptError):
    """An operation that requires a valid MAPT was given a model that is not one."""


class NotEnabled(MaptError):
    """Attempt to execute an event that is not enabled in the current state."""


class DivisionByZero(MaptError):
    """Division by zero while evaluating an expression; names the culprit."""


class Overflow(MaptError):
    """A rational grew past the configured magnitude cap."""


class PredicateError(MaptError):
    """A predicate or indicator cannot be evaluated against this model."""


class MissingComponent(MaptError):
    """A heuristic was bound to a component name the model does not declare."""


class BudgetExceeded(MaptError):
    """An exploration hit its node budget before finishing."""
