"""Exception hierarchy shared by the library and the CLI exit-code mapping."""


class GBTailsError(Exception):
    """Base class for all package errors."""


class DomainError(GBTailsError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class FitError(GBTailsError):
    """A fit could not be performed (too few points, empty region, ...)."""


class SchemaError(GBTailsError):
    """Input columns or report fields do not match the expected schema."""


class ParseError(GBTailsError):
    """Input text could not be parsed."""
