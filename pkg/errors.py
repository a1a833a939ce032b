# Standard library imports
import logging


class BergUrbanikError(Exception):
    """Base class; carries the failing operation and the CLI exit code."""
    exit_code = 2

    def __init__(self, message, op=None):
        super().__init__(message)
        self.op = op or "unknown"


class ParameterError(BergUrbanikError, ValueError):
    exit_code = 2


class DomainError(BergUrbanikError, ValueError):
    exit_code = 2


class UnsupportedFamilyError(BergUrbanikError):
    exit_code = 2


class InapplicableError(BergUrbanikError):
    exit_code = 2


class ConvergenceError(BergUrbanikError, ArithmeticError):
    exit_code = 3

    def __init__(self, message, op=None, achieved=None):
        super().__init__(message, op=op)
        self.achieved = achieved
        logging.debug(f"[ConvergenceError] {op}: {message} (achieved={achieved})")


class PrecisionWarning(UserWarning):
    pass
