"""
Error types and handling utilities shared by the library and the experiment commands.
"""

import logging
import traceback
from functools import wraps

from django.core.management.base import CommandError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATION = 2
EXIT_USAGE = 64


class BesicoverError(Exception):
    """
    Base error carrying a machine-readable code and the CLI exit code it maps to.
    """
    default_code = 'BESICOVER_ERROR'
    default_exit_code = EXIT_USAGE

    def __init__(self, message, error_code=None, exit_code=None, **details):
        self.message = message
        self.error_code = error_code or self.default_code
        self.exit_code = self.default_exit_code if exit_code is None else exit_code
        self.details = details
        super().__init__(self.message)


class DimensionMismatchError(BesicoverError):
    default_code = 'DIMENSION_MISMATCH'


class ResourceCapError(BesicoverError):
    default_code = 'RESOURCE_CAP'


class InvalidParameterError(BesicoverError):
    default_code = 'INVALID_PARAMETER'


class UndefinedFractionError(BesicoverError):
    default_code = 'UNDEFINED_FRACTION'


class ZeroDenominatorError(BesicoverError):
    default_code = 'ZERO_DENOMINATOR'


class HorizonOverflowError(BesicoverError):
    default_code = 'HORIZON_OVERFLOW'


class WitnessPreconditionError(BesicoverError):
    default_code = 'WITNESS_PRECONDITION'


class InvariantViolationError(BesicoverError):
    """An exactly checked post-condition failed: a finding, not a usage problem."""
    default_code = 'INVARIANT_VIOLATION'
    default_exit_code = EXIT_VIOLATION


class CertificateViolationError(InvariantViolationError):
    """
    Raised when a supplied constant (C, D or chi) is contradicted by a computation.
    The offending ball is kept in ``ball``.
    """
    default_code = 'CERTIFICATE_VIOLATION'

    def __init__(self, message, ball=None, **details):
        self.ball = ball
        super().__init__(message, **details)


class HypothesisViolationError(InvariantViolationError):
    default_code = 'HYPOTHESIS_VIOLATION'

    def __init__(self, message, hypothesis=None, **details):
        self.hypothesis = hypothesis
        super().__init__(message, **details)


class ExhaustionOverrunError(InvariantViolationError):
    default_code = 'EXHAUSTION_OVERRUN'

    def __init__(self, message, failed_preconditions=(), **details):
        self.failed_preconditions = list(failed_preconditions)
        super().__init__(message, **details)


def handle_command_errors(func):
    """
    Decorator for management command handlers: logs domain errors and turns them
    into CommandError with the mapped exit code.
    """
    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except BesicoverError as e:
            logger.error(f"{e.error_code}: {e.message}")
            if e.details:
                logger.debug(f"Error details: {e.details}")
            raise CommandError(f"{e.error_code}: {e.message}", returncode=e.exit_code) from e
        except CommandError:
            raise
        except Exception as e:
            logger.error(f"Unexpected error in {func.__name__}: {str(e)}")
            logger.error(f"Traceback: {traceback.format_exc()}")
            raise

    return wrapper


def require(condition, message, error_cls=InvalidParameterError, **details):
    """
    Raise ``error_cls`` with ``message`` unless ``condition`` holds.
    """
    if not condition:
        raise error_cls(message, **details)


def create_error_report(error, extra=None):
    """
    Build the standard error envelope for a JSON report.

    Args:
        error (BesicoverError): Error to render
        extra (dict): Additional fields

    Returns:
        dict: Error envelope
    """
    report = {
        'error': error.message,
        'error_code': error.error_code,
        'status': 'error',
    }
    if extra:
        report.update(extra)
    return report


def create_success_report(data, message="Success"):
    """
    Build the standard success envelope for a JSON report.

    Args:
        data (dict): Report payload
        message (str): Summary message

    Returns:
        dict: Success envelope
    """
    return {
        'data': data,
        'message': message,
        'status': 'success'
    }
