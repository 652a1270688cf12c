"""Error hierarchy, classification and logging for the checking pipeline."""

import logging
import time
from collections import Counter, deque
from enum import Enum
from typing import Any, Deque, Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError as PydanticValidationError


class ErrorSeverity(Enum):
    """How serious an error is; decides the log level."""
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"


class ErrorCategory(Enum):
    """Where an error came from."""
    PARSING = "parsing"
    VALIDATION = "validation"
    DIVERGENCE = "divergence"
    FRAGMENT = "fragment"
    LIMIT = "limit"
    DISAGREEMENT = "disagreement"
    FILE_SYSTEM = "file_system"
    UNKNOWN = "unknown"


class ProbMuError(Exception):
    """Base exception for everything the toolkit reports to its callers."""

    def __init__(self, message: str, category: ErrorCategory = ErrorCategory.UNKNOWN,
                 severity: ErrorSeverity = ErrorSeverity.MEDIUM, context: Optional[Dict] = None):
        self.message = message
        self.category = category
        self.severity = severity
        self.context = context or {}
        self.timestamp = time.time()
        super().__init__(message)

    @property
    def exit_code(self) -> int:
        """Process exit status the CLI uses for this error."""
        return 1 if self.category == ErrorCategory.DISAGREEMENT else 2


class ParsingError(ProbMuError):
    """Syntax errors in model, distribution, formula or equation text."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        context = {"line": line, "column": column}
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column or 1}: {message}"
        super().__init__(message, ErrorCategory.PARSING, ErrorSeverity.LOW, context)


class ValidationError(ProbMuError):
    """Structurally invalid data (bad weights, unknown states, ...)."""

    def __init__(self, message: str, field: Optional[str] = None, value: Any = None):
        context = {"field": field, "value": str(value) if value is not None else None}
        self.field = field
        self.value = value
        super().__init__(message, ErrorCategory.VALIDATION, ErrorSeverity.MEDIUM, context)


class DivergenceError(ProbMuError):
    """Weak-semantics operation requested on a pLTS with an internal cycle."""

    def __init__(self, message: str = "divergent pLTS", witness: Optional[Sequence[str]] = None):
        self.witness = list(witness or [])
        context = {"witness": " -> ".join(self.witness) if self.witness else None}
        super().__init__(message, ErrorCategory.DIVERGENCE, ErrorSeverity.HIGH, context)


class FragmentError(ProbMuError):
    """Formula outside the fragment the checker decides."""

    def __init__(self, message: str, subterm: Optional[str] = None):
        self.subterm = subterm
        context = {"subterm": subterm}
        super().__init__(message, ErrorCategory.FRAGMENT, ErrorSeverity.MEDIUM, context)


class LimitExceededError(ProbMuError):
    """A configured iteration or size cap was hit."""

    def __init__(self, message: str, limit: Optional[str] = None, value: Optional[int] = None):
        self.limit = limit
        self.value = value
        context = {"limit": limit, "value": value}
        super().__init__(message, ErrorCategory.LIMIT, ErrorSeverity.HIGH, context)


class DisagreementError(ProbMuError):
    """Two decision routes returned different verdicts."""

    def __init__(self, message: str, checks: Optional[List[str]] = None):
        self.checks = list(checks or [])
        context = {"checks": ", ".join(self.checks) if self.checks else None}
        super().__init__(message, ErrorCategory.DISAGREEMENT, ErrorSeverity.CRITICAL, context)


_LOG_LEVELS = {
    ErrorSeverity.LOW: logging.INFO,
    ErrorSeverity.MEDIUM: logging.WARNING,
    ErrorSeverity.HIGH: logging.ERROR,
    ErrorSeverity.CRITICAL: logging.CRITICAL,
}

# (exception types, category, severity, message prefix), first match wins
_FOREIGN_ERRORS: Tuple[Tuple[Tuple[type, ...], ErrorCategory, ErrorSeverity, str], ...] = (
    ((PydanticValidationError,), ErrorCategory.VALIDATION, ErrorSeverity.MEDIUM, "Validation error"),
    ((ZeroDivisionError, ValueError), ErrorCategory.VALIDATION, ErrorSeverity.MEDIUM, "Invalid value"),
    ((RecursionError,), ErrorCategory.LIMIT, ErrorSeverity.HIGH, "Recursion limit reached"),
    ((OSError,), ErrorCategory.FILE_SYSTEM, ErrorSeverity.HIGH, "File system error"),
)

RECENT_ERRORS = 50


class ErrorHandler:
    """Classifies, logs and counts errors raised while checking."""

    def __init__(self, logger_name: str = "probmu"):
        self.logger = logging.getLogger(logger_name)
        self.reset()
        if not self.logger.handlers and not logging.getLogger("probmu").handlers:
            self._setup_logging()

    @staticmethod
    def _setup_logging() -> None:
        """Attach one stream handler to the package logger."""
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s'))
        root = logging.getLogger("probmu")
        root.addHandler(handler)
        if root.level == logging.NOTSET:
            root.setLevel(logging.WARNING)

    def handle_error(self, error: Exception, context: Optional[Dict] = None) -> ProbMuError:
        """Return error as a ProbMuError after logging and counting it."""
        if isinstance(error, ProbMuError):
            if context:
                error.context.update(context)
            handled = error
        else:
            handled = self._classify_error(error, context)
        self._log_error(handled)
        self._update_stats(handled)
        return handled

    @staticmethod
    def _classify_error(error: Exception, context: Optional[Dict] = None) -> ProbMuError:
        """Wrap a foreign exception according to the classification table."""
        for types, category, severity, prefix in _FOREIGN_ERRORS:
            if isinstance(error, types):
                return ProbMuError(f"{prefix}: {error}", category, severity, dict(context or {}))
        return ProbMuError(f"Unexpected error ({type(error).__name__}): {error}", ErrorCategory.UNKNOWN,
                           ErrorSeverity.MEDIUM, dict(context or {}))

    def _log_error(self, error: ProbMuError) -> None:
        details = ", ".join(f"{key}={value}" for key, value in error.context.items() if value is not None)
        suffix = f" (Context: {details})" if details else ""
        self.logger.log(_LOG_LEVELS[error.severity], "[%s] %s%s", error.category.value.upper(), error.message,
                        suffix)

    def _update_stats(self, error: ProbMuError) -> None:
        self._by_category[error.category.value] += 1
        self._by_severity[error.severity.value] += 1
        self._recent.append({
            "timestamp": error.timestamp,
            "category": error.category.value,
            "severity": error.severity.value,
            "message": error.message[:100],
        })

    @property
    def error_stats(self) -> Dict[str, Any]:
        return {
            "total_errors": sum(self._by_category.values()),
            "by_category": dict(self._by_category),
            "by_severity": dict(self._by_severity),
            "recent_errors": list(self._recent),
        }

    def get_error_summary(self) -> Dict[str, Any]:
        """Totals per category and severity plus the most recent errors."""
        return self.error_stats

    def reset(self) -> None:
        """Forget all recorded errors."""
        self._by_category: Counter = Counter()
        self._by_severity: Counter = Counter()
        self._recent: Deque[Dict[str, Any]] = deque(maxlen=RECENT_ERRORS)


default_error_handler = ErrorHandler()


def handle_error(error: Exception, context: Optional[Dict] = None) -> ProbMuError:
    """Handle an error with the shared handler used by the CLI."""
    return default_error_handler.handle_error(error, context)


def get_error_stats() -> Dict[str, Any]:
    return default_error_handler.get_error_summary()
