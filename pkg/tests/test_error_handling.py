"""Tests for the error hierarchy and error handler."""

import logging

import pytest
from pydantic import BaseModel

from src.probmu.utils.error_handling import (
    DisagreementError, DivergenceError, ErrorCategory, ErrorHandler, ErrorSeverity, FragmentError,
    LimitExceededError, ParsingError, ProbMuError, ValidationError, get_error_stats, handle_error,
)


class TestErrorClasses:
    """Test custom error classes."""

    def test_base_error_creation(self):
        """Test ProbMuError creation."""
        error = ProbMuError("Test error", ErrorCategory.LIMIT, ErrorSeverity.HIGH, {"limit": "max_goals"})
        assert error.message == "Test error"
        assert error.category == ErrorCategory.LIMIT
        assert error.severity == ErrorSeverity.HIGH
        assert error.context["limit"] == "max_goals"
        assert error.timestamp > 0
        assert str(error) == "Test error"

    def test_parsing_error_position(self):
        """Test that positions are kept and prefixed to the message."""
        error = ParsingError("unexpected token", line=3, column=7)
        assert error.line == 3
        assert error.column == 7
        assert error.message.startswith("line 3, column 7:")
        assert error.severity == ErrorSeverity.LOW
        assert ParsingError("empty input").message == "empty input"

    def test_validation_error(self):
        """Test ValidationError creation."""
        error = ValidationError("bad weight", field="weights", value=0.5)
        assert error.category == ErrorCategory.VALIDATION
        assert error.context == {"field": "weights", "value": "0.5"}

    def test_divergence_error(self):
        """Test that the witness cycle is recorded."""
        error = DivergenceError("internal cycle", witness=["s", "u", "s"])
        assert error.witness == ["s", "u", "s"]
        assert error.context["witness"] == "s -> u -> s"
        assert error.severity == ErrorSeverity.HIGH

    def test_fragment_error(self):
        """Test that the offending subterm is recorded."""
        error = FragmentError("non-convex box body", subterm="[a](X \\/ Y)")
        assert error.subterm == "[a](X \\/ Y)"
        assert error.category == ErrorCategory.FRAGMENT

    def test_limit_error(self):
        """Test LimitExceededError creation."""
        error = LimitExceededError("too many goals", limit="max_goals", value=10)
        assert error.limit == "max_goals"
        assert error.value == 10

    def test_exit_codes(self):
        """Test that only disagreements exit with status 1."""
        assert DisagreementError("2 of 9 checks disagree", checks=["a", "b"]).exit_code == 1
        for error in (ParsingError("x"), ValidationError("x"), DivergenceError(), FragmentError("x"),
                      LimitExceededError("x")):
            assert error.exit_code == 2


class TestErrorHandler:
    """Test ErrorHandler functionality."""

    def test_handle_toolkit_error(self):
        """Test that toolkit errors pass through with extra context."""
        handler = ErrorHandler("probmu.test")
        original = ValidationError("unknown state 'z'", field="state", value="z")
        handled = handler.handle_error(original, {"command": "check"})
        assert handled is original
        assert handled.context["command"] == "check"

    def test_classify_value_error(self):
        """Test classification of foreign value errors."""
        handled = ErrorHandler("probmu.test").handle_error(ValueError("bad literal"))
        assert handled.category == ErrorCategory.VALIDATION
        assert "bad literal" in handled.message

    def test_classify_pydantic_error(self):
        """Test classification of pydantic validation errors."""
        class Sample(BaseModel):
            count: int

        with pytest.raises(Exception) as exc_info:
            Sample(count="many")
        handled = ErrorHandler("probmu.test").handle_error(exc_info.value)
        assert handled.category == ErrorCategory.VALIDATION

    def test_classify_file_errors(self):
        """Test classification of file system errors."""
        handled = ErrorHandler("probmu.test").handle_error(FileNotFoundError("model.plts"))
        assert handled.category == ErrorCategory.FILE_SYSTEM
        assert handled.severity == ErrorSeverity.HIGH

    def test_classify_recursion(self):
        """Test that runaway recursion counts as a limit."""
        handled = ErrorHandler("probmu.test").handle_error(RecursionError("maximum recursion depth"))
        assert handled.category == ErrorCategory.LIMIT

    def test_classify_unknown(self):
        """Test the fallback category."""
        handled = ErrorHandler("probmu.test").handle_error(KeyError("x"))
        assert handled.category == ErrorCategory.UNKNOWN
        assert "KeyError" in handled.message

    def test_statistics(self):
        """Test error statistics tracking."""
        handler = ErrorHandler("probmu.test")
        handler.handle_error(ValidationError("one"))
        handler.handle_error(ParsingError("two"))
        handler.handle_error(ValidationError("three"))
        summary = handler.get_error_summary()
        assert summary["total_errors"] == 3
        assert summary["by_category"] == {"validation": 2, "parsing": 1}
        assert [entry["message"] for entry in summary["recent_errors"]] == ["one", "two", "three"]
        handler.reset()
        assert handler.get_error_summary()["total_errors"] == 0

    def test_recent_errors_bounded(self):
        """Test that only the latest errors are kept."""
        handler = ErrorHandler("probmu.test")
        for index in range(60):
            handler.handle_error(ValidationError(f"error {index}"))
        recent = handler.get_error_summary()["recent_errors"]
        assert len(recent) == 50
        assert recent[-1]["message"] == "error 59"

    def test_log_levels(self, caplog):
        """Test that severity picks the log level."""
        handler = ErrorHandler("probmu.test")
        with caplog.at_level(logging.INFO, logger="probmu.test"):
            handler.handle_error(DisagreementError("routes disagree"))
            handler.handle_error(ParsingError("bad token"))
        levels = {record.levelno for record in caplog.records if record.name == "probmu.test"}
        assert logging.CRITICAL in levels
        assert logging.INFO in levels
        assert any("[DISAGREEMENT]" in record.getMessage() for record in caplog.records)


class TestGlobalHandler:
    """Test the module-level helpers."""

    def test_handle_error_updates_global_stats(self):
        """Test the shared handler used by the CLI."""
        handle_error(LimitExceededError("too deep", limit="mu_unfold_depth", value=32))
        stats = get_error_stats()
        assert stats["total_errors"] == 1
        assert stats["by_category"]["limit"] == 1
