"""Tests for report output."""

import json
from fractions import Fraction

import pytest

from src.probmu.models.schemas import CheckRecord, RunReport
from src.probmu.outputs.json_writer import JSONWriter, write_report
from src.probmu.outputs.text_report import TextReportWriter


@pytest.fixture
def sample_report():
    report = RunReport(command=["xval", "convex.plts", "--kinds", "strong-sim"],
                       inputs={"model": "ab12"},
                       results={"kinds": ["strong-sim"], "samples": 0, "exact": Fraction(1, 3)},
                       timing={"seconds": 0.25, "memory_mb": 1.5})
    report.add_check(CheckRecord(kind="strong-sim", left="s", right="t", relation=True, equations=True,
                                 formula=True))
    report.add_check(CheckRecord(kind="strong-sim", left="t", right="s", relation=False, equations=True,
                                 formula=False))
    report.add_check(CheckRecord(kind="strong-bisim <= strong-sim", left="*", right="*",
                                 error="(s, t) is in strong-bisim only"))
    return report


class TestJSONWriter:
    """Test JSON output generation."""

    def test_structure(self, sample_report):
        """Test the top-level sections."""
        data = json.loads(JSONWriter().dumps(sample_report))
        assert set(data) == {"command", "inputs", "results", "checks", "summary", "ok", "timing"}
        assert data["summary"] == {"checks": 3, "passed": 1, "failed": 2}
        assert data["ok"] is False
        assert data["results"]["exact"] == "1/3"

    def test_checks(self, sample_report):
        """Test that checks carry their agreement flag and omit empty verdicts."""
        checks = json.loads(JSONWriter().dumps(sample_report))["checks"]
        assert checks[0]["agree"] is True
        assert checks[1]["agree"] is False
        assert "relation" not in checks[2]
        assert checks[2]["error"] == "(s, t) is in strong-bisim only"

    def test_timing_optional(self, sample_report):
        """Test that timing can be left out for reproducible output."""
        data = json.loads(JSONWriter(include_timing=False).dumps(sample_report))
        assert "timing" not in data

    def test_stable_bytes(self, sample_report):
        """Test that equal reports serialize to equal text."""
        writer = JSONWriter(include_timing=False)
        assert writer.dumps(sample_report) == writer.dumps(sample_report.model_copy(deep=True))

    def test_write(self, sample_report, temp_directory):
        """Test writing into a directory that does not exist yet."""
        path = JSONWriter().write(sample_report, temp_directory / "out" / "report.json")
        assert path.exists()
        assert path.read_text(encoding="utf-8").endswith("}\n")
        assert json.loads(path.read_text(encoding="utf-8"))["inputs"] == {"model": "ab12"}

    def test_write_report_helper(self, sample_report, temp_directory):
        """Test the one-call helper."""
        path = temp_directory / "report.json"
        text = write_report(sample_report, path, include_timing=False)
        assert json.loads(text) == json.loads(path.read_text(encoding="utf-8"))
        assert write_report(sample_report) == JSONWriter().dumps(sample_report)


class TestTextReportWriter:
    """Test the line-oriented report."""

    def test_lines(self, sample_report):
        """Test the fixed line order."""
        lines = TextReportWriter().lines(sample_report)
        assert lines[0] == "command: xval convex.plts --kinds strong-sim"
        assert lines[1] == "input model: ab12"
        assert lines[2:5] == ["exact: 1/3", "kinds: strong-sim", "samples: 0"]
        assert lines[5] == "check strong-sim s t: relation=true equations=true formula=true ok"
        assert lines[6] == "check strong-sim t s: relation=false equations=true formula=false FAIL"
        assert lines[7] == ("check strong-bisim <= strong-sim * *: relation=- equations=- formula=- FAIL "
                            "((s, t) is in strong-bisim only)")
        assert lines[-1] == "summary: 3 checks, 1 passed, 2 failed"

    def test_timing_lines(self, sample_report):
        """Test that timing is printed only when asked for."""
        assert not any(line.startswith("timing") for line in TextReportWriter().lines(sample_report))
        lines = TextReportWriter(include_timing=True).lines(sample_report)
        assert lines[-2:] == ["timing memory_mb: 1.500", "timing seconds: 0.250"]

    def test_render(self, sample_report):
        """Test that the rendered text ends with a newline."""
        text = TextReportWriter().render(sample_report)
        assert text.endswith("failed\n")
        assert text.count("\n") == len(TextReportWriter().lines(sample_report))
