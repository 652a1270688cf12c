"""Line-oriented plain-text rendering of run reports."""

from typing import Any, List, Optional

from ..models.schemas import CheckRecord, RunReport


def _flag(value: Optional[bool]) -> str:
    if value is None:
        return "-"
    return "true" if value else "false"


def _value(value: Any) -> str:
    if isinstance(value, bool):
        return _flag(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(_value(item) for item in value)
    return str(value)


class TextReportWriter:
    """One fact per line; the order follows the report and never the clock."""

    def __init__(self, include_timing: bool = False):
        self.include_timing = include_timing

    def lines(self, report: RunReport) -> List[str]:
        lines = []
        if report.command:
            lines.append("command: " + " ".join(report.command))
        for name, digest in sorted(report.inputs.items()):
            lines.append(f"input {name}: {digest}")
        for key in sorted(report.results):
            lines.append(f"{key}: {_value(report.results[key])}")
        for check in report.checks:
            lines.append(self.check_line(check))
        summary = report.summary()
        lines.append(f"summary: {summary['checks']} checks, {summary['passed']} passed, {summary['failed']} failed")
        if self.include_timing and report.timing:
            for key in sorted(report.timing):
                lines.append(f"timing {key}: {report.timing[key]:.3f}")
        return lines

    @staticmethod
    def check_line(check: CheckRecord) -> str:
        status = "ok" if check.agree else "FAIL"
        line = (f"check {check.kind} {check.left} {check.right}: relation={_flag(check.relation)} "
                f"equations={_flag(check.equations)} formula={_flag(check.formula)} {status}")
        if check.error:
            line += f" ({check.error})"
        return line

    def render(self, report: RunReport) -> str:
        return "\n".join(self.lines(report)) + "\n"
