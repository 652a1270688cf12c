"""JSON output writer for run reports."""

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Optional

from ..models.schemas import CheckRecord, RunReport


def _default(value: Any) -> Any:
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (set, frozenset)):
        return sorted(value)
    return str(value)


class JSONWriter:
    """Serialize RunReports with a stable key order, so equal runs give equal bytes."""

    def __init__(self, include_timing: bool = True):
        self.include_timing = include_timing

    def prepare(self, report: RunReport) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "command": list(report.command),
            "inputs": dict(report.inputs),
            "results": report.results,
            "checks": [self._prepare_check(check) for check in report.checks],
            "summary": report.summary(),
            "ok": report.ok,
        }
        if self.include_timing and report.timing is not None:
            data["timing"] = report.timing
        return data

    @staticmethod
    def _prepare_check(check: CheckRecord) -> Dict[str, Any]:
        data = check.model_dump(exclude_none=True)
        data["agree"] = check.agree
        return data

    def dumps(self, report: RunReport) -> str:
        return json.dumps(self.prepare(report), indent=2, sort_keys=True, ensure_ascii=False, default=_default)

    def write(self, report: RunReport, path: Path) -> Path:
        """Write the report to path, creating parent directories."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(self.dumps(report))
            handle.write("\n")
        return path


def write_report(report: RunReport, path: Optional[Path] = None, include_timing: bool = True) -> str:
    """Serialized report; also written to path when given."""
    writer = JSONWriter(include_timing=include_timing)
    if path is not None:
        writer.write(report, path)
    return writer.dumps(report)
