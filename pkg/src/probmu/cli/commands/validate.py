"""Validation command for model, formula and equation files."""

import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import click
from rich.console import Console
from rich.markup import escape
from rich.table import Table

from ...models.formula import FragmentSpec, Formula
from ...models.schemas import RelationKind
from ...utils.error_handling import ErrorHandler, ProbMuError

console = Console()

_SUFFIXES = {".plts": "model", ".eqs": "equations", ".pmu": "formula", ".formula": "formula"}


class InputValidator:
    """Run the structural checks for one input file and collect them as rows."""

    def __init__(self, kind: Optional[RelationKind] = None):
        self.kind = kind
        self.error_handler = ErrorHandler("probmu.validator")
        self.checks: List[Dict[str, Any]] = []

    def _add(self, name: str, passed: bool, details: str = "") -> bool:
        self.checks.append({"check": name, "passed": passed, "details": details})
        return passed

    def _syntax(self, parse) -> Any:
        try:
            value = parse()
        except ProbMuError as exc:
            self.error_handler.handle_error(exc, {"stage": "syntax"})
            self._add("syntax", False, exc.message)
            return None
        self._add("syntax", True)
        return value

    def validate_model(self, text: str) -> Dict[str, Any]:
        from ...processors.plts_parser import parse_plts

        plts = self._syntax(lambda: parse_plts(text))
        if plts is not None:
            summary = plts.summary()
            self._add("structure", True, f"{summary['states']} states, {summary['actions']} actions, "
                                         f"{summary['transitions']} transitions")
            witness = plts.divergence_witness
            required = self.kind is not None and self.kind.is_weak
            self._add("divergence-free", witness is None or not required,
                      "yes" if witness is None else "cycle " + " -> ".join(witness))
            self._add("tau-free", True, "yes" if plts.is_tau_free else "no")
        return self.results()

    def _fragment(self, formulas: List[Formula]) -> None:
        if self.kind is None:
            return
        spec = FragmentSpec.for_kind(self.kind)
        for formula in formulas:
            bad = spec.violation(formula)
            if bad is not None:
                self._add(f"fragment {self.kind.value}", False, f"{type(bad).__name__} in {bad}")
                return
        self._add(f"fragment {self.kind.value}", True, ", ".join(spec.constructor_names))

    def validate_formula(self, text: str) -> Dict[str, Any]:
        from ...processors.formula_parser import parse_formula

        formula = self._syntax(lambda: parse_formula(text.strip()))
        if formula is not None:
            free = sorted(formula.free_variables)
            self._add("closed", not free, ", ".join(free))
            self._fragment([formula])
        return self.results()

    def validate_equations(self, text: str) -> Dict[str, Any]:
        from ...processors.formula_parser import parse_equations

        system = self._syntax(lambda: parse_equations(text))
        if system is not None:
            self._add("equations", True, f"{len(system.variables)} variables, root {system.root}")
            self._fragment([body for _, body in system.equations])
        return self.results()

    def results(self) -> Dict[str, Any]:
        return {"checks": self.checks, "valid": all(check["passed"] for check in self.checks)}

    @staticmethod
    def display(path: Path, file_type: str, results: Dict[str, Any]) -> None:
        table = Table(title=f"{file_type.title()} validation: {path.name}", show_header=True,
                      header_style="bold magenta")
        table.add_column("Check", style="cyan")
        table.add_column("Status", style="white")
        table.add_column("Details", style="dim")
        for check in results["checks"]:
            status = "[green]✓[/green]" if check["passed"] else "[red]✗[/red]"
            table.add_row(check["check"], status, escape(check["details"]))
        console.print(table)


@click.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--type", "file_type", type=click.Choice(["model", "formula", "equations"]),
              help="File type; guessed from the suffix when omitted")
@click.option("--kind", "-k", type=click.Choice([kind.value for kind in RelationKind]),
              help="Also check fragment membership for this relation kind")
@click.option("--output", "-o", type=click.Path(dir_okay=False, path_type=Path), help="Save results as JSON")
def validate(path: Path, file_type: Optional[str], kind: Optional[str], output: Optional[Path]):
    """Validate a model, formula or equation file."""
    file_type = file_type or _SUFFIXES.get(path.suffix.lower(), "formula")
    validator = InputValidator(RelationKind(kind) if kind else None)
    text = path.read_text(encoding="utf-8")
    if file_type == "model":
        results = validator.validate_model(text)
    elif file_type == "equations":
        results = validator.validate_equations(text)
    else:
        results = validator.validate_formula(text)

    validator.display(path, file_type, results)
    if output:
        with open(output, "w", encoding="utf-8") as handle:
            json.dump(results, handle, indent=2, sort_keys=True)
        console.print(f"[green]Validation results saved to: {escape(str(output))}[/green]")

    if not results["valid"]:
        console.print("[red]Validation failed[/red]")
        sys.exit(2)
    console.print("[green]✓ Validation passed[/green]")
