"""Main CLI entry point for probmu."""

import functools
import hashlib
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import click
from rich.console import Console
from rich.markup import escape
from rich.progress import Progress, SpinnerColumn, TextColumn

from .. import __version__
from ..models.formula import EquationSystem
from ..models.schemas import CheckRecord, RelationKind, RunReport, Semantics
from ..outputs.json_writer import JSONWriter
from ..outputs.text_report import TextReportWriter
from ..utils.config import config_manager
from ..utils.error_handling import ProbMuError, handle_error
from ..utils.performance import performance_context

console = Console()
err_console = Console(stderr=True)

KIND_CHOICES = [kind.value for kind in RelationKind]
SEMANTICS_CHOICES = [semantics.value for semantics in Semantics]


def handles_errors(func: Callable[..., Any]) -> Callable[..., Any]:
    """Report toolkit errors on stderr and exit with their status code."""
    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except (ProbMuError, OSError) as exc:
            error = handle_error(exc)
            err_console.print(f"[bold red]✗[/bold red] {escape(error.message)}")
            subterm = error.context.get("subterm")
            if subterm:
                err_console.print(f"[dim]offending subterm:[/dim] {escape(str(subterm))}")
            sys.exit(error.exit_code)
    return wrapper


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _emit(report: RunReport, as_json: bool, output: Optional[Path], timing: bool = False) -> None:
    """Print the report (JSON or text) and optionally save it as JSON."""
    writer = JSONWriter(include_timing=timing)
    if output is not None:
        writer.write(report, output)
    if as_json:
        click.echo(writer.dumps(report))
    else:
        click.echo(TextReportWriter(include_timing=timing).render(report), nl=False)


@click.group()
@click.version_option(version=__version__, prog_name="probmu")
@click.option("--verbose", "-v", is_flag=True, help="Log solver progress at DEBUG level")
@click.option("--max-iterations", type=click.IntRange(min=1), help="Override the refinement round cap")
@click.option("--semantics", type=click.Choice(SEMANTICS_CHOICES),
              help="Default strong or weak variant for every subcommand")
@click.option("--witness", "-w", is_flag=True, help="Print certificates with verdicts")
@click.option("--seed", type=int, help="Override the sampling seed")
@click.option("--samples", type=click.IntRange(min=0), help="Override the sampled distributions per state")
@click.pass_context
def cli(ctx: click.Context, verbose: bool, max_iterations: Optional[int], semantics: Optional[str], witness: bool,
        seed: Optional[int], samples: Optional[int]):
    """probmu - probabilistic (bi)simulations, characteristic formulae and pMu model checking."""
    logger = logging.getLogger("probmu")
    if verbose:
        if not logger.handlers:
            handler = logging.StreamHandler()
            handler.setFormatter(logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s'))
            logger.addHandler(handler)
        logger.setLevel(logging.DEBUG)
    settings = config_manager.load_config()
    if max_iterations is not None:
        settings.solver.max_iterations = max_iterations
    if seed is not None:
        settings.sampling.seed = seed
    if samples is not None:
        settings.sampling.samples = samples
    ctx.obj = {"semantics": semantics, "witness": witness}


def _global(name: str, value: Any) -> Any:
    """A subcommand's own value, else the one given to the group."""
    if value not in (None, False):
        return value
    ctx = click.get_current_context(silent=True)
    obj = ctx.find_root().obj if ctx is not None else None
    return (obj or {}).get(name, value)


def _semantics(value: Optional[str], kind: Optional[RelationKind] = None) -> Optional[str]:
    """Semantics for a subcommand; the group default only applies where a kind admits both."""
    if value is not None or (kind is not None and not kind.is_state_distribution):
        return value
    return _global("semantics", None)


@cli.command()
@click.argument("model", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("left")
@click.argument("right")
@click.option("--kind", "-k", type=click.Choice(KIND_CHOICES), default=RelationKind.STRONG_BISIM.value,
              show_default=True, help="Relation to decide")
@click.option("--semantics", type=click.Choice(SEMANTICS_CHOICES),
              help="Strong or weak variant (forward-sim and failure-sim only)")
@click.option("--witness", "-w", is_flag=True, help="Print the certificate behind the verdict")
@click.option("--json", "as_json", is_flag=True, help="Print a structured report")
@click.option("--output", "-o", type=click.Path(dir_okay=False, path_type=Path), help="Save the JSON report")
@handles_errors
def check(model: Path, left: str, right: str, kind: str, semantics: Optional[str], witness: bool,
          as_json: bool, output: Optional[Path]):
    """Decide whether RIGHT is related to state LEFT.

    RIGHT is a state for state-to-state kinds and a distribution such as
    "1/2 t1 + 1/2 t2" for forward-sim and failure-sim.
    """
    from ..core.relations import TransferChecker, compute_relation
    from ..core.sd_relations import StateDistSolver
    from ..processors.plts_parser import load_plts, parse_distribution

    witness = _global("witness", witness)
    plts = load_plts(model)
    relation_kind = RelationKind(kind)
    plts.index(left)
    semantics = _semantics(semantics, relation_kind)
    certificate: List[str] = []
    if relation_kind.is_state_distribution:
        dist = parse_distribution(right, plts)
        chosen = Semantics(semantics) if semantics else relation_kind.semantics
        solver = StateDistSolver(plts, relation_kind, chosen, queries=[dist])
        verdict = solver.holds(left, dist)
        certificate.append(f"candidate universe: {len(solver.universe)} distributions, {solver.rounds} rounds")
        for candidate in solver.related_candidates(left):
            certificate.append(f"{left} related to {candidate.format()}")
    else:
        if semantics and Semantics(semantics) != relation_kind.semantics:
            raise click.BadParameter(f"{kind} is defined for {relation_kind.semantics.value} semantics only",
                                     param_hint="--semantics")
        plts.index(right)
        result = compute_relation(plts, relation_kind)
        verdict = result.related(left, right)
        if verdict:
            transfer = TransferChecker(plts, relation_kind)
            for action, target in plts.moves(left):
                match = transfer.match(result.pairs, action, target, right)
                if match is not None:
                    answer, weights = match
                    entries = ", ".join(f"{u}->{v}: {w}" for u, v, w in weights.sorted_entries())
                    certificate.append(f"{left} --{action}--> {target.format()} answered by {answer.format()} "
                                       f"[{entries}]")
        else:
            removal = result.removal_of(left, right)
            if removal is not None:
                mover = left if removal.direction == "forward" else right
                certificate.append(f"removed in round {removal.round} (step {removal.step}): {mover} "
                                   f"--{removal.action}--> {removal.target} unmatched ({removal.direction})")

    report = RunReport(command=["check", str(model), left, right, "--kind", kind],
                       inputs={"model": plts.digest},
                       results={"verdict": verdict, "witness": certificate if witness else []})
    if as_json or output:
        report.add_check(CheckRecord(kind=kind, left=left, right=right, relation=verdict))
    if as_json:
        _emit(report, True, output)
        return
    if output is not None:
        JSONWriter(include_timing=False).write(report, output)
    click.echo("true" if verdict else "false")
    if witness:
        for line in certificate:
            click.echo(line)


@cli.command()
@click.argument("model", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("state")
@click.option("--kind", "-k", type=click.Choice(KIND_CHOICES), default=RelationKind.STRONG_BISIM.value,
              show_default=True)
@click.option("--semantics", type=click.Choice(SEMANTICS_CHOICES),
              help="Strong or weak variant (forward-sim and failure-sim only)")
@click.option("--equations", "mode", flag_value="equations", help="Print the equation system")
@click.option("--formula", "mode", flag_value="formula", default=True, help="Print the closed formula")
@click.option("--strong-failure", is_flag=True, help="Write refusals as conjunctions of [a]false")
@handles_errors
def charform(model: Path, state: str, kind: str, semantics: Optional[str], mode: str, strong_failure: bool):
    """Print the characteristic equations or formula of STATE."""
    from ..core.charform import char_equations, transform_to_formula
    from ..processors.formula_parser import print_equations, print_formula
    from ..processors.plts_parser import load_plts

    plts = load_plts(model)
    plts.index(state)
    semantics = _semantics(semantics, RelationKind(kind))
    chars = char_equations(plts, RelationKind(kind), Semantics(semantics) if semantics else None, strong_failure)
    variable = chars.variable(state)
    if mode == "equations":
        ordered = sorted(chars.system.equations, key=lambda eq: eq[0] != variable)
        click.echo(print_equations(EquationSystem(tuple(ordered))), nl=False)
    else:
        click.echo(print_formula(transform_to_formula(chars, variable)))


@cli.command()
@click.argument("model", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("formula_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("distribution")
@click.option("--semantics", type=click.Choice(SEMANTICS_CHOICES),
              help="Strong or weak transitions [default: strong]")
@click.option("--equations", is_flag=True, help="Read FORMULA_FILE as an equation system and test its root")
@handles_errors
def satisfies(model: Path, formula_file: Path, distribution: str, semantics: Optional[str], equations: bool):
    """Decide whether DISTRIBUTION satisfies the formula in FORMULA_FILE."""
    from ..core.checker import nu_membership
    from ..core.checker import satisfies as check_satisfies
    from ..processors.formula_parser import parse_equations, parse_formula
    from ..processors.plts_parser import load_plts, parse_distribution
    chosen = Semantics(_semantics(semantics) or Semantics.STRONG.value)

    plts = load_plts(model)
    dist = parse_distribution(distribution, plts)
    text = formula_file.read_text(encoding="utf-8")
    if equations:
        system = parse_equations(text)
        verdict = nu_membership(plts, system, system.root, dist, chosen)
    else:
        verdict = check_satisfies(plts, dist, parse_formula(text.strip()), chosen)
    click.echo("true" if verdict else "false")


def _parse_kinds(value: Optional[str]) -> List[RelationKind]:
    if not value or value == "all":
        return list(RelationKind)
    kinds = []
    for item in value.split(","):
        item = item.strip()
        if item not in KIND_CHOICES:
            raise click.BadParameter(f"unknown kind '{item}'", param_hint="--kinds")
        kinds.append(RelationKind(item))
    return kinds


@cli.command()
@click.argument("model", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--kinds", default="all", show_default=True, help="Comma-separated relation kinds")
@click.option("--samples", type=int, help="Sampled distributions per state for forward/failure kinds")
@click.option("--seed", type=int, help="Seed for sampled distributions")
@click.option("--parallel/--sequential", default=None, help="Run the per-kind batches on a thread pool")
@click.option("--timing", is_flag=True, help="Include wall time and memory in the report")
@click.option("--json", "as_json", is_flag=True, help="Print a structured report")
@click.option("--output", "-o", type=click.Path(dir_okay=False, path_type=Path), help="Save the JSON report")
@handles_errors
def xval(model: Path, kinds: str, samples: Optional[int], seed: Optional[int], parallel: Optional[bool],
         timing: bool, as_json: bool, output: Optional[Path]):
    """Cross-validate relation solvers against characteristic formulae."""
    from ..core.crossval import CrossValidator, require_agreement
    from ..processors.plts_parser import load_plts

    plts = load_plts(model)
    validator = CrossValidator(plts, kinds=_parse_kinds(kinds), samples=samples, seed=seed, parallel=parallel)
    with performance_context() as monitor:
        with Progress(SpinnerColumn(), TextColumn("[progress.description]{task.description}"),
                      console=err_console, transient=True) as progress:
            progress.add_task("Cross-validating...", total=None)
            report = validator.run()
    report.command = ["xval", str(model), "--kinds", kinds, "--samples", str(validator.samples),
                      "--seed", str(validator.seed)]
    if timing and monitor.history:
        metrics = monitor.history[-1]
        report.timing = {"seconds": metrics.execution_time, "memory_mb": metrics.memory_usage}
    _emit(report, as_json, output, timing)
    require_agreement(report)


@cli.command()
@click.argument("model", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("left")
@click.argument("right")
@click.option("--kind", "-k", type=click.Choice(KIND_CHOICES), default=RelationKind.STRONG_BISIM.value,
              show_default=True, help="Other kinds explain with the characteristic formula of LEFT")
@click.option("--verify", is_flag=True, help="Check the formula against both states")
@click.option("--json", "as_json", is_flag=True, help="Print a structured report")
@handles_errors
def distinguish(model: Path, left: str, right: str, kind: str, verify: bool, as_json: bool):
    """Print a formula that LEFT satisfies and RIGHT does not."""
    from ..core.checker import FormulaChecker
    from ..core.distinguish import explain
    from ..processors.formula_parser import print_formula
    from ..processors.plts_parser import load_plts

    plts = load_plts(model)
    relation_kind = RelationKind(kind)
    formula = explain(plts, left, right, relation_kind)
    text = print_formula(formula)
    results: Dict[str, Any] = {"formula": text}
    report = RunReport(command=["distinguish", str(model), left, right, "--kind", kind],
                       inputs={"model": plts.digest}, results=results)
    if verify:
        checker = FormulaChecker(plts, relation_kind.semantics, queries=[plts.point(left), plts.point(right)])
        holds_left = checker.holds(formula, plts.point(left))
        holds_right = checker.holds(formula, plts.point(right))
        results["left"] = holds_left
        results["right"] = holds_right
        report.add_check(CheckRecord(kind=kind, left=left, right=right, relation=True,
                                     formula=holds_left and not holds_right))
    if as_json:
        click.echo(JSONWriter(include_timing=False).dumps(report))
        return
    click.echo(text)
    if verify:
        console.print(f"[dim]{escape(left)}:[/dim] {str(results['left']).lower()}  "
                      f"[dim]{escape(right)}:[/dim] {str(results['right']).lower()}", highlight=False)


# Import and register subcommand groups
from .commands.settings import settings  # noqa: E402
cli.add_command(settings)

from .commands.validate import validate as validate_cmd  # noqa: E402
cli.add_command(validate_cmd, name="validate")


if __name__ == "__main__":
    cli()
