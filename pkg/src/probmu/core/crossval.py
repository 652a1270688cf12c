"""Cross-validation of the relation solvers against characteristic formulae.

For every selected kind and every pair, the verdict of the relation solver
is compared with nu-membership in the characteristic equation system and
with satisfaction of the closed characteristic formula. Kinds without a
characteristic system are covered by inclusion checks between relations.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from ..models.dist import Dist
from ..models.plts import PLTS
from ..models.schemas import CheckRecord, RelationKind, RelationResult, RunReport
from ..utils.config import get_performance_config, get_sampling_config
from ..utils.error_handling import DisagreementError, ProbMuError
from ..utils.generator import sample_distributions
from ..utils.performance import ConcurrentProcessor
from .charform import char_equations, transform_to_formula
from .checker import FormulaChecker
from .relations import compute_relation
from .sd_relations import StateDistSolver

logger = logging.getLogger("probmu.crossval")

INCLUSIONS: Tuple[Tuple[RelationKind, RelationKind], ...] = (
    (RelationKind.STRONG_BISIM, RelationKind.STRONG_SIM),
    (RelationKind.STRONG_BISIM, RelationKind.WEAK_BISIM),
    (RelationKind.WEAK_BISIM, RelationKind.WEAK_SIM),
    (RelationKind.HJ90_BISIM, RelationKind.STRONG_BISIM),
    (RelationKind.JL91_SIM, RelationKind.STRONG_SIM),
)


@dataclass
class CrossValidator:
    """Runs every route for the selected kinds on one system."""
    plts: PLTS
    kinds: Sequence[RelationKind] = field(default_factory=lambda: list(RelationKind))
    samples: Optional[int] = None
    seed: Optional[int] = None
    parallel: Optional[bool] = None

    def __post_init__(self) -> None:
        sampling = get_sampling_config()
        self.samples = sampling.samples if self.samples is None else self.samples
        self.seed = sampling.seed if self.seed is None else self.seed
        performance = get_performance_config()
        self.parallel = performance.parallel_xval if self.parallel is None else self.parallel
        self.kinds = sorted(set(self.kinds), key=list(RelationKind).index)
        self._relations: Dict[RelationKind, RelationResult] = {}

    def relation(self, kind: RelationKind) -> RelationResult:
        if kind not in self._relations:
            self._relations[kind] = compute_relation(self.plts, kind)
        return self._relations[kind]

    def queries(self) -> List[Dist]:
        """Point distributions followed by the sampled ones."""
        points = [self.plts.point(state) for state in self.plts.states]
        return points + sample_distributions(self.plts, self.samples, self.seed)

    def _state_batch(self, kind: RelationKind) -> List[CheckRecord]:
        chars = char_equations(self.plts, kind)
        related = self.relation(kind)
        points = [self.plts.point(t) for t in self.plts.states]
        # one checker per kind: goals of the shared equation system are decided once
        checker = FormulaChecker(self.plts, kind.semantics, queries=points)
        records = []
        for state in self.plts.states:
            variable = chars.variable(state)
            formula = transform_to_formula(chars, variable)
            for t, point in zip(self.plts.states, points):
                records.append(self._record(kind, state, t, lambda: (
                    related.related(state, t),
                    checker.nu_member(chars.system, variable, point),
                    checker.holds(formula, point),
                )))
        logger.info("%s: checked %d pairs, %d goals", kind.value, len(records), len(checker.goals))
        return records

    def _sd_batch(self, kind: RelationKind) -> List[CheckRecord]:
        queries = self.queries()
        chars = char_equations(self.plts, kind)
        solver = StateDistSolver(self.plts, kind, queries=queries)
        checker = FormulaChecker(self.plts, chars.semantics, queries=queries)
        records = []
        for state in self.plts.states:
            variable = chars.variable(state)
            formula = transform_to_formula(chars, variable)
            for dist in queries:
                records.append(self._record(kind, state, dist.format(), lambda: (
                    solver.holds(state, dist),
                    checker.nu_member(chars.system, variable, dist),
                    checker.holds(formula, dist),
                )))
        logger.info("%s: checked %d state-distribution pairs, %d goals", kind.value, len(records),
                    len(checker.goals))
        return records

    @staticmethod
    def _record(kind: RelationKind, left: str, right: str, verdicts) -> CheckRecord:
        try:
            relation, equations, formula = verdicts()
        except ProbMuError as exc:
            return CheckRecord(kind=kind.value, left=left, right=right, error=exc.message)
        return CheckRecord(kind=kind.value, left=left, right=right, relation=relation, equations=equations,
                           formula=formula)

    def _run_job(self, kind: RelationKind) -> List[CheckRecord]:
        if kind.is_state_distribution:
            return self._sd_batch(kind)
        return self._state_batch(kind)

    def inclusion_checks(self) -> List[CheckRecord]:
        """One record per inclusion between selected kinds; failures name the offending pair."""
        records = []
        selected = set(self.kinds)
        for smaller, larger in INCLUSIONS:
            if smaller not in selected or larger not in selected:
                continue
            extra = sorted(self.relation(smaller).pairs - self.relation(larger).pairs)
            error = f"({extra[0][0]}, {extra[0][1]}) is in {smaller.value} only" if extra else None
            records.append(CheckRecord(kind=f"{smaller.value} <= {larger.value}", left="*", right="*",
                                       error=error))
        if {RelationKind.FORWARD_SIM, RelationKind.FAILURE_SIM} <= selected:
            points = [self.plts.point(t) for t in self.plts.states]
            forward = StateDistSolver(self.plts, RelationKind.FORWARD_SIM, queries=points)
            failure = StateDistSolver(self.plts, RelationKind.FAILURE_SIM, queries=points)
            offending = [(s, p.format()) for s in self.plts.states for p in points
                         if failure.holds(s, p) and not forward.holds(s, p)]
            error = f"({offending[0][0]}, {offending[0][1]}) is in failure-sim only" if offending else None
            records.append(CheckRecord(kind="failure-sim <= forward-sim", left="*", right="*", error=error))
        return records

    def run(self) -> RunReport:
        """All checks in a fixed order: kinds, then states, then right-hand sides."""
        for kind in self.kinds:
            if kind.is_weak:
                self.plts.require_divergence_free(kind.value)
        jobs = [kind for kind in self.kinds if kind.has_characteristic_system]
        # relations are computed up front so worker threads only read them
        for kind in self.kinds:
            if not kind.is_state_distribution:
                self.relation(kind)
        processor = ConcurrentProcessor(get_performance_config().max_workers, parallel=bool(self.parallel))
        report = RunReport(inputs={"model": self.plts.digest})
        for batch in processor.map(self._run_job, jobs):
            for record in batch:
                report.add_check(record)
        for record in self.inclusion_checks():
            report.add_check(record)
        report.results = {
            "kinds": [kind.value for kind in self.kinds],
            "samples": self.samples,
            "seed": self.seed,
            **report.summary(),
        }
        logger.info("cross-validation: %d checks, %d failed", len(report.checks), report.failed)
        return report


def require_agreement(report: RunReport) -> RunReport:
    """Raise DisagreementError when any check in the report failed."""
    failed = [check for check in report.checks if not check.agree]
    if failed:
        labels = [f"{c.kind} {c.left} {c.right}" for c in failed]
        raise DisagreementError(f"{len(failed)} of {len(report.checks)} checks disagree", checks=labels)
    return report


def cross_validate(plts: PLTS, kinds: Optional[Sequence[RelationKind]] = None, samples: Optional[int] = None,
                   seed: Optional[int] = None, parallel: Optional[bool] = None) -> RunReport:
    validator = CrossValidator(plts, kinds=list(kinds or RelationKind), samples=samples, seed=seed,
                               parallel=parallel)
    return validator.run()
