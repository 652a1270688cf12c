"""Forward and failure simulation, which relate states to distributions.

The related sets are convex but may be infinite, so the solver works over
a finite universe of candidate distributions: every point distribution,
the queried distributions, the generators of every per-state successor
polytope and the generators of the queries' successor polytopes. It then
computes the greatest set of (state, candidate) pairs closed under the
defining clauses, where a piece of a split may be any convex combination
of the surviving candidates of its state. The surviving hulls form a
genuine simulation, so a positive answer is always sound.
"""

import logging
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from ..models.dist import Dist, dist_sort_key
from ..models.plts import PLTS, TAU
from ..models.schemas import RelationKind, Semantics
from ..utils.config import get_solver_config
from ..utils.error_handling import LimitExceededError, ValidationError
from ..utils.feasibility import LinearSystem
from .lifting import StateDistRelation
from .polytope import Polytope
from .transitions import get_weak_table, refusal_holds, successors

logger = logging.getLogger("probmu.sd_relations")


def answer_generators(plts: PLTS, state: str, action: str, semantics: Semantics) -> Tuple[Dist, ...]:
    """Generators of the answers δ(state) can give to an a-move.

    Weakly this is ⇒â (the internal closure for tau); strongly it is the
    plain a-targets.
    """
    if semantics == Semantics.WEAK:
        return get_weak_table(plts).weak(state, action).generators
    return plts.targets(state, action)


def candidate_universe(plts: PLTS, queries: Iterable[Dist] = (), semantics: Semantics = Semantics.WEAK,
                       max_universe: Optional[int] = None) -> List[Dist]:
    """Candidate distributions in canonical order."""
    cap = max_universe or get_solver_config().max_universe
    queries = [plts.check_dist(q) for q in queries]
    found: Set[Dist] = {plts.point(s) for s in plts.states}
    found.update(queries)
    for state in plts.states:
        for action in plts.actions_with_tau:
            found.update(answer_generators(plts, state, action, semantics))
    for query in queries:
        for action in plts.actions_with_tau:
            found.update(successors(plts, query, action, semantics).generators)
    if len(found) > cap:
        raise LimitExceededError(f"candidate universe has {len(found)} distributions, cap is {cap}",
                                 limit="max_universe", value=cap)
    return sorted(found, key=dist_sort_key)


class StateDistSolver:
    """Greatest forward or failure simulation over a candidate universe."""

    def __init__(self, plts: PLTS, kind: RelationKind, semantics: Semantics = Semantics.WEAK,
                 queries: Iterable[Dist] = (), max_iterations: Optional[int] = None):
        if not kind.is_state_distribution:
            raise ValidationError(f"{kind.value} relates states to states; use compute_relation",
                                  field="kind", value=kind.value)
        if semantics == Semantics.WEAK:
            plts.require_divergence_free(kind.value)
        self.plts = plts
        self.kind = kind
        self.semantics = semantics
        self.max_iterations = max_iterations or get_solver_config().max_iterations
        self.universe = candidate_universe(plts, queries, semantics)
        self._position = {dist: index for index, dist in enumerate(self.universe)}
        self.alive: Dict[str, Set[int]] = {}
        self.rounds = 0
        self._solved = False

    def solve(self) -> "StateDistSolver":
        if self._solved:
            return self
        everything = set(range(len(self.universe)))
        self.alive = {state: set(everything) for state in self.plts.states}
        while True:
            self.rounds += 1
            if self.rounds > self.max_iterations:
                raise LimitExceededError(f"{self.kind.value}: refinement did not stabilise",
                                         limit="max_iterations", value=self.max_iterations)
            removed = 0
            for state in self.plts.states:
                for index in sorted(self.alive[state]):
                    if not self._holds(state, self.universe[index]):
                        self.alive[state].discard(index)
                        removed += 1
                        logger.debug("%s: removed (%s, %s) in round %d", self.kind.value, state,
                                     self.universe[index].format(), self.rounds)
            logger.info("%s: round %d removed %d candidate pairs", self.kind.value, self.rounds, removed)
            if not removed:
                break
        self._solved = True
        return self

    def _holds(self, state: str, gamma: Dist) -> bool:
        for action, target in self.plts.moves(state):
            if not self.matches(gamma, action, target):
                return False
        if self.kind == RelationKind.FAILURE_SIM:
            return self.refusal_matched(state, gamma)
        return True

    def refusal_matched(self, state: str, gamma: Dist) -> bool:
        """The refusal clause for state against gamma; vacuous when state has an internal move."""
        enabled = self.plts.enabled(state)
        if TAU in enabled:
            return True
        return refusal_holds(self.plts, gamma, set(self.plts.alphabet) - enabled, self.semantics)

    def matches(self, gamma: Dist, action: str, target: Dist) -> bool:
        """Whether some answer Θ' of gamma to the move satisfies target lift R Θ'."""
        answers: Dict[str, Tuple[Dist, ...]] = {}
        reach: Set[str] = set()
        for v in gamma.states:
            generators = answer_generators(self.plts, v, action, self.semantics)
            if not generators:
                return False
            answers[v] = generators
            for generator in generators:
                reach |= generator.support

        system = LinearSystem("sd-match")
        for v, weight in gamma:
            system.add_equality({("pi", v, k): 1 for k in range(len(answers[v]))}, weight)
        pieces: Dict[str, List[int]] = {}
        for u, weight in target:
            usable = [j for j in sorted(self.alive[u]) if self.universe[j].support <= reach]
            if not usable:
                return False
            pieces[u] = usable
            system.add_equality({("nu", u, j): 1 for j in usable}, weight)
        for x in sorted(reach):
            terms: Dict = {}
            for v, generators in answers.items():
                for k, generator in enumerate(generators):
                    if generator[x]:
                        terms[("pi", v, k)] = generator[x]
            for u, usable in pieces.items():
                for j in usable:
                    mass = self.universe[j][x]
                    if mass:
                        terms[("nu", u, j)] = terms.get(("nu", u, j), 0) - mass
            system.add_equality(terms, 0)
        return system.feasible()

    def holds(self, state: str, dist: Dist) -> bool:
        """state ⊑ dist; dist must belong to the universe (pass it as a query)."""
        self.solve()
        self.plts.index(state)
        position = self._position.get(dist)
        if position is None:
            raise ValidationError(f"{dist.format()} is not a candidate; pass it as a query",
                                  field="dist", value=dist.format())
        return position in self.alive[state]

    def related_candidates(self, state: str) -> List[Dist]:
        self.solve()
        return [self.universe[j] for j in sorted(self.alive[state])]

    def relation(self) -> StateDistRelation:
        """Per-state hulls of the surviving candidates."""
        self.solve()
        return StateDistRelation(per_state={
            state: Polytope(self.universe[j] for j in self.alive[state]) for state in self.plts.states
        })


def check_sd_relation(plts: PLTS, kind: RelationKind, state: str, dist: Dist,
                      semantics: Semantics = Semantics.WEAK) -> bool:
    """Decide state ⊑ dist for forward or failure simulation."""
    plts.check_dist(dist)
    return StateDistSolver(plts, kind, semantics, queries=[dist]).holds(state, dist)


def check_sd_many(plts: PLTS, kind: RelationKind, pairs: Sequence[Tuple[str, Dist]],
                  semantics: Semantics = Semantics.WEAK) -> List[bool]:
    """Several queries answered from one solver run."""
    solver = StateDistSolver(plts, kind, semantics, queries=[dist for _, dist in pairs])
    return [solver.holds(state, dist) for state, dist in pairs]
