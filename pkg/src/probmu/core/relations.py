"""Greatest (bi)simulation relations between the states of one pLTS.

Refinement starts from S×S and removes every pair whose transfer
condition fails, visiting pairs in state order and updating the relation
in place, until a full round removes nothing. Every removal is recorded
with the move that could not be matched; :mod:`probmu.core.distinguish`
reads that trace back.
"""

import logging
from typing import Dict, List, Optional, Sequence, Set, Tuple

from ..models.dist import Dist
from ..models.plts import PLTS, TAU
from ..models.schemas import RefinementRound, RelationKind, RelationResult, Removal, StateRelation, WeightFunction
from ..utils.config import get_solver_config
from ..utils.error_handling import LimitExceededError, ValidationError
from .lifting import Pairs, lift_into_hull, transport
from .transitions import get_weak_table, strong_successors, weak_successors

logger = logging.getLogger("probmu.relations")

Pair = Tuple[str, str]


class TransferChecker:
    """Decides the transfer condition of one relation kind on one system."""

    def __init__(self, plts: PLTS, kind: RelationKind):
        if kind.is_state_distribution:
            raise ValidationError(f"{kind.value} relates states to distributions; use check_sd_relation",
                                  field="kind", value=kind.value)
        if kind.is_weak:
            plts.require_divergence_free(kind.value)
        self.plts = plts
        self.kind = kind
        self._table = get_weak_table(plts) if kind.is_weak else None
        self._answers: Dict[Tuple[str, str], Tuple[Dist, ...]] = {}

    def answers(self, state: str, action: str) -> Tuple[Dist, ...]:
        """Generators of the moves of δ(state) that may answer an a-move."""
        key = (state, action)
        cached = self._answers.get(key)
        if cached is None:
            if self._table is not None:
                cached = self._table.weak(state, action).generators
            else:
                cached = self.plts.targets(state, action)
            self._answers[key] = cached
        return cached

    def match(self, pairs: Pairs, action: str, target: Dist, state: str) -> Optional[Tuple[Dist, WeightFunction]]:
        """An answer Θ of state to the move --action--> target with target lift R Θ."""
        generators = self.answers(state, action)
        if self.kind.is_combined:
            return lift_into_hull(pairs, target, generators)
        for generator in generators:
            witness = transport(pairs, target, generator)
            if witness is not None:
                return generator, witness
        return None

    def first_failure(self, pairs: Pairs, s: str, t: str) -> Optional[Tuple[str, Dist]]:
        """The first move of s (canonical order) that t cannot match, or None."""
        for action, target in self.plts.moves(s):
            if self.match(pairs, action, target, t) is None:
                return action, target
        return None


def _ordered_pairs(plts: PLTS, pairs: Set[Pair]) -> List[Pair]:
    return sorted(pairs, key=lambda p: (plts.index(p[0]), plts.index(p[1])))


def compute_relation(plts: PLTS, kind: RelationKind, max_iterations: Optional[int] = None) -> RelationResult:
    """Greatest relation of the given state-to-state kind, with its refinement trace."""
    checker = TransferChecker(plts, kind)
    cap = max_iterations or get_solver_config().max_iterations
    pairs: Set[Pair] = {(s, t) for s in plts.states for t in plts.states}
    rounds: List[RefinementRound] = []
    removals: List[Removal] = []
    step = 0
    index = 0
    while True:
        index += 1
        if index > cap:
            raise LimitExceededError(f"{kind.value}: refinement did not stabilise within {cap} rounds",
                                     limit="max_iterations", value=cap)
        removed: List[Pair] = []
        for s, t in _ordered_pairs(plts, pairs):
            if (s, t) not in pairs:
                continue
            failure = checker.first_failure(pairs, s, t)
            direction = "forward"
            if failure is None and kind.is_bisimulation:
                failure = checker.first_failure(pairs, t, s)
                direction = "backward"
            if failure is None:
                continue
            step += 1
            action, target = failure
            doomed = [(s, t), (t, s)] if kind.is_bisimulation and s != t else [(s, t)]
            for pair in doomed:
                if pair in pairs:
                    pairs.discard(pair)
                    removed.append(pair)
                    removals.append(Removal(pair=pair, round=index, step=step,
                                            direction=direction if pair == (s, t) else _flip(direction),
                                            action=action, target=target.format()))
                    logger.debug("%s: removed (%s, %s) in round %d: %s --%s--> %s unmatched",
                                 kind.value, pair[0], pair[1], index, s if direction == "forward" else t,
                                 action, target.format())
        rounds.append(RefinementRound(index=index, removed=removed, size_after=len(pairs)))
        logger.info("%s: round %d removed %d pairs, %d remain", kind.value, index, len(removed), len(pairs))
        if not removed:
            break
    relation = StateRelation.over(plts.states, pairs)
    return RelationResult(kind=kind, relation=relation, rounds=rounds, removals=removals)


def _flip(direction: str) -> str:
    return "backward" if direction == "forward" else "forward"


def is_fixpoint(plts: PLTS, kind: RelationKind, relation: StateRelation) -> bool:
    """Whether every pair of relation satisfies the transfer condition against relation itself."""
    checker = TransferChecker(plts, kind)
    pairs = relation.pairs
    for s, t in relation.sorted_pairs():
        if checker.first_failure(pairs, s, t) is not None:
            return False
        if kind.is_bisimulation and checker.first_failure(pairs, t, s) is not None:
            return False
    return True


def related(plts: PLTS, kind: RelationKind, s: str, t: str) -> bool:
    plts.index(s)
    plts.index(t)
    return compute_relation(plts, kind).related(s, t)


def lifted_transfer(plts: PLTS, kind: RelationKind, relation: StateRelation, delta: Dist, theta: Dist,
                    action: str, delta_next: Dist) -> Optional[Tuple[Dist, WeightFunction]]:
    """Answer a lifted move Δ --a--> Δ' from Θ when Δ lift R Θ.

    Returns Θ' with Θ --a--> Θ' (weakly ⇒â for weak kinds) and Δ' lift R Θ',
    or None when no such answer exists.
    """
    if transport(relation.pairs, delta, theta) is None:
        raise ValidationError("distributions are not related by the lifted relation", field="theta")
    weak = kind.is_weak
    moves = strong_successors(plts, delta, action, hatted=weak and action == TAU)
    if not moves.contains(delta_next):
        raise ValidationError(f"{delta.format()} has no {action}-move to {delta_next.format()}",
                              field="delta_next", value=delta_next.format())
    answers = weak_successors(plts, theta, action) if weak else strong_successors(plts, theta, action)
    return lift_into_hull(relation.pairs, delta_next, answers.generators)


def relation_table(results: Sequence[RelationResult]) -> Dict[str, List[Pair]]:
    """Sorted pairs per kind, for reports."""
    return {result.kind.value: result.relation.sorted_pairs() for result in results}
