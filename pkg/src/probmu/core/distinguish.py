"""Distinguishing formulae for states that are not strongly bisimilar.

The refinement trace says at which step each pair was removed and which
direction failed. When (s, t) fell because a move s --a--> Δ had no match
from t against the relation R_k still in place at step k, the formula

    <a> ⊕ Δ(s')·↓ ⋀ { φ(s', t') : (s', t') not in R_k }

holds at δ(s) (Δ itself is a witness) and fails at δ(t): every a-answer of
t would otherwise lift R_k onto Δ. A pair that fell in the backward
direction is the negation of the formula for its mirror.
"""

import logging
from typing import Dict, FrozenSet, Optional, Tuple

from ..models.formula import Conj, Diamond, Down, Formula, Neg, OPlusW, conjoin
from ..models.plts import PLTS
from ..models.schemas import RelationKind, RelationResult
from ..utils.error_handling import ValidationError
from .charform import char_formula
from .relations import TransferChecker, compute_relation

logger = logging.getLogger("probmu.distinguish")

Pair = Tuple[str, str]


class Distinguisher:
    """Builds and memoises distinguishing formulae from one refinement trace."""

    def __init__(self, plts: PLTS, result: Optional[RelationResult] = None):
        self.plts = plts
        self.result = result or compute_relation(plts, RelationKind.STRONG_BISIM)
        if self.result.kind != RelationKind.STRONG_BISIM:
            raise ValidationError("distinguishing formulae need a strong bisimulation trace", field="kind",
                                  value=self.result.kind.value)
        self._checker = TransferChecker(plts, RelationKind.STRONG_BISIM)
        self._removed: Dict[Pair, int] = {removal.pair: removal.step for removal in self.result.removals}
        self._directions = {removal.pair: removal.direction for removal in self.result.removals}
        self._before: Dict[int, FrozenSet[Pair]] = {}
        self._memo: Dict[Pair, Formula] = {}

    def relation_before(self, step: int) -> FrozenSet[Pair]:
        """The candidate relation as it stood when step was taken."""
        cached = self._before.get(step)
        if cached is None:
            cached = frozenset(
                (s, t) for s in self.plts.states for t in self.plts.states
                if self._removed.get((s, t), step) >= step
            )
            self._before[step] = cached
        return cached

    def formula(self, s: str, t: str) -> Formula:
        """A formula satisfied by δ(s) and not by δ(t)."""
        self.plts.index(s)
        self.plts.index(t)
        if (s, t) not in self._removed:
            raise ValidationError(f"'{s}' and '{t}' are strongly bisimilar", field="pair", value=(s, t))
        cached = self._memo.get((s, t))
        if cached is not None:
            return cached
        step = self._removed[(s, t)]
        if self._directions[(s, t)] == "forward":
            result = self._unmatched_move(s, t, step)
        else:
            result = Neg(self._unmatched_move(t, s, step))
        self._memo[(s, t)] = result
        return result

    def _unmatched_move(self, first: str, second: str, step: int) -> Formula:
        relation = self.relation_before(step)
        failure = self._checker.first_failure(relation, first, second)
        if failure is None:
            raise ValidationError(f"no unmatched move of '{first}' against '{second}' at step {step}",
                                  field="trace", value=step)
        action, target = failure
        branches = []
        for state, weight in target:
            separators = [self.formula(state, other) for other in self.plts.states
                          if (state, other) not in relation]
            branches.append((weight, Down(conjoin(separators) if separators else Conj(()))))
        logger.debug("step %d: %s --%s--> %s separates %s from %s", step, first, action, target.format(),
                     first, second)
        return Diamond(action, OPlusW(tuple(branches)))


def distinguish(plts: PLTS, s: str, t: str, kind: RelationKind = RelationKind.STRONG_BISIM) -> Formula:
    """Formula satisfied by δ(s) but not δ(t) when s and t are not strongly bisimilar."""
    if kind != RelationKind.STRONG_BISIM:
        raise ValidationError(f"distinguishing formulae are built for strong-bisim only; got {kind.value}",
                              field="kind", value=kind.value)
    return Distinguisher(plts).formula(s, t)


def explain(plts: PLTS, s: str, t: str, kind: RelationKind) -> Formula:
    """Why t is not related to s: a distinguishing formula, or the characteristic formula of s."""
    if kind == RelationKind.STRONG_BISIM:
        return distinguish(plts, s, t)
    if kind.is_state_distribution:
        raise ValidationError(f"{kind.value} relates states to distributions", field="kind", value=kind.value)
    result = compute_relation(plts, kind)
    if result.related(s, t):
        raise ValidationError(f"'{t}' is related to '{s}' under {kind.value}", field="pair", value=(s, t))
    return char_formula(plts, s, kind)
