"""Characteristic equation systems and characteristic formulae.

Each state s gets one fixpoint-free equation X_s = φ_s whose greatest
solution assigns X_s exactly the distributions related to s. The moves of
s turn into diamonds over ``X_Δ = ⊕ Δ(u)·↓X_u``; bisimulations add boxes
that bound what the other side may do, forward and failure simulation
drop the ``↓``, and failure simulation adds a refusal conjunct for stable
states. :func:`transform_to_formula` folds a system into one closed
formula with ν binders.
"""

import logging
import re
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Set, Tuple, Union

from ..models.dist import Dist
from ..models.formula import (
    FALSE, Box, Conj, Diamond, Down, EquationSystem, FragmentSpec, Formula, Nu, OPlus, OPlusW, Ref, Var,
    conjoin, substitute,
)
from ..models.plts import PLTS, TAU
from ..models.schemas import RelationKind, Semantics, StateRelation
from ..utils.error_handling import ValidationError
from .checker import PointSet
from .transitions import get_weak_table

logger = logging.getLogger("probmu.charform")

_VARIABLE = re.compile(r"^[A-Za-z_][A-Za-z0-9_']*$")


def variable_names(plts: PLTS) -> Dict[str, str]:
    """Equation variable for each state: ``X_<state>`` when that is an identifier, else ``X<index>``."""
    names = {}
    for index, state in enumerate(plts.states):
        candidate = f"X_{state}"
        names[state] = candidate if _VARIABLE.match(candidate) else f"X{index}"
    return names


@dataclass(frozen=True)
class CharSystem:
    """Characteristic equations of one pLTS for one relation kind."""
    kind: RelationKind
    system: EquationSystem
    semantics: Semantics
    names: Tuple[Tuple[str, str], ...]
    strong_failure: bool = False

    def variable(self, state: str) -> str:
        for candidate, name in self.names:
            if candidate == state:
                return name
        raise ValidationError(f"unknown state '{state}'", field="state", value=state)

    def equation(self, state: str) -> Formula:
        return self.system.body(self.variable(state))

    def fragment_violation(self) -> Optional[Formula]:
        """First constructor outside the kind's fragment (boxes allowed for bisimulations)."""
        spec = FragmentSpec.for_kind(self.kind)
        for _, body in self.system.equations:
            bad = spec.violation(body)
            if bad is not None:
                return bad
        return None


def _split(dist: Dist, names: Mapping[str, str], guarded: bool) -> Formula:
    """X_Δ: weighted choice over the support, each branch ↓-guarded when asked."""
    return OPlusW(tuple(
        (weight, Down(Var(names[state])) if guarded else Var(names[state])) for state, weight in dist
    ))


def _semantics_for(kind: RelationKind, semantics: Optional[Semantics]) -> Semantics:
    if semantics is None or semantics == kind.semantics:
        return kind.semantics
    if not kind.is_state_distribution:
        raise ValidationError(f"{kind.value} is defined for {kind.semantics.value} semantics only",
                              field="semantics", value=semantics.value)
    return semantics


def char_equations(plts: PLTS, kind: RelationKind, semantics: Optional[Semantics] = None,
                   strong_failure: bool = False) -> CharSystem:
    """One equation per state, in state order; the first state's variable is the root."""
    if not kind.has_characteristic_system:
        raise ValidationError(f"{kind.value} has no characteristic equation system", field="kind",
                              value=kind.value)
    semantics = _semantics_for(kind, semantics)
    if strong_failure and (kind != RelationKind.FAILURE_SIM or semantics != Semantics.STRONG):
        raise ValidationError("box-based refusals apply to strong failure simulation only",
                              field="strong_failure", value=kind.value)
    if semantics == Semantics.WEAK:
        plts.require_divergence_free(kind.value)

    names = variable_names(plts)
    guarded = not kind.is_state_distribution
    table = get_weak_table(plts) if semantics == Semantics.WEAK else None
    equations: List[Tuple[str, Formula]] = []
    for state in plts.states:
        conjuncts: List[Formula] = [Diamond(action, _split(target, names, guarded))
                                    for action, target in plts.moves(state)]
        if kind.is_bisimulation:
            for action in plts.actions_with_tau:
                if table is not None:
                    answers = table.weak(state, action).generators
                else:
                    answers = plts.targets(state, action)
                if answers:
                    conjuncts.append(Box(action, OPlus(tuple(_split(a, names, guarded) for a in answers))))
                else:
                    conjuncts.append(Box(action, FALSE))
        if kind == RelationKind.FAILURE_SIM and TAU not in plts.enabled(state):
            enabled = plts.enabled(state)
            if strong_failure:
                conjuncts.extend(Box(action, FALSE) for action in plts.actions_with_tau if action not in enabled)
            else:
                conjuncts.append(Ref(tuple(a for a in plts.alphabet if a not in enabled)))
        equations.append((names[state], conjoin(conjuncts) if conjuncts else Conj(())))

    system = EquationSystem(tuple(equations))
    logger.debug("%s: %d characteristic equations over %s semantics", kind.value, len(equations), semantics.value)
    return CharSystem(kind=kind, system=system, semantics=semantics,
                      names=tuple((state, names[state]) for state in plts.states), strong_failure=strong_failure)


def _needed(system: EquationSystem, root: str) -> Set[str]:
    needed = {root}
    frontier = [root]
    while frontier:
        for name in system.body(frontier.pop()).free_variables:
            if name not in needed:
                needed.add(name)
                frontier.append(name)
    return needed


def transform_to_formula(system: Union[CharSystem, EquationSystem], variable: str) -> Formula:
    """Closed formula for ν_E(variable).

    Equations the variable does not depend on are dropped first. The rest
    are eliminated from last to first: the last equation X = φ becomes
    νX.φ, which is substituted into every earlier equation. The remaining
    equation for the variable is closed with a final ν.
    """
    equations = system.system if isinstance(system, CharSystem) else system
    if variable not in equations:
        raise ValidationError(f"no equation for {variable}", field="variable", value=variable)
    needed = _needed(equations, variable)
    pending = [(name, body) for name, body in equations.equations if name in needed and name != variable]
    pending.insert(0, (variable, equations.body(variable)))
    while len(pending) > 1:
        name, body = pending.pop()
        closed = Nu(name, body)
        pending = [(other, substitute(phi, name, closed)) for other, phi in pending]
    name, body = pending[0]
    return Nu(name, body)


def char_formula(plts: PLTS, state: str, kind: RelationKind, semantics: Optional[Semantics] = None,
                 strong_failure: bool = False) -> Formula:
    """ν_E(X_state) for the characteristic system of kind."""
    plts.index(state)
    chars = char_equations(plts, kind, semantics, strong_failure)
    return transform_to_formula(chars, chars.variable(state))


def relation_environment(chars: CharSystem, relation: StateRelation) -> Dict[str, PointSet]:
    """ρ_R with ρ_R(X_s) = {δ(t) : s R t}."""
    return {
        name: PointSet.of(Dist.point(t) for t in sorted(relation.image(state)))
        for state, name in chars.names
    }
