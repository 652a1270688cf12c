"""Probabilistic labelled transition systems."""

import hashlib
import re
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from pydantic import BaseModel, ConfigDict, PrivateAttr, field_validator, model_validator

from ..utils.error_handling import DivergenceError, ValidationError
from .dist import Dist, dist_sort_key

TAU = "tau"

TOKEN_PATTERN = re.compile(r"^[A-Za-z0-9_'.\-]+$")


class Transition(BaseModel):
    """A transition s --a--> Δ."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    source: str
    action: str
    target: Dist

    @property
    def is_internal(self) -> bool:
        return self.action == TAU

    def sort_key(self, order: Dict[str, int]) -> Tuple[int, str, Tuple]:
        return (order[self.source], self.action, dist_sort_key(self.target))


class PLTS(BaseModel):
    """A finite-state, finitely branching pLTS.

    ``alphabet`` holds the external actions only; ``tau`` is implicit.
    Lookup tables and the divergence witness are computed once at
    construction; the model is immutable afterwards.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    states: Tuple[str, ...]
    alphabet: Tuple[str, ...] = ()
    transitions: Tuple[Transition, ...] = ()

    _order: Dict[str, int] = PrivateAttr(default_factory=dict)
    _moves: Dict[str, Tuple[Tuple[str, Dist], ...]] = PrivateAttr(default_factory=dict)
    _targets: Dict[Tuple[str, str], Tuple[Dist, ...]] = PrivateAttr(default_factory=dict)
    _divergence: Optional[List[str]] = PrivateAttr(default=None)
    _digest: Optional[str] = PrivateAttr(default=None)

    @field_validator("states")
    @classmethod
    def validate_states(cls, states: Tuple[str, ...]) -> Tuple[str, ...]:
        if not states:
            raise ValidationError("a pLTS needs at least one state", field="states")
        seen: Set[str] = set()
        for state in states:
            if not TOKEN_PATTERN.match(state):
                raise ValidationError(f"invalid state name '{state}'", field="states", value=state)
            if state in seen:
                raise ValidationError(f"duplicate state declaration '{state}'", field="states", value=state)
            seen.add(state)
        return states

    @field_validator("alphabet")
    @classmethod
    def validate_alphabet(cls, alphabet: Tuple[str, ...]) -> Tuple[str, ...]:
        for action in alphabet:
            if action == TAU:
                raise ValidationError("'tau' is internal and cannot be declared", field="alphabet")
            if not TOKEN_PATTERN.match(action):
                raise ValidationError(f"invalid action name '{action}'", field="alphabet", value=action)
        return tuple(sorted(set(alphabet)))

    @model_validator(mode="after")
    def validate_transitions(self) -> "PLTS":
        declared = set(self.states)
        actions = set(self.alphabet)
        for transition in self.transitions:
            if transition.source not in declared:
                raise ValidationError(f"undeclared state '{transition.source}'", field="source",
                                      value=transition.source)
            if transition.action != TAU and transition.action not in actions:
                raise ValidationError(f"action '{transition.action}' missing from the alphabet",
                                      field="action", value=transition.action)
            missing = transition.target.support - declared
            if missing:
                state = sorted(missing)[0]
                raise ValidationError(f"undeclared state '{state}'", field="target", value=state)
        return self

    def model_post_init(self, __context: object) -> None:
        self._order = {state: index for index, state in enumerate(self.states)}
        moves: Dict[str, List[Tuple[str, Dist]]] = {state: [] for state in self.states}
        targets: Dict[Tuple[str, str], List[Dist]] = {}
        for transition in sorted(set(self.transitions), key=lambda t: t.sort_key(self._order)):
            moves[transition.source].append((transition.action, transition.target))
            targets.setdefault((transition.source, transition.action), []).append(transition.target)
        self._moves = {state: tuple(items) for state, items in moves.items()}
        self._targets = {key: tuple(items) for key, items in targets.items()}
        self._divergence = detect_divergence(self)

    @classmethod
    def build(cls, states: Sequence[str], transitions: Iterable[Tuple[str, str, Dist]],
              alphabet: Optional[Iterable[str]] = None) -> "PLTS":
        """Construct from plain triples; the alphabet defaults to the external labels used."""
        triples = [Transition(source=s, action=a, target=d) for s, a, d in transitions]
        if alphabet is None:
            alphabet = {t.action for t in triples if t.action != TAU}
        return cls(states=tuple(states), alphabet=tuple(alphabet), transitions=tuple(triples))

    @property
    def actions_with_tau(self) -> Tuple[str, ...]:
        return self.alphabet + (TAU,)

    def index(self, state: str) -> int:
        try:
            return self._order[state]
        except KeyError:
            raise ValidationError(f"unknown state '{state}'", field="state", value=state) from None

    def has_state(self, state: str) -> bool:
        return state in self._order

    def moves(self, state: str) -> Tuple[Tuple[str, Dist], ...]:
        """Outgoing (action, target) pairs of state, deduplicated and canonically ordered."""
        self.index(state)
        return self._moves[state]

    def targets(self, state: str, action: str) -> Tuple[Dist, ...]:
        return self._targets.get((state, action), ())

    def enabled(self, state: str) -> FrozenSet[str]:
        return frozenset(action for action, _ in self.moves(state))

    def has_tau(self, state: str) -> bool:
        return bool(self.targets(state, TAU))

    def point(self, state: str) -> Dist:
        self.index(state)
        return Dist.point(state)

    def check_dist(self, dist: Dist) -> Dist:
        missing = dist.support - set(self.states)
        if missing:
            state = sorted(missing)[0]
            raise ValidationError(f"undeclared state '{state}'", field="distribution", value=state)
        return dist

    @property
    def divergence_witness(self) -> Optional[List[str]]:
        return list(self._divergence) if self._divergence else None

    @property
    def is_divergence_free(self) -> bool:
        return self._divergence is None

    def require_divergence_free(self, operation: str = "weak semantics") -> None:
        """Raise DivergenceError when the system has an internal cycle."""
        if self._divergence is not None:
            raise DivergenceError(f"divergent pLTS: {operation} needs a divergence-free system",
                                  witness=self._divergence)

    @property
    def is_tau_free(self) -> bool:
        return not any(t.action == TAU for t in self.transitions)

    def canonical_text(self) -> str:
        """The canonical file form (see processors.plts_parser)."""
        lines = ["states: " + " ".join(self.states)]
        if self.alphabet:
            lines.append("actions: " + " ".join(self.alphabet))
        for state in self.states:
            for action, target in self._moves[state]:
                body = ", ".join(f"{weight} {name}" for name, weight in target.items)
                lines.append(f"{state} {action} -> {body}")
        return "\n".join(lines) + "\n"

    @property
    def digest(self) -> str:
        """sha256 of the canonical text; identifies the system in caches and reports."""
        if self._digest is None:
            self._digest = hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()
        return self._digest

    def summary(self) -> Dict[str, object]:
        return {
            "states": len(self.states),
            "actions": len(self.alphabet),
            "transitions": sum(len(items) for items in self._moves.values()),
            "divergence_free": self.is_divergence_free,
            "digest": self.digest[:12],
        }


def detect_divergence(plts: PLTS) -> Optional[List[str]]:
    """Return a cycle s0 ... sk = s0 of the internal-support graph, or None.

    The graph has an edge s -> s' whenever s --tau--> Δ with s' in the
    support of Δ. Search is depth-first in state order, so the witness is
    deterministic.
    """
    successors: Dict[str, List[str]] = {}
    for state in plts.states:
        nexts: Set[str] = set()
        for target in plts.targets(state, TAU):
            nexts.update(target.support)
        successors[state] = sorted(nexts, key=plts.index)

    WHITE, GREY, BLACK = 0, 1, 2
    colour = {state: WHITE for state in plts.states}

    for root in plts.states:
        if colour[root] != WHITE:
            continue
        path: List[str] = [root]
        stack: List[Tuple[str, int]] = [(root, 0)]
        colour[root] = GREY
        while stack:
            state, position = stack[-1]
            if position < len(successors[state]):
                stack[-1] = (state, position + 1)
                nxt = successors[state][position]
                if colour[nxt] == GREY:
                    return path[path.index(nxt):] + [nxt]
                if colour[nxt] == WHITE:
                    colour[nxt] = GREY
                    path.append(nxt)
                    stack.append((nxt, 0))
            else:
                colour[state] = BLACK
                path.pop()
                stack.pop()
    return None


def enabled(plts: PLTS, state: str) -> FrozenSet[str]:
    """Actions (tau included) that state can perform."""
    return plts.enabled(state)


def refuses(plts: PLTS, dist: Dist, actions: Iterable[str]) -> bool:
    """True iff no support state of dist enables tau or any action in actions."""
    refused = set(actions)
    if TAU in refused:
        raise ValidationError("refusal sets range over external actions only", field="actions", value=TAU)
    refused.add(TAU)
    return all(not (plts.enabled(state) & refused) for state in dist.support)


def refusers(plts: PLTS, actions: Iterable[str]) -> FrozenSet[str]:
    """States that, on their own, refuse actions."""
    refused = set(actions) | {TAU}
    return frozenset(state for state in plts.states if not (plts.enabled(state) & refused))
