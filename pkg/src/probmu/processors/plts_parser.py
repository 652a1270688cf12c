"""Reading and writing the line-oriented pLTS text format.

::

    # comment
    states: s t u
    actions: a b            (optional)
    s a -> 1/2 t, 1/2 u
    t tau -> u

Distributions on the command line use ``1/2 t + 1/2 u``; a bare state
name is the point distribution.
"""

import re
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Set, Tuple, Union

from ..models.dist import Dist
from ..models.plts import PLTS, TAU, TOKEN_PATTERN, Transition
from ..utils.error_handling import ParsingError, ValidationError

_WEIGHT = re.compile(r"^\d+(/\d+)?$")
_ARROW = "->"


def parse_weight(text: str, line: Optional[int] = None, column: Optional[int] = None) -> Fraction:
    """``num/den`` or an integer, as an exact rational."""
    if not _WEIGHT.match(text):
        raise ParsingError(f"expected a rational weight, found '{text}'", line, column)
    try:
        value = Fraction(text)
    except (ZeroDivisionError, ValueError):
        raise ParsingError(f"weight {text} has a zero denominator", line, column) from None
    if value > 1:
        raise ParsingError(f"weight {text} exceeds 1", line, column)
    return value


class PLTSParser:
    """Parser for one pLTS document."""

    def __init__(self, text: str, source: str = "<string>"):
        self.text = text
        self.source = source
        self.states: List[str] = []
        self.declared_actions: Optional[List[str]] = None
        self.transitions: List[Tuple[int, str, str, Dist]] = []

    def parse(self) -> PLTS:
        for number, raw in enumerate(self.text.splitlines(), start=1):
            line = raw.split("#", 1)[0].rstrip()
            if not line.strip():
                continue
            stripped = line.lstrip()
            offset = len(line) - len(stripped) + 1
            if stripped.startswith("states:"):
                self._declare_states(stripped[len("states:"):], number, offset + len("states:"))
            elif stripped.startswith("actions:"):
                self._declare_actions(stripped[len("actions:"):], number, offset + len("actions:"))
            else:
                self._transition(stripped, number, offset)
        return self._build()

    def _declare_states(self, rest: str, number: int, column: int) -> None:
        names = rest.split()
        if not names:
            raise ParsingError("empty state declaration", number, column)
        for name in names:
            col = column + rest.index(name)
            if not TOKEN_PATTERN.match(name):
                raise ParsingError(f"invalid state name '{name}'", number, col)
            if name in self.states:
                raise ValidationError(f"line {number}: duplicate state declaration '{name}'",
                                      field="states", value=name)
            self.states.append(name)

    def _declare_actions(self, rest: str, number: int, column: int) -> None:
        names = rest.split()
        for name in names:
            if name == TAU:
                raise ParsingError("'tau' is internal and cannot be declared", number, column + rest.index(name))
            if not TOKEN_PATTERN.match(name):
                raise ParsingError(f"invalid action name '{name}'", number, column + rest.index(name))
        self.declared_actions = (self.declared_actions or []) + names

    def _transition(self, line: str, number: int, offset: int) -> None:
        if _ARROW not in line:
            raise ParsingError("expected '<source> <action> -> <distribution>'", number, offset)
        head, body = line.split(_ARROW, 1)
        parts = head.split()
        if len(parts) != 2:
            raise ParsingError("expected a source state and an action before '->'", number, offset)
        source, action = parts
        for token in parts:
            if not TOKEN_PATTERN.match(token):
                raise ParsingError(f"invalid token '{token}'", number, offset + head.index(token))
        body_column = offset + len(head) + len(_ARROW)
        weights = self._weights(body, number, body_column)
        self.transitions.append((number, source, action, weights))

    def _weights(self, body: str, number: int, column: int) -> Dist:
        masses: Dict[str, Fraction] = {}
        position = 0
        for chunk in body.split(","):
            chunk_column = column + position + (len(chunk) - len(chunk.lstrip()))
            position += len(chunk) + 1
            tokens = chunk.split()
            if len(tokens) == 1:
                weight, target = Fraction(1), tokens[0]
            elif len(tokens) == 2:
                weight, target = parse_weight(tokens[0], number, chunk_column), tokens[1]
            else:
                raise ParsingError("expected '<weight> <state>'", number, chunk_column)
            if not TOKEN_PATTERN.match(target):
                raise ParsingError(f"invalid state name '{target}'", number, chunk_column)
            masses[target] = masses.get(target, Fraction(0)) + weight
        total = sum(masses.values(), Fraction(0))
        if total != 1:
            raise ValidationError(f"line {number}: weights sum to {total}, expected 1",
                                  field="weights", value=total)
        return Dist.of(masses)

    def _build(self) -> PLTS:
        declared: Set[str] = set(self.states)
        triples = []
        for number, source, action, target in self.transitions:
            for state in (source, *target.states):
                if state not in declared:
                    raise ValidationError(f"line {number}: undeclared state '{state}'", field="state", value=state)
            triples.append(Transition(source=source, action=action, target=target))
        used = {t.action for t in triples if t.action != TAU}
        if self.declared_actions is not None:
            missing = used - set(self.declared_actions)
            if missing:
                raise ValidationError(f"action '{sorted(missing)[0]}' missing from the actions line",
                                      field="actions", value=sorted(missing)[0])
            alphabet = set(self.declared_actions)
        else:
            alphabet = used
        if not self.states:
            raise ValidationError("no 'states:' declaration", field="states")
        return PLTS(states=tuple(self.states), alphabet=tuple(alphabet), transitions=tuple(triples))


def parse_plts(text: str) -> PLTS:
    """Parse a pLTS document."""
    return PLTSParser(text).parse()


def load_plts(path: Union[str, Path]) -> PLTS:
    path = Path(path)
    return PLTSParser(path.read_text(encoding="utf-8"), source=str(path)).parse()


def serialize_plts(plts: PLTS) -> str:
    """Canonical text form; parsing it yields an equal system."""
    return plts.canonical_text()


def parse_distribution(text: str, plts: Optional[PLTS] = None) -> Dist:
    """Parse ``1/2 t1 + 1/2 t2`` (or a bare state name)."""
    masses: Dict[str, Fraction] = {}
    terms = text.split("+")
    column = 1
    for term in terms:
        tokens = term.split()
        term_column = column + (len(term) - len(term.lstrip()))
        column += len(term) + 1
        if len(tokens) == 1:
            weight, state = Fraction(1), tokens[0]
        elif len(tokens) == 2:
            weight, state = parse_weight(tokens[0], 1, term_column), tokens[1]
        else:
            raise ParsingError("expected '<weight> <state>' terms joined by '+'", 1, term_column)
        if not TOKEN_PATTERN.match(state):
            raise ParsingError(f"invalid state name '{state}'", 1, term_column)
        masses[state] = masses.get(state, Fraction(0)) + weight
    dist = Dist.of(masses)
    if plts is not None:
        plts.check_dist(dist)
    return dist


def format_distribution(dist: Dist) -> str:
    return dist.format(" + ")
