"""Concrete syntax of the probabilistic modal mu-calculus.

Binding strength, loosest first::

    phi \\/ psi            disjunction
    phi (+) psi           probabilistic choice (weighted when every operand is ``p*phi``)
    p*phi                 weighted operand
    phi /\\ psi            conjunction
    not, <a>, [a], down, mu X., nu X.    prefix operators (binders extend as far right as possible)

Atoms are ``true``, ``false``, identifiers, ``ref{a,b}``, the n-ary forms
``and(...)``, ``or(...)``, ``oplus(...)`` and parenthesised formulae.
"""

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from ..models.formula import (
    Binder, Box, Conj, Diamond, Disj, Down, EquationSystem, Formula, Mu, Neg, Nu, OPlus, OPlusW,
    Ref, Var, check_polarity,
)
from ..utils.error_handling import ParsingError, ValidationError

KEYWORDS = frozenset({"true", "false", "not", "down", "mu", "nu", "and", "or", "oplus", "ref"})

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")
_ACTION = re.compile(r"[A-Za-z0-9_'.\-]+")
_NUMBER = re.compile(r"\d+(/\d+)?")
_SYMBOLS = ("(+)", "/\\", "\\/", "(", ")", "<", ">", "[", "]", ",", ".", "*")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    column: int


def tokenize(text: str, line: int = 1) -> List[Token]:
    """Split formula text into tokens; actions inside <...> and [...] are one token."""
    tokens: List[Token] = []
    position = 0
    modality_close: Optional[str] = None
    while position < len(text):
        char = text[position]
        if char.isspace():
            position += 1
            continue
        column = position + 1
        if modality_close is not None:
            match = _ACTION.match(text, position)
            if match is None:
                raise ParsingError(f"expected an action, found '{char}'", line, column)
            tokens.append(Token("action", match.group(), column))
            position = match.end()
            rest = text[position:].lstrip()
            if not rest.startswith(modality_close):
                raise ParsingError(f"expected '{modality_close}' after action", line, column)
            position = len(text) - len(rest)
            tokens.append(Token(modality_close, modality_close, position + 1))
            position += 1
            modality_close = None
            continue
        symbol = next((s for s in _SYMBOLS if text.startswith(s, position)), None)
        if symbol is not None:
            tokens.append(Token(symbol, symbol, column))
            position += len(symbol)
            if symbol in ("<", "["):
                modality_close = ">" if symbol == "<" else "]"
            continue
        match = _NUMBER.match(text, position)
        if match is not None:
            tokens.append(Token("number", match.group(), column))
            position = match.end()
            continue
        match = _IDENT.match(text, position)
        if match is not None:
            word = match.group()
            tokens.append(Token(word if word in KEYWORDS else "ident", word, column))
            position = match.end()
            if word == "ref":
                position = _refusal_set(text, position, line, tokens)
            continue
        raise ParsingError(f"unexpected character '{char}'", line, column)
    tokens.append(Token("end", "", len(text) + 1))
    return tokens


def _refusal_set(text: str, position: int, line: int, tokens: List[Token]) -> int:
    """Read ``{a,b}`` after ``ref`` as one token holding the comma-separated actions."""
    start = position
    while start < len(text) and text[start].isspace():
        start += 1
    if not text.startswith("{", start):
        raise ParsingError("expected '{' after ref", line, start + 1)
    end = text.find("}", start)
    if end < 0:
        raise ParsingError("unterminated refusal set", line, start + 1)
    body = text[start + 1:end]
    actions = [item.strip() for item in body.split(",")] if body.strip() else []
    for action in actions:
        if not _ACTION.fullmatch(action):
            raise ParsingError(f"invalid action '{action}' in refusal set", line, start + 2)
        if action == "tau":
            raise ParsingError("refusal sets cannot contain tau", line, start + 2)
    tokens.append(Token("refset", ",".join(actions), start + 1))
    return end + 1


class FormulaParser:
    """Recursive-descent parser over a token list."""

    def __init__(self, text: str, line: int = 1):
        self.text = text
        self.line = line
        self.tokens = tokenize(text, line)
        self.position = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.position]

    def _advance(self) -> Token:
        token = self.tokens[self.position]
        self.position += 1
        return token

    def _expect(self, kind: str) -> Token:
        token = self.current
        if token.kind != kind:
            found = token.text or "end of input"
            raise ParsingError(f"expected '{kind}', found '{found}'", self.line, token.column)
        return self._advance()

    def _error(self, message: str) -> ParsingError:
        return ParsingError(message, self.line, self.current.column)

    def parse(self) -> Formula:
        formula = self._disjunction()
        if self.current.kind != "end":
            raise self._error(f"unexpected '{self.current.text}'")
        return formula

    def _disjunction(self) -> Formula:
        items = [self._choice()]
        while self.current.kind == "\\/":
            self._advance()
            items.append(self._choice())
        return items[0] if len(items) == 1 else Disj(tuple(items))

    def _choice(self) -> Formula:
        first = self._weighted()
        if self.current.kind != "(+)":
            if first[0] is not None:
                raise self._error("weighted operand outside a probabilistic choice")
            return first[1]
        operands = [first]
        while self.current.kind == "(+)":
            self._advance()
            operands.append(self._weighted())
        return self._build_choice(operands)

    def _build_choice(self, operands: List[Tuple[Optional[Fraction], Formula]]) -> Formula:
        weights = [weight for weight, _ in operands]
        if all(weight is None for weight in weights):
            return OPlus(tuple(phi for _, phi in operands))
        if any(weight is None for weight in weights):
            raise self._error("mixing weighted and unweighted operands of a probabilistic choice")
        try:
            return OPlusW(tuple((weight, phi) for weight, phi in operands))
        except ValidationError as exc:
            raise ParsingError(exc.message, self.line, self.current.column) from exc

    def _weighted(self) -> Tuple[Optional[Fraction], Formula]:
        if self.current.kind == "number":
            token = self._advance()
            try:
                weight = Fraction(token.text)
            except (ZeroDivisionError, ValueError):
                raise ParsingError(f"weight {token.text} has a zero denominator", self.line,
                                   token.column) from None
            self._expect("*")
            return weight, self._conjunction()
        return None, self._conjunction()

    def _conjunction(self) -> Formula:
        items = [self._unary()]
        while self.current.kind == "/\\":
            self._advance()
            items.append(self._unary())
        return items[0] if len(items) == 1 else Conj(tuple(items))

    def _unary(self) -> Formula:
        kind = self.current.kind
        if kind == "not":
            self._advance()
            return Neg(self._unary())
        if kind == "down":
            self._advance()
            return Down(self._unary())
        if kind in ("<", "["):
            self._advance()
            action = self._expect("action").text
            self._expect(">" if kind == "<" else "]")
            body = self._unary()
            return Diamond(action, body) if kind == "<" else Box(action, body)
        if kind in ("mu", "nu"):
            self._advance()
            name = self._expect("ident").text
            self._expect(".")
            body = self._disjunction()
            return Mu(name, body) if kind == "mu" else Nu(name, body)
        return self._atom()

    def _atom(self) -> Formula:
        token = self.current
        if token.kind == "true":
            self._advance()
            return Conj(())
        if token.kind == "false":
            self._advance()
            return Disj(())
        if token.kind == "ident":
            self._advance()
            return Var(token.text)
        if token.kind == "ref":
            self._advance()
            actions = self._expect("refset").text
            return Ref(tuple(actions.split(",")) if actions else ())
        if token.kind in ("and", "or"):
            self._advance()
            items = tuple(phi for _, phi in self._arguments(weighted=False))
            return Conj(items) if token.kind == "and" else Disj(items)
        if token.kind == "oplus":
            self._advance()
            operands = self._arguments(weighted=True)
            if not operands:
                return OPlus(())
            return self._build_choice(operands)
        if token.kind == "(":
            self._advance()
            formula = self._disjunction()
            self._expect(")")
            return formula
        raise self._error(f"unexpected '{token.text or 'end of input'}'")

    def _arguments(self, weighted: bool) -> List[Tuple[Optional[Fraction], Formula]]:
        self._expect("(")
        items: List[Tuple[Optional[Fraction], Formula]] = []
        if self.current.kind == ")":
            self._advance()
            return items
        while True:
            items.append(self._weighted() if weighted else (None, self._disjunction()))
            if self.current.kind == ",":
                self._advance()
                continue
            self._expect(")")
            return items


def parse_formula(text: str, line: int = 1) -> Formula:
    """Parse formula text and check that binders are used positively."""
    formula = FormulaParser(text, line).parse()
    check_polarity(formula)
    return formula


def print_formula(formula: Formula) -> str:
    """Render a formula in the concrete syntax; ``parse_formula`` reads it back unchanged."""
    memo: Dict[int, str] = {}

    def render(node: Formula) -> str:
        key = id(node)
        cached = memo.get(key)
        if cached is not None:
            return cached
        text = _render(node, render)
        memo[key] = text
        return text

    return render(formula)


def _render(node: Formula, render) -> str:
    if isinstance(node, Conj):
        if not node.items:
            return "true"
        if len(node.items) == 1:
            return f"and({render(node.items[0])})"
        return "(" + " /\\ ".join(render(item) for item in node.items) + ")"
    if isinstance(node, Disj):
        if not node.items:
            return "false"
        if len(node.items) == 1:
            return f"or({render(node.items[0])})"
        return "(" + " \\/ ".join(render(item) for item in node.items) + ")"
    if isinstance(node, Neg):
        return f"not {render(node.body)}"
    if isinstance(node, Diamond):
        return f"<{node.action}>{render(node.body)}"
    if isinstance(node, Box):
        return f"[{node.action}]{render(node.body)}"
    if isinstance(node, Down):
        return f"down {render(node.body)}"
    if isinstance(node, OPlus):
        return "oplus(" + ", ".join(render(item) for item in node.items) + ")"
    if isinstance(node, OPlusW):
        return "oplus(" + ", ".join(f"{weight}*{render(phi)}" for weight, phi in node.items) + ")"
    if isinstance(node, Ref):
        return "ref{" + ",".join(node.actions) + "}"
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Binder):
        keyword = "mu" if isinstance(node, Mu) else "nu"
        return f"({keyword} {node.var}. {render(node.body)})"
    raise ValidationError(f"cannot print {type(node).__name__}", field="formula")


def parse_equations(text: str) -> EquationSystem:
    """Read ``X = phi`` lines; blank lines and ``#`` comments are skipped."""
    equations: List[Tuple[str, Formula]] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if "=" not in line:
            raise ParsingError("expected '<variable> = <formula>'", number, 1)
        name, body = line.split("=", 1)
        name = name.strip()
        if not _IDENT.fullmatch(name) or name in KEYWORDS:
            raise ParsingError(f"invalid variable name '{name}'", number, 1)
        formula = FormulaParser(body, number).parse()
        if not formula.is_fixpoint_free:
            raise ParsingError(f"body of {name} contains a fixpoint binder", number, len(name) + 2)
        equations.append((name, formula))
    if not equations:
        raise ParsingError("no equations found", 1, 1)
    for _, body in equations:
        closed = body
        for variable in body.free_variables:
            closed = Nu(variable, closed)
        check_polarity(closed)
    return EquationSystem(tuple(equations))


def print_equations(system: EquationSystem) -> str:
    return "".join(f"{name} = {print_formula(body)}\n" for name, body in system.equations)
