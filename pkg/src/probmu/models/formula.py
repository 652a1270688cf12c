"""Abstract syntax of the probabilistic modal mu-calculus.

Formula nodes are immutable and hash-consed by structure: equal subterms
compare equal in constant time once hashed, so formulae produced by
repeated substitution behave as shared DAGs rather than trees.
"""

from dataclasses import dataclass, fields
from fractions import Fraction
from functools import cached_property
from typing import Callable, Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Set, Tuple, Type

from ..utils.error_handling import ValidationError
from .plts import TAU
from .schemas import RelationKind

_FIELD_NAMES: Dict[type, Tuple[str, ...]] = {}


class Formula:
    """Base class of all formula nodes."""

    def _values(self) -> tuple:
        names = _FIELD_NAMES.get(type(self))
        if names is None:
            names = tuple(f.name for f in fields(self))  # type: ignore[arg-type]
            _FIELD_NAMES[type(self)] = names
        return tuple(getattr(self, name) for name in names)

    @cached_property
    def _hash(self) -> int:
        return hash((type(self).__name__,) + self._values())

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if type(self) is not type(other):
            return False
        assert isinstance(other, Formula)
        return self._hash == other._hash and self._values() == other._values()

    def children(self) -> Tuple["Formula", ...]:
        return ()

    def rebuild(self, children: Sequence["Formula"]) -> "Formula":
        """Same node with its subformulae replaced (in children() order)."""
        return self

    @cached_property
    def free_variables(self) -> FrozenSet[str]:
        result: Set[str] = set()
        for child in self.children():
            result |= child.free_variables
        return frozenset(result)

    @property
    def is_closed(self) -> bool:
        return not self.free_variables

    @cached_property
    def is_fixpoint_free(self) -> bool:
        return all(child.is_fixpoint_free for child in self.children())

    def walk(self) -> Iterator["Formula"]:
        """Every distinct subformula once, parents before children."""
        seen: Set[int] = set()
        stack: List[Formula] = [self]
        while stack:
            node = stack.pop()
            if id(node) in seen:
                continue
            seen.add(id(node))
            yield node
            stack.extend(reversed(node.children()))

    def __str__(self) -> str:
        from ..processors.formula_parser import print_formula
        return print_formula(self)


@dataclass(frozen=True, eq=False)
class Conj(Formula):
    """n-ary conjunction; the empty conjunction is ``true``."""
    items: Tuple[Formula, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))

    def children(self) -> Tuple[Formula, ...]:
        return self.items

    def rebuild(self, children: Sequence[Formula]) -> Formula:
        return Conj(tuple(children))


@dataclass(frozen=True, eq=False)
class Disj(Formula):
    """n-ary disjunction; the empty disjunction is ``false``."""
    items: Tuple[Formula, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))

    def children(self) -> Tuple[Formula, ...]:
        return self.items

    def rebuild(self, children: Sequence[Formula]) -> Formula:
        return Disj(tuple(children))


@dataclass(frozen=True, eq=False)
class Neg(Formula):
    body: Formula

    def children(self) -> Tuple[Formula, ...]:
        return (self.body,)

    def rebuild(self, children: Sequence[Formula]) -> Formula:
        return Neg(children[0])


@dataclass(frozen=True, eq=False)
class Diamond(Formula):
    action: str
    body: Formula

    def children(self) -> Tuple[Formula, ...]:
        return (self.body,)

    def rebuild(self, children: Sequence[Formula]) -> Formula:
        return Diamond(self.action, children[0])


@dataclass(frozen=True, eq=False)
class Box(Formula):
    action: str
    body: Formula

    def children(self) -> Tuple[Formula, ...]:
        return (self.body,)

    def rebuild(self, children: Sequence[Formula]) -> Formula:
        return Box(self.action, children[0])


@dataclass(frozen=True, eq=False)
class OPlus(Formula):
    """Unweighted probabilistic choice: some split of the mass over the arguments."""
    items: Tuple[Formula, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))

    def children(self) -> Tuple[Formula, ...]:
        return self.items

    def rebuild(self, children: Sequence[Formula]) -> Formula:
        return OPlus(tuple(children))


@dataclass(frozen=True, eq=False)
class OPlusW(Formula):
    """Weighted probabilistic choice ⊕ p_i·φ_i with Σ p_i = 1."""
    items: Tuple[Tuple[Fraction, Formula], ...] = ()

    def __post_init__(self) -> None:
        items = tuple((Fraction(p), phi) for p, phi in self.items)
        if any(p < 0 for p, _ in items):
            raise ValidationError("negative weight in weighted oplus", field="weights")
        total = sum((p for p, _ in items), Fraction(0))
        if total != 1:
            raise ValidationError(f"oplus weights sum to {total}, expected 1", field="weights", value=total)
        object.__setattr__(self, "items", items)

    @property
    def weights(self) -> Tuple[Fraction, ...]:
        return tuple(p for p, _ in self.items)

    def children(self) -> Tuple[Formula, ...]:
        return tuple(phi for _, phi in self.items)

    def rebuild(self, children: Sequence[Formula]) -> Formula:
        return OPlusW(tuple(zip(self.weights, children)))


@dataclass(frozen=True, eq=False)
class Down(Formula):
    """↓φ: every state in the support satisfies φ as a point distribution."""
    body: Formula

    def children(self) -> Tuple[Formula, ...]:
        return (self.body,)

    def rebuild(self, children: Sequence[Formula]) -> Formula:
        return Down(children[0])


@dataclass(frozen=True, eq=False)
class Ref(Formula):
    """ref(A): internal moves alone can reach a distribution refusing A."""
    actions: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        actions = tuple(sorted(set(self.actions)))
        if TAU in actions:
            raise ValidationError("refusal sets cannot contain tau", field="actions", value=TAU)
        object.__setattr__(self, "actions", actions)


@dataclass(frozen=True, eq=False)
class Var(Formula):
    name: str

    @cached_property
    def free_variables(self) -> FrozenSet[str]:
        return frozenset((self.name,))


@dataclass(frozen=True, eq=False)
class Mu(Formula):
    var: str
    body: Formula

    def children(self) -> Tuple[Formula, ...]:
        return (self.body,)

    def rebuild(self, children: Sequence[Formula]) -> Formula:
        return Mu(self.var, children[0])

    @cached_property
    def free_variables(self) -> FrozenSet[str]:
        return self.body.free_variables - {self.var}

    @cached_property
    def is_fixpoint_free(self) -> bool:
        return False


@dataclass(frozen=True, eq=False)
class Nu(Formula):
    var: str
    body: Formula

    def children(self) -> Tuple[Formula, ...]:
        return (self.body,)

    def rebuild(self, children: Sequence[Formula]) -> Formula:
        return Nu(self.var, children[0])

    @cached_property
    def free_variables(self) -> FrozenSet[str]:
        return self.body.free_variables - {self.var}

    @cached_property
    def is_fixpoint_free(self) -> bool:
        return False


TRUE: Formula = Conj(())
FALSE: Formula = Disj(())

Binder = (Mu, Nu)


def conjoin(items: Iterable[Formula]) -> Formula:
    """Conjunction that collapses the one-element case."""
    items = tuple(items)
    if len(items) == 1:
        return items[0]
    return Conj(items)


def fresh_name(base: str, avoid: Iterable[str]) -> str:
    taken = set(avoid)
    index = 1
    while f"{base}_{index}" in taken:
        index += 1
    return f"{base}_{index}"


def substitute(formula: Formula, name: str, replacement: Formula) -> Formula:
    """Capture-avoiding formula[replacement/name], sharing untouched subterms."""
    memo: Dict[Formula, Formula] = {}
    replacement_free = replacement.free_variables

    def go(node: Formula) -> Formula:
        if name not in node.free_variables:
            return node
        cached = memo.get(node)
        if cached is not None:
            return cached
        if isinstance(node, Var):
            result = replacement
        elif isinstance(node, Binder):
            binder = type(node)
            if node.var in replacement_free:
                renamed = fresh_name(node.var, replacement_free | node.body.free_variables | {name})
                body = substitute(node.body, node.var, Var(renamed))
                result = binder(renamed, go(body))
            else:
                result = binder(node.var, go(node.body))
        else:
            result = node.rebuild([go(child) for child in node.children()])
        memo[node] = result
        return result

    return go(formula)


def check_polarity(formula: Formula) -> None:
    """Raise ValidationError when a fixpoint variable occurs under an odd number of negations."""
    checked: Set[Tuple[int, FrozenSet[Tuple[str, int]]]] = set()

    def go(node: Formula, negations: int, bound: Dict[str, int]) -> None:
        key = (id(node), frozenset((v, (negations - d) % 2) for v, d in bound.items()))
        if key in checked:
            return
        checked.add(key)
        if isinstance(node, Var):
            if node.name in bound and (negations - bound[node.name]) % 2:
                raise ValidationError(f"variable {node.name} occurs negatively in its fixpoint body",
                                      field="polarity", value=node.name)
            return
        if isinstance(node, Binder):
            go(node.body, negations, {**bound, node.var: negations})
            return
        step = 1 if isinstance(node, Neg) else 0
        for child in node.children():
            go(child, negations + step, bound)

    go(formula, 0, {})


def formula_size(formula: Formula) -> int:
    """Number of distinct subformulae (DAG size)."""
    return sum(1 for _ in formula.walk())


_ALL_CONSTRUCTORS: FrozenSet[Type[Formula]] = frozenset(
    {Conj, Disj, Neg, Diamond, Box, OPlus, OPlusW, Down, Var, Mu, Nu}
)


@dataclass(frozen=True)
class FragmentSpec:
    """Constructors admitted by the logic fragment that characterises a relation kind."""
    kind: RelationKind
    allowed: FrozenSet[Type[Formula]]

    @classmethod
    def for_kind(cls, kind: RelationKind) -> "FragmentSpec":
        allowed = set(_ALL_CONSTRUCTORS)
        if not kind.is_bisimulation:
            allowed -= {Neg, Box}
        if kind.is_state_distribution:
            allowed.discard(Down)
        if kind == RelationKind.FAILURE_SIM:
            allowed.add(Ref)
        return cls(kind=kind, allowed=frozenset(allowed))

    def violation(self, formula: Formula) -> Optional[Formula]:
        """First subterm (pre-order) whose constructor is not allowed, or None."""
        for node in formula.walk():
            if type(node) not in self.allowed:
                return node
        return None

    def admits(self, formula: Formula) -> bool:
        return self.violation(formula) is None

    @property
    def constructor_names(self) -> List[str]:
        return sorted(c.__name__ for c in self.allowed)


@dataclass(frozen=True)
class EquationSystem:
    """Ordered equations X_i = φ_i with fixpoint-free bodies; the first variable is the root."""
    equations: Tuple[Tuple[str, Formula], ...]

    def __post_init__(self) -> None:
        equations = tuple((name, body) for name, body in self.equations)
        names = [name for name, _ in equations]
        if not names:
            raise ValidationError("an equation system needs at least one equation", field="equations")
        if len(set(names)) != len(names):
            duplicate = next(n for n in names if names.count(n) > 1)
            raise ValidationError(f"variable {duplicate} defined twice", field="equations", value=duplicate)
        declared = set(names)
        for name, body in equations:
            if not body.is_fixpoint_free:
                raise ValidationError(f"body of {name} contains a fixpoint binder", field=name)
            unknown = body.free_variables - declared
            if unknown:
                raise ValidationError(f"body of {name} mentions undefined {sorted(unknown)[0]}",
                                      field=name, value=sorted(unknown)[0])
        object.__setattr__(self, "equations", equations)

    @property
    def variables(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.equations)

    @property
    def root(self) -> str:
        return self.equations[0][0]

    def body(self, name: str) -> Formula:
        for variable, body in self.equations:
            if variable == name:
                return body
        raise ValidationError(f"no equation for {name}", field="variable", value=name)

    def __contains__(self, name: object) -> bool:
        return any(variable == name for variable, _ in self.equations)

    def map_bodies(self, func: Callable[[str, Formula], Formula]) -> "EquationSystem":
        return EquationSystem(tuple((name, func(name, body)) for name, body in self.equations))

    def __len__(self) -> int:
        return len(self.equations)
