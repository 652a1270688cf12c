"""Finite-support probability distributions with exact rational weights."""

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, Iterator, Mapping, Sequence, Tuple, Union

from ..utils.error_handling import ValidationError

Number = Union[int, Fraction]


@dataclass(frozen=True)
class Dist:
    """A probability distribution over state names.

    Entries are kept sorted by state name with zero weights dropped, so two
    distributions are equal exactly when they assign the same masses.
    Build instances with :meth:`of` or :meth:`point`.
    """

    items: Tuple[Tuple[str, Fraction], ...]

    def __post_init__(self) -> None:
        total = sum((weight for _, weight in self.items), Fraction(0))
        if total != 1:
            raise ValidationError(f"weights sum to {total}, expected 1", field="weights", value=total)
        for state, weight in self.items:
            if weight <= 0 or weight > 1:
                raise ValidationError(f"weight {weight} of '{state}' outside (0, 1]", field=state, value=weight)

    @classmethod
    def of(cls, weights: Mapping[str, Number]) -> "Dist":
        """Canonical distribution from a state -> weight mapping."""
        cleaned: Dict[str, Fraction] = {}
        for state, weight in weights.items():
            weight = Fraction(weight)
            if weight < 0:
                raise ValidationError(f"negative weight {weight} for '{state}'", field=state, value=weight)
            if weight:
                cleaned[state] = cleaned.get(state, Fraction(0)) + weight
        return cls(tuple(sorted(cleaned.items())))

    @classmethod
    def point(cls, state: str) -> "Dist":
        """The point distribution δ(state)."""
        return cls(((state, Fraction(1)),))

    @classmethod
    def uniform(cls, states: Iterable[str]) -> "Dist":
        chosen = sorted(set(states))
        if not chosen:
            raise ValidationError("uniform distribution over no states", field="states")
        share = Fraction(1, len(chosen))
        return cls(tuple((state, share) for state in chosen))

    @cached_property
    def support(self) -> FrozenSet[str]:
        return frozenset(state for state, _ in self.items)

    @property
    def states(self) -> Tuple[str, ...]:
        """Support in canonical (sorted) order."""
        return tuple(state for state, _ in self.items)

    @property
    def is_point(self) -> bool:
        return len(self.items) == 1

    def weight(self, state: str) -> Fraction:
        for name, weight in self.items:
            if name == state:
                return weight
        return Fraction(0)

    def __getitem__(self, state: str) -> Fraction:
        return self.weight(state)

    def __iter__(self) -> Iterator[Tuple[str, Fraction]]:
        return iter(self.items)

    def __len__(self) -> int:
        return len(self.items)

    def as_dict(self) -> Dict[str, Fraction]:
        return dict(self.items)

    def mass(self, states: Iterable[str]) -> Fraction:
        """Total probability of a set of states."""
        chosen = set(states)
        return sum((weight for state, weight in self.items if state in chosen), Fraction(0))

    def format(self, separator: str = " + ") -> str:
        """Render as ``1/2 v + 1/2 w``; a point distribution renders as its state name."""
        if self.is_point:
            return self.items[0][0]
        return separator.join(f"{weight} {state}" for state, weight in self.items)

    def __str__(self) -> str:
        return self.format()

    def __repr__(self) -> str:
        return f"Dist({self.format()})"


def weighted_sum(pairs: Iterable[Tuple[Number, Mapping[str, Number]]]) -> Dict[str, Fraction]:
    """Pointwise Σ p_i·m_i of weight mappings, without normalisation checks."""
    total: Dict[str, Fraction] = {}
    for weight, masses in pairs:
        weight = Fraction(weight)
        if not weight:
            continue
        items = masses.items if isinstance(masses, Dist) else masses.items()
        for state, mass in items:
            total[state] = total.get(state, Fraction(0)) + weight * mass
    return total


def convex_combine(pairs: Sequence[Tuple[Number, Dist]]) -> Dist:
    """Σ p_i·Δ_i for nonnegative weights summing to one."""
    weights = [Fraction(weight) for weight, _ in pairs]
    if any(weight < 0 for weight in weights):
        raise ValidationError("convex combination with a negative weight", field="weights")
    total = sum(weights, Fraction(0))
    if total != 1:
        raise ValidationError(f"convex weights sum to {total}, expected 1", field="weights", value=total)
    return Dist.of(weighted_sum((weight, dist.as_dict()) for weight, (_, dist) in zip(weights, pairs)))


def dist_sort_key(dist: Dist) -> Tuple[int, Tuple[Tuple[str, Fraction], ...]]:
    """Deterministic ordering: fewer support states first, then lexicographic."""
    return (len(dist.items), dist.items)
