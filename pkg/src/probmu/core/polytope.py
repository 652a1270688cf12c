"""Convex sets of distributions in generator representation."""

from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple

from ..models.dist import Dist, dist_sort_key, weighted_sum
from ..utils.error_handling import ValidationError
from ..utils.feasibility import LinearSystem


def hull_coefficients(generators: Sequence[Dist], target: Dist) -> Optional[List[Fraction]]:
    """Convex weights λ with Σ λ_i·g_i = target, or None when target is outside the hull."""
    if not generators:
        return None
    for index, generator in enumerate(generators):
        if generator == target:
            return [Fraction(int(i == index)) for i in range(len(generators))]
    candidates = [i for i, g in enumerate(generators) if g.support <= target.support]
    if not candidates:
        return None
    system = LinearSystem("hull-membership")
    system.add_equality({i: 1 for i in candidates}, 1)
    for state in sorted(target.support):
        system.add_equality({i: generators[i][state] for i in candidates}, target[state])
    solution = system.solve()
    if solution is None:
        return None
    return [solution.get(i, Fraction(0)) for i in range(len(generators))]


class Polytope:
    """The convex hull of finitely many distributions.

    Generators are kept deduplicated and in canonical order. An empty
    generator list stands for the empty set, which is how a missing
    external move is reported.
    """

    __slots__ = ("generators",)

    def __init__(self, generators: Iterable[Dist] = ()):
        self.generators: Tuple[Dist, ...] = tuple(sorted(set(generators), key=dist_sort_key))

    @classmethod
    def point(cls, dist: Dist) -> "Polytope":
        return cls((dist,))

    @property
    def is_empty(self) -> bool:
        return not self.generators

    def __len__(self) -> int:
        return len(self.generators)

    def __iter__(self):
        return iter(self.generators)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Polytope) and self.generators == other.generators

    def __hash__(self) -> int:
        return hash(self.generators)

    def __repr__(self) -> str:
        return "Polytope(" + "; ".join(g.format() for g in self.generators) + ")"

    def contains(self, dist: Dist) -> bool:
        return hull_coefficients(self.generators, dist) is not None

    def __contains__(self, dist: object) -> bool:
        return isinstance(dist, Dist) and self.contains(dist)

    def coefficients(self, dist: Dist) -> Optional[List[Fraction]]:
        return hull_coefficients(self.generators, dist)

    def pruned(self) -> "Polytope":
        """Drop generators lying in the hull of the remaining ones; the set is unchanged."""
        kept = list(self.generators)
        index = len(kept) - 1
        while index >= 0 and len(kept) > 1:
            others = kept[:index] + kept[index + 1:]
            if hull_coefficients(others, kept[index]) is not None:
                kept = others
            index -= 1
        return Polytope(kept)

    def union(self, other: "Polytope") -> "Polytope":
        """Convex hull of the union."""
        return Polytope(self.generators + other.generators)

    def mix(self, weight: Fraction, other: "Polytope") -> "Polytope":
        """(1 - weight)·self + weight·other as a Minkowski combination."""
        return mix([(1 - Fraction(weight), self), (Fraction(weight), other)])

    def sample_points(self) -> List[Dist]:
        """Generators plus the barycentre, for property checks."""
        points = list(self.generators)
        if len(points) > 1:
            share = Fraction(1, len(points))
            points.append(Dist.of(weighted_sum((share, g) for g in self.generators)))
        return points


EMPTY = Polytope()


def mix(parts: Sequence[Tuple[Fraction, Polytope]], prune: bool = True) -> Polytope:
    """Σ p_i·P_i for nonnegative weights summing to one.

    Built pairwise, pruning after each product step. The result is empty
    when any part with positive weight is empty.
    """
    accumulated: Optional[List[Dist]] = None
    total = Fraction(0)
    for weight, polytope in parts:
        weight = Fraction(weight)
        if not weight:
            continue
        if polytope.is_empty:
            return EMPTY
        grown = total + weight
        if accumulated is None:
            accumulated = list(polytope.generators)
        else:
            keep, add = total / grown, weight / grown
            accumulated = [Dist.of(weighted_sum([(keep, x), (add, y)]))
                           for x in accumulated for y in polytope.generators]
            if prune:
                accumulated = list(Polytope(accumulated).pruned().generators)
        total = grown
    if accumulated is None:
        return EMPTY
    if total != 1:
        raise ValidationError(f"mixture weights sum to {total}, expected 1", field="weights", value=total)
    return Polytope(accumulated)
