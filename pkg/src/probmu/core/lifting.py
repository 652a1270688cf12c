"""Lifting relations from states to distributions.

Δ (lift R) Θ holds when some weight function moves the mass of Δ onto
Θ along pairs of R. For relations between states this is a transportation
problem, decided here as a maximum flow over exact rationals; for
relations between states and convex sets of distributions it becomes a
small linear feasibility problem.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Container, Dict, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
from networkx.algorithms.flow import edmonds_karp

from ..models.dist import Dist, weighted_sum
from ..models.schemas import StateRelation, WeightFunction
from ..utils.error_handling import ValidationError
from ..utils.feasibility import LinearSystem
from .polytope import EMPTY, Polytope

logger = logging.getLogger("probmu.lifting")

Pairs = Container[Tuple[str, str]]

_SOURCE = "src"
_SINK = "snk"


def transport(pairs: Pairs, delta: Dist, theta: Dist) -> Optional[WeightFunction]:
    """Weight function for Δ lift R Θ with R given as any pair container, or None."""
    edges = [(u, v) for u in delta.states for v in theta.states if (u, v) in pairs]
    covered_left = {u for u, _ in edges}
    covered_right = {v for _, v in edges}
    if covered_left != delta.support or covered_right != theta.support:
        return None

    # capacities are the weights scaled by the common denominator, so the flow is integral
    scale = math.lcm(*(weight.denominator for _, weight in (*delta, *theta)))
    graph = nx.DiGraph()
    graph.add_node(_SOURCE)
    for state, weight in delta:
        graph.add_edge(_SOURCE, ("L", state), capacity=int(weight * scale))
    for state, weight in theta:
        graph.add_edge(("R", state), _SINK, capacity=int(weight * scale))
    for u, v in edges:
        # no capacity attribute: unbounded
        graph.add_edge(("L", u), ("R", v))

    value, flow = nx.maximum_flow(graph, _SOURCE, _SINK, flow_func=edmonds_karp)
    if value != scale:
        return None
    entries: Dict[Tuple[str, str], Fraction] = {}
    for u, v in edges:
        amount = Fraction(flow[("L", u)].get(("R", v), 0), scale)
        if amount > 0:
            entries[(u, v)] = amount
    return WeightFunction(entries=entries)


def _check_spaces(relation: StateRelation, delta: Dist, theta: Dist) -> None:
    outside = delta.support - set(relation.left_space)
    if outside:
        raise ValidationError(f"state '{sorted(outside)[0]}' outside the relation's left space",
                              field="delta", value=sorted(outside)[0])
    outside = theta.support - set(relation.right_space)
    if outside:
        raise ValidationError(f"state '{sorted(outside)[0]}' outside the relation's right space",
                              field="theta", value=sorted(outside)[0])


def lift_check(relation: StateRelation, delta: Dist, theta: Dist) -> Optional[WeightFunction]:
    """Return a weight function witnessing Δ (lift R) Θ, or None when there is none."""
    _check_spaces(relation, delta, theta)
    witness = transport(relation.pairs, delta, theta)
    if witness is not None:
        validate_witness(relation.pairs, delta, theta, witness)
    return witness


def lift_check_equivalence(relation: StateRelation, delta: Dist, theta: Dist) -> bool:
    """Δ lift R Θ for an equivalence R: every class carries the same mass."""
    if not relation.is_equivalence():
        raise ValidationError("relation is not an equivalence", field="relation")
    _check_spaces(relation, delta, theta)
    return all(delta.mass(members) == theta.mass(members) for members in relation.classes())


def validate_witness(pairs: Pairs, delta: Dist, theta: Dist, witness: WeightFunction) -> None:
    """Raise ValidationError unless witness is a weight function for (Δ, Θ) along pairs."""
    for (u, v), amount in witness.entries.items():
        if amount <= 0:
            raise ValidationError(f"non-positive weight on ({u}, {v})", field="witness", value=amount)
        if (u, v) not in pairs:
            raise ValidationError(f"weight on unrelated pair ({u}, {v})", field="witness", value=(u, v))
    left = {u for u, _ in witness.entries} | delta.support
    right = {v for _, v in witness.entries} | theta.support
    for state in left:
        if witness.row_sum(state) != delta[state]:
            raise ValidationError(f"row sum of '{state}' is not {delta[state]}", field="witness", value=state)
    for state in right:
        if witness.column_sum(state) != theta[state]:
            raise ValidationError(f"column sum of '{state}' is not {theta[state]}", field="witness",
                                  value=state)


def decompose(delta: Dist, theta: Dist, witness: WeightFunction,
              relation: Optional[StateRelation] = None) -> List[Tuple[Fraction, str, str]]:
    """Paired decomposition Σ p_i δ(s_i) = Δ, Σ p_i δ(t_i) = Θ read off a weight function."""
    pairs = relation.pairs if relation is not None else set(witness.entries)
    validate_witness(pairs, delta, theta, witness)
    return [(amount, u, v) for u, v, amount in witness.sorted_entries()]


def split_target(relation: StateRelation, components: Sequence[Tuple[Fraction, Dist]], theta: Dist,
                 witness: WeightFunction) -> List[Tuple[Dist, WeightFunction]]:
    """Split Θ along Δ = Σ p_i·Δ_i so that Δ_i lift R Θ_i and Θ = Σ p_i·Θ_i.

    The witness for Δ lift R Θ is shared out in proportion to each
    component's share of every source state.
    """
    delta = Dist.of(weighted_sum((p, component) for p, component in components))
    validate_witness(relation.pairs, delta, theta, witness)
    result = []
    for p, component in components:
        entries: Dict[Tuple[str, str], Fraction] = {}
        for (u, v), amount in witness.entries.items():
            share = component[u] / delta[u] if delta[u] else Fraction(0)
            if share:
                entries[(u, v)] = entries.get((u, v), Fraction(0)) + share * amount
        target = Dist.of(weighted_sum((amount, {v: 1}) for (_, v), amount in entries.items()))
        part = WeightFunction(entries=entries)
        validate_witness(relation.pairs, component, target, part)
        result.append((target, part))
    return result


@dataclass
class StateDistRelation:
    """A relation from states to convex sets of distributions (one polytope per state)."""
    per_state: Dict[str, Polytope] = field(default_factory=dict)

    def related(self, state: str) -> Polytope:
        return self.per_state.get(state, EMPTY)

    def contains(self, state: str, dist: Dist) -> bool:
        return self.related(state).contains(dist)


def split_into_hulls(per_state: Mapping[str, Polytope], delta: Dist,
                     theta: Dist) -> Optional[Dict[str, Dist]]:
    """Θ_s in per_state(s) for each s in ⌈Δ⌉ with Θ = Σ Δ(s)·Θ_s, or None."""
    system = LinearSystem("lift-sd")
    usable: Dict[str, List[Dist]] = {}
    for state, weight in delta:
        generators = [g for g in per_state.get(state, EMPTY).generators if g.support <= theta.support]
        if not generators:
            return None
        usable[state] = generators
        system.add_equality({(state, k): 1 for k in range(len(generators))}, weight)
    for target in theta.states:
        terms = {(state, k): g[target] for state, gens in usable.items() for k, g in enumerate(gens)}
        system.add_equality(terms, theta[target])
    solution = system.solve()
    if solution is None:
        return None
    parts = {}
    for state, weight in delta:
        mixture = weighted_sum((solution[(state, k)] / weight, g) for k, g in enumerate(usable[state]))
        parts[state] = Dist.of(mixture)
    return parts


def lift_check_sd(relation: StateDistRelation, delta: Dist, theta: Dist) -> bool:
    """Θ = Σ Δ(s)·Θ_s with Θ_s in the convex set related to s."""
    return split_into_hulls(relation.per_state, delta, theta) is not None


def lift_into_hull(pairs: Pairs, delta: Dist,
                   generators: Sequence[Dist]) -> Optional[Tuple[Dist, WeightFunction]]:
    """Some Θ in the hull of generators with Δ lift R Θ, together with the weight function.

    One joint feasibility problem over the convex coefficients of the
    generators and the weight-function entries; a single generator is a
    plain transportation problem.
    """
    if not generators:
        return None
    if len(generators) == 1:
        witness = transport(pairs, delta, generators[0])
        return None if witness is None else (generators[0], witness)

    targets = sorted(set().union(*(g.support for g in generators)))
    edges = [(u, v) for u in delta.states for v in targets if (u, v) in pairs]
    if {u for u, _ in edges} != delta.support:
        return None

    system = LinearSystem("lift-into-hull")
    system.add_equality({("lambda", j): 1 for j in range(len(generators))}, 1)
    for state, weight in delta:
        system.add_equality({("w", u, v): 1 for u, v in edges if u == state}, weight)
    for target in targets:
        terms: Dict = {("w", u, v): 1 for u, v in edges if v == target}
        for j, generator in enumerate(generators):
            if generator[target]:
                terms[("lambda", j)] = -generator[target]
        system.add_equality(terms, 0)
    solution = system.solve()
    if solution is None:
        return None
    theta = Dist.of(weighted_sum((solution[("lambda", j)], g) for j, g in enumerate(generators)))
    entries = {(u, v): solution[("w", u, v)] for u, v in edges if solution[("w", u, v)] > 0}
    return theta, WeightFunction(entries=entries)
