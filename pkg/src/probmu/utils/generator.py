"""Seeded random systems, distributions and formulae for property sweeps."""

import random
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from ..models.dist import Dist
from ..models.formula import FALSE, TRUE, Box, Conj, Diamond, Disj, Down, Formula, Neg, OPlusW
from ..models.plts import PLTS, TAU
from .config import get_sampling_config


def random_weights(rng: random.Random, count: int, denominator: int) -> List[Fraction]:
    """count positive rationals with a common denominator summing to one."""
    total = max(denominator, count)
    cuts = sorted(rng.sample(range(1, total), count - 1)) if count > 1 else []
    bounds = [0] + cuts + [total]
    return [Fraction(bounds[i + 1] - bounds[i], total) for i in range(count)]


def random_distribution(rng: random.Random, states: Sequence[str], max_support: int = 2,
                        denominator: Optional[int] = None) -> Dist:
    denominator = denominator or get_sampling_config().denominator_bound
    size = rng.randint(1, max(1, min(max_support, len(states))))
    support = sorted(rng.sample(list(states), size))
    return Dist.of(dict(zip(support, random_weights(rng, size, denominator))))


def random_plts(seed: int, states: int = 4, actions: int = 2, max_transitions: int = 2, max_support: int = 2,
                denominator: Optional[int] = None, tau_ratio: float = 0.3, divergence_free: bool = True) -> PLTS:
    """A reproducible random system over states s0..s{n-1} and actions a, b, ...

    With divergence_free set, internal moves only lead to later states, so
    no cycle of internal steps can arise.
    """
    rng = random.Random(seed)
    names = [f"s{i}" for i in range(states)]
    alphabet = [chr(ord("a") + i) for i in range(actions)]
    transitions: List[Tuple[str, str, Dist]] = []
    for index, state in enumerate(names):
        for _ in range(rng.randint(0, max_transitions)):
            later = names[index + 1:]
            if rng.random() < tau_ratio and (later or not divergence_free):
                pool = later if divergence_free else names
                transitions.append((state, TAU, random_distribution(rng, pool, max_support, denominator)))
            elif alphabet:
                action = rng.choice(alphabet)
                transitions.append((state, action, random_distribution(rng, names, max_support, denominator)))
    return PLTS.build(names, transitions, alphabet=alphabet)


def sample_distributions(plts: PLTS, count: Optional[int] = None, seed: Optional[int] = None,
                         max_support: int = 3, denominator: Optional[int] = None) -> List[Dist]:
    """Distinct non-point distributions over the states of plts, in draw order."""
    sampling = get_sampling_config()
    count = sampling.samples if count is None else count
    rng = random.Random(sampling.seed if seed is None else seed)
    if len(plts.states) < 2:
        return []
    found: List[Dist] = []
    attempts = 0
    while len(found) < count and attempts < count * 20:
        attempts += 1
        dist = random_distribution(rng, plts.states, max(2, max_support), denominator)
        if not dist.is_point and dist not in found:
            found.append(dist)
    return found


def random_formula(rng: random.Random, actions: Sequence[str], depth: int = 3, negation: bool = True,
                   boxes: bool = True) -> Formula:
    """A closed formula that stays inside the decidable fragment.

    Modal bodies are ↓-guarded choices, so diamonds encode linearly and
    box bodies are convex.
    """
    if depth <= 0 or not actions:
        return rng.choice([TRUE, FALSE])
    shapes = ["and", "or", "diamond", "leaf"]
    if negation:
        shapes.append("not")
    if boxes:
        shapes.append("box")
    shape = rng.choice(shapes)
    if shape == "leaf":
        return rng.choice([TRUE, FALSE])
    if shape == "and":
        return Conj((random_formula(rng, actions, depth - 1, negation, boxes),
                     random_formula(rng, actions, depth - 1, negation, boxes)))
    if shape == "or":
        return Disj((random_formula(rng, actions, depth - 1, negation, boxes),
                     random_formula(rng, actions, depth - 1, negation, boxes)))
    if shape == "not":
        return Neg(random_formula(rng, actions, depth - 1, negation, boxes))
    body = _guarded(rng, actions, depth - 1, negation, boxes)
    action = rng.choice(list(actions))
    return Diamond(action, body) if shape == "diamond" else Box(action, body)


def _guarded(rng: random.Random, actions: Sequence[str], depth: int, negation: bool, boxes: bool) -> Formula:
    if rng.random() < 0.5:
        return Down(random_formula(rng, actions, depth, negation, boxes))
    p = Fraction(rng.randint(1, 3), 4)
    return OPlusW(((p, Down(random_formula(rng, actions, depth, negation, boxes))),
                   (1 - p, Down(random_formula(rng, actions, depth, negation, boxes)))))
