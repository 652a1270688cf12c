"""Lifted strong transitions and weak transitions of a pLTS.

Strong successor sets of a distribution are Minkowski mixtures of the
per-state successor hulls. Weak transitions go through the internal
closure ``P(s) = {Θ : δ(s) ⇒τ̂ Θ}``, computed once per state by a
generator worklist and cached per system in a :class:`WeakTransitionTable`.
"""

import logging
import threading
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

from ..models.dist import Dist
from ..models.plts import PLTS, TAU, refusers
from ..models.schemas import Semantics
from ..utils.cache import MemoryCache
from ..utils.config import get_cache_config, get_solver_config
from ..utils.error_handling import LimitExceededError, ValidationError
from .polytope import EMPTY, Polytope, mix

logger = logging.getLogger("probmu.transitions")


def state_successors(plts: PLTS, state: str, action: str, hatted: bool = False) -> Polytope:
    """Hull of the a-targets of one state; the hatted internal step may also stay put."""
    targets = list(plts.targets(state, action))
    if hatted and action == TAU:
        targets.append(Dist.point(state))
    return Polytope(targets)


def strong_successors(plts: PLTS, dist: Dist, action: str, hatted: bool = False) -> Polytope:
    """Generators of {Θ : Δ →a Θ} (or Δ →τ̂ Θ when hatted); empty when some support state is stuck."""
    plts.check_dist(dist)
    return mix([(weight, state_successors(plts, state, action, hatted)) for state, weight in dist])


class WeakTransitionTable:
    """Internal closures and weak successor polytopes of one divergence-free pLTS.

    Entries are computed on first use and memoised; once filled an entry
    never changes, so a table may be shared between threads.
    """

    def __init__(self, plts: PLTS, max_iterations: Optional[int] = None):
        plts.require_divergence_free("weak transitions")
        self.plts = plts
        self.max_iterations = max_iterations or get_solver_config().max_iterations
        self._closure: Dict[str, Polytope] = {}
        self._weak: Dict[Tuple[str, str], Polytope] = {}
        self._after: Dict[Tuple[str, str], Polytope] = {}
        self._lock = threading.RLock()

    def _iteration_cap(self) -> int:
        branching = max((len(self.plts.targets(s, TAU)) for s in self.plts.states), default=0) + 1
        exponent = len(self.plts.states) * branching
        if exponent >= 63:
            return self.max_iterations
        return min(2 ** exponent, self.max_iterations)

    def tau_closure(self, state: str) -> Polytope:
        """Generators of {Θ : δ(state) ⇒τ̂ Θ}; always contains δ(state)."""
        with self._lock:
            cached = self._closure.get(state)
            if cached is None:
                cached = self._compute_closure(state)
                self._closure[state] = cached
            return cached

    def _compute_closure(self, state: str) -> Polytope:
        start = self.plts.point(state)
        generators: List[Dist] = [start]
        worklist: List[Dist] = [start]
        cap = self._iteration_cap()
        iterations = 0
        while worklist:
            iterations += 1
            if iterations > cap:
                raise LimitExceededError(
                    f"internal closure of '{state}' did not stabilise within {cap} iterations",
                    limit="max_iterations", value=cap)
            current = worklist.pop(0)
            step = mix([(weight, state_successors(self.plts, v, TAU, hatted=True)) for v, weight in current])
            for candidate in step.generators:
                if candidate in generators or Polytope(generators).contains(candidate):
                    continue
                generators.append(candidate)
                worklist.append(candidate)
        closure = Polytope(generators).pruned()
        logger.debug("closure of %s: %d generators after %d iterations", state, len(closure), iterations)
        return closure

    def weak_tau_polytope(self, state: str) -> Polytope:
        return self.tau_closure(state)

    def _after_action(self, state: str, action: str) -> Polytope:
        """Hull over state --a--> Δ' of the internal closure of Δ'."""
        key = (state, action)
        cached = self._after.get(key)
        if cached is None:
            parts = [mix([(w, self.tau_closure(x)) for x, w in target])
                     for target in self.plts.targets(state, action)]
            generators: List[Dist] = []
            for part in parts:
                generators.extend(part.generators)
            cached = Polytope(generators).pruned() if generators else EMPTY
            self._after[key] = cached
        return cached

    def weak(self, state: str, action: str) -> Polytope:
        """Generators of {Θ : δ(state) ⇒â Θ}; for tau this is the internal closure."""
        if action == TAU:
            return self.tau_closure(state)
        with self._lock:
            key = (state, action)
            cached = self._weak.get(key)
            if cached is not None:
                return cached
            generators: List[Dist] = []
            for start in self.tau_closure(state).generators:
                if any(not self.plts.targets(v, action) for v in start.states):
                    continue
                step = mix([(w, self._after_action(v, action)) for v, w in start])
                generators.extend(step.generators)
            cached = Polytope(generators).pruned() if generators else EMPTY
            self._weak[key] = cached
            logger.debug("weak %s-successors of %s: %d generators", action, state, len(cached))
            return cached

    def successors(self, dist: Dist, action: str) -> Polytope:
        """Generators of the weak a-successors of a distribution."""
        self.plts.check_dist(dist)
        return mix([(weight, self.weak(state, action)) for state, weight in dist])

    def refusal_reachable(self, dist: Dist, actions: Iterable[str]) -> bool:
        """Whether internal moves alone can bring dist to a distribution refusing actions."""
        actions = frozenset(actions)
        if TAU in actions:
            raise ValidationError("refusal sets range over external actions only", field="actions", value=TAU)
        allowed = refusers(self.plts, actions)
        return all(
            any(g.support <= allowed for g in self.tau_closure(state).generators)
            for state in dist.states
        )


_tables: Optional[MemoryCache] = None
_tables_lock = threading.Lock()


def weak_table_cache() -> MemoryCache:
    """The digest-keyed table cache, sized from the current cache settings."""
    global _tables
    with _tables_lock:
        max_tables = get_cache_config().max_tables
        if _tables is None or _tables.max_size != max_tables:
            _tables = MemoryCache(max_size=max_tables)
        return _tables


def get_weak_table(plts: PLTS) -> WeakTransitionTable:
    """Weak transition table for plts, shared through the digest-keyed cache."""
    if not get_cache_config().enabled:
        return WeakTransitionTable(plts)
    return weak_table_cache().get_or_create(plts.digest, lambda: WeakTransitionTable(plts))


def clear_weak_tables() -> None:
    global _tables
    with _tables_lock:
        _tables = None


def weak_tau_polytope(plts: PLTS, state: str) -> Polytope:
    return get_weak_table(plts).tau_closure(state)


def weak_successors(plts: PLTS, dist: Dist, action: str) -> Polytope:
    return get_weak_table(plts).successors(dist, action)


def refusal_reachable(plts: PLTS, dist: Dist, actions: Iterable[str]) -> bool:
    return get_weak_table(plts).refusal_reachable(dist, actions)


def successors(plts: PLTS, dist: Dist, action: str, semantics: Semantics) -> Polytope:
    """Strong (non-hatted) or weak successors, as the semantics asks."""
    if semantics == Semantics.WEAK:
        return weak_successors(plts, dist, action)
    return strong_successors(plts, dist, action)


def state_polytope(plts: PLTS, state: str, action: str, semantics: Semantics) -> Polytope:
    """Successors of δ(state) under the semantics."""
    if semantics == Semantics.WEAK:
        return get_weak_table(plts).weak(state, action)
    return Polytope(plts.targets(state, action))


def refusal_holds(plts: PLTS, dist: Dist, actions: Iterable[str], semantics: Semantics) -> bool:
    """ref(A) under the semantics; strongly, dist itself must refuse."""
    actions = frozenset(actions)
    if semantics == Semantics.WEAK:
        return refusal_reachable(plts, dist, actions)
    allowed: FrozenSet[str] = refusers(plts, actions)
    return dist.support <= allowed
