"""Deciding Δ ⊨ φ for the probabilistic modal mu-calculus.

Greatest fixpoints are evaluated coinductively. A goal pairs a fixpoint
closure (a ``nu`` binder or an equation variable, together with the
bindings of its free variables) with a distribution. Goals start out
assumed true; passes over all live goals re-evaluate their bodies and
retract the ones that fail, until nothing changes and no new goal
appears.

Membership in probabilistic choices and diamonds reduces to exact linear
feasibility. A formula is *encodable* when the set it denotes can be
written as linear constraints on a scaled mass vector ``m = c·Γ``; the
encoder below produces those constraints. Variables that occur outside
``down`` denote the convex hull of the live candidates of their closure,
drawn from the same candidate universe the state-to-distribution solver
uses.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, Hashable, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

from ..models.dist import Dist, dist_sort_key
from ..models.formula import (
    FALSE, Box, Conj, Diamond, Disj, Down, EquationSystem, Formula, Mu, Neg, Nu, OPlus, OPlusW, Ref, Var,
    substitute,
)
from ..models.plts import PLTS
from ..models.schemas import PostFixpointReport, Semantics
from ..utils.config import get_solver_config
from ..utils.error_handling import FragmentError, LimitExceededError, ValidationError
from ..utils.feasibility import LinearSystem
from .polytope import Polytope
from .sd_relations import answer_generators, candidate_universe
from .transitions import refusal_holds, successors

logger = logging.getLogger("probmu.checker")


@dataclass(frozen=True)
class ExplicitPolytope:
    """An environment entry given by the generators of a convex set."""
    generators: Tuple[Dist, ...]

    def contains(self, dist: Dist) -> bool:
        return Polytope(self.generators).contains(dist)

    def members(self) -> Tuple[Dist, ...]:
        return self.generators


@dataclass(frozen=True)
class PointSet:
    """An environment entry given by finitely many distributions (not closed under mixing)."""
    points: FrozenSet[Dist]

    @classmethod
    def of(cls, points: Iterable[Dist]) -> "PointSet":
        return cls(frozenset(points))

    def contains(self, dist: Dist) -> bool:
        return dist in self.points

    def members(self) -> Tuple[Dist, ...]:
        return tuple(sorted(self.points, key=dist_sort_key))


@dataclass(frozen=True)
class TableRef:
    """An environment entry resolved through the coinductive goal table."""
    closure: int


SetRepr = Union[ExplicitPolytope, PointSet, TableRef]
Environment = Mapping[str, SetRepr]


@dataclass(frozen=True)
class _Closure:
    body: Formula
    env: Tuple[Tuple[str, SetRepr], ...]

    def environment(self) -> Dict[str, SetRepr]:
        return dict(self.env)


LinExpr = Dict[Hashable, Fraction]

_ONE = ("one",)


def _short(formula: Formula, limit: int = 120) -> str:
    text = str(formula)
    return text if len(text) <= limit else text[:limit - 3] + "..."


class _Encoding:
    """One linear system under construction."""

    def __init__(self, name: str):
        self.system = LinearSystem(name)
        self.system.fix(_ONE, 1)
        self._counter = 0

    def fresh(self, tag: str) -> Tuple:
        self._counter += 1
        return (tag, self._counter)

    def equal(self, left: LinExpr, right: LinExpr) -> None:
        terms: Dict[Hashable, Fraction] = dict(left)
        for key, value in right.items():
            terms[key] = terms.get(key, Fraction(0)) - value
        self.system.add_equality(terms, 0)

    def zero(self, expr: LinExpr) -> None:
        if expr:
            self.system.add_equality(expr, 0)

    def constant(self, value: Fraction) -> LinExpr:
        return {_ONE: Fraction(value)} if value else {}


class FormulaChecker:
    """Membership checker for one pLTS under one semantics.

    The goal table lives as long as the checker, so several queries
    against the same system share work.
    """

    def __init__(self, plts: PLTS, semantics: Semantics = Semantics.STRONG, queries: Iterable[Dist] = (),
                 max_goals: Optional[int] = None, mu_depth: Optional[int] = None,
                 universe: Optional[Sequence[Dist]] = None):
        if semantics == Semantics.WEAK:
            plts.require_divergence_free("weak semantics")
        config = get_solver_config()
        self.plts = plts
        self.semantics = semantics
        self.max_goals = max_goals or config.max_goals
        self.mu_depth = mu_depth or config.mu_unfold_depth
        self._queries = [plts.check_dist(q) for q in queries]
        self._universe: Optional[List[Dist]] = list(universe) if universe is not None else None
        self._universe_set: Set[Dist] = set(self._universe or ())
        self._closures: List[_Closure] = []
        self._closure_ids: Dict[Tuple, int] = {}
        self.goals: Dict[Tuple[int, Dist], bool] = {}
        self._open: Dict[Tuple[int, Dist], None] = {}
        self._moves: Dict[Tuple[Dist, str], Polytope] = {}
        self._closed_cache: Dict[Tuple[Formula, Dist], bool] = {}
        self._answers: Dict[Tuple[str, str], Tuple[Dist, ...]] = {}

    # -- candidates ---------------------------------------------------------

    def universe(self) -> List[Dist]:
        if self._universe is None:
            self._universe = candidate_universe(self.plts, self._queries, self.semantics)
            self._universe_set = set(self._universe)
        return self._universe

    def add_queries(self, dists: Iterable[Dist]) -> None:
        """Register query distributions before the universe is built."""
        for dist in dists:
            self._queries.append(self.plts.check_dist(dist))

    # -- closures and goals -------------------------------------------------

    def _intern(self, key: Tuple, closure: _Closure) -> int:
        existing = self._closure_ids.get(key)
        if existing is not None:
            return existing
        self._closures.append(closure)
        self._closure_ids[key] = len(self._closures) - 1
        return self._closure_ids[key]

    def _nu_closure(self, node: Nu, env: Environment) -> int:
        bindings = []
        for name in sorted(node.free_variables):
            if name not in env:
                raise ValidationError(f"free variable {name} is unbound", field="environment", value=name)
            bindings.append((name, env[name]))
        key = ("nu", node, tuple((name, _binding_key(value)) for name, value in bindings))
        existing = self._closure_ids.get(key)
        if existing is not None:
            return existing
        index = len(self._closures)
        closure = _Closure(node.body, tuple(bindings) + ((node.var, TableRef(index)),))
        return self._intern(key, closure)

    def equation_closures(self, system: EquationSystem) -> Dict[str, int]:
        """Closure ids of every variable of an equation system."""
        base = len(self._closures)
        tag = ("eq", id(system), system.equations)
        existing = self._closure_ids.get(tag + (system.root,))
        if existing is not None:
            return {name: self._closure_ids[tag + (name,)] for name in system.variables}
        refs = {name: TableRef(base + offset) for offset, name in enumerate(system.variables)}
        env = tuple(sorted(refs.items()))
        for name in system.variables:
            self._intern(tag + (name,), _Closure(system.body(name), env))
        return {name: ref.closure for name, ref in refs.items()}

    def _lookup(self, closure: int, dist: Dist) -> bool:
        key = (closure, dist)
        value = self.goals.get(key)
        if value is None:
            if len(self.goals) >= self.max_goals:
                raise LimitExceededError(f"coinductive goal table exceeded {self.max_goals} goals",
                                         limit="max_goals", value=self.max_goals)
            self.goals[key] = True
            self._open[key] = None
            value = True
        return value

    def _stabilise(self) -> None:
        """Retract open goals until the live ones form a post-fixpoint.

        A goal is open from its creation until a pass ends without retractions
        or new goals. Such a pass only consulted existing goals, so the values
        of every goal present at that point are final and later passes skip them.
        """
        passes = 0
        while self._open:
            passes += 1
            before = len(self.goals)
            changed = False
            for key in list(self._open):
                if not self.goals[key]:
                    continue
                closure = self._closures[key[0]]
                if not self._eval(closure.body, closure.environment(), key[1]):
                    self.goals[key] = False
                    changed = True
            if not changed and len(self.goals) == before:
                self._open.clear()
        if passes:
            logger.debug("goal table stable after %d passes: %d goals, %d live", passes, len(self.goals),
                         sum(1 for v in self.goals.values() if v))

    def _settle(self, evaluate) -> bool:
        """Run evaluate() against a stable goal table."""
        while True:
            self._stabilise()
            before = len(self.goals)
            result = evaluate()
            if len(self.goals) == before:
                return result

    # -- public queries -----------------------------------------------------

    def holds(self, formula: Formula, dist: Dist, env: Optional[Environment] = None) -> bool:
        """Δ ⊨ φ; free variables of φ must be bound by env."""
        self.plts.check_dist(dist)
        env = dict(env or {})
        unbound = formula.free_variables - set(env)
        if unbound:
            raise ValidationError(f"free variable {sorted(unbound)[0]} is unbound", field="environment",
                                  value=sorted(unbound)[0])
        if self._universe is None and dist not in self._queries:
            self._queries.append(dist)
        return self._settle(lambda: self._eval(formula, env, dist))

    def holds_many(self, formula: Formula, dists: Sequence[Dist],
                   env: Optional[Environment] = None) -> List[bool]:
        self.add_queries(dists)
        return [self.holds(formula, dist, env) for dist in dists]

    def nu_member(self, system: EquationSystem, variable: str, dist: Dist) -> bool:
        """Δ ∈ ν_E(X)."""
        self.plts.check_dist(dist)
        closures = self.equation_closures(system)
        if variable not in closures:
            raise ValidationError(f"no equation for {variable}", field="variable", value=variable)
        if self._universe is None and dist not in self._queries:
            self._queries.append(dist)
        return self._settle(lambda: self._member(TableRef(closures[variable]), dist))

    # -- concrete evaluation ------------------------------------------------

    def _eval(self, node: Formula, env: Dict[str, SetRepr], dist: Dist) -> bool:
        if isinstance(node, Conj):
            return all(self._eval(item, env, dist) for item in node.items)
        if isinstance(node, Disj):
            return any(self._eval(item, env, dist) for item in node.items)
        if isinstance(node, Neg):
            if not node.body.is_closed:
                raise FragmentError("negation is supported over closed subformulae only", _short(node))
            return not self._closed_truth(node.body, dist)
        if isinstance(node, Diamond):
            return self._eval_diamond(node, env, dist)
        if isinstance(node, Box):
            return self._eval_box(node, env, dist)
        if isinstance(node, Down):
            return all(self._eval(node.body, env, Dist.point(state)) for state in dist.states)
        if isinstance(node, Ref):
            return self._refuses(node.actions, dist)
        if isinstance(node, Var):
            return self._member(env[node.name], dist)
        if isinstance(node, Nu):
            return self._member(TableRef(self._nu_closure(node, env)), dist)
        if isinstance(node, Mu):
            return self._eval_mu(node, env, dist)
        if isinstance(node, (OPlus, OPlusW)):
            return self._feasible(node, env, dist)
        raise FragmentError(f"unsupported constructor {type(node).__name__}", _short(node))

    def _closed_truth(self, formula: Formula, dist: Dist) -> bool:
        key = (formula, dist)
        cached = self._closed_cache.get(key)
        if cached is None:
            nested = FormulaChecker(self.plts, self.semantics, queries=self._queries, max_goals=self.max_goals,
                                    mu_depth=self.mu_depth, universe=self._universe)
            cached = nested.holds(formula, dist)
            self._closed_cache[key] = cached
        return cached

    def _refuses(self, actions: Sequence[str], dist: Dist) -> bool:
        return refusal_holds(self.plts, dist, actions, self.semantics)

    def _successors(self, dist: Dist, action: str) -> Polytope:
        key = (dist, action)
        moves = self._moves.get(key)
        if moves is None:
            moves = self._moves[key] = successors(self.plts, dist, action, self.semantics)
        return moves

    def _eval_diamond(self, node: Diamond, env: Dict[str, SetRepr], dist: Dist) -> bool:
        body = node.body
        if isinstance(body, Disj) and body.items:
            return any(self._eval(Diamond(node.action, item), env, dist) for item in body.items)
        moves = self._successors(dist, node.action)
        if moves.is_empty:
            return False
        if self._encodable(body, env):
            return self._feasible(node, env, dist)
        if len(moves) == 1:
            return self._eval(body, env, moves.generators[0])
        raise FragmentError("diamond body is outside the decidable fragment", _short(body))

    def _eval_box(self, node: Box, env: Dict[str, SetRepr], dist: Dist) -> bool:
        moves = self._successors(dist, node.action)
        if len(moves) > 1 and not self._convex(node.body, env):
            raise FragmentError("box body must denote a convex set", _short(node.body))
        return all(self._eval(node.body, env, generator) for generator in moves.generators)

    def _eval_mu(self, node: Mu, env: Dict[str, SetRepr], dist: Dist) -> bool:
        if node.var not in node.body.free_variables:
            return self._eval(node.body, env, dist)
        approximant: Formula = FALSE
        for _ in range(self.mu_depth):
            approximant = substitute(node.body, node.var, approximant)
            if self._eval(approximant, env, dist):
                return True
        raise LimitExceededError(f"least fixpoint not reached within {self.mu_depth} unfoldings",
                                 limit="mu_unfold_depth", value=self.mu_depth)

    def _member(self, binding: SetRepr, dist: Dist) -> bool:
        if isinstance(binding, TableRef):
            if dist.is_point or dist in self._queries or dist in self._universe_set:
                if self._lookup(binding.closure, dist):
                    return True
            if dist.is_point:
                return False
            return self._feasible(Var("_"), {"_": binding}, dist)
        return binding.contains(dist)

    # -- fragment classification --------------------------------------------

    def _encodable(self, node: Formula, env: Mapping[str, SetRepr]) -> bool:
        if isinstance(node, Conj):
            return all(self._encodable(item, env) for item in node.items)
        if isinstance(node, Disj):
            return not node.items
        if isinstance(node, (Down, Ref, Nu)):
            return True
        if isinstance(node, Var):
            binding = env.get(node.name)
            return not (isinstance(binding, PointSet) and len(binding.points) > 1)
        if isinstance(node, Diamond):
            return self._encodable(node.body, env)
        if isinstance(node, (OPlus, OPlusW)):
            return all(self._encodable(child, env) for child in node.children())
        return False

    def _convex(self, node: Formula, env: Mapping[str, SetRepr]) -> bool:
        if self._encodable(node, env):
            return True
        if isinstance(node, Box):
            return self._convex(node.body, env)
        if isinstance(node, Conj):
            return all(self._convex(item, env) for item in node.items)
        return False

    # -- linear encoding ------------------------------------------------------

    def _feasible(self, node: Formula, env: Mapping[str, SetRepr], dist: Dist) -> bool:
        encoding = _Encoding("membership")
        mass = {state: encoding.constant(dist[state]) for state in self.plts.states}
        if not self._encode(encoding, node, env, mass, encoding.constant(Fraction(1))):
            return False
        return encoding.system.feasible()

    def _nonempty(self, node: Formula, env: Mapping[str, SetRepr]) -> bool:
        encoding = _Encoding("non-empty")
        mass: Dict[str, LinExpr] = {}
        for state in self.plts.states:
            mass[state] = {encoding.fresh("m"): Fraction(1)}
        encoding.system.add_equality({key: 1 for expr in mass.values() for key in expr}, 1)
        if not self._encode(encoding, node, env, mass, encoding.constant(Fraction(1))):
            return False
        return encoding.system.feasible()

    def _sum_is(self, encoding: _Encoding, mass: Mapping[str, LinExpr], scale: LinExpr) -> None:
        total: LinExpr = {}
        for expr in mass.values():
            for key, value in expr.items():
                total[key] = total.get(key, Fraction(0)) + value
        encoding.equal(total, scale)

    def _encode(self, encoding: _Encoding, node: Formula, env: Mapping[str, SetRepr],
                mass: Mapping[str, LinExpr], scale: LinExpr) -> bool:
        """Add constraints saying mass = scale·Γ for some Γ in [[node]]; False when trivially infeasible."""
        if isinstance(node, Conj):
            if not node.items:
                self._sum_is(encoding, mass, scale)
                return True
            return all(self._encode(encoding, item, env, mass, scale) for item in node.items)
        if isinstance(node, Disj) and not node.items:
            return False
        if isinstance(node, Down):
            for state in self.plts.states:
                if mass[state] and not self._eval(node.body, dict(env), Dist.point(state)):
                    encoding.zero(mass[state])
            self._sum_is(encoding, mass, scale)
            return True
        if isinstance(node, Ref):
            for state in self.plts.states:
                if mass[state] and not self._refuses(node.actions, Dist.point(state)):
                    encoding.zero(mass[state])
            self._sum_is(encoding, mass, scale)
            return True
        if isinstance(node, OPlusW):
            return self._encode_weighted(encoding, node, env, mass, scale)
        if isinstance(node, OPlus):
            return self._encode_choice(encoding, node, env, mass, scale)
        if isinstance(node, Diamond):
            return self._encode_diamond(encoding, node, env, mass, scale)
        if isinstance(node, Var):
            return self._encode_set(encoding, env[node.name], mass, scale, node)
        if isinstance(node, Nu):
            return self._encode_set(encoding, TableRef(self._nu_closure(node, env)), mass, scale, node)
        raise FragmentError(f"{type(node).__name__} cannot appear here", _short(node))

    def _split(self, encoding: _Encoding, mass: Mapping[str, LinExpr], count: int) -> List[Dict[str, LinExpr]]:
        parts = [{state: {encoding.fresh("m"): Fraction(1)} for state in self.plts.states} for _ in range(count)]
        for state in self.plts.states:
            total: LinExpr = {}
            for part in parts:
                total.update(part[state])
            encoding.equal(total, mass[state])
        return parts

    def _encode_weighted(self, encoding: _Encoding, node: OPlusW, env: Mapping[str, SetRepr],
                         mass: Mapping[str, LinExpr], scale: LinExpr) -> bool:
        live = [(p, phi) for p, phi in node.items if p > 0]
        for p, phi in node.items:
            if p == 0 and not self._nonempty(phi, env):
                return False
        parts = self._split(encoding, mass, len(live))
        for (p, phi), part in zip(live, parts):
            if not self._encode(encoding, phi, env, part, {k: v * p for k, v in scale.items()}):
                return False
        return True

    def _encode_choice(self, encoding: _Encoding, node: OPlus, env: Mapping[str, SetRepr],
                       mass: Mapping[str, LinExpr], scale: LinExpr) -> bool:
        if not node.items:
            return False
        if not all(self._nonempty(phi, env) for phi in node.items):
            return False
        shares = [encoding.fresh("q") for _ in node.items]
        encoding.equal({q: Fraction(1) for q in shares}, scale)
        parts = self._split(encoding, mass, len(node.items))
        for phi, share, part in zip(node.items, shares, parts):
            if not self._encode(encoding, phi, env, part, {share: Fraction(1)}):
                return False
        return True

    def _state_answers(self, state: str, action: str) -> Tuple[Dist, ...]:
        key = (state, action)
        cached = self._answers.get(key)
        if cached is None:
            cached = answer_generators(self.plts, state, action, self.semantics)
            self._answers[key] = cached
        return cached

    def _encode_diamond(self, encoding: _Encoding, node: Diamond, env: Mapping[str, SetRepr],
                        mass: Mapping[str, LinExpr], scale: LinExpr) -> bool:
        after: Dict[str, LinExpr] = {state: {} for state in self.plts.states}
        for state in self.plts.states:
            if not mass[state]:
                continue
            answers = self._state_answers(state, node.action)
            if not answers:
                encoding.zero(mass[state])
                continue
            picks = [encoding.fresh("pi") for _ in answers]
            encoding.equal({pick: Fraction(1) for pick in picks}, mass[state])
            for pick, answer in zip(picks, answers):
                for target, weight in answer:
                    after[target][pick] = after[target].get(pick, Fraction(0)) + weight
        self._sum_is(encoding, mass, scale)
        return self._encode(encoding, node.body, env, after, scale)

    def _encode_set(self, encoding: _Encoding, binding: SetRepr, mass: Mapping[str, LinExpr],
                    scale: LinExpr, node: Formula) -> bool:
        if isinstance(binding, TableRef):
            members = [cand for cand in self.universe() if self._lookup(binding.closure, cand)]
        elif isinstance(binding, ExplicitPolytope):
            members = list(binding.generators)
        elif len(binding.points) <= 1:
            members = list(binding.points)
        else:
            raise FragmentError("a finite point set is not convex; use an explicit polytope", _short(node))
        if not members:
            return False
        weights = [encoding.fresh("lambda") for _ in members]
        encoding.equal({w: Fraction(1) for w in weights}, scale)
        for state in self.plts.states:
            expr: LinExpr = {}
            for w, member in zip(weights, members):
                if member[state]:
                    expr[w] = member[state]
            encoding.equal(expr, mass[state])
        return True


def _binding_key(value: SetRepr) -> Hashable:
    if isinstance(value, TableRef):
        return ("table", value.closure)
    return ("external", id(value))


def satisfies(plts: PLTS, dist: Dist, formula: Formula, semantics: Semantics = Semantics.STRONG,
              env: Optional[Environment] = None) -> bool:
    """Δ ⊨ φ under the strong or weak semantics."""
    return FormulaChecker(plts, semantics, queries=[dist]).holds(formula, dist, env)


def nu_membership(plts: PLTS, system: EquationSystem, variable: str, dist: Dist,
                  semantics: Semantics = Semantics.STRONG) -> bool:
    """Δ ∈ ν_E(X), decided coinductively."""
    return FormulaChecker(plts, semantics, queries=[dist]).nu_member(system, variable, dist)


def check_postfixpoint(plts: PLTS, system: EquationSystem, env: Environment,
                       queries: Optional[Sequence[Tuple[str, Dist]]] = None,
                       semantics: Semantics = Semantics.STRONG) -> PostFixpointReport:
    """Check Δ ∈ ρ(X) ⇒ Δ ∈ [[E(X)]]ρ for the queried pairs.

    Without explicit queries every listed member of every ρ(X) is checked.
    """
    missing = [name for name in system.variables if name not in env]
    if missing:
        raise ValidationError(f"environment does not bind {missing[0]}", field="environment", value=missing[0])
    if queries is None:
        queries = [(name, member) for name in system.variables for member in env[name].members()]  # type: ignore[union-attr]
    checker = FormulaChecker(plts, semantics, queries=[dist for _, dist in queries])
    report = PostFixpointReport()
    for name, dist in queries:
        if not env[name].contains(dist):  # type: ignore[union-attr]
            report.skipped += 1
            continue
        report.checked += 1
        if not checker.holds(system.body(name), dist, env):
            report.violations.append((name, dist.format()))
    return report
