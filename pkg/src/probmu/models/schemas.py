"""Pydantic schemas and enums shared across the toolkit."""

from enum import Enum
from fractions import Fraction
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..utils.error_handling import ValidationError


class Semantics(str, Enum):
    """Interpretation of modalities."""
    STRONG = "strong"
    WEAK = "weak"


class RelationKind(str, Enum):
    """Behavioural relations the toolkit decides."""
    STRONG_BISIM = "strong-bisim"
    STRONG_SIM = "strong-sim"
    WEAK_BISIM = "weak-bisim"
    WEAK_SIM = "weak-sim"
    FORWARD_SIM = "forward-sim"
    FAILURE_SIM = "failure-sim"
    HJ90_BISIM = "hj90-bisim"
    JL91_SIM = "jl91-sim"

    @property
    def is_bisimulation(self) -> bool:
        return self in (RelationKind.STRONG_BISIM, RelationKind.WEAK_BISIM, RelationKind.HJ90_BISIM)

    @property
    def is_weak(self) -> bool:
        return self in (RelationKind.WEAK_BISIM, RelationKind.WEAK_SIM,
                        RelationKind.FORWARD_SIM, RelationKind.FAILURE_SIM)

    @property
    def is_state_distribution(self) -> bool:
        """Relates states to distributions rather than to states."""
        return self in (RelationKind.FORWARD_SIM, RelationKind.FAILURE_SIM)

    @property
    def is_combined(self) -> bool:
        """Matches moves with combined transitions of the other side."""
        return self not in (RelationKind.HJ90_BISIM, RelationKind.JL91_SIM)

    @property
    def semantics(self) -> Semantics:
        return Semantics.WEAK if self.is_weak else Semantics.STRONG

    @property
    def has_characteristic_system(self) -> bool:
        return self.is_combined

    @classmethod
    def state_kinds(cls) -> List["RelationKind"]:
        return [kind for kind in cls if not kind.is_state_distribution]

    @classmethod
    def characteristic_kinds(cls) -> List["RelationKind"]:
        return [kind for kind in cls if kind.has_characteristic_system]


class StateRelation(BaseModel):
    """A finite relation R ⊆ left_space × right_space."""
    model_config = ConfigDict(frozen=True)

    pairs: FrozenSet[Tuple[str, str]] = Field(default_factory=frozenset)
    left_space: Tuple[str, ...]
    right_space: Tuple[str, ...]

    @model_validator(mode="after")
    def check_spaces(self) -> "StateRelation":
        left, right = set(self.left_space), set(self.right_space)
        for s, t in self.pairs:
            if s not in left or t not in right:
                raise ValidationError(f"pair ({s}, {t}) outside the relation's spaces", field="pairs",
                                      value=(s, t))
        return self

    @classmethod
    def over(cls, states: Iterable[str], pairs: Iterable[Tuple[str, str]]) -> "StateRelation":
        space = tuple(states)
        return cls(pairs=frozenset(pairs), left_space=space, right_space=space)

    @classmethod
    def identity(cls, states: Iterable[str]) -> "StateRelation":
        space = tuple(states)
        return cls.over(space, ((s, s) for s in space))

    @classmethod
    def total(cls, states: Iterable[str]) -> "StateRelation":
        space = tuple(states)
        return cls.over(space, ((s, t) for s in space for t in space))

    def __contains__(self, pair: object) -> bool:
        return pair in self.pairs

    def __len__(self) -> int:
        return len(self.pairs)

    def image(self, state: str) -> Set[str]:
        return {t for s, t in self.pairs if s == state}

    def inverse(self) -> "StateRelation":
        return StateRelation(pairs=frozenset((t, s) for s, t in self.pairs),
                             left_space=self.right_space, right_space=self.left_space)

    def is_reflexive(self) -> bool:
        return all((s, s) in self.pairs for s in self.left_space)

    def is_symmetric(self) -> bool:
        return all((t, s) in self.pairs for s, t in self.pairs)

    def is_transitive(self) -> bool:
        successors: Dict[str, Set[str]] = {}
        for s, t in self.pairs:
            successors.setdefault(s, set()).add(t)
        return all(
            u in successors.get(s, set())
            for s, ts in successors.items() for t in ts for u in successors.get(t, set())
        )

    def is_equivalence(self) -> bool:
        return (set(self.left_space) == set(self.right_space)
                and self.is_reflexive() and self.is_symmetric() and self.is_transitive())

    def classes(self) -> List[Tuple[str, ...]]:
        """Equivalence classes in order of first member; only meaningful for equivalences."""
        seen: Set[str] = set()
        result = []
        for state in self.left_space:
            if state in seen:
                continue
            members = tuple(t for t in self.left_space if (state, t) in self.pairs)
            seen.update(members)
            result.append(members)
        return result

    def sorted_pairs(self) -> List[Tuple[str, str]]:
        left = {s: i for i, s in enumerate(self.left_space)}
        right = {t: i for i, t in enumerate(self.right_space)}
        return sorted(self.pairs, key=lambda p: (left[p[0]], right[p[1]]))


class WeightFunction(BaseModel):
    """Mass transport between two distributions along a relation."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    entries: Dict[Tuple[str, str], Fraction] = Field(default_factory=dict)

    def row_sum(self, state: str) -> Fraction:
        return sum((w for (s, _), w in self.entries.items() if s == state), Fraction(0))

    def column_sum(self, state: str) -> Fraction:
        return sum((w for (_, t), w in self.entries.items() if t == state), Fraction(0))

    def sorted_entries(self) -> List[Tuple[str, str, Fraction]]:
        return [(s, t, w) for (s, t), w in sorted(self.entries.items())]


class Removal(BaseModel):
    """Why and when a pair left the candidate relation."""
    pair: Tuple[str, str]
    round: int
    step: int
    direction: str
    action: str
    target: str


class RefinementRound(BaseModel):
    """Pairs removed in one full refinement pass."""
    index: int
    removed: List[Tuple[str, str]] = Field(default_factory=list)
    size_after: int


class RelationResult(BaseModel):
    """Greatest relation of a kind, with the refinement trace as certificate."""
    model_config = ConfigDict(frozen=True)

    kind: RelationKind
    relation: StateRelation
    rounds: List[RefinementRound] = Field(default_factory=list)
    removals: List[Removal] = Field(default_factory=list)

    @property
    def pairs(self) -> FrozenSet[Tuple[str, str]]:
        return self.relation.pairs

    def related(self, s: str, t: str) -> bool:
        return (s, t) in self.relation.pairs

    def removal_of(self, s: str, t: str) -> Optional[Removal]:
        for removal in self.removals:
            if removal.pair == (s, t):
                return removal
        return None


class PostFixpointReport(BaseModel):
    """Outcome of checking ρ ⊑ F_E(ρ) on a set of queries."""
    checked: int = 0
    skipped: int = 0
    violations: List[Tuple[str, str]] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


class CheckRecord(BaseModel):
    """One cross-validation comparison."""
    kind: str
    left: str
    right: str
    relation: Optional[bool] = None
    equations: Optional[bool] = None
    formula: Optional[bool] = None
    error: Optional[str] = None

    @property
    def verdicts(self) -> List[bool]:
        return [v for v in (self.relation, self.equations, self.formula) if v is not None]

    @property
    def agree(self) -> bool:
        return self.error is None and len(set(self.verdicts)) <= 1


class RunReport(BaseModel):
    """Deterministic record of one CLI run."""
    command: List[str] = Field(default_factory=list)
    inputs: Dict[str, str] = Field(default_factory=dict)
    results: Dict[str, Any] = Field(default_factory=dict)
    checks: List[CheckRecord] = Field(default_factory=list)
    timing: Optional[Dict[str, float]] = None

    @property
    def passed(self) -> int:
        return sum(1 for check in self.checks if check.agree)

    @property
    def failed(self) -> int:
        return len(self.checks) - self.passed

    @property
    def ok(self) -> bool:
        return self.failed == 0

    def add_check(self, record: CheckRecord) -> None:
        self.checks.append(record)

    def summary(self) -> Dict[str, Any]:
        return {"checks": len(self.checks), "passed": self.passed, "failed": self.failed}
