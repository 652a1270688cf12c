"""Tests for convex hulls and lifting relations to distributions."""

import random
from fractions import Fraction

import pytest

from src.probmu.core.lifting import (
    StateDistRelation, decompose, lift_check, lift_check_equivalence, lift_check_sd, lift_into_hull,
    split_target, transport, validate_witness,
)
from src.probmu.core.polytope import EMPTY, Polytope, hull_coefficients, mix
from src.probmu.models.dist import Dist, convex_combine
from src.probmu.models.schemas import StateRelation, WeightFunction
from src.probmu.utils.error_handling import ValidationError
from src.probmu.utils.generator import random_distribution

HALF = Fraction(1, 2)


def _dist(**weights):
    return Dist.of({state: Fraction(weight) for state, weight in weights.items()})


@pytest.fixture
def relation(lifting_plts):
    pairs = [("s1", "t1"), ("s1", "t2"), ("s2", "t3"), ("s3", "t3")]
    return StateRelation.over(lifting_plts.states, pairs)


@pytest.fixture
def delta():
    return _dist(s1="1/2", s2="1/4", s3="1/4")


class TestPolytope:
    """Test generator-represented convex sets."""

    def test_membership(self):
        """Test hull membership of mixtures and outsiders."""
        hull = Polytope([Dist.point("a"), Dist.point("b")])
        assert hull.contains(Dist.uniform(["a", "b"]))
        assert _dist(a="1/3", b="2/3") in hull
        assert not hull.contains(Dist.point("c"))
        assert not hull.contains(Dist.uniform(["a", "c"]))

    def test_coefficients(self):
        """Test the convex weights returned for a member."""
        generators = [Dist.point("a"), Dist.point("b")]
        assert hull_coefficients(generators, _dist(a="1/4", b="3/4")) == [Fraction(1, 4), Fraction(3, 4)]
        assert hull_coefficients([], Dist.point("a")) is None

    def test_pruned_drops_interior_generators(self):
        """Test that pruning keeps the set and drops redundant generators."""
        hull = Polytope([Dist.point("a"), Dist.point("b"), Dist.uniform(["a", "b"])])
        pruned = hull.pruned()
        assert len(pruned) == 2
        assert pruned.contains(Dist.uniform(["a", "b"]))

    def test_mix(self):
        """Test Minkowski mixtures."""
        mixed = mix([(HALF, Polytope.point(Dist.point("a"))), (HALF, Polytope([Dist.point("b"), Dist.point("c")]))])
        assert set(mixed.generators) == {Dist.uniform(["a", "b"]), Dist.uniform(["a", "c"])}

    def test_mix_with_empty_part(self):
        """Test that an empty part with positive weight empties the mixture."""
        assert mix([(HALF, Polytope.point(Dist.point("a"))), (HALF, EMPTY)]).is_empty
        assert not mix([(1, Polytope.point(Dist.point("a"))), (0, EMPTY)]).is_empty

    def test_mix_weights_must_sum_to_one(self):
        """Test rejection of improper mixture weights."""
        with pytest.raises(ValidationError):
            mix([(HALF, Polytope.point(Dist.point("a")))])


class TestTransport:
    """Test the lifting of state relations."""

    def test_example_lift_holds(self, relation, delta):
        """Test the standard example with a forced weight function."""
        theta = _dist(t1="1/3", t2="1/6", t3="1/2")
        witness = lift_check(relation, delta, theta)
        assert witness is not None
        assert witness.entries[("s1", "t1")] == Fraction(1, 3)
        assert witness.entries[("s1", "t2")] == Fraction(1, 6)
        assert witness.row_sum("s2") == Fraction(1, 4)
        assert witness.column_sum("t3") == HALF

    def test_example_lift_fails(self, relation, delta):
        """Test a target needing more mass on t1 than s1 can give."""
        assert lift_check(relation, delta, _dist(t1="2/3", t3="1/3")) is None

    def test_uncovered_support(self, relation):
        """Test that every support state needs a partner."""
        assert transport(relation.pairs, Dist.point("s2"), Dist.point("t1")) is None

    def test_outside_space(self, relation):
        """Test that distributions must live on the relation's spaces."""
        with pytest.raises(ValidationError):
            lift_check(relation, Dist.point("zz"), Dist.point("t1"))

    def test_equivalence_shortcut(self, lifting_plts):
        """Test class-mass comparison for equivalences."""
        pairs = [(s, s) for s in lifting_plts.states] + [("t1", "t2"), ("t2", "t1")]
        equivalence = StateRelation.over(lifting_plts.states, pairs)
        assert lift_check_equivalence(equivalence, Dist.point("t1"), _dist(t1="1/2", t2="1/2"))
        assert not lift_check_equivalence(equivalence, Dist.point("t1"), Dist.point("t3"))
        with pytest.raises(ValidationError):
            lift_check_equivalence(StateRelation.over(lifting_plts.states, [("s1", "t1")]),
                                   Dist.point("s1"), Dist.point("t1"))

    def test_validate_witness(self, relation, delta):
        """Test rejection of weight functions with wrong marginals or pairs."""
        theta = _dist(t1="1/3", t2="1/6", t3="1/2")
        bad_marginal = WeightFunction(entries={("s1", "t1"): HALF, ("s2", "t3"): Fraction(1, 4),
                                               ("s3", "t3"): Fraction(1, 4)})
        with pytest.raises(ValidationError):
            validate_witness(relation.pairs, delta, theta, bad_marginal)
        unrelated = WeightFunction(entries={("s2", "t1"): 1})
        with pytest.raises(ValidationError):
            validate_witness(relation.pairs, Dist.point("s2"), Dist.point("t1"), unrelated)

    def test_decompose(self, relation, delta):
        """Test the paired decomposition read off a witness."""
        theta = _dist(t1="1/3", t2="1/6", t3="1/2")
        witness = lift_check(relation, delta, theta)
        parts = decompose(delta, theta, witness, relation)
        assert sum(weight for weight, _, _ in parts) == 1
        assert all((u, v) in relation for _, u, v in parts)

    def test_split_target(self, relation, delta):
        """Test splitting the target along a decomposition of the source."""
        theta = _dist(t1="1/3", t2="1/6", t3="1/2")
        witness = lift_check(relation, delta, theta)
        components = [(HALF, Dist.point("s1")), (HALF, _dist(s2="1/2", s3="1/2"))]
        (first, _), (second, _) = split_target(relation, components, theta, witness)
        assert first == _dist(t1="2/3", t2="1/3")
        assert second == Dist.point("t3")


class TestHullLifting:
    """Test lifting into convex sets."""

    def test_lift_into_hull(self):
        """Test that a mixture of generators answers a split source."""
        identity = {("v", "v"), ("w", "w")}
        answer = lift_into_hull(identity, Dist.uniform(["v", "w"]), [Dist.point("v"), Dist.point("w")])
        assert answer is not None
        theta, witness = answer
        assert theta == Dist.uniform(["v", "w"])
        assert witness.entries == {("v", "v"): HALF, ("w", "w"): HALF}

    def test_lift_into_hull_fails(self):
        """Test a source no single generator and no mixture can match."""
        identity = {("v", "v"), ("w", "w")}
        assert lift_into_hull(identity, Dist.point("v"), [Dist.uniform(["v", "w"])]) is None
        assert lift_into_hull(identity, Dist.point("v"), []) is None

    def test_state_distribution_lifting(self):
        """Test lifting a state-to-convex-set relation."""
        relation = StateDistRelation(per_state={
            "s": Polytope([Dist.point("x"), Dist.point("y")]),
            "u": Polytope.point(Dist.point("z")),
        })
        assert lift_check_sd(relation, Dist.uniform(["s", "u"]), _dist(x="1/4", y="1/4", z="1/2"))
        assert not lift_check_sd(relation, Dist.uniform(["s", "u"]), _dist(x="1/2", y="1/4", z="1/4"))
        assert relation.contains("s", Dist.uniform(["x", "y"]))
        assert not relation.contains("q", Dist.point("x"))


def random_equivalence(rng, states):
    """A random partition of states as a StateRelation, with its classes."""
    classes = {}
    for state in states:
        classes.setdefault(rng.randrange(len(states)), []).append(state)
    blocks = list(classes.values())
    pairs = [(u, v) for block in blocks for u in block for v in block]
    return StateRelation.over(states, pairs), blocks


@pytest.mark.slow
class TestRandomLifting:
    """Test lifting and pruning on generated instances."""

    @pytest.mark.parametrize("seed", range(10))
    def test_flow_agrees_with_class_masses(self, seed):
        """Test that max-flow lifting and class-mass comparison agree on equivalences."""
        rng = random.Random(seed)
        states = [f"s{i}" for i in range(5)]
        for _ in range(50):
            relation, blocks = random_equivalence(rng, states)
            delta = random_distribution(rng, states, max_support=3, denominator=6)
            if rng.random() < 0.5:
                # move each state's mass inside its class, keeping class masses
                home = {u: block for block in blocks for u in block}
                theta = convex_combine([(weight, Dist.point(rng.choice(home[u]))) for u, weight in delta])
            else:
                theta = random_distribution(rng, states, max_support=3, denominator=6)
            assert (lift_check(relation, delta, theta) is not None) == \
                lift_check_equivalence(relation, delta, theta), (sorted(relation.pairs), delta, theta)

    @pytest.mark.parametrize("seed", range(5))
    def test_pruning_keeps_membership(self, seed):
        """Test that dropping redundant generators leaves membership answers unchanged."""
        rng = random.Random(seed)
        states = ["a", "b", "c", "d"]
        corners = [random_distribution(rng, states, max_support=3, denominator=4) for _ in range(4)]
        inner = [convex_combine([(p, corners[0]), (1 - p, rng.choice(corners[1:]))])
                 for p in (Fraction(1, 3), Fraction(1, 2), Fraction(3, 4))]
        full = Polytope(corners + inner)
        pruned = full.pruned()
        assert len(pruned) <= len(corners)
        points = [random_distribution(rng, states, max_support=4, denominator=6) for _ in range(50)]
        points += [convex_combine([(p, rng.choice(corners)), (1 - p, rng.choice(corners))])
                   for p in (Fraction(rng.randint(1, 5), 6) for _ in range(50))]
        assert [full.contains(point) for point in points] == [pruned.contains(point) for point in points]
