"""Tests for distributions, systems, relations and formula syntax trees."""

from fractions import Fraction

import pytest

from src.probmu.models.dist import Dist, convex_combine, dist_sort_key
from src.probmu.models.formula import (
    FALSE, TRUE, Box, Conj, Diamond, Down, EquationSystem, FragmentSpec, Mu, Neg, Nu, OPlusW, Ref, Var,
    check_polarity, conjoin, formula_size, substitute,
)
from src.probmu.models.plts import PLTS, TAU, detect_divergence, refuses, refusers
from src.probmu.models.schemas import CheckRecord, RelationKind, RunReport, Semantics, StateRelation
from src.probmu.utils.error_handling import DivergenceError, ValidationError


class TestDist:
    """Test exact distributions."""

    def test_canonical_form(self):
        """Test that equal masses give equal distributions regardless of input order."""
        first = Dist.of({"b": Fraction(1, 2), "a": Fraction(1, 2)})
        second = Dist.of({"a": Fraction(1, 2), "c": 0, "b": Fraction(1, 2)})
        assert first == second
        assert first.states == ("a", "b")
        assert hash(first) == hash(second)

    def test_zero_weights_dropped(self):
        """Test that zero entries do not enter the support."""
        dist = Dist.of({"a": 1, "b": 0})
        assert dist.is_point
        assert dist.support == frozenset({"a"})

    def test_weights_must_sum_to_one(self):
        """Test rejection of sub- and super-distributions."""
        with pytest.raises(ValidationError):
            Dist.of({"a": Fraction(1, 2)})
        with pytest.raises(ValidationError):
            Dist.of({"a": 1, "b": Fraction(1, 3)})

    def test_negative_weight_rejected(self):
        """Test that negative weights are refused."""
        with pytest.raises(ValidationError):
            Dist.of({"a": Fraction(3, 2), "b": Fraction(-1, 2)})

    def test_weight_lookup_and_mass(self):
        """Test weight access and set mass."""
        dist = Dist.of({"a": Fraction(1, 3), "b": Fraction(1, 6), "c": Fraction(1, 2)})
        assert dist["a"] == Fraction(1, 3)
        assert dist["z"] == 0
        assert dist.mass({"a", "b"}) == Fraction(1, 2)

    def test_format(self):
        """Test the textual form."""
        assert Dist.point("s").format() == "s"
        assert Dist.of({"v": Fraction(1, 2), "w": Fraction(1, 2)}).format() == "1/2 v + 1/2 w"

    def test_convex_combine(self):
        """Test convex combinations of distributions."""
        mixed = convex_combine([(Fraction(1, 2), Dist.point("a")), (Fraction(1, 2), Dist.uniform(["a", "b"]))])
        assert mixed == Dist.of({"a": Fraction(3, 4), "b": Fraction(1, 4)})

    def test_sort_key_prefers_small_support(self):
        """Test that point distributions sort first."""
        dists = [Dist.uniform(["a", "b"]), Dist.point("b"), Dist.point("a")]
        assert sorted(dists, key=dist_sort_key)[:2] == [Dist.point("a"), Dist.point("b")]


class TestPLTS:
    """Test the transition system model."""

    def test_build_and_lookup(self, convex_plts):
        """Test moves, targets and enabled actions."""
        assert convex_plts.alphabet == ("a", "b", "c")
        assert convex_plts.enabled("t") == frozenset({"a"})
        assert convex_plts.targets("t", "a") == (Dist.point("v"), Dist.point("w"))
        assert convex_plts.moves("x") == ()
        assert convex_plts.actions_with_tau[-1] == TAU

    def test_unknown_state(self, convex_plts):
        """Test that unknown states raise ValidationError."""
        with pytest.raises(ValidationError):
            convex_plts.index("nope")

    def test_undeclared_target(self):
        """Test that targets must be declared states."""
        with pytest.raises(ValidationError):
            PLTS.build(["s"], [("s", "a", Dist.point("t"))])

    def test_tau_not_in_alphabet(self):
        """Test that tau cannot be declared as an external action."""
        with pytest.raises(ValidationError):
            PLTS(states=("s",), alphabet=("tau",))

    def test_divergence_witness(self, divergent_plts, tau_plts):
        """Test detection of internal cycles."""
        assert divergent_plts.divergence_witness == ["s", "s"]
        assert tau_plts.is_divergence_free
        with pytest.raises(DivergenceError) as exc_info:
            divergent_plts.require_divergence_free()
        assert exc_info.value.witness == ["s", "s"]
        assert exc_info.value.exit_code == 2

    def test_detect_divergence_through_probabilistic_branch(self):
        """Test that a cycle through one branch of a distribution is found."""
        plts = PLTS.build(["s", "t", "u"], [
            ("s", TAU, Dist.uniform(["t", "u"])),
            ("t", TAU, Dist.point("s")),
        ])
        assert detect_divergence(plts) == ["s", "t", "s"]
        assert detect_divergence(PLTS.build(["s", "t"], [("s", TAU, Dist.point("t"))])) is None

    def test_digest_is_stable(self, convex_plts):
        """Test that rebuilding a system keeps its digest."""
        rebuilt = PLTS.build(convex_plts.states,
                             [(t.source, t.action, t.target) for t in reversed(convex_plts.transitions)],
                             alphabet=convex_plts.alphabet)
        assert rebuilt.digest == convex_plts.digest

    def test_refusals(self, refusal_plts, tau_plts):
        """Test refusal of action sets by single states and distributions."""
        assert refuses(refusal_plts, Dist.point("s"), ["a"])
        assert not refuses(refusal_plts, Dist.point("t"), ["a"])
        assert refusers(refusal_plts, ["a"]) == frozenset({"s"})
        # a state with an internal move refuses nothing
        assert not refuses(tau_plts, Dist.point("s"), [])


class TestSchemas:
    """Test relations and report schemas."""

    def test_relation_properties(self):
        """Test equivalence detection and classes."""
        relation = StateRelation.over(["a", "b", "c"], [("a", "a"), ("b", "b"), ("c", "c"), ("a", "b"),
                                                        ("b", "a")])
        assert relation.is_equivalence()
        assert relation.classes() == [("a", "b"), ("c",)]
        assert relation.image("a") == {"a", "b"}

    def test_relation_outside_space(self):
        """Test that pairs must lie inside the declared spaces."""
        with pytest.raises(ValidationError):
            StateRelation.over(["a"], [("a", "b")])

    def test_kind_flags(self):
        """Test the classification of relation kinds."""
        assert RelationKind.WEAK_BISIM.semantics == Semantics.WEAK
        assert RelationKind.FAILURE_SIM.is_state_distribution
        assert not RelationKind.HJ90_BISIM.has_characteristic_system
        assert RelationKind.FORWARD_SIM not in RelationKind.state_kinds()

    def test_check_record_agreement(self):
        """Test agreement of the three verdicts."""
        assert CheckRecord(kind="k", left="s", right="t", relation=True, equations=True, formula=True).agree
        assert not CheckRecord(kind="k", left="s", right="t", relation=True, equations=False).agree
        assert not CheckRecord(kind="k", left="s", right="t", error="boom").agree

    def test_run_report_summary(self):
        """Test pass and fail counting."""
        report = RunReport()
        report.add_check(CheckRecord(kind="k", left="s", right="t", relation=True, formula=True))
        report.add_check(CheckRecord(kind="k", left="s", right="u", relation=True, formula=False))
        assert report.summary() == {"checks": 2, "passed": 1, "failed": 1}
        assert not report.ok


class TestFormula:
    """Test formula nodes and transformations."""

    def test_structural_equality(self):
        """Test that equal trees are equal and hash alike."""
        left = Diamond("a", OPlusW(((Fraction(1, 2), Down(Var("X"))), (Fraction(1, 2), TRUE))))
        right = Diamond("a", OPlusW(((Fraction(1, 2), Down(Var("X"))), (Fraction(1, 2), Conj(())))))
        assert left == right
        assert hash(left) == hash(right)
        assert left != Box("a", left.body)

    def test_free_variables(self):
        """Test free variable computation through binders."""
        formula = Nu("X", Conj((Diamond("a", Down(Var("X"))), Var("Y"))))
        assert formula.free_variables == frozenset({"Y"})
        assert Nu("Y", formula).is_closed

    def test_weighted_choice_validation(self):
        """Test that weighted choices need weights summing to one."""
        with pytest.raises(ValidationError):
            OPlusW(((Fraction(1, 2), TRUE), (Fraction(1, 3), FALSE)))

    def test_refusal_cannot_contain_tau(self):
        """Test that tau is rejected in refusal sets."""
        with pytest.raises(ValidationError):
            Ref(("a", "tau"))

    def test_substitute_avoids_capture(self):
        """Test that substitution renames binders that would capture."""
        formula = Nu("Y", Conj((Var("X"), Diamond("a", Down(Var("Y"))))))
        result = substitute(formula, "X", Var("Y"))
        assert isinstance(result, Nu)
        assert result.var != "Y"
        assert "Y" in result.free_variables

    def test_polarity(self):
        """Test that negative occurrences of bound variables are rejected."""
        check_polarity(Nu("X", Neg(Neg(Var("X")))))
        with pytest.raises(ValidationError):
            check_polarity(Mu("X", Neg(Var("X"))))

    def test_conjoin_collapses_singletons(self):
        """Test the single-conjunct case."""
        assert conjoin([Var("X")]) == Var("X")
        assert conjoin([]) == TRUE

    def test_formula_size_counts_shared_nodes_once(self):
        """Test DAG size of a formula with a repeated subterm."""
        shared = Diamond("a", TRUE)
        assert formula_size(Conj((shared, shared))) == 3

    def test_fragments(self):
        """Test the constructors admitted per relation kind."""
        with_box = Conj((Box("a", FALSE), Diamond("a", Down(TRUE))))
        assert FragmentSpec.for_kind(RelationKind.STRONG_BISIM).admits(with_box)
        assert FragmentSpec.for_kind(RelationKind.STRONG_SIM).violation(with_box) == Box("a", FALSE)
        assert not FragmentSpec.for_kind(RelationKind.FORWARD_SIM).admits(Down(TRUE))
        assert FragmentSpec.for_kind(RelationKind.FAILURE_SIM).admits(Ref(("a",)))
        assert not FragmentSpec.for_kind(RelationKind.FORWARD_SIM).admits(Ref(("a",)))


class TestEquationSystem:
    """Test equation system validation."""

    def test_root_and_lookup(self):
        """Test the root variable and body lookup."""
        system = EquationSystem((("X", Diamond("a", Down(Var("Y")))), ("Y", TRUE)))
        assert system.root == "X"
        assert system.variables == ("X", "Y")
        assert "Y" in system
        assert system.body("Y") == TRUE

    def test_duplicate_variable(self):
        """Test that a variable may be defined once."""
        with pytest.raises(ValidationError):
            EquationSystem((("X", TRUE), ("X", FALSE)))

    def test_undefined_variable(self):
        """Test that bodies may mention defined variables only."""
        with pytest.raises(ValidationError):
            EquationSystem((("X", Var("Z")),))

    def test_binders_rejected(self):
        """Test that bodies must be fixpoint-free."""
        with pytest.raises(ValidationError):
            EquationSystem((("X", Nu("Y", Var("Y"))),))
