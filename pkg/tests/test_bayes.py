"""Network construction, joint probabilities, and exact inference."""

import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from redvote import bayes
from redvote.errors import ValidationError, ZeroEvidenceError

from oracles import enum_marginal, random_evidence, random_net

B = ("False", "True")


def _single_root(p=0.3):
    return bayes.build_net(
        [bayes.Variable("A", B)],
        [bayes.Cpt("A", (), {(): (1 - p, p)})],
    )


def _chain_abc():
    variables = [bayes.Variable(v, B) for v in "ABC"]
    cpts = [
        bayes.Cpt("A", (), {(): (0.7, 0.3)}),
        bayes.Cpt("B", ("A",), {("False",): (0.9, 0.1), ("True",): (0.2, 0.8)}),
        bayes.Cpt("C", ("B",), {("False",): (0.6, 0.4), ("True",): (0.5, 0.5)}),
    ]
    return bayes.build_net(variables, cpts)


class TestBuildNet:
    def test_single_root_prior(self):
        net = _single_root(0.3)
        assert len(net) == 1
        dist = bayes.marginal(net, "A")
        assert dist["True"] == pytest.approx(0.3)
        assert dist["False"] == pytest.approx(0.7)

    def test_smallest_cycle_rejected(self):
        variables = [bayes.Variable("A", B), bayes.Variable("B", B)]
        cpts = [
            bayes.Cpt("A", ("B",), {("False",): (0.5, 0.5), ("True",): (0.5, 0.5)}),
            bayes.Cpt("B", ("A",), {("False",): (0.5, 0.5), ("True",): (0.5, 0.5)}),
        ]
        with pytest.raises(ValidationError, match="cycle"):
            bayes.build_net(variables, cpts)

    def test_missing_row_rejected(self):
        variables = [bayes.Variable("A", B), bayes.Variable("B", B)]
        cpts = [
            bayes.Cpt("A", (), {(): (0.5, 0.5)}),
            bayes.Cpt("B", ("A",), {("False",): (0.5, 0.5)}),
        ]
        with pytest.raises(ValidationError, match="missing the row"):
            bayes.build_net(variables, cpts)

    def test_extra_row_rejected(self):
        variables = [bayes.Variable("A", B)]
        cpts = [bayes.Cpt("A", (), {(): (0.5, 0.5), ("False",): (0.5, 0.5)})]
        with pytest.raises(ValidationError, match="extra row"):
            bayes.build_net(variables, cpts)

    def test_row_sum_violation_rejected(self):
        with pytest.raises(ValidationError, match="sums to"):
            bayes.build_net(
                [bayes.Variable("A", B)], [bayes.Cpt("A", (), {(): (0.5, 0.6)})]
            )

    def test_dangling_parent_rejected(self):
        variables = [bayes.Variable("A", B)]
        cpts = [bayes.Cpt("A", ("Ghost",), {("False",): (1, 0), ("True",): (1, 0)})]
        with pytest.raises(ValidationError, match="unknown parent"):
            bayes.build_net(variables, cpts)

    def test_missing_cpt_rejected(self):
        with pytest.raises(ValidationError, match="missing CPT"):
            bayes.build_net([bayes.Variable("A", B)], [])

    def test_duplicate_cpt_rejected(self):
        cpt = bayes.Cpt("A", (), {(): (0.5, 0.5)})
        with pytest.raises(ValidationError, match="more than one CPT"):
            bayes.build_net([bayes.Variable("A", B)], [cpt, cpt])

    def test_variable_invariants(self):
        with pytest.raises(ValidationError, match="at least two states"):
            bayes.Variable("A", ("only",))
        with pytest.raises(ValidationError, match="repeats a state"):
            bayes.Variable("A", ("x", "x"))


class TestJointProbability:
    def test_single_root(self):
        net = _single_root(0.3)
        assert bayes.joint_probability(net, {"A": "True"}) == pytest.approx(0.3)

    def test_two_independent_roots(self):
        net = bayes.build_net(
            [bayes.Variable("A", B), bayes.Variable("B", B)],
            [bayes.Cpt("A", (), {(): (0.5, 0.5)}), bayes.Cpt("B", (), {(): (0.5, 0.5)})],
        )
        for a, b in itertools.product(B, repeat=2):
            assert bayes.joint_probability(net, {"A": a, "B": b}) == pytest.approx(0.25)

    def test_joint_sums_to_one(self):
        rng = random.Random(7)
        for _ in range(20):
            net = random_net(rng)
            total = sum(
                bayes.joint_probability(net, dict(zip(net.variable_ids, combo)))
                for combo in itertools.product(B, repeat=len(net))
            )
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_incomplete_assignment_rejected(self):
        net = _chain_abc()
        with pytest.raises(ValidationError, match="incomplete"):
            bayes.joint_probability(net, {"A": "True"})


class TestMarginal:
    def test_root_prior_identity(self):
        net = _chain_abc()
        assert bayes.marginal(net, "A")["True"] == pytest.approx(0.3)

    def test_matches_enumeration_on_random_nets(self):
        rng = random.Random(2024)
        for _ in range(60):
            net = random_net(rng)
            target = rng.choice(net.variable_ids)
            evidence = random_evidence(rng, net, spare=target)
            got = bayes.marginal(net, target, evidence)
            expected = enum_marginal(net, target, evidence)
            for state, want in zip(net.variable(target).states, expected):
                assert abs(got[state] - want) <= 1e-10

    def test_distribution_sums_to_one(self):
        rng = random.Random(5)
        for _ in range(20):
            net = random_net(rng)
            target = rng.choice(net.variable_ids)
            evidence = random_evidence(rng, net, spare=target)
            dist = bayes.marginal(net, target, evidence)
            assert sum(dist.probabilities.values()) == pytest.approx(1.0, abs=1e-9)

    def test_pure_function_bit_identical(self):
        net = _chain_abc()
        first = bayes.marginal(net, "C", {"A": "True"})
        second = bayes.marginal(net, "C", {"A": "True"})
        assert first.probabilities == second.probabilities

    def test_zero_probability_evidence_raises(self):
        variables = [bayes.Variable("A", B), bayes.Variable("Copy", B)]
        cpts = [
            bayes.Cpt("A", (), {(): (0.0, 1.0)}),
            bayes.Cpt("Copy", ("A",), {("False",): (1.0, 0.0), ("True",): (0.0, 1.0)}),
        ]
        net = bayes.build_net(variables, cpts)
        with pytest.raises(ZeroEvidenceError):
            bayes.marginal(net, "A", {"Copy": "False"})

    def test_unknown_target_and_state_rejected(self):
        net = _chain_abc()
        with pytest.raises(ValidationError, match="unknown variable"):
            bayes.marginal(net, "Nope")
        with pytest.raises(ValidationError, match="no state"):
            bayes.marginal(net, "A", {"B": "Maybe"})

    def test_target_in_evidence_is_point_mass(self):
        net = _chain_abc()
        dist = bayes.marginal(net, "B", {"B": "True"})
        assert dist["True"] == 1.0
        assert dist["False"] == 0.0

    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=0, max_value=10**9))
    def test_enumeration_agreement_property(self, seed):
        rng = random.Random(seed)
        net = random_net(rng, max_nodes=6)
        target = rng.choice(net.variable_ids)
        evidence = random_evidence(rng, net, spare=target)
        got = bayes.marginal(net, target, evidence)
        expected = enum_marginal(net, target, evidence)
        assert np.allclose(
            [got[s] for s in net.variable(target).states], expected, atol=1e-10
        )


class TestPosteriorReport:
    def test_point_mass_on_evidence_via_marginal(self):
        net = _chain_abc()
        report = bayes.posterior_report(net, {"B": "True"})
        assert [d.variable for d in report] == ["A", "C"]
        for dist in report:
            assert sum(dist.probabilities.values()) == pytest.approx(1.0, abs=1e-9)

    def test_sorted_by_variable_id(self):
        rng = random.Random(11)
        net = random_net(rng)
        report = bayes.posterior_report(net, {})
        assert [d.variable for d in report] == sorted(net.variable_ids)

    def test_zero_probability_evidence_raises(self):
        variables = [bayes.Variable("A", B), bayes.Variable("Copy", B)]
        cpts = [
            bayes.Cpt("A", (), {(): (0.0, 1.0)}),
            bayes.Cpt("Copy", ("A",), {("False",): (1.0, 0.0), ("True",): (0.0, 1.0)}),
        ]
        net = bayes.build_net(variables, cpts)
        with pytest.raises(ZeroEvidenceError):
            bayes.posterior_report(net, {"Copy": "False"})


class TestEliminationOrder:
    def test_chain_eliminates_tail_first(self):
        net = _chain_abc()
        assert bayes.elimination_order(net, "C") == ("A", "B")

    def test_empty_when_everything_is_query_or_evidence(self):
        net = _chain_abc()
        assert bayes.elimination_order(net, ("A", "C"), {"B": "True"}) == ()

    def test_any_order_matches_enumeration(self):
        # exercised across random nets: the order feeds marginal(), which the
        # enumeration-agreement tests above check against the full joint
        rng = random.Random(3)
        net = random_net(rng)
        order = bayes.elimination_order(net, net.variable_ids[0])
        assert set(order) == set(net.variable_ids[1:])
