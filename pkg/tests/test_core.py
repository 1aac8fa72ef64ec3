import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import enumerate_product_expectation, exact_die_moments
from pbn import core
from pbn.errors import (
    ConditioningOnNullError,
    DimensionError,
    NormalizationError,
    PBNError,
    TruncationWarning,
)

EVEN = {2, 4, 6}


@st.composite
def spaces(draw, max_size=8):
    n = draw(st.integers(1, max_size))
    w = draw(st.lists(st.floats(0.0, 1.0), min_size=n, max_size=n))
    w = np.array(w)
    if w.sum() <= 1e-6:
        w = np.ones(n)
    return core.SampleSpace(range(n), w / w.sum())


@st.composite
def space_and_events(draw, max_size=8):
    space = draw(spaces(max_size))
    labels = list(space.labels)
    a = draw(st.sets(st.sampled_from(labels)))
    b = draw(st.sets(st.sampled_from(labels), min_size=1))
    return space, a, b


class TestSampleSpace:
    def test_renormalizes_small_rounding(self):
        s = core.SampleSpace("abc", [0.3, 0.3, 0.4 + 5e-10])
        assert math.isclose(s.masses.sum(), 1.0, abs_tol=1e-15)

    def test_rejects_unnormalized(self):
        with pytest.raises(NormalizationError):
            core.SampleSpace("ab", [0.5, 0.6])

    def test_rejects_negative(self):
        with pytest.raises(NormalizationError):
            core.SampleSpace("ab", [1.5, -0.5])

    def test_rejects_duplicate_labels(self):
        with pytest.raises(PBNError):
            core.SampleSpace("aa", [0.5, 0.5])

    def test_json_round_trip(self):
        s = core.SampleSpace(["x", "y"], [0.25, 0.75])
        back = core.SampleSpace.from_json(s.to_json())
        assert back.labels == s.labels
        np.testing.assert_array_equal(back.masses, s.masses)

    def test_immutable(self):
        s = core.fair_die()
        with pytest.raises(ValueError):
            s.masses[0] = 1.0

    @given(spaces(12))
    def test_normalization(self, space):
        assert abs(space.masses.sum() - 1.0) <= 1e-12


class TestPBracket:
    def test_even_given_omega(self):
        die = core.fair_die()
        assert core.p_bracket(EVEN, die.labels, die) == pytest.approx(0.5, abs=1e-15)

    def test_superset_is_one(self):
        die = core.fair_die()
        assert core.p_bracket({1, 2, 3, 4}, {2, 3}, die) == 1.0

    def test_disjoint_is_zero(self):
        die = core.fair_die()
        assert core.p_bracket({1, 3}, EVEN, die) == 0.0

    def test_omega_given_b(self):
        die = core.fair_die()
        assert core.p_bracket(die.labels, {5}, die) == 1.0

    def test_null_condition(self):
        s = core.SampleSpace("abc", [0.5, 0.5, 0.0])
        with pytest.raises(ConditioningOnNullError):
            core.p_bracket({"a"}, {"c"}, s)
        with pytest.raises(ConditioningOnNullError):
            core.p_bracket({"a"}, set(), s)

    @given(space_and_events(12))
    def test_identity_insertion(self, data):
        space, a, b = data
        if core.probability(b, space) <= 0:
            return
        # P(A|B) = sum_x P(A|x) P(x|B), with P(A|x) the indicator of x in A
        expanded = 0.0
        pb = sum(space.mass(x) for x in b)
        for x in space.labels:
            p_x_given_b = (space.mass(x) if x in b else 0.0) / pb
            expanded += (1.0 if x in a else 0.0) * p_x_given_b
        assert core.p_bracket(a, b, space) == pytest.approx(expanded, abs=1e-12)


class TestCondition:
    def test_fair_die_even(self):
        c = core.condition(core.fair_die(), EVEN)
        assert c.labels == (2, 4, 6)
        np.testing.assert_allclose(c.masses, [1 / 3] * 3, atol=1e-15)

    def test_whole_space_unchanged(self):
        die = core.fair_die()
        c = core.condition(die, die.labels)
        assert c.labels == die.labels
        np.testing.assert_allclose(c.masses, die.masses, atol=1e-16)

    def test_biased_die(self):
        m = [0.5, 0.1, 0.1, 0.1, 0.1, 0.1]
        s = core.SampleSpace(range(1, 7), m)
        c = core.condition(s, EVEN)
        # enumeration: P(x|E) = m(x) / sum_{y in E} m(y)
        pe = sum(m[i - 1] for i in EVEN)
        expected = [m[i - 1] / pe for i in (2, 4, 6)]
        np.testing.assert_allclose(c.masses, expected, atol=1e-15)
        np.testing.assert_allclose(c.masses, [1 / 3] * 3, atol=1e-15)

    def test_null(self):
        s = core.SampleSpace("ab", [1.0, 0.0])
        with pytest.raises(ConditioningOnNullError):
            core.condition(s, {"b"})


class TestBayes:
    def test_die(self):
        die = core.fair_die()
        assert core.bayes({2}, EVEN, die) == pytest.approx(1 / 3, abs=1e-15)

    def test_b_equals_a(self):
        die = core.fair_die()
        assert core.bayes({1, 2}, {1, 2}, die) == pytest.approx(1.0, abs=1e-15)

    def test_independent_events(self):
        ps = core.ProductSpace([core.fair_die(), core.fair_die()])
        joint = ps.joint()
        a = ps.lift_event(0, {1, 2})
        b = ps.lift_event(1, EVEN)
        assert core.bayes(a, b, joint) == pytest.approx(core.probability(a, joint), abs=1e-14)

    def test_null(self):
        s = core.SampleSpace("ab", [1.0, 0.0])
        with pytest.raises(ConditioningOnNullError):
            core.bayes({"b"}, {"a"}, s)

    @staticmethod
    def _all_pairs(space):
        labels = list(space.labels)
        nonempty = [set(c) for r in range(1, len(labels) + 1) for c in itertools.combinations(labels, r)]
        for a in nonempty:
            if core.probability(a, space) <= 0:
                continue
            for b in nonempty:
                if core.probability(b, space) <= 0:
                    continue
                assert abs(core.bayes(a, b, space) - core.p_bracket(a, b, space)) <= 1e-14

    def test_all_pairs_on_eight_outcomes(self, rng):
        w = rng.uniform(size=8)
        w[3] = 0.0
        self._all_pairs(core.SampleSpace(range(8), w / w.sum()))

    @settings(deadline=None)
    @given(spaces(5))
    def test_all_pairs_random_spaces(self, space):
        self._all_pairs(space)


class TestExpectation:
    def test_die_moments_match_exact_fractions(self):
        die = core.fair_die()
        X = core.Observable.identity(die)
        mean, second, var = exact_die_moments()
        assert core.expectation(X, die) == pytest.approx(float(mean), abs=1e-14)
        assert core.expectation(X.apply(lambda v: v * v), die) == pytest.approx(float(second), abs=1e-14)
        assert core.variance(X, die) == pytest.approx(float(var), abs=1e-14)
        assert (str(mean), str(second), str(var)) == ("7/2", "91/6", "35/12")

    def test_constant(self):
        die = core.fair_die()
        assert core.expectation(core.Observable.constant(die, 2.5), die) == pytest.approx(2.5, abs=1e-15)

    def test_mismatched_observable(self):
        die = core.fair_die()
        with pytest.raises(DimensionError):
            core.expectation([1.0, 2.0], die)
        other = core.SampleSpace.uniform("abcdef")
        with pytest.raises(DimensionError):
            core.expectation(core.Observable.constant(other, 1.0), die)


class TestConditionalExpectation:
    def test_face_given_even(self):
        die = core.fair_die()
        X = core.Observable.identity(die)
        assert core.conditional_expectation(X, EVEN, die) == pytest.approx((2 + 4 + 6) / 3, abs=1e-15)

    def test_given_omega(self):
        die = core.fair_die()
        X = core.Observable.identity(die)
        assert core.conditional_expectation(X, die.labels, die) == pytest.approx(core.expectation(X, die), abs=1e-15)

    def test_indicator_one(self):
        die = core.fair_die()
        assert core.conditional_expectation(core.Observable.constant(die, 1.0), {1, 5}, die) == pytest.approx(1.0, abs=1e-15)

    def test_null(self):
        s = core.SampleSpace("ab", [1.0, 0.0])
        with pytest.raises(ConditioningOnNullError):
            core.conditional_expectation([1.0, 2.0], {"b"}, s)

    @given(spaces(10), st.data())
    def test_total_expectation(self, space, data):
        n = len(space)
        values = data.draw(st.lists(st.floats(-100, 100), min_size=n, max_size=n))
        blocks = data.draw(st.lists(st.integers(0, 3), min_size=n, max_size=n))
        f = core.Observable(space, values)
        total = 0.0
        for blk in set(blocks):
            H = {lab for lab, b in zip(space.labels, blocks) if b == blk}
            ph = core.probability(H, space)
            if ph > 0:
                total += core.conditional_expectation(f, H, space) * ph
        assert total == pytest.approx(core.expectation(f, space), abs=1e-12 * max(1.0, max(map(abs, values))))


class TestProductSpace:
    def test_two_dice(self):
        die = core.fair_die()
        ps = core.ProductSpace([die, die])
        X = core.Observable.identity(die)
        assert core.joint_expectation([X, X], ps) == pytest.approx(float(enumerate_product_expectation([6, 6])), abs=1e-13)
        assert float(enumerate_product_expectation([6, 6])) == 49 / 4

    def test_three_dice(self):
        die = core.fair_die()
        ps = core.ProductSpace([die] * 3)
        X = core.Observable.identity(die)
        assert core.joint_expectation([X] * 3, ps) == pytest.approx(float(enumerate_product_expectation([6, 6, 6])), abs=1e-12)

    def test_matches_joint_space_sum(self):
        a = core.SampleSpace("xyz", [0.2, 0.3, 0.5])
        b = core.SampleSpace([0, 1], [0.9, 0.1])
        ps = core.ProductSpace([a, b])
        fa = core.Observable(a, [1.0, -2.0, 4.0])
        fb = core.Observable(b, [3.0, 7.0])
        joint = ps.joint()
        prod = np.array(ps.lift_observable(0, fa, joint).values) * ps.lift_observable(1, fb, joint).values
        assert core.joint_expectation([fa, fb], ps) == pytest.approx(core.expectation(prod, joint), abs=1e-14)

    def test_unit_factor(self):
        die = core.fair_die()
        ps = core.ProductSpace([die, die])
        X = core.Observable.identity(die)
        one = core.Observable.constant(die, 1.0)
        assert core.joint_expectation([X, one], ps) == pytest.approx(3.5, abs=1e-15)

    def test_arity(self):
        die = core.fair_die()
        with pytest.raises(DimensionError):
            core.joint_expectation([core.Observable.identity(die)], core.ProductSpace([die, die]))

    @given(spaces(4), spaces(4), st.data())
    def test_independence(self, s1, s2, data):
        ps = core.ProductSpace([s1, s2])
        joint = ps.joint()
        a = ps.lift_event(0, data.draw(st.sets(st.sampled_from(list(s1.labels)))))
        b_lab = data.draw(st.sets(st.sampled_from(list(s2.labels)), min_size=1))
        b = ps.lift_event(1, b_lab)
        if core.probability(b, joint) <= 0:
            return
        assert abs(core.p_bracket(a, b, joint) - core.probability(a, joint)) <= 1e-12
        assert core.are_independent(a, b, joint)


class TestOccupationSpace:
    def test_truncation_loss_reported(self):
        lam = 1.5
        pmf = lambda n: lam**n * math.exp(-lam) / math.factorial(n)
        with pytest.warns(TruncationWarning):
            ps, lost = core.occupation_space([pmf, pmf], 3)
        kept = sum(pmf(n) for n in range(4))
        assert lost == pytest.approx(1 - kept**2, rel=1e-12)
        assert len(ps) == 2 and len(ps.factors[0]) == 4

    def test_no_loss_when_support_fits(self):
        pmf = lambda n: 0.5 if n < 2 else 0.0
        ps, lost = core.occupation_space([pmf], 4)
        assert lost == pytest.approx(0.0, abs=1e-15)
