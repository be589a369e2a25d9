import random

import pytest
from hypothesis import given, settings, strategies as st

from cogrules import ltl
from conftest import random_formula


class TestParse:
    def test_globally_implication(self):
        assert ltl.parse("G (a -> b)") == ltl.Globally(
            ltl.Implies(ltl.Atom("a"), ltl.Atom("b")))

    def test_until_with_conjunction(self):
        assert ltl.parse("a U (b & ! c)") == ltl.Until(
            ltl.Atom("a"), ltl.And(ltl.Atom("b"), ltl.Not(ltl.Atom("c"))))

    def test_convertible_shape(self):
        f = ltl.parse("G ((a & b) -> c)")
        assert f == ltl.Globally(ltl.Implies(
            ltl.And(ltl.Atom("a"), ltl.Atom("b")), ltl.Atom("c")))

    def test_whitespace_insensitive(self):
        assert ltl.parse("G(a->b)") == ltl.parse("  G ( a  ->  b ) ")

    def test_precedence_implies_lowest(self):
        assert ltl.parse("a & b -> c") == ltl.Implies(
            ltl.And(ltl.Atom("a"), ltl.Atom("b")), ltl.Atom("c"))

    def test_true_false_constants(self):
        assert ltl.parse("true") is ltl.TRUE
        assert ltl.parse("false") == ltl.Not(ltl.TRUE)

    @pytest.mark.parametrize("bad", ["", "   ", "G (a ->", "a &", "(a", "a b", "& a", "a -> @"])
    def test_errors_carry_offset(self, bad):
        with pytest.raises(ltl.ParseError) as exc:
            ltl.parse(bad)
        assert exc.value.offset >= 0


class TestToString:
    def test_globally_atom(self):
        assert ltl.to_string(ltl.Globally(ltl.Atom("a"))) == "G (a)"

    def test_nested_and(self):
        f = ltl.And(ltl.Atom("a"), ltl.And(ltl.Atom("b"), ltl.Atom("c")))
        assert ltl.to_string(f) == "(a & (b & c))"

    def test_until_true(self):
        assert ltl.to_string(ltl.Until(ltl.TRUE, ltl.Atom("a"))) == "(true U a)"

    def test_round_trip_bulk(self):
        rng = random.Random(42)
        for _ in range(2000):
            f = random_formula(rng, 8)
            assert ltl.parse(ltl.to_string(f)) == f

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=200, deadline=None)
    def test_round_trip_property(self, seed):
        f = random_formula(random.Random(seed), 8)
        assert ltl.parse(ltl.to_string(f)) == f


class TestCanonicalize:
    def test_implies_eliminated(self):
        a, b = ltl.Atom("a"), ltl.Atom("b")
        got = ltl.canonicalize(ltl.Implies(a, b))
        assert got == ltl.canonicalize(ltl.Not(ltl.And(a, ltl.Not(b))))
        assert not _contains_ops(got, (ltl.Or, ltl.Implies))

    def test_double_negation(self):
        a = ltl.Atom("a")
        assert ltl.canonicalize(ltl.Not(ltl.Not(a))) == a

    def test_commutative_ordering(self):
        a, b = ltl.Atom("a"), ltl.Atom("b")
        assert ltl.canonicalize(ltl.And(b, a)) == ltl.canonicalize(ltl.And(a, b))

    def test_true_unit_removed(self):
        a = ltl.Atom("a")
        assert ltl.canonicalize(ltl.And(a, ltl.TRUE)) == a

    def test_finally_rewritten(self):
        a = ltl.Atom("a")
        assert ltl.canonicalize(ltl.Finally(a)) == ltl.Until(ltl.TRUE, a)

    def test_associativity_normalized(self):
        assert ltl.canonicalize(ltl.parse("(a & b) & c")) == \
            ltl.canonicalize(ltl.parse("a & (b & c)"))

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=200, deadline=None)
    def test_idempotent(self, seed):
        f = random_formula(random.Random(seed), 8)
        c = ltl.canonicalize(f)
        assert ltl.canonicalize(c) == c


def _contains_ops(f, kinds):
    if isinstance(f, kinds):
        return True
    match f:
        case ltl.Not(g) | ltl.Next(g) | ltl.Finally(g) | ltl.Globally(g):
            return _contains_ops(g, kinds)
        case ltl.And(l, r) | ltl.Or(l, r) | ltl.Implies(l, r) | ltl.Until(l, r):
            return _contains_ops(l, kinds) or _contains_ops(r, kinds)
    return False


class TestClassify:
    def test_simple_convertible(self):
        v = ltl.classify(ltl.parse("G (a -> b)"))
        assert v == ltl.Convertible((("a", True),), (("b", True),))

    def test_finally_is_inference_error(self):
        v = ltl.classify(ltl.parse("F a"))
        assert v == ltl.InferenceError("Finally")

    def test_negated_literals_allowed(self):
        v = ltl.classify(ltl.parse("G ((a & ! c) -> (b & d))"))
        assert v == ltl.Convertible(
            (("a", True), ("c", False)), (("b", True), ("d", True)))

    def test_disjunctive_body_rejected(self):
        v = ltl.classify(ltl.parse("G ((a | b) -> c)"))
        assert v == ltl.InferenceError("non-conjunctive body")

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=300, deadline=None)
    def test_convertible_soundness(self, seed):
        f = random_formula(random.Random(seed), 6)
        v = ltl.classify(f)
        if isinstance(v, ltl.Convertible):
            assert isinstance(f, ltl.Globally)
            assert not _contains_ops(f.operand, (ltl.Next, ltl.Until, ltl.Finally, ltl.Globally))

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=300, deadline=None)
    def test_equal_canonicals_same_verdict(self, seed):
        rng = random.Random(seed)
        f, g = random_formula(rng, 6), random_formula(rng, 6)
        if ltl.canonicalize(f) == ltl.canonicalize(g):
            vf, vg = ltl.classify(f), ltl.classify(g)
            assert type(vf) is type(vg)
            if isinstance(vf, ltl.Convertible):
                assert vf == vg


class TestJson:
    def test_round_trip(self):
        rng = random.Random(7)
        for _ in range(200):
            f = random_formula(rng, 6)
            assert ltl.loads(ltl.dumps(f)) == f

    def test_shape(self):
        obj = ltl.to_json(ltl.parse("G (a -> b)"))
        assert obj == {"op": "globally", "args": [
            {"op": "implies", "args": [{"op": "atom", "args": ["a"]},
                                       {"op": "atom", "args": ["b"]}]}]}
