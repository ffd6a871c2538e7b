import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from conftest import item, record
from fuzzycrit.errors import UnknownConceptError
from fuzzycrit.knowledge import And, Cmp, Not, Or, Persistence
from fuzzycrit.reasoner import (
    Partition,
    ScoredInterval,
    ValuedInterval,
    coalesce,
    evaluate_concept,
    evaluate_expression,
    evaluate_node,
    extrapolate_intervals,
    fuzzify_comparison,
    invert_operator,
    merge_same_value,
    negate_node,
    partition_timeline,
    resolve_precedence,
    score_at,
)
from fuzzycrit.timeutil import HOUR, MINUTE, parse_timestamp
from oracles import ramp

OPS = (">", ">=", "<", "<=", "=", "!=")


class TestExtrapolate:
    def test_one_hour_persistence(self):
        t = parse_timestamp("2020-01-01T10:00:00Z")
        (iv,) = extrapolate_intervals([item("sbp", 130, t)], Persistence(0, HOUR))
        assert (iv.start, iv.end) == (t, parse_timestamp("2020-01-01T11:00:00Z"))

    def test_empty(self):
        assert extrapolate_intervals([], Persistence(0, HOUR)) == []

    def test_symmetric_persistence(self):
        t = parse_timestamp("2020-01-01T12:00:00Z")
        (iv,) = extrapolate_intervals([item("sbp", 130, t)], Persistence(30 * MINUTE, 30 * MINUTE))
        assert (iv.start, iv.end) == (t - 30 * MINUTE, t + 30 * MINUTE)

    def test_interval_items_keep_their_span(self):
        (iv,) = extrapolate_intervals([item("drug", 1, 100, stop=500, kind="event")], Persistence(0, HOUR))
        assert (iv.start, iv.end) == (100, 500)


def _iv(v, s, e, rank=None):
    return ValuedInterval("dbp", v, s, e, rank or (s, 0))


class TestMerge:
    def test_three_overlapping_measurements_become_one(self):
        ivs = extrapolate_intervals(
            [item("dbp", 86, k * 30 * MINUTE, k) for k in range(3)], Persistence(0, HOUR))
        (merged,) = merge_same_value(resolve_precedence(ivs))
        assert (merged.start, merged.end) == (0, 2 * HOUR)

    def test_gap_keeps_two(self):
        assert len(merge_same_value([_iv(86, 0, 10), _iv(86, 20, 30)])) == 2

    def test_abutting_equal_values_merge(self):
        assert merge_same_value([_iv(86, 0, 10), _iv(86, 10, 30)]) == [_iv(86, 0, 30, (10, 0))]

    def test_different_values_not_merged(self):
        assert len(merge_same_value([_iv(86, 0, 10), _iv(87, 5, 30)])) == 2

    def test_newer_value_truncates_older(self):
        got = resolve_precedence([_iv(86, 0, 10), _iv(90, 5, 30)])
        assert [(i.value, i.start, i.end) for i in got] == [(86, 0, 5), (90, 5, 30)]


class TestPartition:
    def test_single_interval_is_one_partition(self):
        (p,) = partition_timeline({"a": [ValuedInterval("a", 1, 0, 10)]})
        assert (p.start, p.end, dict(p.values)) == (0, 10, {"a": 1})

    def test_window_adds_empty_edges(self):
        parts = partition_timeline({"a": [ValuedInterval("a", 1, 0, 10)]}, (-5, 15))
        assert [(p.start, p.end, dict(p.values)) for p in parts] == [(-5, 0, {}), (0, 10, {"a": 1}), (10, 15, {})]

    def test_empty(self):
        assert partition_timeline({}) == []

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 30), st.integers(1, 10), st.integers(0, 3)), max_size=8),
           st.lists(st.tuples(st.integers(0, 30), st.integers(1, 10), st.integers(0, 3)), max_size=8))
    def test_partitions_tile_and_are_minimal(self, a, b):
        by = {}
        for name, raw in (("a", a), ("b", b)):
            ivs = [ValuedInterval(name, v, s, s + n, (s, k)) for k, (s, n, v) in enumerate(raw)]
            by[name] = merge_same_value(resolve_precedence(ivs))
        parts = partition_timeline(by)
        ends = {e for ivs in by.values() for iv in ivs for e in (iv.start, iv.end)}
        for p, q in zip(parts, parts[1:]):
            assert p.end == q.start
            assert p.end in ends
        for p in parts:
            assert p.start < p.end


class TestFuzzify:
    @pytest.mark.parametrize("v,expect", [(139, 0.9), (135, 0.5), (130, 0.0), (100, 0.0), (140, 1.0), (200, 1.0)])
    def test_anchors(self, v, expect):
        assert fuzzify_comparison(v, Cmp("sbp", ">", 140, 10)) == pytest.approx(expect, abs=1e-9)

    def test_equality_triangle(self):
        c = Cmp("x", "=", 10, 4)
        assert [fuzzify_comparison(v, c) for v in (6, 8, 10, 12, 14)] == [0, 0.5, 1, 0.5, 0]
        assert [fuzzify_comparison(v, Cmp("x", "!=", 10, 4)) for v in (6, 8, 10)] == [1, 0.5, 0]

    def test_crisp(self):
        assert fuzzify_comparison(140, Cmp("x", ">", 140)) == 0.0
        assert fuzzify_comparison(140, Cmp("x", ">=", 140)) == 1.0

    def test_categorical(self):
        assert fuzzify_comparison("f", Cmp("sex", "=", "f")) == 1.0
        assert fuzzify_comparison("m", Cmp("sex", "!=", "f")) == 1.0
        with pytest.raises(TypeError):
            fuzzify_comparison("m", Cmp("sex", ">", "f"))

    def test_non_numeric_value(self):
        with pytest.raises(TypeError):
            fuzzify_comparison(None, Cmp("x", ">", 1, 1))

    values = st.floats(-50, 250, allow_nan=False)

    @settings(max_examples=300, deadline=None)
    @given(values, st.sampled_from(OPS), st.integers(0, 100), st.floats(0, 30, allow_nan=False))
    def test_matches_explicit_cases(self, v, op, t, d):
        assert fuzzify_comparison(v, Cmp("x", op, t, d)) == pytest.approx(ramp(v, op, t, d), abs=1e-12)

    @settings(max_examples=300, deadline=None)
    @given(values, values, st.integers(0, 200), st.floats(0.1, 30, allow_nan=False))
    def test_monotone(self, v, w, t, d):
        lo, hi = sorted((v, w))
        for op in (">", ">="):
            assert fuzzify_comparison(lo, Cmp("x", op, t, d)) <= fuzzify_comparison(hi, Cmp("x", op, t, d))
        for op in ("<", "<="):
            assert fuzzify_comparison(lo, Cmp("x", op, t, d)) >= fuzzify_comparison(hi, Cmp("x", op, t, d))

    @settings(max_examples=300, deadline=None)
    @given(values, st.integers(0, 200), st.floats(0.1, 30, allow_nan=False))
    def test_mirror_ramps(self, v, t, d):
        # ">" rises over [t - d, t]; "<" is its mirror image about t
        up = fuzzify_comparison(v, Cmp("x", ">", t, d))
        assert up == pytest.approx(fuzzify_comparison(2 * t - v, Cmp("x", "<", t, d)), abs=1e-9)
        assert 0.0 <= up <= 1.0

    def test_leaf_complement_does_not_sum_to_one(self):
        # both ramps saturate on the same side of t, so the inverted leaf is not 1 - x
        v = 135
        assert fuzzify_comparison(v, Cmp("x", ">", 140, 10)) + fuzzify_comparison(v, Cmp("x", "<=", 140, 10)) == 1.5


class TestNegate:
    def test_leaf(self):
        assert negate_node(Not(Cmp("x", ">=", "y"))) == Cmp("x", "<", "y")

    def test_de_morgan(self):
        got = negate_node(Not(Or((Cmp("sbp", ">=", 140, 10), Cmp("dbp", ">=", 90, 10)))))
        assert got == And((Cmp("sbp", "<", 140, 10), Cmp("dbp", "<", 90, 10)))

    def test_double_negation(self):
        leaf = Cmp("x", ">", 1, 2)
        assert negate_node(Not(Not(leaf))) == leaf

    @pytest.mark.parametrize("op", OPS)
    def test_inversion_is_an_involution(self, op):
        assert invert_operator(invert_operator(op)) == op


class TestEvaluate:
    hyper = Or((Cmp("sbp", ">", 140, 10), Cmp("dbp", ">", 90, 10)))

    def test_or_takes_max(self):
        assert evaluate_node(self.hyper, {"sbp": 139, "dbp": 86}) == pytest.approx(0.9)

    def test_or_with_one_operand(self):
        assert evaluate_node(self.hyper, Partition(0, 1, {"dbp": 86})) == pytest.approx(0.6)

    def test_and_needs_all(self):
        assert evaluate_node(And(self.hyper.children), {"dbp": 86}) is None

    def test_or_with_none(self):
        assert evaluate_node(self.hyper, {}) is None

    def test_no_relevant_parameters(self, hypertension_lib):
        rec = record([item("other", 1, 0)])
        assert evaluate_concept("hypertension", rec, hypertension_lib) == []

    def test_unresolved_parameter(self, hypertension_lib):
        with pytest.raises(UnknownConceptError):
            evaluate_expression(Cmp("glucose", ">", 1), {}, hypertension_lib)

    def test_concept_must_be_abstract(self, hypertension_lib):
        with pytest.raises(UnknownConceptError):
            evaluate_concept("sbp", record([]), hypertension_lib)

    @settings(max_examples=200, deadline=None)
    @given(st.one_of(st.none(), st.integers(100, 180)), st.one_of(st.none(), st.integers(60, 120)))
    def test_de_morgan_consistency(self, sbp, dbp):
        a, b = self.hyper.children
        values = {k: v for k, v in (("sbp", sbp), ("dbp", dbp)) if v is not None}
        assert evaluate_node(Not(Or((a, b))), values) == evaluate_node(And((Not(a), Not(b))), values)
        assert evaluate_node(Not(And((a, b))), values) == evaluate_node(Or((Not(a), Not(b))), values)


class TestCoalesce:
    def test_equal_neighbours_join(self):
        got = coalesce([ScoredInterval(0, 1, 0.5), ScoredInterval(1, 2, 0.5 + 1e-12), ScoredInterval(3, 4, 0.5)])
        assert [(s.start, s.end) for s in got] == [(0, 2), (3, 4)]

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.tuples(st.integers(1, 5), st.sampled_from([0.0, 0.25, 0.5, 1.0]), st.booleans()),
                    max_size=12))
    def test_same_score_function(self, raw):
        scored, t = [], 0
        for n, m, gap in raw:
            t += 1 if gap else 0
            scored.append(ScoredInterval(t, t + n, m))
            t += n
        merged = coalesce(scored)
        for x in range(0, t + 1):
            assert score_at(merged, x) == score_at(scored, x)
        for p, q in zip(merged, merged[1:]):
            assert p.end < q.start or p.membership != q.membership


def test_scores_stay_in_unit_interval(hypertension_lib):
    rec = record([item("sbp", v, k * 20 * MINUTE, k) for k, v in enumerate((120, 135, 139, 150, 145))]
                 + [item("dbp", 85, 10 * MINUTE, 9)])
    got = evaluate_concept("hypertension", rec, hypertension_lib)
    assert got and all(0.0 <= s.membership <= 1.0 and s.start < s.end for s in got)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 1000), st.integers(1, 1000))
def test_window_bounds_output(lo, span):
    assume(span > 0)
    ivs = {"a": [ValuedInterval("a", 1, 100, 600)]}
    for p in partition_timeline(ivs, (lo, lo + span)):
        assert lo <= p.start < p.end <= lo + span
