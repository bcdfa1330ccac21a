import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geoground.construct import (
    DEFAULT_LIMITS,
    DslSyntaxError,
    LimitExceeded,
    Limits,
    OPERATORS,
    OperatorArityMismatch,
    SamplingExhausted,
    UnboundId,
    UnknownOperator,
    asserted_facts,
    canonicalize,
    object_name,
    parse_program,
    sample_program,
    serialize_program,
)
from geoground.geom import make_fact


class TestNaming:
    def test_sequence(self):
        names = [object_name(i) for i in range(30)]
        assert names[:4] == ["a", "b", "c", "d"]
        assert names[25] == "z"
        assert names[26] == "aa"
        assert names[27] == "ab"


class TestParse:
    def test_three_step_midpoint(self):
        p = parse_program("a = point; b = point; m = midpoint a b")
        assert len(p.steps) == 3
        assert set(p.kinds()) == {"a", "b", "m"}

    def test_unbound_input(self):
        with pytest.raises(UnboundId):
            parse_program("o = circumcenter a b c")

    def test_two_output_intersection(self):
        p = parse_program(
            "a = point\nb = point\nc = point\nd = point\n"
            "c1 = circle a b\nc2 = circle c d\n"
            "x y = circle_circle_intersection c1 c2"
        )
        step = p.steps[-1]
        assert step.outputs == ("x", "y")
        assert p.kinds()["x"] == "point" and p.kinds()["y"] == "point"

    def test_unknown_operator(self):
        with pytest.raises(UnknownOperator):
            parse_program("a = trisect b c")

    def test_kind_mismatch(self):
        with pytest.raises(OperatorArityMismatch):
            parse_program("a = point; b = point; l = line a b; m = midpoint a l")

    def test_arity_mismatch(self):
        with pytest.raises(OperatorArityMismatch):
            parse_program("a = point; b = point; m = midpoint a")

    def test_rebinding_rejected(self):
        with pytest.raises(DslSyntaxError):
            parse_program("a = point; a = point")

    def test_goal_clause(self):
        p = parse_program("a = point; b = point; m = midpoint a b; ? cong m a m b")
        assert p.goal == make_fact("cong", ("m", "a", "m", "b"))

    def test_goal_unbound_id(self):
        with pytest.raises(UnboundId):
            parse_program("a = point; ? coll a b c")

    def test_limits(self):
        with pytest.raises(LimitExceeded):
            parse_program("a = point; b = point; c = point", Limits(2, 2, 10))

    def test_comments_and_blank_lines(self):
        p = parse_program("# leading comment\n\na = point  # trailing\n")
        assert len(p.steps) == 1

    def test_syntax_error_carries_location(self):
        with pytest.raises(DslSyntaxError) as err:
            parse_program("a = point\nnot a statement")
        assert err.value.line == 2


class TestCanonicalize:
    def test_relabeling_preserves_structure(self):
        p = parse_program("z = point; q = point; m = midpoint z q")
        c = canonicalize(p)
        assert [s.outputs for s in c.steps] == [("a",), ("b",), ("c",)]
        assert c.steps[2].inputs == ("a", "b")

    def test_commutative_inputs_sorted(self):
        p = parse_program("a = point; b = point; m = midpoint b a")
        assert canonicalize(p).steps[2].inputs == ("a", "b")

    def test_bisector_keeps_vertex(self):
        p = parse_program("a = point; b = point; c = point; l = angle_bisector c b a")
        assert canonicalize(p).steps[3].inputs == ("a", "b", "c")

    def test_round_trip(self):
        text = "a = point\nb = point\nm = midpoint a b\n? midp m a b"
        p = canonicalize(parse_program(text))
        assert parse_program(serialize_program(p)) == p

    @given(st.integers(0, 5_000))
    @settings(max_examples=80, deadline=None)
    def test_idempotent_on_sampled_programs(self, seed):
        p = sample_program(random.Random(seed), Limits(8, 14, 80))
        c = canonicalize(p)
        assert canonicalize(c) == c
        assert serialize_program(canonicalize(c)) == serialize_program(c)


class TestAssertedFacts:
    def test_midpoint_single_root_fact(self):
        p = parse_program("a = point; b = point; m = midpoint a b")
        assert asserted_facts(p) == [make_fact("midp", ("m", "a", "b"))]

    def test_circumcenter_two_congs(self):
        p = parse_program("a = point; b = point; c = point; o = circumcenter a b c")
        assert set(asserted_facts(p)) == {
            make_fact("cong", ("o", "a", "o", "b")),
            make_fact("cong", ("o", "b", "o", "c")),
        }

    def test_free_point_asserts_nothing(self):
        assert asserted_facts(parse_program("a = point")) == []

    def test_foot_perp_and_incidence(self):
        p = parse_program("a = point; b = point; c = point; l = line a b; f = foot_of_perpendicular c l")
        assert set(asserted_facts(p)) >= {
            make_fact("on_line", ("f", "l")),
            make_fact("perp", ("c", "f", "l")),
        }

    def test_parallel_line_asserts_para(self):
        p = parse_program("a = point; b = point; c = point; l = line a b; m = parallel_line c l")
        assert make_fact("para", ("l", "m")) in asserted_facts(p)


class TestSampling:
    def test_deterministic_under_seed(self):
        p1 = sample_program(random.Random(7), Limits(5, 10, 50))
        p2 = sample_program(random.Random(7), Limits(5, 10, 50))
        assert p1 == p2

    def test_sampled_programs_reparse_unchanged(self):
        for seed in range(40):
            p = sample_program(random.Random(seed), DEFAULT_LIMITS)
            assert parse_program(serialize_program(p), DEFAULT_LIMITS) == p

    def test_limits_respected_field_by_field(self):
        limits = Limits(6, 9, 50)
        for seed in range(60):
            p = sample_program(random.Random(seed), limits)
            assert len(p.steps) <= limits.max_steps
            assert p.object_count() <= limits.max_objects

    def test_precondition_gating_under_tight_limits(self):
        # operators needing absent kinds are never chosen; with room for only
        # two objects no intersection of two circles can ever be sampled
        weights = {"circle_circle_intersection": 100.0}
        for seed in range(30):
            try:
                p = sample_program(random.Random(seed), Limits(2, 2, 50), weights)
            except SamplingExhausted:
                continue
            assert all(s.operator != "circle_circle_intersection" for s in p.steps)

    def test_operator_coverage_2d(self):
        seen = set()
        for seed in range(1000):
            p = sample_program(random.Random(seed), DEFAULT_LIMITS)
            seen.update(s.operator for s in p.steps)
        expected = {n for n, spec in OPERATORS.items() if 2 in spec.sample_dims}
        assert seen == expected

    def test_operator_coverage_3d(self):
        seen = set()
        for seed in range(300):
            p = sample_program(random.Random(seed), DEFAULT_LIMITS, space_dim=3)
            seen.update(s.operator for s in p.steps)
        expected = {n for n, spec in OPERATORS.items() if 3 in spec.sample_dims}
        assert seen == expected

    def test_full_table_reachable_across_modes(self):
        seen = set()
        for seed in range(1000):
            seen.update(s.operator for s in sample_program(random.Random(seed), DEFAULT_LIMITS).steps)
        for seed in range(300):
            seen.update(
                s.operator
                for s in sample_program(random.Random(seed), DEFAULT_LIMITS, space_dim=3).steps
            )
        assert seen == set(OPERATORS)


class TestLimitsType:
    def test_validation(self):
        with pytest.raises(ValueError):
            Limits(0, 5, 5)
        with pytest.raises(ValueError):
            Limits(5, 4, 5)
