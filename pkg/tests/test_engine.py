"""Arithmetic core: combine rules, expression trees, grammar round-trips."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fourops.engine import (
    ConstraintViolation,
    Leaf,
    Node,
    Operator,
    ParseError,
    canonical_form,
    combine,
    eval_expression,
    leaf_count,
    leaf_values,
    make_bag,
    op_count,
    parse_expression,
    serialize_expression,
    valid_results,
)

ADD, SUB, MUL, DIV = Operator.ADD, Operator.SUB, Operator.MUL, Operator.DIV


class TestCombine:
    def test_basic_results(self):
        assert combine(6, 3, ADD) == 9
        assert combine(6, 3, SUB) == 3
        assert combine(6, 3, MUL) == 18
        assert combine(6, 3, DIV) == 2

    def test_nonpositive_subtraction_rejected(self):
        assert combine(4, 4, SUB) is None
        assert combine(3, 5, SUB) is None

    def test_inexact_division_rejected(self):
        assert combine(5, 3, DIV) is None
        assert combine(3, 6, DIV) is None

    def test_equal_operand_division_is_one(self):
        assert combine(4, 4, DIV) == 1

    @given(st.integers(1, 500), st.integers(1, 500))
    def test_results_always_positive_integers(self, a, b):
        for op in Operator:
            result = combine(a, b, op)
            if result is not None:
                assert isinstance(result, int) and result >= 1


class TestValidResults:
    def test_all_four_valid(self):
        assert valid_results(6, 3) == {(ADD, 9), (SUB, 3), (MUL, 18), (DIV, 2)}

    def test_inexact_division_dropped(self):
        assert valid_results(5, 3) == {(ADD, 8), (SUB, 2), (MUL, 15)}

    def test_equal_operands(self):
        assert valid_results(4, 4) == {(ADD, 8), (MUL, 16), (DIV, 1)}

    @given(st.integers(1, 300), st.integers(1, 300))
    def test_symmetric_and_consistent_with_combine(self, a, b):
        results = valid_results(a, b)
        assert results == valid_results(b, a)
        by_combine = set()
        for op in Operator:
            for x, y in ((a, b), (b, a)):
                value = combine(x, y, op)
                if value is not None:
                    by_combine.add((op, value))
        assert results == by_combine


class TestExpressionTrees:
    def test_leaf_requires_positive_integer(self):
        with pytest.raises(ValueError):
            Leaf(0)
        with pytest.raises(ValueError):
            Leaf(-3)

    def test_eval_simple_tree(self):
        expr = Node(MUL, Node(ADD, Leaf(2), Leaf(3)), Leaf(25))
        assert eval_expression(expr) == 125

    def test_eval_rejects_nonpositive_subtraction(self):
        with pytest.raises(ConstraintViolation, match="positive"):
            eval_expression(Node(SUB, Leaf(3), Leaf(5)))
        with pytest.raises(ConstraintViolation):
            eval_expression(Node(SUB, Leaf(4), Leaf(4)))

    def test_eval_rejects_inexact_division(self):
        with pytest.raises(ConstraintViolation, match="exact"):
            eval_expression(Node(DIV, Leaf(5), Leaf(3)))

    def test_eval_checks_nested_nodes(self):
        # (2-(1+2)) fails at the root even though the subtree is fine
        expr = Node(SUB, Leaf(2), Node(ADD, Leaf(1), Leaf(2)))
        with pytest.raises(ConstraintViolation):
            eval_expression(expr)

    def test_leaf_helpers(self):
        expr = Node(MUL, Node(ADD, Leaf(2), Leaf(3)), Leaf(25))
        assert leaf_values(expr) == [2, 3, 25]
        assert leaf_count(expr) == 3
        assert op_count(expr) == 2


class TestGrammar:
    def test_serialize(self):
        expr = Node(DIV, Node(MUL, Leaf(4), Leaf(75)), Leaf(3))
        assert serialize_expression(expr) == "((4*75)/3)"

    def test_parse_round_trip(self):
        text = "((4*75)/3)"
        assert serialize_expression(parse_expression(text)) == text

    def test_parse_single_leaf(self):
        assert parse_expression("75") == Leaf(75)

    @pytest.mark.parametrize(
        "text",
        ["", "(2+3", "2+3", "(2+3))", "(2 + 3)", "(02+3)", "0", "(2?3)", "((2+3)"],
    )
    def test_parse_rejects_malformed(self, text):
        with pytest.raises(ParseError):
            parse_expression(text)

    def test_parse_error_carries_offset(self):
        with pytest.raises(ParseError) as exc_info:
            parse_expression("(2?3)")
        assert exc_info.value.offset == 2

    def test_canonical_orders_commutative_operands(self):
        assert canonical_form(parse_expression("(3+2)")) == "(2+3)"
        assert canonical_form(parse_expression("(25*(3+2))")) == "((2+3)*25)"
        # - and / keep operand order
        assert canonical_form(parse_expression("(3-2)")) == "(3-2)"
        assert canonical_form(parse_expression("(6/3)")) == "(6/3)"


class TestMakeBag:
    def test_sorts_values(self):
        assert make_bag([50, 2, 9, 2, 1, 7]) == (1, 2, 2, 7, 9, 50)

    def test_rejects_empty_and_oversized(self):
        with pytest.raises(ValueError):
            make_bag([])
        with pytest.raises(ValueError):
            make_bag([1] * 9)
        assert len(make_bag([1] * 8)) == 8
        with pytest.raises(ValueError):
            make_bag([1, 2, 3], max_size=2)

    def test_rejects_nonpositive_values(self):
        with pytest.raises(ValueError):
            make_bag([1, 2, 0])
        with pytest.raises(ValueError):
            make_bag([1, 2, -5])


def expressions(max_leaves: int = 4):
    """Random constraint-respecting expression trees."""
    leaves = st.integers(1, 99).map(Leaf)

    def extend(children):
        def build(pair):
            left, right, op = pair
            lv, rv = eval_expression(left), eval_expression(right)
            if combine(lv, rv, op) is None:
                return Node(ADD, left, right)  # always valid fallback
            return Node(op, left, right)

        return st.tuples(children, children, st.sampled_from(Operator)).map(build)

    return st.recursive(leaves, extend, max_leaves=max_leaves)


@given(expressions())
def test_serialize_parse_round_trip(expr):
    text = serialize_expression(expr)
    assert parse_expression(text) == expr


@given(expressions())
def test_canonical_is_parseable_idempotent_and_value_preserving(expr):
    canonical = canonical_form(expr)
    reparsed = parse_expression(canonical)
    assert canonical_form(reparsed) == canonical
    assert eval_expression(reparsed) == eval_expression(expr)
    assert sorted(leaf_values(reparsed)) == sorted(leaf_values(expr))
