"""Integer-constrained arithmetic core: operators, pair combination rules,
expression trees, and their canonical text form.

The rules throughout: every value is a positive integer, subtraction must
stay positive, and division must be exact. Everything downstream (solvers,
dataset, CLI) goes through `combine` and the expression grammar defined here.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

Bag = tuple[int, ...]
ValueState = tuple[int, ...]


class Operator(Enum):
    ADD = "+"
    SUB = "-"
    MUL = "*"
    DIV = "/"


class ConstraintViolation(ValueError):
    """An expression node breaks the positive-integer arithmetic rules."""


class ParseError(ValueError):
    """Malformed expression text; `offset` is the failing position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


@dataclass(frozen=True)
class Leaf:
    value: int

    def __post_init__(self):
        if not isinstance(self.value, int) or self.value < 1:
            raise ValueError(f"leaf value must be a positive integer, got {self.value!r}")


@dataclass(frozen=True)
class Node:
    op: Operator
    left: "Expression"
    right: "Expression"


Expression = Leaf | Node


def make_bag(values, max_size: int = 8) -> Bag:
    """Canonicalize a collection of puzzle inputs (sorted ascending tuple)."""
    bag = tuple(sorted(values))
    if not 1 <= len(bag) <= max_size:
        raise ValueError(f"bag must hold 1..{max_size} values, got {len(bag)}")
    for v in bag:
        if not isinstance(v, int) or v < 1:
            raise ValueError(f"bag values must be positive integers, got {v!r}")
    return bag


def combine(a: int, b: int, op: Operator) -> int | None:
    """Apply `op` to (a, b) in that order; None when the result would be
    non-positive or fractional."""
    if op is Operator.ADD:
        return a + b
    if op is Operator.MUL:
        return a * b
    if op is Operator.SUB:
        return a - b if a > b else None
    if op is Operator.DIV:
        return a // b if a % b == 0 else None
    raise TypeError(f"unknown operator {op!r}")


def valid_results(a: int, b: int) -> set[tuple[Operator, int]]:
    """All valid (operator, value) outcomes for the unordered pair {a, b}.

    Sub and Div are only attempted larger-over-smaller: the reverse order is
    never valid, except equal operands dividing to 1, which the forward order
    already covers.
    """
    hi, lo = (a, b) if a >= b else (b, a)
    out = {(Operator.ADD, a + b), (Operator.MUL, a * b)}
    if hi > lo:
        out.add((Operator.SUB, hi - lo))
    if hi % lo == 0:
        out.add((Operator.DIV, hi // lo))
    return out


def eval_expression(expr: Expression) -> int:
    """Evaluate an expression tree, enforcing the constraint rules at every
    internal node.

    Raises ConstraintViolation naming the offending subtree and rule.
    """
    if isinstance(expr, Leaf):
        return expr.value
    lv = eval_expression(expr.left)
    rv = eval_expression(expr.right)
    if expr.op is Operator.SUB and lv <= rv:
        raise ConstraintViolation(
            f"{serialize_expression(expr)}: subtraction result must stay positive"
        )
    if expr.op is Operator.DIV and lv % rv != 0:
        raise ConstraintViolation(
            f"{serialize_expression(expr)}: division must be exact"
        )
    result = combine(lv, rv, expr.op)
    assert result is not None
    return result


def serialize_expression(expr: Expression) -> str:
    """Fully parenthesized infix text.

    Grammar: expr := INT | "(" expr op expr ")" ; op := "+" | "-" | "*" | "/" ;
    INT := [1-9][0-9]*. No whitespace. Round-trips through parse_expression.
    """
    if isinstance(expr, Leaf):
        return str(expr.value)
    return f"({serialize_expression(expr.left)}{expr.op.value}{serialize_expression(expr.right)})"


def canonical_form(expr: Expression) -> str:
    """Like serialize_expression, but Add/Mul operands are emitted in
    lexicographic order, recursively. Expressions equal up to commutativity
    of + and * yield identical text."""
    if isinstance(expr, Leaf):
        return str(expr.value)
    left = canonical_form(expr.left)
    right = canonical_form(expr.right)
    if expr.op in (Operator.ADD, Operator.MUL) and right < left:
        left, right = right, left
    return f"({left}{expr.op.value}{right})"


_OPERATORS = {op.value: op for op in Operator}


def parse_expression(text: str) -> Expression:
    """Inverse of serialize_expression. Raises ParseError with the byte
    offset of the first problem."""
    expr, pos = _parse(text, 0)
    if pos != len(text):
        raise ParseError("trailing input", pos)
    return expr


def _parse(text: str, pos: int) -> tuple[Expression, int]:
    if pos >= len(text):
        raise ParseError("unexpected end of input", pos)
    c = text[pos]
    if c == "(":
        left, pos = _parse(text, pos + 1)
        if pos >= len(text):
            raise ParseError("unexpected end of input", pos)
        op = _OPERATORS.get(text[pos])
        if op is None:
            raise ParseError(f"expected operator, got {text[pos]!r}", pos)
        right, pos = _parse(text, pos + 1)
        if pos >= len(text):
            raise ParseError("unexpected end of input", pos)
        if text[pos] != ")":
            raise ParseError(f"expected ')', got {text[pos]!r}", pos)
        return Node(op, left, right), pos + 1
    if c.isdigit():
        if c == "0":
            raise ParseError("integers may not start with 0", pos)
        end = pos + 1
        while end < len(text) and text[end].isdigit():
            end += 1
        return Leaf(int(text[pos:end])), end
    raise ParseError(f"unexpected character {c!r}", pos)


def leaf_values(expr: Expression) -> list[int]:
    """Leaf values in left-to-right order."""
    if isinstance(expr, Leaf):
        return [expr.value]
    return leaf_values(expr.left) + leaf_values(expr.right)


def leaf_count(expr: Expression) -> int:
    if isinstance(expr, Leaf):
        return 1
    return leaf_count(expr.left) + leaf_count(expr.right)


def op_count(expr: Expression) -> int:
    if isinstance(expr, Leaf):
        return 0
    return 1 + op_count(expr.left) + op_count(expr.right)
