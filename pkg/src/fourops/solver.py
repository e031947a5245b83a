"""Reachability solvers for a bag of positive integers.

Two independent formulations compute which values can be built and at what
minimum operation cost:

* `closure_reach` explores the space of working multisets (sorted tuples)
  with a visited-set search; a state reached after k pair-combinations has
  exactly len(bag)-k elements, so the cost of a value is pinned by the
  smallest state it ever appears in.
* `subset_dp` indexes tables by bitmask over input positions and builds each
  subset-exact table from its disjoint partitions, carrying a canonical
  witness expression per value.

`solve` reads minimal witnesses out of the DP; `brute_force_oracle` is a
deliberately naive exhaustive enumerator kept free of any shared machinery
so the two can check each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from .engine import (
    Bag,
    Expression,
    Leaf,
    Node,
    combine,
    make_bag,
    parse_expression,
)

MAX_BAG = 8
ORACLE_MAX_BAG = 6


def closure_reach(bag) -> dict[int, int]:
    """Every reachable value mapped to its exact minimum operation count.

    Memoization key is the canonical (sorted) working multiset. Each bag
    element is reachable at cost 0; each combination result is recorded when
    the successor state is first created.
    """
    bag = make_bag(bag, MAX_BAG)
    n = len(bag)
    reach = {v: 0 for v in bag}
    seen = {bag}
    stack = [bag]
    while stack:
        state = stack.pop()
        m = len(state)
        if m < 2:
            continue
        ops = n - m + 1  # cost of any value created one combination deeper
        for i in range(m - 1):
            a = state[i]
            rest_i = state[:i] + state[i + 1 :]
            for j in range(i, m - 1):
                b = rest_i[j]
                rest = rest_i[:j] + rest_i[j + 1 :]
                # state is sorted, so a <= b; Sub/Div only valid b-over-a
                results = [a + b, a * b]
                if b > a:
                    results.append(b - a)
                if b % a == 0:
                    results.append(b // a)
                for w in results:
                    r = reach.get(w)
                    if r is None or r > ops:
                        reach[w] = ops
                    succ = tuple(sorted(rest + (w,)))
                    if succ not in seen:
                        seen.add(succ)
                        stack.append(succ)
    return reach


@dataclass
class SubsetTable:
    """Per-subset reachability with witnesses.

    `tables[mask]` maps each value obtainable using exactly the bag positions
    in `mask` to its canonical witness text (every witness over a k-subset
    has k-1 operations). Index 0 is unused.
    """

    bag: Bag
    tables: tuple[dict[int, str], ...]

    def values(self, mask: int):
        return self.tables[mask].keys()

    def witness_text(self, mask: int, value: int) -> str:
        return self.tables[mask][value]

    def witness(self, mask: int, value: int) -> Expression:
        return parse_expression(self.tables[mask][value])

    def mask_values(self, mask: int) -> tuple[int, ...]:
        """Bag values selected by a position bitmask (ascending)."""
        return tuple(v for i, v in enumerate(self.bag) if mask >> i & 1)

    def masks_by_size(self) -> list[list[int]]:
        """Nonempty masks grouped by population count; index k lists the
        k-element subsets in ascending numeric order."""
        groups: list[list[int]] = [[] for _ in range(len(self.bag) + 1)]
        for mask in range(1, 1 << len(self.bag)):
            groups[mask.bit_count()].append(mask)
        return groups

    def min_ops_map(self) -> dict[int, int]:
        """Value -> minimum operation count over all subsets; must agree
        with closure_reach on the same bag."""
        reach: dict[int, int] = {}
        for mask in range(1, len(self.tables)):
            ops = mask.bit_count() - 1
            for v in self.tables[mask]:
                r = reach.get(v)
                if r is None or r > ops:
                    reach[v] = ops
        return reach


def subset_dp(bag) -> SubsetTable:
    """Build the full subset-indexed witness table.

    Masks are processed in increasing population count (then numeric order);
    each mask combines every unordered partition into nonempty disjoint
    halves. When several witnesses produce the same (subset, value) entry,
    the lexicographically smallest canonical text wins, which makes the table
    independent of iteration order.
    """
    bag = make_bag(bag, MAX_BAG)
    n = len(bag)
    tables: list[dict[int, str]] = [{} for _ in range(1 << n)]
    for i, v in enumerate(bag):
        tables[1 << i] = {v: str(v)}
    masks = sorted(range(1, 1 << n), key=lambda m: (m.bit_count(), m))
    for mask in masks:
        if mask & (mask - 1) == 0:  # singleton, already seeded
            continue
        d = tables[mask]
        dget = d.get
        sub = (mask - 1) & mask
        while sub:
            comp = mask ^ sub
            if sub < comp:  # each unordered partition once
                small, large = tables[sub], tables[comp]
                if len(small) > len(large):
                    small, large = large, small
                large_items = list(large.items())
                for u, cu in small.items():
                    for v, cv in large_items:
                        w = u + v
                        cand = f"({cu}+{cv})" if cu <= cv else f"({cv}+{cu})"
                        old = dget(w)
                        if old is None or cand < old:
                            d[w] = cand
                        w = u * v
                        cand = f"({cu}*{cv})" if cu <= cv else f"({cv}*{cu})"
                        old = dget(w)
                        if old is None or cand < old:
                            d[w] = cand
                        if u > v:
                            old = dget(u - v)
                            cand = f"({cu}-{cv})"
                            if old is None or cand < old:
                                d[u - v] = cand
                        elif v > u:
                            old = dget(v - u)
                            cand = f"({cv}-{cu})"
                            if old is None or cand < old:
                                d[v - u] = cand
                        if u >= v:
                            if u % v == 0:
                                old = dget(u // v)
                                cand = f"({cu}/{cv})"
                                if old is None or cand < old:
                                    d[u // v] = cand
                        elif v % u == 0:
                            old = dget(v // u)
                            cand = f"({cv}/{cu})"
                            if old is None or cand < old:
                                d[v // u] = cand
            sub = (sub - 1) & mask
    return SubsetTable(bag=bag, tables=tuple(tables))


@dataclass(frozen=True)
class SolveResult:
    """Outcome of solving one (bag, target) instance.

    When solvable, `min_ops == subset_size - 1` always holds: a minimal
    witness uses each chosen input exactly once.
    """

    solvable: bool
    min_ops: int | None = None
    subset_size: int | None = None
    witness: Expression | None = None
    witness_text: str = ""
    minimal_value_subsets: frozenset[tuple[int, ...]] = frozenset()
    max_intermediate: int | None = None
    op_add: int = 0
    op_sub: int = 0
    op_mul: int = 0
    op_div: int = 0


UNSOLVABLE = SolveResult(solvable=False)


def _internal_values(expr: Expression) -> list[int]:
    """Values of every internal node (root included), left-to-right."""
    out: list[int] = []

    def rec(e: Expression) -> int:
        if isinstance(e, Leaf):
            return e.value
        v = combine(rec(e.left), rec(e.right), e.op)
        assert v is not None, "DP witness violated combine rules"
        out.append(v)
        return v

    rec(expr)
    return out


def _result_from_table(table: SubsetTable, target: int) -> SolveResult:
    hit_masks: list[int] = []
    size = 0
    for size, masks in enumerate(table.masks_by_size()):
        hit_masks = [m for m in masks if target in table.tables[m]]
        if hit_masks:
            break
    if not hit_masks:
        return UNSOLVABLE
    text = min(table.tables[m][target] for m in hit_masks)
    expr = parse_expression(text)
    internal = _internal_values(expr)
    return SolveResult(
        solvable=True,
        min_ops=size - 1,
        subset_size=size,
        witness=expr,
        witness_text=text,
        minimal_value_subsets=frozenset(table.mask_values(m) for m in hit_masks),
        max_intermediate=max(internal) if internal else target,
        op_add=text.count("+"),
        op_sub=text.count("-"),
        op_mul=text.count("*"),
        op_div=text.count("/"),
    )


def solve(bag, target: int) -> SolveResult:
    """Minimal-operation solve of one instance via the subset DP.

    The witness is drawn from a minimal-size subset; across minimal subsets
    (and within each) the lexicographically smallest canonical text is kept,
    so the result is byte-reproducible.
    """
    if target < 1:
        raise ValueError(f"target must be a positive integer, got {target}")
    return _result_from_table(subset_dp(bag), target)


def reachable_targets(bag, lo: int, hi: int) -> dict[int, SolveResult]:
    """solve() for every target in [lo, hi], sharing one subset DP."""
    if not 1 <= lo <= hi:
        raise ValueError(f"need 1 <= lo <= hi, got {lo}..{hi}")
    table = subset_dp(bag)
    return {t: _result_from_table(table, t) for t in range(lo, hi + 1)}


@lru_cache(maxsize=64)
def _oracle_reach(bag: Bag) -> dict[int, int]:
    """Exhaustive value -> min-ops map by enumerating every combination
    sequence over a shrinking working list. No memoization, no subset
    tables; shares only the arithmetic rules with the solvers."""
    reach = dict.fromkeys(bag, 0)

    def rec(vals: tuple[int, ...], ops: int):
        m = len(vals)
        nops = ops + 1
        for i in range(m - 1):
            a = vals[i]
            for j in range(i + 1, m):
                b = vals[j]
                hi, lo = (a, b) if a >= b else (b, a)
                results = [a + b, a * b]
                if hi > lo:
                    results.append(hi - lo)
                if hi % lo == 0:
                    results.append(hi // lo)
                rest = vals[:i] + vals[i + 1 : j] + vals[j + 1 :]
                for w in results:
                    r = reach.get(w)
                    if r is None or r > nops:
                        reach[w] = nops
                    if m > 2:
                        rec(rest + (w,), nops)

    rec(bag, 0)
    return reach


def brute_force_oracle(bag, target: int) -> int | None:
    """Exact minimum operation count by brute force, or None if the target
    is unreachable. Only used for cross-checking the solvers; the per-bag
    enumeration is cached so sweeping many targets stays cheap."""
    bag = make_bag(bag, ORACLE_MAX_BAG)
    return _oracle_reach(bag).get(target)
