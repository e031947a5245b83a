"""Bag enumeration, instance labeling, and the delimited dataset pipeline.

Dataset file format: UTF-8 text, LF line endings, a fixed header row, then
one comma-separated row per (bag, target) instance in (bag_id, target)
order. Sentinels keep every row the same arity: min_ops / subset_size /
max_intermediate are -1 and witness is empty when unsolvable. Difficulty is
a single character U/E/M/H. Witness text never contains a comma, so rows
split cleanly on ','.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations_with_replacement
from multiprocessing import Pool
from statistics import quantiles

from .engine import Bag, eval_expression, make_bag, parse_expression
from .solver import SolveResult, reachable_targets, solve

BIG_VALUES = (25, 50, 75)
SMALL_RANGE = range(1, 10)
N_SMALL = 5
TARGET_LO = 100
TARGET_HI = 999

HEADER = (
    "bag_id,n1,n2,n3,n4,n5,big,target,solvable,min_ops,difficulty,"
    "subset_size,n_min_subsets,max_intermediate,op_add,op_sub,op_mul,op_div,witness"
)
N_FIELDS = HEADER.count(",") + 1


class OutOfRangeError(ValueError):
    """A value outside the range the difficulty taxonomy covers."""


class FormatError(ValueError):
    """Malformed dataset file; `lineno` is 1-based."""

    def __init__(self, message: str, lineno: int):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class DatasetWriteError(OSError):
    """Dataset generation could not complete its output file."""


class DifficultyLabel(Enum):
    UNSOLVABLE = "U"
    EASY = "E"
    MEDIUM = "M"
    HARD = "H"

    @classmethod
    def from_code(cls, code: str) -> "DifficultyLabel":
        try:
            return cls(code)
        except ValueError:
            raise ValueError(f"unknown difficulty code {code!r}") from None


def difficulty_label(min_ops: int | None) -> DifficultyLabel:
    """Map a minimum operation count to its difficulty bucket.

    None -> Unsolvable, 0-2 -> Easy, 3-4 -> Medium, 5 -> Hard. Counts above
    5 cannot occur for six-element bags and signal solver corruption.
    """
    if min_ops is None:
        return DifficultyLabel.UNSOLVABLE
    if not 0 <= min_ops <= 5:
        raise OutOfRangeError(f"min_ops must be in 0..5, got {min_ops}")
    if min_ops <= 2:
        return DifficultyLabel.EASY
    if min_ops <= 4:
        return DifficultyLabel.MEDIUM
    return DifficultyLabel.HARD


def enumerate_bags() -> list[Bag]:
    """The canonical bag space: five values from 1..9 with repetition plus
    one of 25/50/75, ordered by (small multiset, big value). 3,861 bags."""
    bags = []
    for smalls in combinations_with_replacement(SMALL_RANGE, N_SMALL):
        for big in BIG_VALUES:
            bags.append(smalls + (big,))
    return bags


@dataclass(frozen=True)
class InstanceRecord:
    """One labeled (bag, target) row."""

    bag_id: int
    bag: Bag
    target: int
    solvable: bool
    min_ops: int
    difficulty: DifficultyLabel
    subset_size: int
    n_min_subsets: int
    max_intermediate: int
    op_add: int
    op_sub: int
    op_mul: int
    op_div: int
    witness: str

    def to_row(self) -> str:
        return ",".join(
            (
                str(self.bag_id),
                *(str(v) for v in self.bag),
                str(self.target),
                "1" if self.solvable else "0",
                str(self.min_ops),
                self.difficulty.value,
                str(self.subset_size),
                str(self.n_min_subsets),
                str(self.max_intermediate),
                str(self.op_add),
                str(self.op_sub),
                str(self.op_mul),
                str(self.op_div),
                self.witness,
            )
        )

    @classmethod
    def from_row(cls, line: str, lineno: int = 0) -> "InstanceRecord":
        parts = line.split(",")
        if len(parts) != N_FIELDS:
            raise FormatError(f"expected {N_FIELDS} fields, got {len(parts)}", lineno)
        try:
            ints = [int(parts[i]) for i in (*range(8), 9, 11, 12, 13, 14, 15, 16, 17)]
        except ValueError as exc:
            raise FormatError(str(exc), lineno) from None
        if parts[8] not in ("0", "1"):
            raise FormatError(f"solvable must be 0 or 1, got {parts[8]!r}", lineno)
        try:
            difficulty = DifficultyLabel.from_code(parts[10])
        except ValueError as exc:
            raise FormatError(str(exc), lineno) from None
        return cls(
            bag_id=ints[0],
            bag=tuple(ints[1:7]),
            target=ints[7],
            solvable=parts[8] == "1",
            min_ops=ints[8],
            difficulty=difficulty,
            subset_size=ints[9],
            n_min_subsets=ints[10],
            max_intermediate=ints[11],
            op_add=ints[12],
            op_sub=ints[13],
            op_mul=ints[14],
            op_div=ints[15],
            witness=parts[18],
        )

    def check(self):
        """Validate the row's internal consistency; raises ValueError."""
        if self.solvable:
            if self.min_ops != self.subset_size - 1:
                raise ValueError("min_ops must equal subset_size - 1")
            if self.op_add + self.op_sub + self.op_mul + self.op_div != self.min_ops:
                raise ValueError("op counts must sum to min_ops")
            if self.difficulty is not difficulty_label(self.min_ops):
                raise ValueError("difficulty inconsistent with min_ops")
            expr = parse_expression(self.witness)
            if eval_expression(expr) != self.target:
                raise ValueError("witness does not evaluate to target")
        else:
            if self.difficulty is not DifficultyLabel.UNSOLVABLE:
                raise ValueError("unsolvable rows must be labeled U")
            if self.witness:
                raise ValueError("unsolvable rows must have an empty witness")


def _record_from_result(
    bag_id: int, bag: Bag, target: int, result: SolveResult
) -> InstanceRecord:
    if result.solvable:
        return InstanceRecord(
            bag_id=bag_id,
            bag=bag,
            target=target,
            solvable=True,
            min_ops=result.min_ops,
            difficulty=difficulty_label(result.min_ops),
            subset_size=result.subset_size,
            n_min_subsets=len(result.minimal_value_subsets),
            max_intermediate=result.max_intermediate,
            op_add=result.op_add,
            op_sub=result.op_sub,
            op_mul=result.op_mul,
            op_div=result.op_div,
            witness=result.witness_text,
        )
    return InstanceRecord(
        bag_id=bag_id,
        bag=bag,
        target=target,
        solvable=False,
        min_ops=-1,
        difficulty=DifficultyLabel.UNSOLVABLE,
        subset_size=-1,
        n_min_subsets=0,
        max_intermediate=-1,
        op_add=0,
        op_sub=0,
        op_mul=0,
        op_div=0,
        witness="",
    )


def label_instance(bag_id: int, bag, target: int) -> InstanceRecord:
    """Solve and label one instance."""
    bag = make_bag(bag)
    if not TARGET_LO <= target <= TARGET_HI:
        raise ValueError(f"target must be in {TARGET_LO}..{TARGET_HI}, got {target}")
    return _record_from_result(bag_id, bag, target, solve(bag, target))


@dataclass
class PerBagSolvable:
    """Distribution of solvable-target counts across bags."""

    bags: int
    min: int
    max: int
    mean: float
    deciles: tuple[float, ...]  # 10th..90th percentiles


@dataclass
class GenerationStats:
    total: int
    unsolvable: int
    easy: int
    medium: int
    hard: int
    solvable_fraction: float
    wall_time_s: float | None = None
    per_bag: PerBagSolvable | None = None
    per_bag_counts: tuple[int, ...] | None = field(default=None, repr=False)

    @property
    def label_counts(self) -> dict[str, int]:
        return {
            "U": self.unsolvable,
            "E": self.easy,
            "M": self.medium,
            "H": self.hard,
        }


def _label_bag(task: tuple[int, Bag, int, int]) -> tuple[int, str, tuple[int, int, int, int]]:
    """Worker unit: label every target for one bag. Returns the bag's rows
    as one newline-joined blob so output bytes do not depend on how work is
    distributed."""
    bag_id, bag, lo, hi = task
    results = reachable_targets(bag, lo, hi)
    counts = {label: 0 for label in DifficultyLabel}
    lines = []
    for target in range(lo, hi + 1):
        record = _record_from_result(bag_id, bag, target, results[target])
        counts[record.difficulty] += 1
        lines.append(record.to_row())
    lines.append("")  # trailing newline for the blob
    return (
        bag_id,
        "\n".join(lines),
        (
            counts[DifficultyLabel.UNSOLVABLE],
            counts[DifficultyLabel.EASY],
            counts[DifficultyLabel.MEDIUM],
            counts[DifficultyLabel.HARD],
        ),
    )


def generate_dataset(
    bags,
    target_lo: int = TARGET_LO,
    target_hi: int = TARGET_HI,
    output_path: str | os.PathLike = "fourops_dataset.csv",
    worker_count: int = 1,
) -> GenerationStats:
    """Label every (bag, target) pair and write the dataset file.

    `bags` is a sequence of (bag_id, bag) pairs; rows come out in bag order,
    targets ascending, byte-identical for any worker_count. The file is
    written to `<output_path>.partial` and renamed into place only on
    success.
    """
    if worker_count < 1:
        raise ValueError(f"worker_count must be >= 1, got {worker_count}")
    items = [(bag_id, make_bag(bag), target_lo, target_hi) for bag_id, bag in bags]
    out = os.fspath(output_path)
    partial = out + ".partial"
    start = time.perf_counter()
    totals = [0, 0, 0, 0]
    try:
        with open(partial, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(HEADER + "\n")
            if worker_count == 1:
                chunks = map(_label_bag, items)
                for _, blob, counts in chunks:
                    fh.write(blob)
                    for i, c in enumerate(counts):
                        totals[i] += c
            else:
                with Pool(worker_count) as pool:
                    for _, blob, counts in pool.imap(_label_bag, items, chunksize=4):
                        fh.write(blob)
                        for i, c in enumerate(counts):
                            totals[i] += c
        os.replace(partial, out)
    except OSError as exc:
        try:
            os.unlink(partial)
        except OSError:
            pass
        raise DatasetWriteError(f"could not write dataset to {out}: {exc}") from exc
    total = sum(totals)
    solvable = total - totals[0]
    return GenerationStats(
        total=total,
        unsolvable=totals[0],
        easy=totals[1],
        medium=totals[2],
        hard=totals[3],
        solvable_fraction=solvable / total if total else 0.0,
        wall_time_s=time.perf_counter() - start,
    )


def _per_bag_summary(counts_by_bag: dict[int, int]) -> PerBagSolvable:
    counts = sorted(counts_by_bag.values())
    if len(counts) >= 2:
        deciles = tuple(quantiles(counts, n=10, method="inclusive"))
    else:
        deciles = tuple(float(counts[0]) for _ in range(9))
    return PerBagSolvable(
        bags=len(counts),
        min=counts[0],
        max=counts[-1],
        mean=sum(counts) / len(counts),
        deciles=deciles,
    )


def dataset_stats(path: str | os.PathLike) -> GenerationStats:
    """Recompute label counts, the solvable fraction, and the per-bag
    solvable-count distribution from a dataset file.

    Raises FormatError (with line number) on any malformed row.
    """
    label_totals = {label: 0 for label in DifficultyLabel}
    per_bag: dict[int, int] = {}
    with open(path, encoding="utf-8", newline="\n") as fh:
        header = fh.readline().rstrip("\n")
        if header != HEADER:
            raise FormatError("missing or wrong header", 1)
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split(",")
            if len(parts) != N_FIELDS:
                raise FormatError(
                    f"expected {N_FIELDS} fields, got {len(parts)}", lineno
                )
            try:
                bag_id = int(parts[0])
            except ValueError:
                raise FormatError(f"bad bag_id {parts[0]!r}", lineno) from None
            if parts[8] not in ("0", "1"):
                raise FormatError(f"solvable must be 0 or 1, got {parts[8]!r}", lineno)
            try:
                label = DifficultyLabel.from_code(parts[10])
            except ValueError as exc:
                raise FormatError(str(exc), lineno) from None
            label_totals[label] += 1
            per_bag.setdefault(bag_id, 0)
            if parts[8] == "1":
                per_bag[bag_id] += 1
    total = sum(label_totals.values())
    if total == 0:
        raise FormatError("dataset has no rows", 2)
    solvable = total - label_totals[DifficultyLabel.UNSOLVABLE]
    counts = tuple(per_bag[b] for b in sorted(per_bag))
    return GenerationStats(
        total=total,
        unsolvable=label_totals[DifficultyLabel.UNSOLVABLE],
        easy=label_totals[DifficultyLabel.EASY],
        medium=label_totals[DifficultyLabel.MEDIUM],
        hard=label_totals[DifficultyLabel.HARD],
        solvable_fraction=solvable / total,
        per_bag=_per_bag_summary(per_bag),
        per_bag_counts=counts,
    )
