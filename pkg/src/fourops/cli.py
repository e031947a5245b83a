"""Command-line surface: solve, generate, stats, train, verify.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 violated
solver invariant (oracle disagreement, witness failure). Reports go to
stdout; --json, where offered, prints one object mirroring the text
report. Report commands can render figures to files next to the
delimited output via --figures.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from collections import Counter

from . import analysis, dataset, figures, solver
from .engine import (
    ConstraintViolation,
    eval_expression,
    leaf_values,
    make_bag,
    op_count,
    parse_expression,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INVARIANT = 3


class UsageError(Exception):
    """Bad flags or flag values; maps to exit code 1."""


class InvariantViolation(Exception):
    """A solver invariant failed; maps to exit code 3."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on usage errors; route them to 1 instead
    def error(self, message):
        raise UsageError(message)


def _parse_range(text: str, name: str) -> tuple[int, int]:
    """Parse `lo..hi`, inclusive on both ends."""
    lo, sep, hi = text.partition("..")
    if not sep:
        raise UsageError(f"{name} must look like lo..hi, got {text!r}")
    try:
        lo_i, hi_i = int(lo), int(hi)
    except ValueError:
        raise UsageError(f"{name} bounds must be integers, got {text!r}") from None
    if lo_i > hi_i:
        raise UsageError(f"{name} must have lo <= hi, got {text!r}")
    return lo_i, hi_i


def _parse_bag(text: str):
    try:
        values = [int(part) for part in text.split(",")]
        return make_bag(values)
    except (ValueError, ConstraintViolation) as exc:
        raise UsageError(f"bad --bag: {exc}") from None


def _result_fields(result: solver.SolveResult, with_witness: bool) -> dict:
    if not result.solvable:
        return {"solvable": False}
    fields: dict = {
        "solvable": True,
        "min_ops": result.min_ops,
        "subset_size": result.subset_size,
    }
    if with_witness:
        fields["witness"] = result.witness_text
    fields.update(
        n_min_subsets=len(result.minimal_value_subsets),
        max_intermediate=result.max_intermediate,
        op_add=result.op_add,
        op_sub=result.op_sub,
        op_mul=result.op_mul,
        op_div=result.op_div,
    )
    return fields


def _result_line(result: solver.SolveResult, with_witness: bool) -> str:
    if not result.solvable:
        return "unsolvable"
    fields = _result_fields(result, with_witness)
    del fields["solvable"]
    return "solvable " + " ".join(f"{k}={v}" for k, v in fields.items())


def cmd_solve(args) -> int:
    bag = _parse_bag(args.bag)
    if (args.target is None) == (args.all_targets is None):
        raise UsageError("exactly one of --target or --all-targets is required")
    if args.target is not None:
        if args.target < 1:
            raise UsageError(f"--target must be >= 1, got {args.target}")
        result = solver.solve(bag, args.target)
        if args.json:
            payload = {"bag": list(bag), "target": args.target}
            payload.update(_result_fields(result, args.witness))
            print(json.dumps(payload))
        else:
            print(_result_line(result, args.witness))
        return EXIT_OK
    lo, hi = _parse_range(args.all_targets, "--all-targets")
    if lo < 1:
        raise UsageError(f"--all-targets bounds must be >= 1, got {lo}")
    results = solver.reachable_targets(bag, lo, hi)
    if args.json:
        rows = []
        for target in range(lo, hi + 1):
            row = {"target": target}
            row.update(_result_fields(results[target], args.witness))
            rows.append(row)
        print(json.dumps({"bag": list(bag), "lo": lo, "hi": hi, "results": rows}))
    else:
        for target in range(lo, hi + 1):
            print(f"target={target} {_result_line(results[target], args.witness)}")
    return EXIT_OK


def _stats_lines(stats: dataset.GenerationStats) -> list[str]:
    lines = [
        f"total {stats.total}",
        f"unsolvable {stats.unsolvable}",
        f"easy {stats.easy}",
        f"medium {stats.medium}",
        f"hard {stats.hard}",
        f"solvable_fraction {stats.solvable_fraction:.6f}",
    ]
    if stats.per_bag is not None:
        p = stats.per_bag
        lines.append(
            f"per_bag_solvable bags={p.bags} min={p.min} "
            f"mean={p.mean:.2f} max={p.max}"
        )
        lines.append(
            "per_bag_deciles " + " ".join(f"{d:.1f}" for d in p.deciles)
        )
    if stats.wall_time_s is not None:
        lines.append(f"wall_time_s {stats.wall_time_s:.2f}")
    return lines


def _stats_json(stats: dataset.GenerationStats) -> dict:
    payload: dict = {
        "total": stats.total,
        "unsolvable": stats.unsolvable,
        "easy": stats.easy,
        "medium": stats.medium,
        "hard": stats.hard,
        "solvable_fraction": stats.solvable_fraction,
    }
    if stats.per_bag is not None:
        p = stats.per_bag
        payload["per_bag_solvable"] = {
            "bags": p.bags,
            "min": p.min,
            "mean": p.mean,
            "max": p.max,
            "deciles": list(p.deciles),
        }
    if stats.wall_time_s is not None:
        payload["wall_time_s"] = stats.wall_time_s
    return payload


def cmd_generate(args) -> int:
    jobs = args.jobs if args.jobs is not None else os.cpu_count() or 1
    if jobs < 1:
        raise UsageError(f"--jobs must be >= 1, got {jobs}")
    all_bags = list(enumerate(dataset.enumerate_bags()))
    if args.bags is not None:
        lo, hi = _parse_range(args.bags, "--bags")
        if not 0 <= lo <= hi < len(all_bags):
            raise UsageError(f"--bags must lie in 0..{len(all_bags) - 1}")
        all_bags = all_bags[lo : hi + 1]
    tlo, thi = (
        _parse_range(args.targets, "--targets")
        if args.targets is not None
        else (dataset.TARGET_LO, dataset.TARGET_HI)
    )
    if not dataset.TARGET_LO <= tlo <= thi <= dataset.TARGET_HI:
        raise UsageError(
            f"--targets must lie in {dataset.TARGET_LO}..{dataset.TARGET_HI}"
        )
    stats = dataset.generate_dataset(all_bags, tlo, thi, args.out, jobs)
    print(f"wrote {args.out}")
    for line in _stats_lines(stats):
        print(line)
    return EXIT_OK


def cmd_stats(args) -> int:
    stats = dataset.dataset_stats(args.infile)
    if args.json:
        print(json.dumps(_stats_json(stats)))
    else:
        for line in _stats_lines(stats):
            print(line)
    if args.figures:
        os.makedirs(args.figures, exist_ok=True)
        paths = [
            figures.save_difficulty_distribution(
                stats.label_counts, os.path.join(args.figures, "difficulty.png")
            ),
            figures.save_per_bag_solvable_histogram(
                stats.per_bag_counts, os.path.join(args.figures, "per_bag.png")
            ),
        ]
        for path in paths:
            print(f"figure {path}")
    return EXIT_OK


def _metrics_lines(metrics: analysis.Metrics) -> list[str]:
    lines = [f"accuracy {metrics.accuracy:.6f}"]
    for cls in metrics.classes:
        lines.append(
            f"class {cls} precision {metrics.precision[cls]:.6f} "
            f"recall {metrics.recall[cls]:.6f} support {metrics.support[cls]}"
        )
    for i, cls in enumerate(metrics.classes):
        row = " ".join(str(int(v)) for v in metrics.confusion[i])
        lines.append(f"confusion {cls} {row}")
    return lines


def cmd_train(args) -> int:
    if args.task == "solvability" and args.features == "subset-size-rule":
        raise UsageError("the subset-size rule only predicts difficulty")
    df = analysis.load_dataset(args.infile)
    train_df, test_df = analysis.split_by_bag(df, 0.2, args.seed)
    hp = analysis.Hyperparams(seed=args.seed)
    if args.features == "subset-size-rule":
        model = analysis.subset_size_rule()
    elif args.task == "solvability":
        model = analysis.train_binary_logistic(train_df, args.features, hp)
    else:
        model = analysis.train_multinomial_logistic(train_df, args.features, hp)
    analysis.save_model(model, args.out)
    metrics = analysis.evaluate(model, test_df)
    lines = [
        f"task {args.task}",
        f"features {args.features}",
        f"seed {args.seed}",
        f"train_rows {len(train_df)}",
        f"test_rows {len(test_df)}",
        f"model {args.out}",
        *_metrics_lines(metrics),
    ]
    if args.json:
        print(
            json.dumps(
                {
                    "task": args.task,
                    "features": args.features,
                    "seed": args.seed,
                    "train_rows": len(train_df),
                    "test_rows": len(test_df),
                    "model": os.fspath(args.out),
                    "accuracy": metrics.accuracy,
                    "precision": metrics.precision,
                    "recall": metrics.recall,
                    "support": metrics.support,
                    "confusion": metrics.confusion.tolist(),
                    "classes": list(metrics.classes),
                }
            )
        )
    else:
        for line in lines:
            print(line)
    if args.figures:
        os.makedirs(args.figures, exist_ok=True)
        path = figures.save_confusion_matrix(
            metrics, os.path.join(args.figures, f"confusion_{args.task}.png")
        )
        print(f"figure {path}")
    return EXIT_OK


def _verify_instance_checks(bag, target: int) -> list[str]:
    """Invariant failures (empty when healthy) for one (bag, target)."""
    failures = []
    result = solver.solve(bag, target)
    expected = solver.brute_force_oracle(bag, target)
    got = result.min_ops if result.solvable else None
    if got != expected:
        failures.append(
            f"oracle disagreement on bag={bag} target={target}: "
            f"solve={got} oracle={expected}"
        )
    if result.solvable:
        if result.min_ops != result.subset_size - 1:
            failures.append(
                f"ops/size identity broken on bag={bag} target={target}"
            )
        ops_total = result.op_add + result.op_sub + result.op_mul + result.op_div
        if ops_total != result.min_ops:
            failures.append(f"op counts do not sum on bag={bag} target={target}")
        try:
            expr = parse_expression(result.witness_text)
            value = eval_expression(expr)
        except ValueError as exc:
            failures.append(f"witness invalid on bag={bag} target={target}: {exc}")
        else:
            if value != target:
                failures.append(
                    f"witness evaluates to {value}, not {target}, on bag={bag}"
                )
            if op_count(expr) != result.min_ops:
                failures.append(f"witness op count wrong on bag={bag} target={target}")
            if Counter(leaf_values(expr)) - Counter(bag):
                failures.append(f"witness leaves exceed bag on bag={bag}")
    return failures


def cmd_verify(args) -> int:
    if args.bags < 1 or args.targets < 1:
        raise UsageError("--bags and --targets must be >= 1")
    rng = random.Random(args.seed)
    all_bags = dataset.enumerate_bags()
    sampled = [all_bags[rng.randrange(len(all_bags))] for _ in range(args.bags)]
    instance_failures: list[str] = []
    closure_failures: list[str] = []
    n_instances = 0
    for bag in sampled:
        for _ in range(args.targets):
            target = rng.randrange(dataset.TARGET_LO, dataset.TARGET_HI + 1)
            instance_failures.extend(_verify_instance_checks(bag, target))
            n_instances += 1
        if solver.closure_reach(bag) != solver.subset_dp(bag).min_ops_map():
            closure_failures.append(f"closure/DP mismatch on bag={bag}")
    checks = (
        ("oracle-witness-ops", n_instances, instance_failures),
        ("closure-dp-equivalence", len(sampled), closure_failures),
    )
    failed = False
    for name, n, failures in checks:
        status = "pass" if not failures else "FAIL"
        print(f"check {name} {status} ({n} checked)")
        for failure in failures:
            print(f"  {failure}")
            failed = True
    if failed:
        raise InvariantViolation("one or more solver invariants violated")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="fourops", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one bag against a target or range")
    p.add_argument("--bag", required=True, help="comma-separated values, e.g. 2,3,7,9,9,75")
    p.add_argument("--target", type=int)
    p.add_argument("--all-targets", metavar="LO..HI")
    p.add_argument("--witness", action="store_true", help="include the witness expression")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("generate", help="label instances and write the dataset file")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=None, help="worker count (default: all cores)")
    p.add_argument("--bags", metavar="LO..HI", help="bag_id slice (default: all 3861)")
    p.add_argument("--targets", metavar="LO..HI", help="target range (default: 100..999)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("stats", help="summarize a dataset file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--figures", metavar="DIR", help="also render report figures into DIR")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", help="train and evaluate a baseline model")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--task", required=True, choices=("solvability", "difficulty"))
    p.add_argument(
        "--features",
        required=True,
        choices=("baseline", "baseline+structural", "subset-size-rule"),
    )
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True, help="model file path")
    p.add_argument("--figures", metavar="DIR", help="also render the confusion matrix into DIR")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("verify", help="cross-check solver invariants on random instances")
    p.add_argument("--bags", type=int, required=True)
    p.add_argument("--targets", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except dataset.DatasetWriteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
