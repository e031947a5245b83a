"""Exact solver and dataset toolkit for four-operation integer puzzles.

An instance is a bag of positive integers plus a target; the goal is to
reach the target with +, -, *, / where every intermediate must stay a
positive integer and division must be exact. Solutions may use any
sub-multiset of the bag. The package solves instances exactly, labels the
full dataset-shape space (five values in 1..9 plus one of 25/50/75,
targets 100..999), and trains simple baseline models over the labels.
"""

from .engine import (
    Bag,
    ConstraintViolation,
    Expression,
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
from .solver import (
    SolveResult,
    SubsetTable,
    brute_force_oracle,
    closure_reach,
    reachable_targets,
    solve,
    subset_dp,
)
from .dataset import (
    BIG_VALUES,
    HEADER,
    TARGET_HI,
    TARGET_LO,
    DatasetWriteError,
    DifficultyLabel,
    FormatError,
    GenerationStats,
    InstanceRecord,
    OutOfRangeError,
    PerBagSolvable,
    dataset_stats,
    difficulty_label,
    enumerate_bags,
    generate_dataset,
    label_instance,
)
from .analysis import (
    BASELINE_FEATURES,
    STRUCTURAL_FEATURES,
    ArityMismatchError,
    DegenerateError,
    EmptyDataError,
    FeatureVector,
    Hyperparams,
    Metrics,
    ModelParams,
    NotSolvableError,
    baseline_features,
    difficulty_from_subset_size,
    evaluate,
    load_dataset,
    load_model,
    save_model,
    split_by_bag,
    structural_features,
    subset_size_rule,
    train_binary_logistic,
    train_difficulty_baseline,
    train_multinomial_logistic,
)

__version__ = "0.1.0"

__all__ = [
    "Bag",
    "ConstraintViolation",
    "Expression",
    "Leaf",
    "Node",
    "Operator",
    "ParseError",
    "canonical_form",
    "combine",
    "eval_expression",
    "leaf_count",
    "leaf_values",
    "make_bag",
    "op_count",
    "parse_expression",
    "serialize_expression",
    "valid_results",
    "SolveResult",
    "SubsetTable",
    "brute_force_oracle",
    "closure_reach",
    "reachable_targets",
    "solve",
    "subset_dp",
    "BIG_VALUES",
    "HEADER",
    "TARGET_HI",
    "TARGET_LO",
    "DatasetWriteError",
    "DifficultyLabel",
    "FormatError",
    "GenerationStats",
    "InstanceRecord",
    "OutOfRangeError",
    "PerBagSolvable",
    "dataset_stats",
    "difficulty_label",
    "enumerate_bags",
    "generate_dataset",
    "label_instance",
    "BASELINE_FEATURES",
    "STRUCTURAL_FEATURES",
    "ArityMismatchError",
    "DegenerateError",
    "EmptyDataError",
    "FeatureVector",
    "Hyperparams",
    "Metrics",
    "ModelParams",
    "NotSolvableError",
    "baseline_features",
    "difficulty_from_subset_size",
    "evaluate",
    "load_dataset",
    "load_model",
    "save_model",
    "split_by_bag",
    "structural_features",
    "subset_size_rule",
    "train_binary_logistic",
    "train_difficulty_baseline",
    "train_multinomial_logistic",
    "__version__",
]
