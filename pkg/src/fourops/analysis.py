"""Feature extraction and baseline models over the labeled dataset.

Two feature families:

* baseline: cheap bag/target statistics computable without running the
  solver (sums, extremes, parities, modular residues, gaps to big-number
  products).
* structural: attributes of the minimal witness found by the solver
  (subset size, count of minimal value-subsets, largest intermediate,
  per-operator usage). Unsolvable rows carry their file sentinels.

Models are trained with plain full-batch gradient descent (step-halving on
loss increase) so results are deterministic and dependency-free. The
subset-size rule is the degenerate "model" that reads difficulty straight
off the number of inputs a minimal witness uses.
"""

from __future__ import annotations

import os
import random
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .dataset import HEADER, DifficultyLabel, InstanceRecord, OutOfRangeError

BASELINE_FEATURES = (
    "small_sum",
    "small_max",
    "small_min",
    "big_value",
    "distinct_count",
    "even_count",
    "contains_5",
    "target",
    "target_parity",
    "target_mod_5",
    "target_mod_10",
    "target_mod_big",
    "target_dist_big_max",
    "target_dist_big_mean",
)

STRUCTURAL_FEATURES = (
    "subset_size",
    "n_min_subsets",
    "max_intermediate",
    "op_add",
    "op_sub",
    "op_mul",
    "op_div",
)

FEATURE_SETS = ("baseline", "baseline+structural", "subset-size-rule")

BINARY_CLASSES = ("unsolvable", "solvable")
DIFFICULTY_CLASSES = ("U", "E", "M", "H")


class NotSolvableError(ValueError):
    """Structural features requested for an unsolvable record."""


class DegenerateError(ValueError):
    """Training data is missing at least one class."""


class ArityMismatchError(ValueError):
    """Model coefficients do not line up with the requested feature set."""


class EmptyDataError(ValueError):
    """No rows to evaluate."""


@dataclass(frozen=True)
class FeatureVector:
    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        if len(self.names) != len(self.values):
            raise ValueError("feature names and values must have equal arity")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("features must be finite")

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values.tolist()))


def baseline_features(bag, target: int) -> FeatureVector:
    """Solver-independent features for one dataset-shaped instance."""
    bag = tuple(sorted(bag))
    smalls, big = bag[:-1], bag[-1]
    values = np.array(
        [
            sum(smalls),
            max(smalls),
            min(smalls),
            big,
            len(set(bag)),
            sum(1 for v in bag if v % 2 == 0),
            1.0 if 5 in bag else 0.0,
            target,
            target % 2,
            target % 5,
            target % 10,
            target % big,
            abs(target - big * max(smalls)),
            abs(target - big * sum(smalls) / len(smalls)),
        ],
        dtype=np.float64,
    )
    return FeatureVector(BASELINE_FEATURES, values)


def structural_features(record: InstanceRecord) -> FeatureVector:
    """Minimal-witness features for one solved record."""
    if not record.solvable:
        raise NotSolvableError("structural features require a solvable record")
    values = np.array(
        [
            record.subset_size,
            record.n_min_subsets,
            record.max_intermediate,
            record.op_add,
            record.op_sub,
            record.op_mul,
            record.op_div,
        ],
        dtype=np.float64,
    )
    return FeatureVector(STRUCTURAL_FEATURES, values)


def load_dataset(path: str | os.PathLike, with_witness: bool = False) -> pd.DataFrame:
    """Load a dataset file for analysis. The witness column is skipped by
    default; model features never use it."""
    columns = HEADER.split(",")
    usecols = columns if with_witness else columns[:-1]
    dtypes = {c: np.int32 for c in columns if c not in ("difficulty", "witness")}
    dtypes["difficulty"] = "category"
    if with_witness:
        dtypes["witness"] = "string"
    return pd.read_csv(path, usecols=usecols, dtype=dtypes)


def _baseline_matrix(df: pd.DataFrame) -> np.ndarray:
    smalls = df[["n1", "n2", "n3", "n4", "n5"]].to_numpy(dtype=np.float64)
    big = df["big"].to_numpy(dtype=np.float64)
    target = df["target"].to_numpy(dtype=np.float64)
    bag = np.column_stack([smalls, big])
    distinct = np.array([len(set(row)) for row in bag.astype(np.int64)], dtype=np.float64)
    X = np.column_stack(
        [
            smalls.sum(axis=1),
            smalls.max(axis=1),
            smalls.min(axis=1),
            big,
            distinct,
            (bag % 2 == 0).sum(axis=1),
            (bag == 5).any(axis=1).astype(np.float64),
            target,
            target % 2,
            target % 5,
            target % 10,
            np.mod(target, big),
            np.abs(target - big * smalls.max(axis=1)),
            np.abs(target - big * smalls.mean(axis=1)),
        ]
    )
    return X


def _structural_matrix(df: pd.DataFrame) -> np.ndarray:
    return df[list(STRUCTURAL_FEATURES)].to_numpy(dtype=np.float64)


def feature_matrix(df: pd.DataFrame, feature_set: str) -> tuple[np.ndarray, tuple[str, ...]]:
    """Row-aligned feature matrix and its column names."""
    if feature_set == "baseline":
        return _baseline_matrix(df), BASELINE_FEATURES
    if feature_set == "baseline+structural":
        X = np.column_stack([_baseline_matrix(df), _structural_matrix(df)])
        return X, BASELINE_FEATURES + STRUCTURAL_FEATURES
    raise ValueError(f"unknown feature set {feature_set!r}")


def split_by_bag(
    df: pd.DataFrame, test_fraction: float, seed: int
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Partition rows so all targets of a bag land on the same side."""
    if not 0 < test_fraction < 1:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    bag_ids = sorted(int(b) for b in df["bag_id"].unique())
    rng = random.Random(seed)
    rng.shuffle(bag_ids)
    n_test = round(test_fraction * len(bag_ids))
    test_ids = set(bag_ids[:n_test])
    mask = df["bag_id"].isin(test_ids).to_numpy()
    return df[~mask], df[mask]


@dataclass
class Hyperparams:
    learning_rate: float = 0.1
    l2: float = 1e-4
    max_epochs: int = 500
    tol: float = 1e-6  # stop when the gradient L2 norm falls below this
    seed: int = 42


@dataclass
class ModelParams:
    kind: str  # binary-logistic | multinomial-logistic | subset-size-rule
    feature_set: str
    feature_names: tuple[str, ...]
    classes: tuple[str, ...]
    coef: np.ndarray  # (n_classes, n_features + 1); column 0 is the intercept
    means: np.ndarray
    stds: np.ndarray
    seed: int
    loss_history: list[float] = field(default_factory=list, repr=False)


@dataclass
class Metrics:
    classes: tuple[str, ...]
    accuracy: float
    precision: dict[str, float]
    recall: dict[str, float]
    confusion: np.ndarray  # rows = true class, cols = predicted
    support: dict[str, int]


def binary_logistic_loss_grad(
    w: np.ndarray, X1: np.ndarray, y: np.ndarray, l2: float
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy of sigmoid(X1 @ w) against y in {0,1}, plus an L2
    penalty on the non-intercept weights. Returns (loss, gradient)."""
    z = X1 @ w
    n = len(y)
    loss = float(np.logaddexp(0.0, z).mean() - (y * z).mean())
    p = _sigmoid(z)
    grad = X1.T @ (p - y) / n
    reg = w.copy()
    reg[0] = 0.0
    return loss + 0.5 * l2 * float(reg @ reg), grad + l2 * reg


def multinomial_logistic_loss_grad(
    W: np.ndarray, X1: np.ndarray, y_idx: np.ndarray, l2: float
) -> tuple[float, np.ndarray]:
    """Mean softmax cross-entropy for class indices y_idx; W is
    (n_classes, n_features + 1). Returns (loss, gradient)."""
    n = len(y_idx)
    Z = X1 @ W.T
    Z -= Z.max(axis=1, keepdims=True)
    expZ = np.exp(Z)
    denom = expZ.sum(axis=1)
    loss = float((np.log(denom) - Z[np.arange(n), y_idx]).mean())
    P = expZ / denom[:, None]
    P[np.arange(n), y_idx] -= 1.0
    grad = P.T @ X1 / n
    reg = W.copy()
    reg[:, 0] = 0.0
    return loss + 0.5 * l2 * float((reg * reg).sum()), grad + l2 * reg


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _descend(loss_grad, w0: np.ndarray, hp: Hyperparams) -> tuple[np.ndarray, list[float]]:
    """Full-batch gradient descent with step-halving on loss increase; the
    accepted-loss sequence is non-increasing by construction."""
    w = w0
    lr = hp.learning_rate
    loss, grad = loss_grad(w)
    history = [loss]
    for _ in range(hp.max_epochs):
        if float(np.sqrt((grad * grad).sum())) < hp.tol:
            break
        while True:
            w_new = w - lr * grad
            loss_new, grad_new = loss_grad(w_new)
            if loss_new <= loss:
                break
            lr /= 2.0
            if lr < 1e-15:  # step underflow: cannot improve further
                return w, history
        w, loss, grad = w_new, loss_new, grad_new
        history.append(loss)
    return w, history


def _standardize(X: np.ndarray, names: tuple[str, ...]):
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    keep = stds > 0  # constant features carry no information; drop them
    kept_names = tuple(n for n, k in zip(names, keep) if k)
    Xs = (X[:, keep] - means[keep]) / stds[keep]
    return Xs, kept_names, means[keep], stds[keep]


def _with_intercept(X: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones(len(X)), X])


def train_binary_logistic(
    train: pd.DataFrame, feature_set: str = "baseline", hp: Hyperparams | None = None
) -> ModelParams:
    """Solvability model: logistic regression on standardized features."""
    hp = hp or Hyperparams()
    y = train["solvable"].to_numpy(dtype=np.float64)
    if len(np.unique(y)) < 2:
        raise DegenerateError("training data must contain both classes")
    X, names = feature_matrix(train, feature_set)
    Xs, kept, means, stds = _standardize(X, names)
    X1 = _with_intercept(Xs)
    w0 = np.zeros(X1.shape[1])
    w, history = _descend(
        lambda w: binary_logistic_loss_grad(w, X1, y, hp.l2), w0, hp
    )
    return ModelParams(
        kind="binary-logistic",
        feature_set=feature_set,
        feature_names=kept,
        classes=BINARY_CLASSES,
        coef=w.reshape(1, -1),
        means=means,
        stds=stds,
        seed=hp.seed,
        loss_history=history,
    )


def train_multinomial_logistic(
    train: pd.DataFrame, feature_set: str = "baseline", hp: Hyperparams | None = None
) -> ModelParams:
    """Difficulty model: multinomial logistic over U/E/M/H."""
    hp = hp or Hyperparams()
    codes = train["difficulty"].astype(str).to_numpy()
    present = set(codes)
    missing = [c for c in DIFFICULTY_CLASSES if c not in present]
    if missing:
        raise DegenerateError(f"training data is missing classes {missing}")
    class_index = {c: i for i, c in enumerate(DIFFICULTY_CLASSES)}
    y_idx = np.array([class_index[c] for c in codes], dtype=np.int64)
    X, names = feature_matrix(train, feature_set)
    Xs, kept, means, stds = _standardize(X, names)
    X1 = _with_intercept(Xs)
    k = len(DIFFICULTY_CLASSES)
    W0 = np.zeros((k, X1.shape[1]))

    def loss_grad(Wflat):
        loss, grad = multinomial_logistic_loss_grad(
            Wflat.reshape(k, -1), X1, y_idx, hp.l2
        )
        return loss, grad.ravel()

    w, history = _descend(loss_grad, W0.ravel(), hp)
    return ModelParams(
        kind="multinomial-logistic",
        feature_set=feature_set,
        feature_names=kept,
        classes=DIFFICULTY_CLASSES,
        coef=w.reshape(k, -1),
        means=means,
        stds=stds,
        seed=hp.seed,
        loss_history=history,
    )


def train_difficulty_baseline(
    train: pd.DataFrame, hp: Hyperparams | None = None
) -> ModelParams:
    """Difficulty from solver-independent features only: the reference
    baseline that structural features are measured against."""
    return train_multinomial_logistic(train, "baseline", hp)


def subset_size_rule() -> ModelParams:
    """The no-training difficulty rule: label from subset size alone."""
    return ModelParams(
        kind="subset-size-rule",
        feature_set="subset-size-rule",
        feature_names=("subset_size",),
        classes=DIFFICULTY_CLASSES,
        coef=np.zeros((0, 0)),
        means=np.zeros(0),
        stds=np.zeros(0),
        seed=0,
    )


def difficulty_from_subset_size(subset_size: int | None) -> DifficultyLabel:
    """Difficulty from minimal input usage alone: the op-count taxonomy
    composed with ops = subset_size - 1."""
    if subset_size is None:
        return DifficultyLabel.UNSOLVABLE
    if not 1 <= subset_size <= 6:
        raise OutOfRangeError(f"subset_size must be in 1..6, got {subset_size}")
    if subset_size <= 3:
        return DifficultyLabel.EASY
    if subset_size <= 5:
        return DifficultyLabel.MEDIUM
    return DifficultyLabel.HARD


def _predict(model: ModelParams, df: pd.DataFrame, feature_set: str) -> np.ndarray:
    if model.kind == "subset-size-rule":
        sizes = df["subset_size"].to_numpy()
        return np.array(
            [
                difficulty_from_subset_size(int(s) if s >= 1 else None).value
                for s in sizes
            ]
        )
    X, names = feature_matrix(df, feature_set)
    index = {n: i for i, n in enumerate(names)}
    try:
        cols = [index[n] for n in model.feature_names]
    except KeyError as exc:
        raise ArityMismatchError(f"model feature {exc} not in feature set") from None
    if model.coef.shape[1] != len(model.feature_names) + 1:
        raise ArityMismatchError(
            f"coefficient arity {model.coef.shape[1]} does not match "
            f"{len(model.feature_names)} features + intercept"
        )
    Xs = (X[:, cols] - model.means) / model.stds
    Z = _with_intercept(Xs) @ model.coef.T
    if model.kind == "binary-logistic":
        return np.where(Z[:, 0] >= 0, model.classes[1], model.classes[0])
    return np.array([model.classes[i] for i in Z.argmax(axis=1)])


def _true_labels(model: ModelParams, df: pd.DataFrame) -> np.ndarray:
    if model.kind == "binary-logistic":
        return np.where(
            df["solvable"].to_numpy() == 1, model.classes[1], model.classes[0]
        )
    return df["difficulty"].astype(str).to_numpy()


def evaluate(
    model: ModelParams, df: pd.DataFrame, feature_set: str | None = None
) -> Metrics:
    """Accuracy, per-class precision/recall, and the confusion matrix of a
    model on labeled rows. Row order does not matter."""
    if len(df) == 0:
        raise EmptyDataError("no rows to evaluate")
    feature_set = feature_set or model.feature_set
    if model.kind != "subset-size-rule" and feature_set != model.feature_set:
        raise ArityMismatchError(
            f"model was trained on {model.feature_set!r}, got {feature_set!r}"
        )
    predicted = _predict(model, df, feature_set)
    truth = _true_labels(model, df)
    classes = model.classes
    index = {c: i for i, c in enumerate(classes)}
    k = len(classes)
    confusion = np.zeros((k, k), dtype=np.int64)
    for t, p in zip(truth, predicted):
        confusion[index[t], index[p]] += 1
    support = {c: int(confusion[i].sum()) for i, c in enumerate(classes)}
    col_sums = confusion.sum(axis=0)
    precision = {
        c: float(confusion[i, i] / col_sums[i]) if col_sums[i] else 0.0
        for i, c in enumerate(classes)
    }
    recall = {
        c: float(confusion[i, i] / support[c]) if support[c] else 0.0
        for i, c in enumerate(classes)
    }
    return Metrics(
        classes=classes,
        accuracy=float(np.trace(confusion) / confusion.sum()),
        precision=precision,
        recall=recall,
        confusion=confusion,
        support=support,
    )


_INTERCEPT = "__intercept__"


def save_model(model: ModelParams, path: str | os.PathLike):
    """Plain-text model file; floats use repr so loading is exact."""
    lines = [
        f"kind {model.kind}",
        f"feature_set {model.feature_set}",
        f"seed {model.seed}",
        "classes " + " ".join(model.classes),
    ]
    for name, mean, std in zip(model.feature_names, model.means, model.stds):
        lines.append(f"standardize {name} {float(mean)!r} {float(std)!r}")
    for ci, cls in enumerate(model.classes):
        if ci >= model.coef.shape[0]:
            break
        lines.append(f"coef {cls} {_INTERCEPT} {float(model.coef[ci, 0])!r}")
        for fi, name in enumerate(model.feature_names, start=1):
            lines.append(f"coef {cls} {name} {float(model.coef[ci, fi])!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path: str | os.PathLike) -> ModelParams:
    head: dict[str, str] = {}
    feature_names: list[str] = []
    means: list[float] = []
    stds: list[float] = []
    coef_rows: dict[str, dict[str, float]] = {}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            parts = raw.split()
            if not parts:
                continue
            if parts[0] == "standardize":
                feature_names.append(parts[1])
                means.append(float(parts[2]))
                stds.append(float(parts[3]))
            elif parts[0] == "coef":
                coef_rows.setdefault(parts[1], {})[parts[2]] = float(parts[3])
            else:
                head[parts[0]] = " ".join(parts[1:])
    if head["kind"] == "subset-size-rule":
        rule = subset_size_rule()
        rule.seed = int(head["seed"])
        return rule
    classes = tuple(head["classes"].split())
    names = tuple(feature_names)
    rows = [cls for cls in classes if cls in coef_rows]
    coef = np.zeros((len(rows), len(names) + 1))
    for ri, cls in enumerate(rows):
        row = coef_rows[cls]
        coef[ri, 0] = row[_INTERCEPT]
        for fi, name in enumerate(names, start=1):
            coef[ri, fi] = row[name]
    return ModelParams(
        kind=head["kind"],
        feature_set=head["feature_set"],
        feature_names=names,
        classes=classes,
        coef=coef,
        means=np.array(means),
        stds=np.array(stds),
        seed=int(head["seed"]),
    )
