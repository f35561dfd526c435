"""Ground-truth concepts, Gaussian sampling, and label-noise channels.

Concepts predict integer labels from points in R^d.  Labels are 0-based
everywhere (the dataset CSV schema stores them that way).  Sampling is
deterministic given a seed: the feature stream and the noise stream are
independent counter-based generators derived from (seed, stream index), so
results do not depend on how work is split across workers.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation
from .validation import (
    as_labels,
    as_matrix,
    as_points,
    as_vector,
    check_in_range,
    rng_from_seed,
)

ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class MulticlassLinearClassifier:
    """argmax_i (w_i . x + t_i), ties resolved toward the smallest index.

    weights has one row per class; biases has one entry per class.
    """

    weights: np.ndarray
    biases: np.ndarray

    def __post_init__(self):
        w = as_matrix(self.weights, "weights")
        t = as_vector(self.biases, "biases", size=w.shape[0])
        if w.shape[0] < 2:
            raise ContractViolation("a multiclass linear classifier needs at least 2 classes")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", t)

    @property
    def n_classes(self):
        return self.weights.shape[0]

    @property
    def dim(self):
        return self.weights.shape[1]

    @property
    def label_set(self):
        return tuple(range(self.n_classes))

    def scores(self, x):
        pts, single = as_points(x, self.dim)
        s = pts @ self.weights.T + self.biases
        return s[0] if single else s

    def predict(self, x):
        pts, single = as_points(x, self.dim)
        labels = np.argmax(pts @ self.weights.T + self.biases, axis=1)
        return int(labels[0]) if single else labels

    def margins(self, x):
        """Gap between the best and second-best score, per point."""
        pts, _ = as_points(x, self.dim)
        s = np.sort(pts @ self.weights.T + self.biases, axis=1)
        return s[:, -1] - s[:, -2]

    def runner_up(self, x):
        """Label with the second-largest score (smallest index on ties)."""
        pts, _ = as_points(x, self.dim)
        s = pts @ self.weights.T + self.biases
        order = np.argsort(-s, axis=1, kind="stable")
        return order[:, 1]


@dataclass(frozen=True)
class IntersectionOfHalfspaces:
    """Predicts 1 iff w_i . x + t_i >= 0 for every i; labels are {0, 1}."""

    weights: np.ndarray
    biases: np.ndarray

    def __post_init__(self):
        w = as_matrix(self.weights, "weights")
        t = as_vector(self.biases, "biases", size=w.shape[0])
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", t)

    @property
    def dim(self):
        return self.weights.shape[1]

    @property
    def label_set(self):
        return (0, 1)

    def predict(self, x):
        pts, single = as_points(x, self.dim)
        inside = np.all(pts @ self.weights.T + self.biases >= 0.0, axis=1)
        labels = inside.astype(np.int64)
        return int(labels[0]) if single else labels

    def margins(self, x):
        """Distance of the tightest constraint from zero (depth if violated)."""
        pts, _ = as_points(x, self.dim)
        return np.abs(np.min(pts @ self.weights.T + self.biases, axis=1))


def mlc_predict(model, x):
    """Evaluate a multiclass linear classifier at x (vector or batch)."""
    return model.predict(x)


def intersection_predict(model, x):
    """Evaluate an intersection of halfspaces at x (vector or batch)."""
    return model.predict(x)


@dataclass(frozen=True)
class ConfusionMatrix:
    """Row-stochastic label-noise matrix with a diagonal-margin parameter.

    entries[i, j] = Pr[observed = j | true = i].  gamma records the margin
    the construction promises; use validate_rcn / validate_contrastive to
    check it against the entries for the intended channel.
    """

    entries: np.ndarray
    gamma: float = 0.0

    def __post_init__(self):
        h = as_matrix(self.entries)
        if h.shape[0] != h.shape[1]:
            raise ContractViolation("confusion matrix must be square")
        if np.any(h < -ROW_SUM_TOL) or np.any(h > 1 + ROW_SUM_TOL):
            raise ContractViolation("confusion matrix entries must lie in [0, 1]")
        row_err = np.max(np.abs(h.sum(axis=1) - 1.0))
        if row_err > ROW_SUM_TOL:
            raise ContractViolation(f"confusion matrix rows must sum to 1 (error {row_err:.3e})")
        if self.gamma < 0:
            raise ContractViolation("gamma must be nonnegative")
        object.__setattr__(self, "entries", h)
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def n_labels(self):
        return self.entries.shape[0]

    def diagonal_margin(self):
        """min over i != j of H[i, i] - H[i, j]."""
        h = self.entries
        off = h + np.diag(np.full(self.n_labels, np.inf))
        return float(np.min(np.diag(h)[:, None] - off.min(axis=1)[:, None]))

    def validate_rcn(self):
        h = self.entries
        k = self.n_labels
        for i in range(k):
            for j in range(k):
                if i != j and h[i, i] < h[i, j] + self.gamma - ROW_SUM_TOL:
                    raise ContractViolation(
                        f"RCN margin violated at ({i},{j}): {h[i, i]} < {h[i, j]} + {self.gamma}"
                    )
        return self

    def validate_contrastive(self):
        h = self.entries
        if np.max(np.abs(np.diag(h))) > ROW_SUM_TOL:
            raise ContractViolation("contrastive confusion matrix must have zero diagonal")
        off = h[~np.eye(self.n_labels, dtype=bool)]
        if np.min(off) < self.gamma - ROW_SUM_TOL:
            raise ContractViolation("contrastive off-diagonal entries must be at least gamma")
        return self


def symmetric_confusion(n_labels, gamma):
    """Equal-off-diagonal RCN matrix whose diagonal margin is exactly gamma."""
    k = int(n_labels)
    check_in_range(gamma, 0.0, 1.0, "gamma", hi_open=True)
    diag = (gamma * (k - 1) + 1.0) / k
    off = (1.0 - diag) / (k - 1)
    h = np.full((k, k), off)
    np.fill_diagonal(h, diag)
    return ConfusionMatrix(h, gamma=gamma).validate_rcn()


VALID_NOISE_KINDS = ("none", "rcn", "adversarial", "contrastive")
VALID_ADVERSARIAL_STRATEGIES = ("uniform-flip", "boundary-flip")


@dataclass(frozen=True)
class NoiseSpec:
    """Which channel corrupts the clean labels, and with what parameters."""

    kind: str = "none"
    rate: float = 0.0
    strategy: str = "uniform-flip"
    matrix: ConfusionMatrix | None = None

    def __post_init__(self):
        if self.kind not in VALID_NOISE_KINDS:
            raise ContractViolation(f"unknown noise kind {self.kind!r}")
        if self.kind == "adversarial":
            check_in_range(self.rate, 0.0, 0.5, "rate", hi_open=True)
            if self.strategy not in VALID_ADVERSARIAL_STRATEGIES:
                raise ContractViolation(f"unknown adversarial strategy {self.strategy!r}")
        if self.kind == "rcn":
            if self.matrix is None:
                raise ContractViolation("rcn noise needs a confusion matrix")
            self.matrix.validate_rcn()
        if self.kind == "contrastive":
            if self.matrix is None:
                raise ContractViolation("contrastive noise needs a confusion matrix")
            self.matrix.validate_contrastive()


@dataclass(frozen=True)
class LabeledDataset:
    """n samples in R^d with integer labels drawn from a fixed alphabet."""

    xs: np.ndarray
    ys: np.ndarray
    label_set: tuple = field(default=())

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        if xs.ndim != 2:
            raise ContractViolation("xs must be a 2-d array")
        if xs.size:
            xs = as_matrix(xs, "xs")
        ys = as_labels(self.ys, "ys")
        if xs.shape[0] != ys.shape[0]:
            raise ContractViolation("xs and ys disagree on sample count")
        labels = tuple(int(v) for v in self.label_set)
        if ys.size and not np.all(np.isin(ys, labels)):
            raise ContractViolation("ys contains labels outside label_set")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "label_set", labels)

    @property
    def n(self):
        return self.xs.shape[0]

    @property
    def dim(self):
        return self.xs.shape[1]

    def with_labels(self, ys):
        return LabeledDataset(self.xs, ys, self.label_set)


def _sample_from_rows(matrix, rows, rng):
    """Draw one categorical sample per row index from a stochastic matrix."""
    cdf = np.cumsum(matrix, axis=1)
    u = rng.random(rows.shape[0])
    return np.argmin(cdf[rows] < u[:, None], axis=1)


def apply_confusion(ys, matrix, rng):
    """Push labels through Pr[observed = j | true = i] = matrix[i, j]."""
    return _sample_from_rows(matrix.entries, ys, rng)


def apply_adversarial(dataset, rate, strategy, seed, concept=None):
    """Change exactly floor(rate * n) labels.

    uniform-flip picks victims uniformly at random; boundary-flip picks the
    samples with the smallest margin under the concept (and flips them to the
    runner-up label, the class just across the boundary).
    """
    check_in_range(rate, 0.0, 0.5, "rate", hi_open=True)
    if strategy not in VALID_ADVERSARIAL_STRATEGIES:
        raise ContractViolation(f"unknown adversarial strategy {strategy!r}")
    n = dataset.n
    budget = int(math.floor(rate * n))
    if budget == 0:
        return dataset
    rng = rng_from_seed(seed)
    labels = np.array(dataset.label_set)
    ys = dataset.ys.copy()
    if strategy == "uniform-flip":
        victims = rng.choice(n, size=budget, replace=False)
        # shift by 1..K-1 positions within the alphabet: always a different label
        pos = np.searchsorted(labels, ys[victims])
        shift = rng.integers(1, labels.size, size=budget)
        ys[victims] = labels[(pos + shift) % labels.size]
    else:
        if concept is None:
            raise ContractViolation("boundary-flip needs the concept to compute margins")
        margins = concept.margins(dataset.xs)
        victims = np.argsort(margins, kind="stable")[:budget]
        if isinstance(concept, MulticlassLinearClassifier):
            ys[victims] = concept.runner_up(dataset.xs[victims])
        else:
            ys[victims] = np.where(ys[victims] == labels[0], labels[-1], labels[0])
    return dataset.with_labels(ys)


def sample_dataset(concept, noise, n, seed):
    """Draw n i.i.d. standard Gaussian points, label them, corrupt the labels.

    Deterministic given (concept, noise, n, seed); the x stream and the noise
    stream never interact.
    """
    if n < 0:
        raise ContractViolation("n must be nonnegative")
    if noise is None:
        noise = NoiseSpec()
    gen_x = rng_from_seed(seed, stream=0)
    xs = gen_x.standard_normal((int(n), concept.dim))
    ys = np.asarray(concept.predict(xs), dtype=np.int64) if n else np.zeros(0, dtype=np.int64)
    ds = LabeledDataset(xs, ys, concept.label_set)
    if noise.kind == "none" or n == 0:
        return ds
    gen_noise = rng_from_seed(seed, stream=1)
    if noise.kind in ("rcn", "contrastive"):
        return ds.with_labels(apply_confusion(ys, noise.matrix, gen_noise))
    return apply_adversarial(ds, noise.rate, noise.strategy, gen_noise.integers(2**63), concept)


# ---------------------------------------------------------------------------
# file formats

def dataset_to_csv(dataset, path_or_buf):
    """CSV with header x0,...,x{d-1},y; floats in full round-trip precision."""
    own = isinstance(path_or_buf, (str, bytes))
    f = open(path_or_buf, "w", newline="") if own else path_or_buf
    try:
        writer = csv.writer(f)
        writer.writerow([f"x{i}" for i in range(dataset.dim)] + ["y"])
        for row, label in zip(dataset.xs, dataset.ys):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])
    finally:
        if own:
            f.close()


def dataset_from_csv(path_or_buf, label_set=None):
    own = isinstance(path_or_buf, (str, bytes))
    f = open(path_or_buf, "r", newline="") if own else path_or_buf
    try:
        reader = csv.reader(f)
        header = next(reader)
        d = len(header) - 1
        xs, ys = [], []
        for row in reader:
            xs.append([float(v) for v in row[:d]])
            ys.append(int(row[d]))
    finally:
        if own:
            f.close()
    xs = np.asarray(xs, dtype=float).reshape(len(ys), d)
    ys = np.asarray(ys, dtype=np.int64)
    if label_set is None:
        label_set = tuple(sorted(set(int(v) for v in ys)))
    return LabeledDataset(xs, ys, label_set)


def concept_to_json(concept):
    if isinstance(concept, MulticlassLinearClassifier):
        kind = "mlc"
    elif isinstance(concept, IntersectionOfHalfspaces):
        kind = "intersection"
    else:
        raise ContractViolation(f"cannot serialize concept of type {type(concept).__name__}")
    return {
        "kind": kind,
        "weights": [float(v) for v in concept.weights.ravel()],
        "biases": [float(v) for v in concept.biases],
        "label_count": int(concept.weights.shape[0]) if kind == "mlc" else 2,
    }


def concept_from_json(obj):
    kind = obj["kind"]
    rows = len(obj["biases"])
    weights = np.asarray(obj["weights"], dtype=float).reshape(rows, -1)
    biases = np.asarray(obj["biases"], dtype=float)
    if kind == "mlc":
        return MulticlassLinearClassifier(weights, biases)
    if kind == "intersection":
        return IntersectionOfHalfspaces(weights, biases)
    raise ContractViolation(f"unknown concept kind {kind!r}")


def save_concept(concept, path):
    with open(path, "w") as f:
        json.dump(concept_to_json(concept), f, indent=2)


def load_concept(path):
    with open(path) as f:
        return concept_from_json(json.load(f))


def dataset_to_csv_string(dataset):
    buf = io.StringIO()
    dataset_to_csv(dataset, buf)
    return buf.getvalue()
