"""Axis-cube partitions of a subspace and piecewise-constant classifiers.

A partition of a k-dimensional subspace lays the same threshold grid on each
basis coordinate:

    z_i = -sqrt(2 ln(k / eps)) + i * eps + shift,   i = 0 .. M,
    M   = ceil(2 sqrt(2 ln(k / eps)) / eps),

with natural logarithms.  Cells are left-closed / right-open, except the last
cell of each coordinate which is closed; points whose projection leaves the
grid box on some coordinate are "outside".  A standard Gaussian leaves the box
with probability at most roughly eps.

Refinement: ``refine_partition`` extends the basis with new rows and reuses
the same threshold array, but gives the new coordinates unbounded edge cells.
That makes every refined partition an exact subdivision of its parent over
all of R^d (no mass migrates from cubes to the outside region), which is what
makes the fitted error provably non-increasing under refinement.
"""

import json
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ContractViolation,
    DegeneratePartitionError,
    EmptyDatasetError,
)
from .validation import as_matrix, as_points, check_in_range, check_orthonormal_rows

ORTHONORMAL_TOL = 1e-10

OUTSIDE = None  # sentinel returned by locate() for out-of-grid points


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal rows spanning the currently discovered subspace."""

    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2:
            raise ContractViolation("basis rows must form a 2-d array")
        if rows.shape[0] > rows.shape[1]:
            raise ContractViolation("basis cannot have more rows than ambient dimensions")
        if rows.size and not np.all(np.isfinite(rows)):
            raise ContractViolation("basis rows contain non-finite entries")
        check_orthonormal_rows(rows, ORTHONORMAL_TOL)
        object.__setattr__(self, "rows", rows)

    @classmethod
    def empty(cls, dim):
        return cls(np.zeros((0, dim)))

    @property
    def k(self):
        return self.rows.shape[0]

    @property
    def dim(self):
        return self.rows.shape[1]

    def project_coords(self, x):
        """Coordinates of points in this basis, shape (n, k)."""
        pts, _ = as_points(x, self.dim)
        return pts @ self.rows.T

    def project_out(self, v):
        """Component of v orthogonal to the subspace."""
        v = np.asarray(v, dtype=float)
        if self.k == 0:
            return v.copy()
        return v - (v @ self.rows.T) @ self.rows

    def extends(self, other, tol=1e-10):
        """True if this basis starts with the rows of ``other``."""
        if other.k > self.k or other.dim != self.dim:
            return False
        return bool(np.all(np.abs(self.rows[: other.k] - other.rows) <= tol))


def grid_thresholds(k, eps, shift):
    """The per-coordinate threshold array z_0 < ... < z_M."""
    lo = -math.sqrt(2.0 * math.log(k / eps))
    m = math.ceil(2.0 * math.sqrt(2.0 * math.log(k / eps)) / eps)
    return lo + shift + eps * np.arange(m + 1), m


@dataclass(frozen=True)
class ApproximatingPartition:
    """Product grid over a subspace; cubes are addressed by int multi-indices.

    ``unbounded[c]`` marks coordinates whose first and last cells extend to
    infinity (only produced by refinement; built partitions are all bounded).
    """

    basis: SubspaceBasis
    eps: float
    shift: float
    thresholds: np.ndarray
    unbounded: tuple = field(default=())

    def __post_init__(self):
        z = np.asarray(self.thresholds, dtype=float)
        if z.ndim != 1 or z.size < 2 or np.any(np.diff(z) <= 0):
            raise ContractViolation("thresholds must be a strictly increasing 1-d array")
        flags = tuple(bool(b) for b in self.unbounded)
        if not flags:
            flags = (False,) * self.basis.k
        if len(flags) != self.basis.k:
            raise ContractViolation("unbounded flags must match the basis dimension")
        object.__setattr__(self, "thresholds", z)
        object.__setattr__(self, "unbounded", flags)

    @property
    def k(self):
        return self.basis.k

    @property
    def cells_per_coordinate(self):
        return self.thresholds.size - 1

    @property
    def n_cubes(self):
        """Core grid cubes (excluding unbounded edge extensions)."""
        return self.cells_per_coordinate ** self.k

    def locate_coords(self, coords):
        """Cell indices for subspace coordinates, -1 where out of grid.

        coords has shape (n, k); returns an int array of the same shape where
        out-of-grid entries of bounded coordinates are -1 and unbounded
        coordinates are clipped into the edge cells.
        """
        z = self.thresholds
        m = self.cells_per_coordinate
        idx = np.searchsorted(z, coords, side="right") - 1
        # the last cell is closed on the right
        idx[coords == z[-1]] = m - 1
        for c in range(self.k):
            col = idx[:, c]
            if self.unbounded[c]:
                np.clip(col, 0, m - 1, out=col)
            else:
                col[(col < 0) | (col >= m)] = -1
        return idx

    def representative(self, cube):
        """Anchor point of a cube in subspace coordinates (the cell centers)."""
        z = self.thresholds
        cube = tuple(int(c) for c in cube)
        return np.array([(z[c] + z[c + 1]) / 2.0 for c in cube])


def build_partition(basis, eps, shift):
    """Grid partition of the subspace with the documented threshold formula."""
    if basis.k == 0:
        raise DegeneratePartitionError(
            "cannot partition a 0-dimensional subspace; treat it as a single cube"
        )
    check_in_range(eps, 0.0, 1.0, "eps", lo_open=True, hi_open=True)
    check_in_range(shift, 0.0, eps / 2.0, "shift", lo_open=True, hi_open=True)
    z, _ = grid_thresholds(basis.k, eps, shift)
    return ApproximatingPartition(basis, float(eps), float(shift), z)


def refine_partition(partition, new_rows):
    """Extend the basis by new orthonormal rows, keeping the same grid.

    New coordinates reuse the parent's threshold array but get unbounded edge
    cells, so every parent cube is exactly the disjoint union of child cubes.
    """
    new_rows = as_matrix(new_rows, "new_rows", cols=partition.basis.dim)
    if new_rows.shape[0] == 0:
        return partition
    stacked = np.vstack([partition.basis.rows, new_rows])
    basis = SubspaceBasis(stacked)
    flags = partition.unbounded + (True,) * new_rows.shape[0]
    return ApproximatingPartition(basis, partition.eps, partition.shift, partition.thresholds, flags)


def locate(partition, x):
    """Multi-index of the cube containing each point, or OUTSIDE.

    Returns a single tuple (or OUTSIDE) for a vector input, else a list.
    """
    pts, single = as_points(x, partition.basis.dim)
    idx = partition.locate_coords(partition.basis.project_coords(pts))
    out = [OUTSIDE if (row < 0).any() else tuple(int(v) for v in row) for row in idx]
    return out[0] if single else out


def refine_alignment_check(coarse, fine):
    """True iff every fine cube lies inside exactly one coarse cube."""
    if not fine.basis.extends(coarse.basis):
        return False
    if fine.eps != coarse.eps or fine.shift != coarse.shift:
        return False
    if fine.thresholds.size != coarse.thresholds.size:
        return False
    if np.max(np.abs(fine.thresholds - coarse.thresholds)) > 1e-12:
        return False
    # shared coordinates must keep their (un)bounded extents: a fine cube with
    # an unbounded shared coordinate would straddle the coarse outside region
    for c in range(coarse.k):
        if fine.unbounded[c] != coarse.unbounded[c]:
            return False
    return True


@dataclass(frozen=True)
class PiecewiseConstantClassifier:
    """One label per cube plus a fallback for outside points and empty cubes.

    partition may be None, in which case the classifier is the constant
    fallback (used for the 0-dimensional subspace).
    """

    partition: ApproximatingPartition | None
    labels: dict
    fallback: int
    label_set: tuple

    def __post_init__(self):
        labels = {tuple(int(v) for v in k): int(lab) for k, lab in self.labels.items()}
        alphabet = tuple(int(v) for v in self.label_set)
        if int(self.fallback) not in alphabet:
            raise ContractViolation("fallback label must belong to the label set")
        for cube, lab in labels.items():
            if lab not in alphabet:
                raise ContractViolation("cube label outside the label set")
            if self.partition is not None:
                m = self.partition.cells_per_coordinate
                if len(cube) != self.partition.k or any(c < 0 or c >= m for c in cube):
                    raise ContractViolation(f"invalid cube index {cube}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "label_set", alphabet)
        object.__setattr__(self, "fallback", int(self.fallback))

    def predict(self, x):
        if self.partition is None:
            pts = np.asarray(x, dtype=float)
            n = 1 if pts.ndim == 1 else pts.shape[0]
            out = np.full(n, self.fallback, dtype=np.int64)
            return int(out[0]) if pts.ndim == 1 else out
        cubes = locate(self.partition, x)
        if isinstance(cubes, (tuple, type(None))):
            return self.labels.get(cubes, self.fallback) if cubes is not OUTSIDE else self.fallback
        return np.array(
            [self.fallback if c is OUTSIDE else self.labels.get(c, self.fallback) for c in cubes],
            dtype=np.int64,
        )


def classify(classifier, x):
    """Look up the label of the cube containing x (fallback when outside)."""
    return classifier.predict(x)


def _majority(counter, label_order):
    """Most frequent label, ties resolved toward the earliest alphabet entry."""
    best = None
    for lab in label_order:
        c = counter.get(lab, 0)
        if best is None or c > best[1]:
            best = (lab, c)
    return best[0]


def fit_piecewise_constant(partition, dataset):
    """Majority label per nonempty cube; fallback covers the outside region.

    The fallback is the label minimizing the empirical error on the samples
    outside the grid (global majority when every sample is inside), so the
    result attains the minimum empirical 0-1 error over all labelings that
    are constant on cubes and constant outside.
    """
    if dataset.n == 0:
        raise EmptyDatasetError("cannot fit a piecewise-constant classifier on no data")
    label_order = dataset.label_set
    cubes = locate(partition, dataset.xs)
    per_cube = {}
    outside_counts = Counter()
    global_counts = Counter()
    for cube, lab in zip(cubes, dataset.ys):
        lab = int(lab)
        global_counts[lab] += 1
        if cube is OUTSIDE:
            outside_counts[lab] += 1
        else:
            per_cube.setdefault(cube, Counter())[lab] += 1
    labels = {cube: _majority(cnt, label_order) for cube, cnt in per_cube.items()}
    fallback = _majority(outside_counts if outside_counts else global_counts, label_order)
    return PiecewiseConstantClassifier(partition, labels, fallback, label_order)


def constant_classifier(dataset):
    """Majority-label classifier; the k = 0 counterpart of the fit above."""
    if dataset.n == 0:
        raise EmptyDatasetError("cannot fit a constant classifier on no data")
    counts = Counter(int(v) for v in dataset.ys)
    return PiecewiseConstantClassifier(None, {}, _majority(counts, dataset.label_set), dataset.label_set)


# ---------------------------------------------------------------------------
# serialization

def classifier_to_json(classifier):
    p = classifier.partition
    obj = {
        "labels": {",".join(map(str, cube)): lab for cube, lab in classifier.labels.items()},
        "fallback": classifier.fallback,
        "label_set": list(classifier.label_set),
    }
    if p is None:
        obj["partition"] = None
    else:
        obj["partition"] = {
            "basis": [list(map(float, row)) for row in p.basis.rows],
            "dim": p.basis.dim,
            "eps": p.eps,
            "shift": p.shift,
            "thresholds": [float(z) for z in p.thresholds],
            "unbounded": list(p.unbounded),
        }
    return obj


def classifier_from_json(obj):
    pobj = obj["partition"]
    if pobj is None:
        partition = None
    else:
        rows = np.asarray(pobj["basis"], dtype=float).reshape(-1, pobj["dim"])
        partition = ApproximatingPartition(
            SubspaceBasis(rows),
            pobj["eps"],
            pobj["shift"],
            np.asarray(pobj["thresholds"], dtype=float),
            tuple(pobj["unbounded"]),
        )
    labels = {
        tuple(int(v) for v in key.split(",")) if key else (): lab
        for key, lab in obj["labels"].items()
    }
    return PiecewiseConstantClassifier(partition, labels, obj["fallback"], tuple(obj["label_set"]))


def save_classifier(classifier, path):
    with open(path, "w") as f:
        json.dump(classifier_to_json(classifier), f)


def load_classifier(path):
    with open(path) as f:
        return classifier_from_json(json.load(f))
