"""One round of subspace discovery from per-cube conditional statistics.

Two finders share the same skeleton: partition the discovered subspace,
compute per-cube per-label statistics in the orthogonal complement, pool
them into a PSD matrix weighted by cube mass, and return the eigenvectors
above a threshold.

``mlc_direction_candidates`` pools the raw conditional first moments (whose
norms already shrink with sampling noise, so a single eigenvalue threshold
suffices).  ``mim_direction_candidates`` regresses each label indicator by a
low-degree polynomial and pools unit eigenvectors of the per-cube gradient
outer products.  Unit vectors carry no noise attenuation, so each per-cube
eigenvalue gate adds a finite-sample floor scaling like
``noise_mult * degree * n_features / n_cube`` on top of the configured
``sigma^2 / (4 k_hint)``; without it, small cubes flood the pooled matrix
with noise directions at realistic sample sizes.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ContractViolation, EmptyPartitionError
from .hermite import gradient_outer_product, hermite_regression, n_basis_functions
from .partition import OUTSIDE, SubspaceBasis, build_partition, locate
from .validation import check_in_range


@dataclass(frozen=True)
class DirectionFinderConfig:
    """Thresholds and regression settings for one discovery round.

    eps        target accuracy driving derived defaults
    cube_eps   partition cell width
    sigma      eigenvalue threshold for pooled first moments, and the scale
               of the per-cube gate sigma^2 / (4 k_hint) for regressions
    m          regression degree (>= 1)
    eta        regression slack budget (diagnostic; the solver is exact up
               to the ridge)
    t_eig      eigenvalue threshold on the pooled matrix of unit vectors
    k_hint     upper bound on the hidden subspace dimension
    noise_mult finite-sample multiplier for the per-cube gate
    k_max      regression runs on at most this many rotated coordinates
    """

    eps: float = 0.1
    cube_eps: float = 0.25
    sigma: float = 0.05
    m: int = 1
    eta: float | None = None
    t_eig: float | None = None
    k_hint: int = 2
    noise_mult: float = 5.0
    k_max: int = 16
    ridge: float = 1e-8
    shift: float | None = None

    def __post_init__(self):
        check_in_range(self.eps, 0.0, 1.0, "eps", lo_open=True, hi_open=True)
        check_in_range(self.cube_eps, 0.0, 1.0, "cube_eps", lo_open=True, hi_open=True)
        check_in_range(self.sigma, 0.0, np.inf, "sigma", lo_open=True)
        if self.m < 1:
            raise ContractViolation("regression degree m must be at least 1")
        if self.k_hint < 1:
            raise ContractViolation("k_hint must be at least 1")
        if self.eta is None:
            object.__setattr__(self, "eta", self.sigma / 8.0)
        if self.t_eig is None:
            object.__setattr__(self, "t_eig", self.sigma / 2.0)
        if self.shift is None:
            object.__setattr__(self, "shift", 0.25 * self.cube_eps)
        check_in_range(self.shift, 0.0, self.cube_eps / 2.0, "shift", lo_open=True, hi_open=True)


@dataclass(frozen=True)
class CandidateSet:
    """Unit directions in the complement of the input subspace.

    diagnostics maps cube index (or "outside"/"skipped") to the per-cube
    contribution summaries emitted while scanning.
    """

    vectors: np.ndarray
    eigenvalues: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float)
        if v.ndim != 2:
            v = v.reshape(0, 0) if v.size == 0 else v[None, :]
        lam = np.asarray(self.eigenvalues, dtype=float)
        if v.shape[0] != lam.shape[0]:
            raise ContractViolation("vectors and eigenvalues disagree in length")
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "eigenvalues", lam)

    def __len__(self):
        return self.vectors.shape[0]

    def top(self):
        """The candidate with the largest eigenvalue."""
        if len(self) == 0:
            raise ContractViolation("empty candidate set has no top vector")
        return self.vectors[np.argmax(self.eigenvalues)]


def _fix_sign(v):
    """Deterministic sign: first entry with magnitude above tolerance positive."""
    nz = np.nonzero(np.abs(v) > 1e-12)[0]
    if nz.size and v[nz[0]] < 0:
        return -v
    return v


def _check_candidates(vectors, basis):
    for v in vectors:
        if abs(np.linalg.norm(v) - 1.0) > 1e-10:
            raise ContractViolation("candidate is not unit norm")
        if basis.k and np.max(np.abs(basis.rows @ v)) > 1e-8:
            raise ContractViolation("candidate is not orthogonal to the input subspace")


def _group_by_cube(partition, dataset):
    """Sample indices per cube (OUTSIDE key collects out-of-grid points)."""
    if partition is None:
        return {(): np.arange(dataset.n)}
    cubes = locate(partition, dataset.xs)
    groups = {}
    for i, cube in enumerate(cubes):
        groups.setdefault(cube, []).append(i)
    return {cube: np.asarray(idx) for cube, idx in groups.items()}


def _eigh_descending(mat):
    lam, vec = np.linalg.eigh(mat)
    order = np.argsort(lam)[::-1]
    return lam[order], vec[:, order]


def _complement_basis(basis, dim):
    """Orthonormal rows spanning the complement of the input subspace."""
    if basis.k == 0:
        return np.eye(dim)
    return scipy.linalg.null_space(basis.rows).T


def mlc_direction_candidates(dataset, basis, cfg):
    """Pool per-cube per-label conditional first moments in the complement.

    Weights each cube by its empirical mass over the full draw, pools the
    projected moment outer products, and returns unit eigenvectors with
    eigenvalue at least cfg.sigma.
    """
    if dataset.n == 0:
        raise EmptyPartitionError("no samples to scan")
    partition = None if basis.k == 0 else build_partition(basis, cfg.cube_eps, cfg.shift)
    groups = _group_by_cube(partition, dataset)
    inside = {c: idx for c, idx in groups.items() if c is not OUTSIDE}
    if not inside:
        raise EmptyPartitionError("every sample fell outside the partition grid")
    d = dataset.dim
    pooled = np.zeros((d, d))
    diagnostics = {}
    n_total = dataset.n
    for cube, idx in sorted(inside.items()):
        mass = idx.size / n_total
        xs = dataset.xs[idx]
        ys = dataset.ys[idx]
        norms = {}
        for label in dataset.label_set:
            moment = np.where(ys == label, 1.0, 0.0) @ xs / idx.size
            moment = basis.project_out(moment)
            pooled += mass * np.outer(moment, moment)
            norms[label] = float(np.linalg.norm(moment))
        diagnostics[cube] = {"mass": mass, "moment_norms": norms}
    lam, vec = _eigh_descending(pooled)
    keep = lam >= cfg.sigma
    vectors = []
    for v in vec[:, keep].T:
        v = basis.project_out(v)
        v /= np.linalg.norm(v)
        vectors.append(_fix_sign(v))
    vectors = np.asarray(vectors).reshape(len(vectors), d)
    _check_candidates(vectors, basis)
    return CandidateSet(vectors, lam[keep], diagnostics)


def _restrict_coordinates(coords, ys, labels, k_max):
    """Rotate onto the strongest degree <= 2 signal directions when wide.

    Keeps the top k_max eigenvectors of the pooled per-label mean and
    centered second-moment signal; returns (restricted coords, back map).
    """
    dim = coords.shape[1]
    if dim <= k_max:
        return coords, np.eye(dim)
    signal = np.zeros((dim, dim))
    for label in labels:
        w = ys == label
        if not w.any():
            continue
        mu = coords[w].mean(axis=0) * (w.mean())
        signal += np.outer(mu, mu)
        second = (coords[w].T @ coords[w]) / coords.shape[0] - w.mean() * np.eye(dim)
        signal += second @ second
    _, vec = _eigh_descending(signal)
    rot = vec[:, :k_max].T
    return coords @ rot.T, rot


def mim_direction_candidates(dataset, basis, cfg):
    """Regression-based discovery round for general finite-range concepts.

    Per cube and label, fits a degree-m polynomial to the label indicator on
    the complement coordinates, takes unit eigenvectors of the analytic
    gradient outer product above the per-cube gate, pools them weighted by
    cube mass, and thresholds the pooled matrix at cfg.t_eig.
    """
    if dataset.n == 0:
        raise EmptyPartitionError("no samples to scan")
    partition = None if basis.k == 0 else build_partition(basis, cfg.cube_eps, cfg.shift)
    groups = _group_by_cube(partition, dataset)
    inside = {c: idx for c, idx in groups.items() if c is not OUTSIDE}
    if not inside:
        raise EmptyPartitionError("every sample fell outside the partition grid")
    d = dataset.dim
    comp = _complement_basis(basis, d)
    d_eff = comp.shape[0]
    pooled = np.zeros((d_eff, d_eff))
    diagnostics = {}
    n_total = dataset.n
    base_gate = cfg.sigma**2 / (4.0 * cfg.k_hint)
    for cube, idx in sorted(inside.items()):
        mass = idx.size / n_total
        coords = dataset.xs[idx] @ comp.T
        ys = dataset.ys[idx]
        coords_r, rot = _restrict_coordinates(coords, ys, dataset.label_set, cfg.k_max)
        n_feat = n_basis_functions(coords_r.shape[1], cfg.m)
        if idx.size < 2 * n_feat:
            diagnostics[cube] = {"mass": mass, "skipped": "too few samples", "n": int(idx.size)}
            continue
        gate = max(base_gate, cfg.noise_mult * cfg.m * n_feat / idx.size)
        info = {"mass": mass, "gate": gate, "top_eigenvalues": {}}
        for label in dataset.label_set:
            p = hermite_regression(coords_r, (ys == label).astype(float), cfg.m, ridge=cfg.ridge)
            grad = gradient_outer_product(p)
            lam, vec = _eigh_descending(grad)
            info["top_eigenvalues"][label] = float(lam[0]) if lam.size else 0.0
            for eig, v in zip(lam, vec.T):
                if eig < gate:
                    break
                v_full = rot.T @ v
                pooled += mass * np.outer(v_full, v_full)
        diagnostics[cube] = info
    lam, vec = _eigh_descending(pooled)
    keep = lam >= cfg.t_eig
    vectors = []
    for v in vec[:, keep].T:
        v_amb = basis.project_out(comp.T @ v)
        v_amb /= np.linalg.norm(v_amb)
        vectors.append(_fix_sign(v_amb))
    vectors = np.asarray(vectors).reshape(len(vectors), d)
    _check_candidates(vectors, basis)
    return CandidateSet(vectors, lam[keep], diagnostics)


def orthonormal_extend(basis, candidates, tol=1e-8):
    """Gram-Schmidt new vectors against the basis, dropping near-dependents.

    The output keeps the original rows first; candidate vectors whose
    residual norm falls below tol are discarded.
    """
    vectors = candidates.vectors if isinstance(candidates, CandidateSet) else np.atleast_2d(candidates)
    rows = [row for row in basis.rows]
    for v in vectors:
        r = np.asarray(v, dtype=float).copy()
        for b in rows:
            r -= (r @ b) * b
        # second pass for numerical stability
        for b in rows:
            r -= (r @ b) * b
        norm = np.linalg.norm(r)
        if norm >= tol:
            rows.append(r / norm)
    if not rows:
        return SubspaceBasis.empty(basis.dim)
    return SubspaceBasis(np.asarray(rows))
