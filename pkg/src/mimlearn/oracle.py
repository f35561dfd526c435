"""Brute-force and quadrature oracles used only by the test suite.

Nothing in the main pipeline imports this module; tests import both sides
and compare.
"""

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import ContractViolation, OracleRefusalError
from .partition import OUTSIDE, locate

ENUMERATION_BUDGET = 1_000_000


@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor Gauss-Hermite nodes for expectations under N(0, I_k), k <= 3."""

    dims: int
    nodes_per_axis: int = 64

    def __post_init__(self):
        if not 1 <= self.dims <= 3:
            raise ContractViolation("quadrature grids support 1 to 3 dimensions")
        nodes, weights = np.polynomial.hermite_e.hermegauss(self.nodes_per_axis)
        weights = weights / math.sqrt(2.0 * math.pi)
        object.__setattr__(self, "axis_nodes", nodes)
        object.__setattr__(self, "axis_weights", weights)

    def tensor(self):
        """All node combinations, shape (nodes^dims, dims), and their weights."""
        node_grids = np.meshgrid(*([self.axis_nodes] * self.dims), indexing="ij")
        weight_grids = np.meshgrid(*([self.axis_weights] * self.dims), indexing="ij")
        pts = np.stack([g.ravel() for g in node_grids], axis=1)
        w = np.ones(pts.shape[0])
        for c in range(self.dims):
            w *= weight_grids[c].ravel()
        return pts, w

    def expect(self, fn):
        pts, w = self.tensor()
        return float(np.sum(w * fn(pts)))


def _box_axis_rule(lo, hi, panels, nodes, clip=8.5):
    """Composite Gauss-Legendre nodes on [lo, hi] times the Gaussian density."""
    lo = max(float(lo), -clip)
    hi = min(float(hi), clip)
    if hi <= lo:
        return np.zeros(0), np.zeros(0)
    t, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(lo, hi, panels + 1)
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        half = (b - a) / 2.0
        x = a + half * (t + 1.0)
        xs.append(x)
        ws.append(w * half * np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi))
    return np.concatenate(xs), np.concatenate(ws)


def exact_conditional_moment(concept, box, label, poly, nodes_per_axis=8, min_width=1e-9):
    """E[poly(x) 1(concept(x) = label) | x in box] by tensor quadrature.

    box is a sequence of (lo, hi) pairs, one per concept dimension (use
    +-inf for unbounded sides); poly may be None (interpreted as 1).

    The outer axes use composite Gauss-Legendre panels; the last axis is
    integrated adaptively: any panel whose nodes straddle a label boundary
    is bisected until the label is constant on it or its width falls below
    min_width, so discontinuities cost precision only at the bisection
    floor.  All lines advance level-synchronously, one batched concept
    evaluation per level.
    """
    dims = concept.dim
    if dims > 3:
        raise ContractViolation("exact conditional moments support at most 3 dimensions")
    if len(box) != dims:
        raise ContractViolation("box must have one interval per dimension")
    clip = 8.5
    if dims == 1:
        outer_pts = np.zeros((1, 0))
        outer_w = np.ones(1)
    else:
        panels = {2: 24, 3: 10}[dims]
        axes = [_box_axis_rule(lo, hi, panels, nodes_per_axis) for lo, hi in box[:-1]]
        if any(a[0].size == 0 for a in axes):
            raise ContractViolation("box has negligible Gaussian mass")
        node_grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
        weight_grids = np.meshgrid(*[a[1] for a in axes], indexing="ij")
        outer_pts = np.stack([g.ravel() for g in node_grids], axis=1)
        outer_w = np.ones(outer_pts.shape[0])
        for c in range(dims - 1):
            outer_w *= weight_grids[c].ravel()

    lo = max(float(box[-1][0]), -clip)
    hi = min(float(box[-1][1]), clip)
    if hi <= lo:
        raise ContractViolation("box has negligible Gaussian mass")
    t_nodes, t_weights = np.polynomial.legendre.leggauss(nodes_per_axis)

    n_lines = outer_pts.shape[0]
    init = 8
    edges = np.linspace(lo, hi, init + 1)
    line_idx = np.repeat(np.arange(n_lines), init)
    a = np.tile(edges[:-1], n_lines)
    b = np.tile(edges[1:], n_lines)

    numer = 0.0
    mass = 0.0
    while line_idx.size:
        half = (b - a) / 2.0
        # panel points: the quadrature nodes plus both endpoints
        ts = a[:, None] + half[:, None] * (t_nodes[None, :] + 1.0)
        probe = np.concatenate([ts, a[:, None], b[:, None]], axis=1)
        full = np.empty((probe.size, dims))
        full[:, :-1] = np.repeat(outer_pts[line_idx], probe.shape[1], axis=0)
        full[:, -1] = probe.ravel()
        labs = (np.asarray(concept.predict(full)) == label).reshape(probe.shape)
        label_constant = np.all(labs == labs[:, :1], axis=1)
        done = label_constant | (b - a < min_width)
        if done.any():
            sel = np.where(done)[0]
            dens = np.exp(-0.5 * ts[sel] ** 2) / math.sqrt(2.0 * math.pi)
            w = t_weights[None, :] * half[sel, None] * dens
            hit = labs[sel, : t_nodes.size]
            if poly is None:
                pvals = np.ones_like(w)
            else:
                take = full.reshape(probe.shape[0], probe.shape[1], dims)[sel, : t_nodes.size]
                pvals = np.asarray(poly(take.reshape(-1, dims)), dtype=float).reshape(hit.shape)
            contrib_n = np.sum(w * pvals * hit, axis=1)
            contrib_m = np.sum(w, axis=1)
            numer += float(np.sum(outer_w[line_idx[sel]] * contrib_n))
            mass += float(np.sum(outer_w[line_idx[sel]] * contrib_m))
        keep = ~done
        if not keep.any():
            break
        mid = (a[keep] + b[keep]) / 2.0
        line_idx = np.concatenate([line_idx[keep], line_idx[keep]])
        a = np.concatenate([a[keep], mid])
        b = np.concatenate([mid, b[keep]])
    if mass < 1e-12:
        raise ContractViolation("box has negligible Gaussian mass")
    return numer / mass


def best_piecewise_error_exhaustive(partition, dataset):
    """Minimum empirical 0-1 error over every cube labeling plus a fallback.

    Enumerates label assignments literally when the count is small enough,
    otherwise minimizes each region independently (assignments decouple);
    both paths compute the same number.  Refuses instances with more than 12
    nonempty cubes.
    """
    cubes = locate(partition, dataset.xs)
    labels = dataset.label_set
    cube_ids = sorted({c for c in cubes if c is not OUTSIDE})
    if len(cube_ids) > 12:
        raise OracleRefusalError(f"{len(cube_ids)} nonempty cubes exceed the enumeration limit of 12")
    pos = {c: i for i, c in enumerate(cube_ids)}
    lab_pos = {lab: j for j, lab in enumerate(labels)}
    # counts[region][label], last region = outside
    counts = np.zeros((len(cube_ids) + 1, len(labels)), dtype=np.int64)
    for cube, y in zip(cubes, dataset.ys):
        r = pos[cube] if cube is not OUTSIDE else len(cube_ids)
        counts[r, lab_pos[int(y)]] += 1
    errors = counts.sum(axis=1)[:, None] - counts
    n_assignments = len(labels) ** (len(cube_ids) + 1)
    if n_assignments <= ENUMERATION_BUDGET:
        best = None
        for assignment in product(range(len(labels)), repeat=len(cube_ids) + 1):
            err = sum(errors[r, a] for r, a in enumerate(assignment))
            if best is None or err < best:
                best = err
    else:
        best = int(errors.min(axis=1).sum())
    return best / dataset.n


def principal_angles(a_rows, b_rows):
    """Angles between the row spans of two orthonormal bases, ascending."""
    a = np.atleast_2d(np.asarray(a_rows, dtype=float))
    b = np.atleast_2d(np.asarray(b_rows, dtype=float))
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros(0)
    sv = np.linalg.svd(a @ b.T, compute_uv=False)
    return np.sort(np.arccos(np.clip(sv, 0.0, 1.0)))
