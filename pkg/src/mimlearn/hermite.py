"""Normalized Hermite basis, least-squares regression in it, and exact
gradient second moments.

The 1-d basis is H_0 = 1, H_1(x) = x, H_2(x) = (x^2 - 1)/sqrt(2), and in
general H_n = He_n / sqrt(n!), orthonormal under the standard Gaussian.
Multivariate basis functions are products over coordinates indexed by a
multi-index (a tuple of exponents).  Two identities carry the module:

    d/dx_i H_a = sqrt(a_i) * H_{a - e_i}
    E[ (d_i p)(d_j p) ] = sum_b  D_i[b] * D_j[b]

with D_i[b] = sqrt(b_i + 1) * phat(b + e_i), which gives the gradient outer
product analytically from the coefficients.
"""

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from .errors import ContractViolation, DegeneratePolynomialError, RankDeficientError
from .validation import as_matrix, as_points, as_vector


def multi_indices(dim, degree):
    """All exponent tuples of the given dimension with total degree <= degree."""
    out = [(0,) * dim]
    for deg in range(1, degree + 1):
        for combo in combinations_with_replacement(range(dim), deg):
            idx = [0] * dim
            for c in combo:
                idx[c] += 1
            out.append(tuple(idx))
    return out


def n_basis_functions(dim, degree):
    return math.comb(dim + degree, degree)


def hermite_values_1d(x, max_degree):
    """Columns H_0(x) .. H_max(x) for a 1-d array x, via the He recurrence."""
    x = np.asarray(x, dtype=float)
    vals = np.empty((x.size, max_degree + 1))
    vals[:, 0] = 1.0
    if max_degree >= 1:
        vals[:, 1] = x
    he_prev, he_cur = np.ones_like(x), x.copy()
    for n in range(1, max_degree):
        he_next = x * he_cur - n * he_prev
        he_prev, he_cur = he_cur, he_next
        vals[:, n + 1] = he_cur / math.sqrt(math.factorial(n + 1))
    return vals


def hermite_eval(idx, x):
    """Evaluate the normalized Hermite basis function H_idx at x.

    x may be a single point (length-k vector) or an (n, k) batch.
    """
    idx = tuple(int(v) for v in idx)
    if any(v < 0 for v in idx):
        raise ContractViolation("multi-index exponents must be nonnegative")
    pts, single = as_points(x, len(idx))
    out = np.ones(pts.shape[0])
    for c, exponent in enumerate(idx):
        if exponent:
            out *= hermite_values_1d(pts[:, c], exponent)[:, exponent]
    return float(out[0]) if single else out


@dataclass(frozen=True)
class HermiteCoefficients:
    """A polynomial stored as {multi-index: coefficient} in the H basis."""

    dim: int
    degree: int
    coeffs: dict

    def __post_init__(self):
        clean = {}
        for idx, val in self.coeffs.items():
            idx = tuple(int(v) for v in idx)
            if len(idx) != self.dim:
                raise ContractViolation(f"multi-index {idx} has wrong dimension (expected {self.dim})")
            if any(v < 0 for v in idx):
                raise ContractViolation("multi-index exponents must be nonnegative")
            if sum(idx) > self.degree:
                raise ContractViolation(f"multi-index {idx} exceeds degree {self.degree}")
            clean[idx] = float(val)
        object.__setattr__(self, "coeffs", clean)

    def __call__(self, x):
        return poly_eval(self, x)

    def to_json(self):
        return [{"exponents": list(idx), "value": val} for idx, val in sorted(self.coeffs.items())]

    @classmethod
    def from_json(cls, items, dim=None, degree=None):
        coeffs = {tuple(item["exponents"]): item["value"] for item in items}
        if dim is None:
            dim = len(next(iter(coeffs))) if coeffs else 0
        if degree is None:
            degree = max((sum(idx) for idx in coeffs), default=0)
        return cls(dim, degree, coeffs)


def poly_eval(p, x):
    """Sum of coefficient * basis value over the stored terms."""
    pts, single = as_points(x, p.dim)
    if not p.coeffs:
        return 0.0 if single else np.zeros(pts.shape[0])
    max_deg = max(max(idx) for idx in p.coeffs)
    per_coord = [hermite_values_1d(pts[:, c], max_deg) for c in range(p.dim)]
    out = np.zeros(pts.shape[0])
    for idx, val in p.coeffs.items():
        term = np.full(pts.shape[0], val)
        for c, exponent in enumerate(idx):
            if exponent:
                term *= per_coord[c][:, exponent]
        out += term
    return float(out[0]) if single else out


def design_matrix(points, degree):
    """Feature matrix whose columns are the basis functions up to degree."""
    pts = as_matrix(points, "points")
    indices = multi_indices(pts.shape[1], degree)
    per_coord = [hermite_values_1d(pts[:, c], degree) for c in range(pts.shape[1])]
    phi = np.ones((pts.shape[0], len(indices)))
    for j, idx in enumerate(indices):
        for c, exponent in enumerate(idx):
            if exponent:
                phi[:, j] *= per_coord[c][:, exponent]
    return phi, indices


def hermite_regression(points, targets, degree, ridge=1e-8):
    """Least-squares fit of targets by a degree-bounded Hermite polynomial.

    Solves (Phi^T Phi / n + ridge I) c = Phi^T y / n.  With ridge = 0 a
    singular system raises RankDeficientError instead of silently returning
    a minimum-norm solution.
    """
    pts = as_matrix(points, "points")
    y = as_vector(targets, "targets", size=pts.shape[0])
    if ridge < 0:
        raise ContractViolation("ridge must be nonnegative")
    n, k = pts.shape
    needed = n_basis_functions(k, degree)
    if n < needed:
        raise ContractViolation(f"need at least {needed} samples for degree {degree} in {k} dims, got {n}")
    phi, indices = design_matrix(pts, degree)
    gram = phi.T @ phi / n
    rhs = phi.T @ y / n
    if ridge == 0.0:
        cond = np.linalg.cond(gram)
        if not np.isfinite(cond) or cond > 1e12:
            raise RankDeficientError(
                "normal equations are numerically singular; pass a small ridge (e.g. 1e-8)"
            )
        coef = np.linalg.solve(gram, rhs)
    else:
        coef = np.linalg.solve(gram + ridge * np.eye(gram.shape[0]), rhs)
    coeffs = {idx: c for idx, c in zip(indices, coef)}
    return HermiteCoefficients(k, degree, coeffs)


def gradient_outer_product(p):
    """Exact E[grad p grad p^T] under the standard Gaussian.

    Built from the derivative coefficient maps; the result is symmetric PSD
    and its diagonal equals sum_a a_i * phat(a)^2.
    """
    k = p.dim
    deriv = [dict() for _ in range(k)]
    for idx, val in p.coeffs.items():
        for i in range(k):
            if idx[i] > 0:
                down = list(idx)
                down[i] -= 1
                key = tuple(down)
                deriv[i][key] = deriv[i].get(key, 0.0) + math.sqrt(idx[i]) * val
    m = np.zeros((k, k))
    for i in range(k):
        for j in range(i, k):
            small, large = (deriv[i], deriv[j]) if len(deriv[i]) <= len(deriv[j]) else (deriv[j], deriv[i])
            acc = sum(val * large.get(key, 0.0) for key, val in small.items())
            m[i, j] = m[j, i] = acc
    return m


def center_and_normalize(p, tol=1e-15):
    """Drop the constant term and rescale to unit Gaussian L2 norm."""
    zero = (0,) * p.dim
    rest = {idx: val for idx, val in p.coeffs.items() if idx != zero}
    norm_sq = sum(val * val for val in rest.values())
    if norm_sq <= tol:
        raise DegeneratePolynomialError("polynomial has no non-constant component to normalize")
    scale = 1.0 / math.sqrt(norm_sq)
    return HermiteCoefficients(p.dim, p.degree, {idx: val * scale for idx, val in rest.items()})
