"""Hard-instance constructions and their numerical verification.

The rotational 2-d classifier splits the plane into K equal angular sectors.
Circulant confusion matrices built from root-of-unity vectors make the noisy
label conditionals match the uniform label distribution against every
low-degree polynomial; ``verify_moment_matching`` checks that claim either by
closed-form sector quadrature or by Monte Carlo.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np
import scipy.special

from .errors import ContractViolation, InfeasibleFamilyError
from .models import ConfusionMatrix, MulticlassLinearClassifier
from .validation import rng_from_seed


@dataclass(frozen=True)
class RootOfUnityVector:
    """entries[j] = exp(2 pi i * rate * j / n_labels)."""

    n_labels: int
    rate: int

    def __post_init__(self):
        if self.n_labels < 1:
            raise ContractViolation("n_labels must be positive")

    @property
    def entries(self):
        j = np.arange(self.n_labels)
        return np.exp(2j * np.pi * self.rate * j / self.n_labels)


def hard_instance_2d(n_labels):
    """Rotational classifier with unit weight rows at angles 2 pi (i+1) / K.

    Row i wins exactly on the angular sector centered at its own angle, so
    every label has Gaussian mass 1 / K.
    """
    k = int(n_labels)
    if k < 2:
        raise ContractViolation("need at least 2 labels")
    angles = 2.0 * np.pi * (np.arange(k) + 1) / k
    weights = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    return MulticlassLinearClassifier(weights, np.zeros(k))


def sector_bounds(n_labels, label):
    """Angular interval on which the rotational classifier outputs label."""
    center = 2.0 * np.pi * (label + 1) / n_labels
    half = np.pi / n_labels
    return center - half, center + half


def _circulant_generator(n_labels, sign):
    """h' = 2 h1 +/- h2 normalized to sum 1, as a real vector."""
    k = int(n_labels)
    if k < 8 or k % 4 != 0:
        raise ContractViolation(
            f"construction needs K >= 8 divisible by 4, got {k} (other K are unsupported)"
        )
    j = np.arange(k)
    h1 = np.full(k, 1.0 / k)
    h2 = (2.0 / k) * ((-1.0) ** j) * np.cos(2.0 * np.pi * j / k)
    raw = 2.0 * h1 + sign * h2
    return raw / raw.sum()


def circulant_from_generator(h):
    """Circulant matrix with entries M[i, j] = h[(j - i) mod K]."""
    k = len(h)
    i, j = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
    return np.asarray(h)[(j - i) % k]


def build_rcn_confusion_matrix(n_labels):
    """Doubly stochastic circulant matrix with a strict diagonal margin."""
    h = _circulant_generator(n_labels, +1.0)
    entries = circulant_from_generator(h)
    gamma = float(h[0] - np.max(h[1:]))
    if gamma <= 0:
        raise ContractViolation("construction lost its diagonal margin")
    return ConfusionMatrix(entries, gamma=gamma).validate_rcn()


def build_contrastive_confusion_matrix(n_labels):
    """Zero-diagonal circulant matrix with positive off-diagonal minimum."""
    h = _circulant_generator(n_labels, -1.0)
    entries = circulant_from_generator(h)
    gamma = float(np.min(h[1:]))
    if gamma <= 0:
        raise ContractViolation("construction lost its off-diagonal floor")
    return ConfusionMatrix(entries, gamma=gamma).validate_contrastive()


def circulant_eigenvalues(generator):
    """lambda_j = sum_m c_m exp(2 pi i j m / K), the DFT of the generator."""
    c = np.asarray(generator, dtype=complex)
    k = c.size
    if k < 1:
        raise ContractViolation("generator must be nonempty")
    j, m = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
    return (np.exp(2j * np.pi * j * m / k) @ c).astype(complex)


# ---------------------------------------------------------------------------
# moment matching

def _radial_moment(total_degree, nodes=64):
    """integral_0^inf r^(m+1) exp(-r^2/2) dr by generalized Gauss quadrature.

    Substituting u = r^2 / 2 turns the integrand into 2^(m/2) u^(m/2) e^-u;
    Laguerre nodes (alpha = 0 for even m, 1/2 for odd) integrate it exactly.
    """
    m = int(total_degree)
    if m % 2 == 0:
        u, w = scipy.special.roots_genlaguerre(nodes, 0.0)
        vals = u ** (m // 2)
    else:
        u, w = scipy.special.roots_genlaguerre(nodes, 0.5)
        vals = u ** ((m - 1) // 2)
    return 2.0 ** (m / 2.0) * float(w @ vals)


def _angular_fourier(a, b):
    """cos^a(t) sin^b(t) as {frequency: complex coefficient}."""
    coeffs = {0: 1.0 + 0j}
    for _ in range(a):
        nxt = {}
        for m, c in coeffs.items():
            nxt[m + 1] = nxt.get(m + 1, 0j) + 0.5 * c
            nxt[m - 1] = nxt.get(m - 1, 0j) + 0.5 * c
        coeffs = nxt
    for _ in range(b):
        nxt = {}
        for m, c in coeffs.items():
            nxt[m + 1] = nxt.get(m + 1, 0j) + c / 2j
            nxt[m - 1] = nxt.get(m - 1, 0j) - c / 2j
        coeffs = nxt
    return coeffs


def _angular_integral(a, b, theta1, theta2):
    """integral of cos^a sin^b over [theta1, theta2], in closed form."""
    total = 0j
    for m, c in _angular_fourier(a, b).items():
        if m == 0:
            total += c * (theta2 - theta1)
        else:
            total += c * (cmath.exp(1j * m * theta2) - cmath.exp(1j * m * theta1)) / (1j * m)
    return total.real


def sector_monomial_moment(n_labels, label, a, b, nodes=64):
    """E[x^a y^b 1(sector = label)] for the rotational classifier."""
    t1, t2 = sector_bounds(n_labels, label)
    return _radial_moment(a + b, nodes) * _angular_integral(a, b, t1, t2) / (2.0 * np.pi)


def verify_moment_matching(matrix, n_labels, max_degree, method="quadrature", n_mc=1_000_000, seed=0):
    """Largest |E[(H[f(x), i] - 1/K) p(x)]| over labels i and monomials p.

    method "quadrature" integrates each sector in closed form (radially by
    generalized Gauss nodes, angularly exactly); "mc" uses n_mc Gaussian
    samples.  Returns the max absolute deviation.
    """
    k = int(n_labels)
    h = matrix.entries
    if h.shape[0] != k:
        raise ContractViolation("matrix size disagrees with n_labels")
    monomials = [(a, deg - a) for deg in range(max_degree + 1) for a in range(deg + 1)]
    if method in ("quadrature", "quad"):
        moments = {
            (a, b): np.array([sector_monomial_moment(k, j, a, b) for j in range(k)])
            for a, b in monomials
        }
        worst = 0.0
        centered = h - 1.0 / k
        for a, b in monomials:
            v = moments[(a, b)]
            for i in range(k):
                worst = max(worst, abs(float(centered[:, i] @ v)))
        return worst
    if method == "mc":
        rng = rng_from_seed(seed)
        xs = rng.standard_normal((int(n_mc), 2))
        f = hard_instance_2d(k).predict(xs)
        worst = 0.0
        for a, b in monomials:
            p = xs[:, 0] ** a * xs[:, 1] ** b
            for i in range(k):
                worst = max(worst, abs(float(np.mean((h[f, i] - 1.0 / k) * p))))
        return worst
    raise ContractViolation(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# near-orthogonal families and the composite two-index instance

def near_orthogonal_family(dim, rows, count, corr_tol, seed=0, max_tries_per_matrix=200):
    """Rejection-sampled orthonormal-row matrices with bounded cross products.

    Every output Q has orthonormal rows; every pair P != Q satisfies
    ||P Q^T||_F <= corr_tol.  Raises InfeasibleFamilyError (carrying the
    matrices found so far) when the retry budget runs out.
    """
    if rows > dim:
        raise ContractViolation("rows cannot exceed the ambient dimension")
    if count < 1:
        raise ContractViolation("count must be at least 1")
    rng = rng_from_seed(seed)
    family = []
    budget = max_tries_per_matrix * count
    tries = 0
    while len(family) < count:
        if tries >= budget:
            raise InfeasibleFamilyError(
                f"found only {len(family)} of {count} matrices within {budget} tries",
                achieved=family,
            )
        tries += 1
        g = rng.standard_normal((rows, dim))
        q = np.linalg.qr(g.T, mode="reduced")[0].T
        if all(np.linalg.norm(p @ q.T) <= corr_tol for p in family):
            family.append(q)
    return family


@dataclass(frozen=True)
class PlantedTwoIndexConcept:
    """Binary concept depending on two planted orthonormal directions.

    In planted coordinates (s, t) the positive region is the union of a
    centered square (the component blind to first moments) and a diagonal
    band complement 1(|s + t| >= 2 b).  ``component`` selects "sum" (the
    full function), "square", or "band".
    """

    rows: np.ndarray
    half_width: float = 1.0
    component: str = "sum"

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.shape[0] != 2:
            raise ContractViolation("planted concept needs exactly 2 directions")
        if self.component not in ("sum", "square", "band"):
            raise ContractViolation(f"unknown component {self.component!r}")
        object.__setattr__(self, "rows", rows)

    @property
    def dim(self):
        return self.rows.shape[1]

    @property
    def label_set(self):
        return (0, 1)

    @property
    def subspace(self):
        return self.rows

    def predict(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = x[None, :] if single else x
        s = pts @ self.rows[0]
        t = pts @ self.rows[1]
        a = self.half_width
        square = (np.abs(s) <= a) & (np.abs(t) <= a)
        band = np.abs(s + t) >= 2.0 * a
        if self.component == "square":
            hit = square
        elif self.component == "band":
            hit = band
        else:
            hit = square | band
        labels = hit.astype(np.int64)
        return int(labels[0]) if single else labels


def build_appendix_f_instance(moment_degree, dim, seed=0, component="sum"):
    """Composite two-index concept planted into dim ambient dimensions.

    The square component stands in for a construction that hides all moments
    up to ``moment_degree``; this simplified version is first-moment-blind
    (by symmetry) but visible at degree two, which preserves the qualitative
    contrast the instance exists to exhibit.  The parameter is accepted for
    interface stability and does not change the stand-in.
    """
    if dim < 2:
        raise ContractViolation("need at least 2 ambient dimensions")
    del moment_degree
    rows = near_orthogonal_family(dim, 2, 1, corr_tol=np.inf, seed=seed)[0]
    return PlantedTwoIndexConcept(rows, half_width=1.0, component=component)
