import math
from itertools import product

import numpy as np
import pytest

from mimlearn import (
    HermiteCoefficients,
    center_and_normalize,
    gradient_outer_product,
    hermite_eval,
    hermite_regression,
    poly_eval,
)
from mimlearn.errors import ContractViolation, DegeneratePolynomialError, RankDeficientError
from mimlearn.hermite import multi_indices, n_basis_functions
from mimlearn.oracle import QuadratureGrid


def test_hermite_eval_values():
    assert hermite_eval((2,), [1.0]) == pytest.approx(0.0, abs=1e-14)
    assert hermite_eval((2,), [2.0]) == pytest.approx(3.0 / math.sqrt(2.0))
    assert hermite_eval((1, 1), [0.7, -1.3]) == pytest.approx(0.7 * -1.3)


def test_hermite_orthonormality_by_quadrature():
    for k in (1, 2, 3):
        grid = QuadratureGrid(k, nodes_per_axis=12)
        idxs = [i for i in multi_indices(k, 4)]
        for a, b in product(idxs, idxs):
            got = grid.expect(lambda pts: hermite_eval(a, pts) * hermite_eval(b, pts))
            assert got == pytest.approx(1.0 if a == b else 0.0, abs=1e-8)


def test_poly_eval_empty_and_single():
    empty = HermiteCoefficients(2, 2, {})
    assert poly_eval(empty, [0.3, 0.4]) == 0.0
    single = HermiteCoefficients(2, 2, {(2, 0): 1.5})
    x = np.array([0.9, -0.2])
    assert poly_eval(single, x) == pytest.approx(1.5 * hermite_eval((2, 0), x))


def test_poly_eval_matches_monomial_expansion():
    # oracle: expand each 1-d factor into monomial coefficients via He series
    rng = np.random.default_rng(0)
    k, deg = 2, 3
    coeffs = {idx: rng.standard_normal() for idx in multi_indices(k, deg)}
    p = HermiteCoefficients(k, deg, coeffs)

    def monomial_eval(pts):
        out = np.zeros(pts.shape[0])
        for idx, val in coeffs.items():
            term = np.full(pts.shape[0], val)
            for c, e in enumerate(idx):
                he = np.polynomial.hermite_e.herme2poly([0.0] * e + [1.0])
                term *= np.polyval(he[::-1], pts[:, c]) / math.sqrt(math.factorial(e))
            out += term
        return out

    pts = rng.standard_normal((1000, k))
    assert np.max(np.abs(poly_eval(p, pts) - monomial_eval(pts))) < 1e-9


def test_regression_recovers_exact_targets():
    rng = np.random.default_rng(1)
    pts = rng.standard_normal((500, 3))
    fit = hermite_regression(pts, pts[:, 0], 1, ridge=0.0)
    assert fit.coeffs[(1, 0, 0)] == pytest.approx(1.0, abs=1e-8)
    for idx, val in fit.coeffs.items():
        if idx != (1, 0, 0):
            assert abs(val) < 1e-8
    const = hermite_regression(pts, np.full(500, 2.5), 0, ridge=0.0)
    assert const.coeffs[(0, 0, 0)] == pytest.approx(2.5, abs=1e-10)


def test_regression_halfspace_first_moment():
    # analytic value: E[x_i 1(w.x > 0)] = w_i / sqrt(2 pi)
    rng = np.random.default_rng(2)
    w = rng.standard_normal(3)
    w /= np.linalg.norm(w)
    pts = rng.standard_normal((200_000, 3))
    y = (pts @ w > 0).astype(float)
    fit = hermite_regression(pts, y, 1)
    for i in range(3):
        idx = tuple(1 if c == i else 0 for c in range(3))
        assert fit.coeffs[idx] == pytest.approx(w[i] / math.sqrt(2 * math.pi), abs=0.01)


def test_regression_needs_enough_samples_and_flags_singularity():
    pts = np.random.default_rng(3).standard_normal((4, 3))
    with pytest.raises(ContractViolation):
        hermite_regression(pts, np.zeros(4), 2)
    # duplicated coordinate makes degree-2 features collinear
    base = np.random.default_rng(4).standard_normal((100, 1))
    dup = np.hstack([base, base])
    with pytest.raises(RankDeficientError):
        hermite_regression(dup, base[:, 0], 2, ridge=0.0)
    hermite_regression(dup, base[:, 0], 2, ridge=1e-8)


def test_regression_beats_random_competitors():
    rng = np.random.default_rng(5)
    pts = rng.standard_normal((2000, 2))
    y = np.sin(pts[:, 0]) + 0.1 * rng.standard_normal(2000)
    fit = hermite_regression(pts, y, 3)
    resid = np.mean((poly_eval(fit, pts) - y) ** 2)
    for _ in range(100):
        rand = HermiteCoefficients(
            2, 3, {idx: rng.standard_normal() for idx in multi_indices(2, 3)}
        )
        assert resid <= np.mean((poly_eval(rand, pts) - y) ** 2) + 1e-12


def test_parseval_for_representable_targets():
    rng = np.random.default_rng(6)
    n = 50_000
    pts = rng.standard_normal((n, 2))
    coeffs = {idx: rng.standard_normal() for idx in multi_indices(2, 2)}
    p = HermiteCoefficients(2, 2, coeffs)
    fit = hermite_regression(pts, poly_eval(p, pts), 2)
    total = sum(v * v for v in fit.coeffs.values())
    second = np.mean(poly_eval(fit, pts) ** 2)
    # sampling error dominates the solver error here
    assert abs(total - second) < 4.0 * np.std(poly_eval(fit, pts) ** 2) / math.sqrt(n)


def test_gradient_outer_product_exact_cases():
    p = HermiteCoefficients(1, 2, {(2,): 1.0})
    assert gradient_outer_product(p) == pytest.approx(np.array([[2.0]]))
    p = HermiteCoefficients(2, 1, {(1, 0): 1.0})
    assert gradient_outer_product(p) == pytest.approx(np.diag([1.0, 0.0]))
    p = HermiteCoefficients(2, 2, {(1, 1): 1.0})
    assert gradient_outer_product(p) == pytest.approx(np.eye(2))


def test_gradient_outer_product_diagonal_identity():
    rng = np.random.default_rng(7)
    for _ in range(5):
        coeffs = {idx: rng.standard_normal() for idx in multi_indices(3, 3)}
        p = HermiteCoefficients(3, 3, coeffs)
        m = gradient_outer_product(p)
        for i in range(3):
            expect = sum(idx[i] * val**2 for idx, val in coeffs.items())
            assert m[i, i] == pytest.approx(expect, abs=1e-12)
        assert np.min(np.linalg.eigvalsh(m)) > -1e-12


def test_gradient_outer_product_matches_finite_differences():
    rng = np.random.default_rng(8)
    n, h = 100_000, 1e-4
    pts = rng.standard_normal((n, 3))
    coeffs = {idx: rng.standard_normal() for idx in multi_indices(3, 3)}
    p = HermiteCoefficients(3, 3, coeffs)
    grads = np.empty((n, 3))
    for i in range(3):
        shift = np.zeros(3)
        shift[i] = h
        grads[:, i] = (poly_eval(p, pts + shift) - poly_eval(p, pts - shift)) / (2 * h)
    mc = grads.T @ grads / n
    assert np.max(np.abs(mc - gradient_outer_product(p))) < 5e-2


def test_center_and_normalize():
    p = HermiteCoefficients(1, 1, {(0,): 3.0, (1,): 2.0})
    out = center_and_normalize(p)
    assert out.coeffs == {(1,): pytest.approx(1.0)}
    p = HermiteCoefficients(1, 2, {(2,): 1.0, (1,): 1.0})
    out = center_and_normalize(p)
    assert out.coeffs[(2,)] == pytest.approx(1.0 / math.sqrt(2.0))
    assert out.coeffs[(1,)] == pytest.approx(1.0 / math.sqrt(2.0))
    with pytest.raises(DegeneratePolynomialError):
        center_and_normalize(HermiteCoefficients(1, 1, {(0,): 4.0}))


def test_center_and_normalize_monte_carlo_moments():
    rng = np.random.default_rng(9)
    coeffs = {idx: rng.standard_normal() for idx in multi_indices(2, 3)}
    out = center_and_normalize(HermiteCoefficients(2, 3, coeffs))
    pts = rng.standard_normal((100_000, 2))
    vals = poly_eval(out, pts)
    assert abs(np.mean(vals)) < 0.02
    assert abs(np.var(vals) - 1.0) < 0.02


def test_feature_count():
    assert n_basis_functions(3, 2) == 10
    assert len(multi_indices(3, 2)) == 10
