import math

import numpy as np
import pytest

from mimlearn import (
    IntersectionOfHalfspaces,
    LabeledDataset,
    MulticlassLinearClassifier,
    NoiseSpec,
    SubspaceBasis,
    build_partition,
    potential,
    sample_dataset,
)
from mimlearn.errors import ContractViolation, OracleRefusalError
from mimlearn.oracle import (
    QuadratureGrid,
    best_piecewise_error_exhaustive,
    exact_conditional_moment,
    principal_angles,
)


def test_quadrature_weights_normalized():
    grid = QuadratureGrid(2, nodes_per_axis=16)
    _, w = grid.tensor()
    assert abs(w.sum() - 1.0) < 1e-12


def test_quadrature_exact_gaussian_moments():
    grid = QuadratureGrid(1, nodes_per_axis=8)
    double_factorial = {0: 1, 2: 1, 4: 3, 6: 15, 8: 105, 10: 945}
    for deg in range(11):
        got = grid.expect(lambda pts: pts[:, 0] ** deg)
        expect = 0.0 if deg % 2 else double_factorial[deg]
        assert got == pytest.approx(expect, abs=1e-8)


class _SignConcept:
    dim = 1
    label_set = (0, 1)

    def predict(self, x):
        return (np.asarray(x)[:, 0] > 0).astype(np.int64)


def test_exact_conditional_moment_cases():
    const = MulticlassLinearClassifier(np.zeros((2, 1)), np.array([1.0, 0.0]))
    assert exact_conditional_moment(const, [(-np.inf, np.inf)], 0, None) == pytest.approx(1.0)
    got = exact_conditional_moment(_SignConcept(), [(-np.inf, np.inf)], 1, lambda pts: pts[:, 0])
    assert got == pytest.approx(1.0 / math.sqrt(2.0 * math.pi), abs=1e-10)
    with pytest.raises(ContractViolation):
        exact_conditional_moment(_SignConcept(), [(50.0, 51.0)], 1, None)


def test_exact_conditional_moment_matches_monte_carlo():
    rng = np.random.default_rng(0)
    concept = IntersectionOfHalfspaces(rng.standard_normal((2, 2)), rng.standard_normal(2))
    n = 1_000_000
    xs = rng.standard_normal((n, 2))
    labels = concept.predict(xs)
    for trial in range(10):
        lo = rng.uniform(-1.5, 0.0, size=2)
        hi = lo + rng.uniform(0.8, 2.0, size=2)
        box = list(zip(lo, hi))
        inside = np.all((xs >= lo) & (xs < hi), axis=1)
        if inside.sum() < 1000:
            continue
        mc = np.mean((labels == 1)[inside] * xs[inside, 0])
        exact = exact_conditional_moment(concept, box, 1, lambda pts: pts[:, 0])
        assert abs(mc - exact) < 4.0 / math.sqrt(inside.sum())


def test_best_piecewise_single_cube_and_empty():
    basis = SubspaceBasis(np.array([[1.0, 0.0]]))
    p = build_partition(basis, 0.9, 0.2)
    xs = np.array([[0.1, 0.0], [0.12, 0.0], [0.13, 0.0]])
    ds = LabeledDataset(xs, np.array([1, 2, 2]), label_set=(1, 2))
    assert best_piecewise_error_exhaustive(p, ds) == pytest.approx(1.0 / 3.0)
    # every point outside: best constant (fallback) error
    xs = np.array([[9.0, 0.0], [9.5, 0.0], [-9.0, 0.0]])
    ds = LabeledDataset(xs, np.array([1, 1, 2]), label_set=(1, 2))
    assert best_piecewise_error_exhaustive(p, ds) == pytest.approx(1.0 / 3.0)


def test_best_piecewise_refuses_large_instances():
    rng = np.random.default_rng(1)
    rows = np.linalg.qr(rng.standard_normal((4, 2)))[0].T
    p = build_partition(SubspaceBasis(rows), 0.25, 0.05)
    concept = MulticlassLinearClassifier(rng.standard_normal((2, 4)), np.zeros(2))
    ds = sample_dataset(concept, NoiseSpec(), 5000, seed=2)
    with pytest.raises(OracleRefusalError):
        best_piecewise_error_exhaustive(p, ds)


def test_principal_angles_basic():
    a = np.array([[1.0, 0.0, 0.0]])
    assert principal_angles(a, a) == pytest.approx([0.0])
    b = np.array([[0.0, 1.0, 0.0]])
    assert principal_angles(a, b) == pytest.approx([math.pi / 2.0])


def test_principal_angles_potential_identity():
    rng = np.random.default_rng(3)
    for _ in range(20):
        d = int(rng.integers(3, 8))
        k = int(rng.integers(1, min(3, d)))
        a = np.linalg.qr(rng.standard_normal((d, k)))[0].T
        b = np.linalg.qr(rng.standard_normal((d, k)))[0].T
        angles = principal_angles(a, b)
        pot = potential(a, SubspaceBasis(b))
        assert pot == pytest.approx(np.sum(np.sin(angles) ** 2), abs=1e-10)
