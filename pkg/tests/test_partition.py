import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mimlearn import (
    LabeledDataset,
    MulticlassLinearClassifier,
    NoiseSpec,
    SubspaceBasis,
    build_partition,
    classify,
    fit_piecewise_constant,
    locate,
    refine_alignment_check,
    refine_partition,
    sample_dataset,
    zero_one_error,
)
from mimlearn.errors import (
    ContractViolation,
    DegeneratePartitionError,
    EmptyDatasetError,
)
from mimlearn.oracle import best_piecewise_error_exhaustive
from mimlearn.partition import OUTSIDE, classifier_from_json, classifier_to_json


def basis_1d(d=3):
    rows = np.zeros((1, d))
    rows[0, 0] = 1.0
    return SubspaceBasis(rows)


def test_grid_formula_k1_eps_half():
    p = build_partition(basis_1d(), 0.5, 0.1)
    assert p.cells_per_coordinate == 5  # ceil(2 sqrt(2 ln 2) / 0.5)
    lo = -math.sqrt(2.0 * math.log(2.0))
    assert p.thresholds[0] == pytest.approx(lo + 0.1, abs=1e-12)
    assert p.thresholds[-1] == pytest.approx(lo + 0.1 + 5 * 0.5, abs=1e-12)
    assert np.allclose(np.diff(p.thresholds), 0.5)


def test_degenerate_partition_rejected():
    with pytest.raises(DegeneratePartitionError):
        build_partition(SubspaceBasis.empty(3), 0.5, 0.1)
    with pytest.raises(ContractViolation):
        build_partition(basis_1d(), 0.5, 0.3)  # shift must stay below eps / 2


def test_locate_outside_and_boundary():
    p = build_partition(basis_1d(), 0.5, 0.1)
    far = np.zeros(3)
    far[0] = 50.0
    assert locate(p, far) is OUTSIDE
    at_z1 = np.zeros(3)
    at_z1[0] = p.thresholds[1]
    assert locate(p, at_z1) == (1,)  # left-closed cells: z_1 opens cell 1
    at_end = np.zeros(3)
    at_end[0] = p.thresholds[-1]
    assert locate(p, at_end) == (p.cells_per_coordinate - 1,)  # last cell closed


def test_locate_against_linear_scan():
    p = build_partition(basis_1d(), 0.5, 0.1)
    z = p.thresholds
    rng = np.random.default_rng(0)
    for _ in range(200):
        x = np.zeros(3)
        x[0] = rng.uniform(-3, 3)
        got = locate(p, x)
        expect = OUTSIDE
        for c in range(z.size - 1):
            closed_right = c == z.size - 2
            if z[c] <= x[0] < z[c + 1] or (closed_right and x[0] == z[-1]):
                expect = (c,)
        assert got == expect
    x = np.zeros(3)
    x[0] = 0.0
    assert locate(p, x) is not OUTSIDE


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_locate_is_a_partition_function(seed):
    rng = np.random.default_rng(seed)
    rows = np.linalg.qr(rng.standard_normal((4, 2)))[0].T
    p = build_partition(SubspaceBasis(rows), 0.4, 0.05)
    pts = rng.standard_normal((100, 4))
    m = p.cells_per_coordinate
    for cube in locate(p, pts):
        assert cube is OUTSIDE or all(0 <= c < m for c in cube)


def test_mass_retention():
    rng = np.random.default_rng(1)
    n = 1_000_000
    for k in (1, 2, 4, 8):
        for eps in (0.25, 0.5):
            basis = SubspaceBasis(np.eye(k, 8))
            p = build_partition(basis, eps, eps / 4)
            cubes = p.locate_coords(rng.standard_normal((n, k)))
            outside = np.mean((cubes < 0).any(axis=1))
            assert outside <= eps + 3.0 * math.sqrt(eps / n), (k, eps, outside)


def test_fit_constant_and_majority():
    basis = basis_1d(2)
    p = build_partition(basis, 0.5, 0.1)
    xs = np.random.default_rng(2).standard_normal((50, 2))
    ds = LabeledDataset(xs, np.full(50, 3), label_set=(0, 1, 2, 3))
    clf = fit_piecewise_constant(p, ds)
    assert all(lab == 3 for lab in clf.labels.values())
    assert clf.fallback == 3
    # one cube with labels {1, 1, 2} -> majority 1
    xs = np.array([[0.05, 0.0], [0.06, 0.0], [0.07, 0.0]])
    ds = LabeledDataset(xs, np.array([1, 1, 2]), label_set=(1, 2))
    clf = fit_piecewise_constant(p, ds)
    assert classify(clf, xs[0]) == 1


def test_fit_rejects_empty():
    p = build_partition(basis_1d(2), 0.5, 0.1)
    with pytest.raises(EmptyDatasetError):
        fit_piecewise_constant(p, LabeledDataset(np.zeros((0, 2)), [], label_set=(0, 1)))


def test_fit_matches_exhaustive_oracle():
    rng = np.random.default_rng(3)
    for trial in range(30):
        d = int(rng.integers(2, 4))
        rows = np.linalg.qr(rng.standard_normal((d, 1)))[0].T
        p = build_partition(SubspaceBasis(rows), float(rng.uniform(0.5, 0.9)), 0.05)
        n = int(rng.integers(6, 60))
        labels = tuple(range(int(rng.integers(2, 4))))
        ds = LabeledDataset(
            rng.standard_normal((n, d)), rng.integers(0, len(labels), n), label_set=labels
        )
        fitted = fit_piecewise_constant(p, ds)
        assert zero_one_error(fitted, ds) == pytest.approx(best_piecewise_error_exhaustive(p, ds))


def test_classify_composes_locate_and_lookup():
    rng = np.random.default_rng(4)
    rows = np.linalg.qr(rng.standard_normal((5, 2)))[0].T
    p = build_partition(SubspaceBasis(rows), 0.4, 0.05)
    concept = MulticlassLinearClassifier(rng.standard_normal((3, 5)), np.zeros(3))
    ds = sample_dataset(concept, NoiseSpec(), 3000, seed=5)
    clf = fit_piecewise_constant(p, ds)
    pts = rng.standard_normal((10_000, 5))
    direct = clf.predict(pts)
    rederived = np.array(
        [
            clf.fallback if cube is OUTSIDE else clf.labels.get(cube, clf.fallback)
            for cube in locate(p, pts)
        ]
    )
    assert np.array_equal(direct, rederived)


def test_refine_alignment_check_cases():
    rng = np.random.default_rng(6)
    rows = np.linalg.qr(rng.standard_normal((5, 3)))[0].T
    coarse = build_partition(SubspaceBasis(rows[:2]), 0.4, 0.05)
    assert refine_alignment_check(coarse, coarse)
    fine = refine_partition(coarse, rows[2:3])
    assert refine_alignment_check(coarse, fine)
    shifted = build_partition(SubspaceBasis(rows[:2]), 0.4, 0.06)
    fine_shifted = refine_partition(shifted, rows[2:3])
    assert not refine_alignment_check(coarse, fine_shifted)
    other_rows = np.linalg.qr(rng.standard_normal((5, 2)))[0].T
    assert not refine_alignment_check(build_partition(SubspaceBasis(other_rows), 0.4, 0.05), fine)


def test_error_monotone_under_refinement():
    rng = np.random.default_rng(7)
    for trial in range(40):
        d = int(rng.integers(3, 7))
        total = int(rng.integers(2, min(4, d) + 1))
        rows = np.linalg.qr(rng.standard_normal((d, total)))[0].T
        k_coarse = int(rng.integers(1, total))
        eps = float(rng.choice([0.25, 0.5]))
        coarse = build_partition(SubspaceBasis(rows[:k_coarse]), eps, eps / 4)
        fine = refine_partition(coarse, rows[k_coarse:])
        assert refine_alignment_check(coarse, fine)
        concept = MulticlassLinearClassifier(rng.standard_normal((3, d)), rng.standard_normal(3) * 0.3)
        ds = sample_dataset(concept, NoiseSpec(kind="adversarial", rate=0.05), int(rng.integers(200, 3000)), seed=trial)
        err_coarse = zero_one_error(fit_piecewise_constant(coarse, ds), ds)
        err_fine = zero_one_error(fit_piecewise_constant(fine, ds), ds)
        assert err_fine <= err_coarse + 1e-12


def test_classifier_json_roundtrip():
    rng = np.random.default_rng(8)
    rows = np.linalg.qr(rng.standard_normal((4, 2)))[0].T
    p = build_partition(SubspaceBasis(rows), 0.5, 0.1)
    concept = MulticlassLinearClassifier(rng.standard_normal((3, 4)), np.zeros(3))
    ds = sample_dataset(concept, NoiseSpec(), 500, seed=9)
    clf = fit_piecewise_constant(p, ds)
    back = classifier_from_json(classifier_to_json(clf))
    pts = rng.standard_normal((500, 4))
    assert np.array_equal(clf.predict(pts), back.predict(pts))
