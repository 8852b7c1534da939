import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kerrlearn.data import DataRanges, sample_dataset
from kerrlearn.dynamics import MHZ, DataPoint, FidelityKernel, PhysicalParams
from kerrlearn.errors import UnstableLearningRate
from kerrlearn.fock import FockSpace
from kerrlearn.kernel_ml import (
    GramAssemblyError,
    GramMatrix,
    LabeledDataset,
    NtkMatrix,
    assemble_gram,
    generalization_experiment,
    gradient_descent_theta,
    gram_spectrum_stats,
    ntk_from_gram,
    spectrum_stats,
    steps_to_reach,
    target_function,
    train_gradient_descent,
    zero_target,
)
from kerrlearn.perturbation import gaussian_kernel_zeroth

from conftest import near_resonant_points


def random_gram(rng, n, rank=None):
    """Valid Gram: normalised Gaussian-feature overlap, entries in (0, 1]."""
    x = rng.normal(size=(n, 3))
    d2 = np.sum((x[:, None] - x[None]) ** 2, axis=-1)
    return GramMatrix(np.exp(-0.5 * d2))


def test_single_point_gram():
    g = assemble_gram([DataPoint(1.0, 2.0, 0.01)], FidelityKernel(PhysicalParams(space=FockSpace(10))))
    np.testing.assert_array_equal(g.values, [[1.0]])


def test_undriven_gram_all_ones():
    pts = [DataPoint(0.0, w, t) for w, t in ((1.0, 0.01), (4e4, 0.03), (6e4, 0.05))]
    g = assemble_gram(pts, FidelityKernel(PhysicalParams(kerr=10 * MHZ, space=FockSpace(20))))
    np.testing.assert_array_equal(g.values, np.ones((3, 3)))


def test_gram_matches_gaussian_assembly(rng):
    p = PhysicalParams(kerr=0.0, space=FockSpace(60))
    pts = near_resonant_points(rng, 5, p, drive_max=10 * MHZ)
    exact = assemble_gram(pts, FidelityKernel(p))
    analytic = assemble_gram(pts, lambda a, b: gaussian_kernel_zeroth(a, b, p))
    np.testing.assert_allclose(exact.values, analytic.values, atol=1e-6)
    assert exact.check() == []


def test_gram_exactly_symmetric(rng):
    p = PhysicalParams(kerr=3 * MHZ, space=FockSpace(40))
    g = assemble_gram(near_resonant_points(rng, 6, p), FidelityKernel(p))
    np.testing.assert_array_equal(g.values, g.values.T)


def test_gram_error_context():
    def bad(a, b):
        if a != b:
            raise RuntimeError("boom")
        return 1.0
    with pytest.raises(GramAssemblyError, match=r"\(0, 1\)"):
        assemble_gram([DataPoint(1, 1, 1), DataPoint(2, 2, 2)], bad)


def test_ntk_identity_and_ones():
    np.testing.assert_array_equal(ntk_from_gram(GramMatrix(np.eye(4))).values, np.eye(4))
    np.testing.assert_allclose(ntk_from_gram(GramMatrix(np.ones((5, 5)))).values, 5 * np.ones((5, 5)))


def test_ntk_eigenvalues_are_squared_gram_eigenvalues(rng):
    g = random_gram(rng, 6)
    ntk = ntk_from_gram(g)
    np.testing.assert_allclose(ntk.values, g.values @ g.values, atol=1e-10)
    w_g = np.sort(np.linalg.eigvalsh(g.values) ** 2)
    w_h = np.sort(np.linalg.eigvalsh(ntk.values))
    np.testing.assert_allclose(w_h, w_g, rtol=1e-8, atol=1e-12)


def test_spectrum_identity():
    s = spectrum_stats(NtkMatrix(np.eye(7)), 1e-7)
    assert s.effective_dimension == 7
    assert s.max_eigenvalue == pytest.approx(1.0)


def test_spectrum_all_ones():
    s = spectrum_stats(ntk_from_gram(GramMatrix(np.ones((4, 4)))))
    np.testing.assert_allclose(s.eigenvalues, [16, 0, 0, 0], atol=1e-12)
    assert s.effective_dimension == 1
    assert s.max_eigenvalue == pytest.approx(16)
    assert s.max_eigenvalue == s.eigenvalues[0]


def test_spectrum_threshold_semantics():
    assert spectrum_stats(NtkMatrix(np.diag([1.0, 1e-8]))).effective_dimension == 1
    with pytest.raises(ValueError):
        spectrum_stats(NtkMatrix(np.eye(2)), 0.0)


def test_gram_and_ntk_spectrum_routes_agree(rng):
    g = random_gram(rng, 8)
    a = spectrum_stats(ntk_from_gram(g))
    b = gram_spectrum_stats(g)
    np.testing.assert_allclose(a.eigenvalues, b.eigenvalues, atol=1e-10)
    assert a.effective_dimension == b.effective_dimension


def _dataset(n, rng):
    pts = [DataPoint(float(i + 1), 1.0, 0.01) for i in range(n)]
    return LabeledDataset(tuple(pts), rng.normal(size=n))


def test_zero_learning_rate_keeps_residual(rng):
    g = random_gram(rng, 4)
    rec = train_gradient_descent(_dataset(4, rng), g, 0.0, 20)
    np.testing.assert_array_equal(rec.residual_norms, rec.residual_norms[0])
    assert len(rec.residual_norms) == 21


def test_scalar_decay(rng):
    ds = _dataset(1, rng)
    rec = train_gradient_descent(ds, GramMatrix(np.array([[1.0]])), 1e-3, 500)
    expected = (1 - 1e-3) ** np.arange(501)
    np.testing.assert_allclose(rec.projected_relative, expected, atol=1e-10, rtol=0)
    np.testing.assert_allclose(rec.residual_norms / rec.residual_norms[0], expected, atol=1e-10, rtol=0)


def test_top_direction_matches_closed_form(rng):
    g = random_gram(rng, 5)
    rec = train_gradient_descent(_dataset(5, rng), g, 1e-3, 500, projection=0)
    lam = np.max(np.linalg.eigvalsh(g.values))
    expected = (1 - 1e-3 * lam ** 2) ** np.arange(501)
    assert np.max(np.abs(rec.projected_relative - expected)) <= 1e-10
    np.testing.assert_allclose(rec.closed_form(), expected, rtol=1e-14)


def test_label_independence(rng):
    g = random_gram(rng, 6)
    pts = tuple(DataPoint(float(i), 0.0, 0.0) for i in range(6))
    r1 = train_gradient_descent(LabeledDataset(pts, rng.normal(size=6)), g, 1e-3, 300)
    r2 = train_gradient_descent(LabeledDataset(pts, 5 * rng.normal(size=6) + 2), g, 1e-3, 300)
    assert np.max(np.abs(r1.projected_relative - r2.projected_relative)) <= 1e-12


def test_unstable_learning_rate_warns():
    g = GramMatrix(np.ones((3, 3)))
    ds = LabeledDataset(tuple(DataPoint(float(i), 0.0, 0.0) for i in range(3)), np.ones(3))
    with pytest.warns(UnstableLearningRate):
        train_gradient_descent(ds, g, 1.0, 3)


def test_dataset_invariants():
    with pytest.raises(ValueError):
        LabeledDataset((DataPoint(1, 1, 1), DataPoint(1, 1, 1)), np.zeros(2))
    with pytest.raises(ValueError):
        LabeledDataset((DataPoint(1, 1, 1),), np.zeros(2))


def test_closed_form_theta_matches_iteration(rng):
    g = random_gram(rng, 6)
    y = rng.normal(size=6)
    theta = np.zeros(6)
    for _ in range(200):
        theta -= 1e-2 * g.values @ (g.values @ theta - y)
    np.testing.assert_allclose(gradient_descent_theta(g.values, y, 1e-2, 200), theta, atol=1e-10)


def test_generalization_zero_target(rng):
    g = random_gram(rng, 8)
    pts = [DataPoint(float(i), 0.0, 0.0) for i in range(8)]
    assert generalization_experiment(pts, g, zero_target) == 0.0
    assert generalization_experiment(pts, g, zero_target, steps=None) == 0.0


def test_generalization_self_test_interpolates(rng):
    g = GramMatrix(0.5 * np.eye(8) + 0.5 * random_gram(rng, 8).values)
    pts = [DataPoint(float(i), 0.0, 0.0) for i in range(8)]
    target = lambda x: math.sin(x.omega_drive)
    assert generalization_experiment(pts, g, target, steps=None, self_test=True) < 1e-20
    loss_500 = generalization_experiment(pts, g, target, eta=0.1, steps=500, self_test=True)
    loss_50k = generalization_experiment(pts, g, target, eta=0.1, steps=50_000, self_test=True)
    assert loss_50k < loss_500


def test_generalization_requires_even_split(rng):
    with pytest.raises(ValueError):
        generalization_experiment([DataPoint(1, 1, 1)] * 5, random_gram(rng, 5), zero_target)


def test_target_function_values():
    r = DataRanges()
    assert target_function(DataPoint(0, 0, 0), r) == 0
    x = DataPoint(math.sqrt(math.pi / 2) * r.omega_drive_max, 0, 0)
    assert target_function(x, r) == pytest.approx(1.0, abs=1e-15)
    full = DataPoint(r.omega_drive_max, r.omega_laser_max, r.time_max)
    assert target_function(full, r) == pytest.approx(3 * math.sin(1) ** 2, abs=1e-15)
    assert 3 * math.sin(1) ** 2 == pytest.approx(2.124220, abs=1e-6)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.05, 10.0), min_size=2, max_size=8), st.sampled_from([1e-3, 1e-2]))
def test_convergence_rate_ordering(eigs, eta):
    eigs = sorted(eigs)
    if eta * eigs[-1] ** 2 >= 1:
        return
    steps = [steps_to_reach(lam, eta) for lam in eigs]
    assert all(a >= b for a, b in zip(steps, steps[1:]))
    for lam, t in zip(eigs, steps):
        rate = 1 - eta * lam ** 2
        assert rate ** t <= 0.5 < rate ** (t - 1)


@pytest.mark.parametrize("kerr", [0.0, 10 * MHZ, 1000 * MHZ])
def test_fidelity_gram_is_psd(kerr):
    pts = sample_dataset(7, 12)
    g = assemble_gram(pts, FidelityKernel(PhysicalParams(kerr=kerr)))
    assert g.check() == []
