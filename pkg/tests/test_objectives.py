import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stabopt.errors import ConfigError, DegenerateDataError
from stabopt.objectives import (
    Dataset,
    EmpiricalRisk,
    Example,
    LossModel,
    QuadraticObjective,
    RegularizedRisk,
    SyntheticSource,
    certify_constants,
    constants_from_bound,
    loss_grad,
    loss_value,
    make_loss,
    make_neighbor,
    risk_value_and_grad,
    synthetic_dataset,
)
from stabopt.mirror import MirrorMap
from stabopt.vecspace import NormSpec, dual_norm, norm


def _loss(kind, norm_spec=NormSpec.l2(), B=1.0, delta=1.0):
    beta, G = constants_from_bound(kind, B, delta)
    return LossModel(kind, beta, G, norm_spec, delta)


def test_loss_value_examples():
    z = Example(np.array([0.3, -0.7]), 1.0)
    assert loss_value(_loss("logistic"), np.zeros(2), z) == pytest.approx(math.log(2.0), rel=1e-15)
    assert loss_value(_loss("pseudo_huber"), np.zeros(2), Example(np.array([1.0, 2.0]), 0.0)) == 0.0
    # b * (a.x) = log 3 gives log(1 + 1/3)
    x = np.array([math.log(3.0), 0.0])
    val = loss_value(_loss("logistic"), x, Example(np.array([1.0, 0.0]), 1.0))
    assert val == pytest.approx(math.log(4.0 / 3.0), rel=1e-14)
    assert val == pytest.approx(0.2876820724517809, rel=1e-14)


def test_smoothed_hinge_pieces():
    loss = _loss("smoothed_hinge", delta=0.5)
    a = np.array([1.0])
    # margin >= 1: zero; margin in (0.5, 1): quadratic; below: linear
    assert loss_value(loss, np.array([2.0]), Example(a, 1.0)) == 0.0
    assert loss_value(loss, np.array([0.75]), Example(a, 1.0)) == pytest.approx(0.0625)
    assert loss_value(loss, np.array([0.0]), Example(a, 1.0)) == pytest.approx(0.75)


def test_certify_constants_examples():
    S = Dataset(np.array([[2.0, 0.0]]), np.array([1.0]), 2.0)
    assert certify_constants("logistic", S) == (1.0, 2.0)
    S1 = Dataset(np.array([[1.0, 1.0]]), np.array([-1.0]), 1.0, NormSpec.l1())
    assert certify_constants("logistic", S1) == (0.25, 1.0)
    S0 = Dataset(np.zeros((1, 2)), np.array([1.0]), 1.0)
    with pytest.raises(DegenerateDataError):
        certify_constants("logistic", S0)


def test_certified_constants_against_random_pairs():
    # empirical Lipschitz ratios of the gradient never exceed the certificate
    rng = np.random.default_rng(0)
    S = Dataset(np.array([[2.0, 0.0]]), np.array([1.0]), 2.0)
    beta, G = certify_constants("logistic", S)
    loss = make_loss("logistic", S)
    z = S[0]
    ratios, grads = [], []
    for _ in range(10_000):
        x, y = 3 * rng.standard_normal(2), 3 * rng.standard_normal(2)
        gx, gy = loss_grad(loss, x, z), loss_grad(loss, y, z)
        ratios.append(np.linalg.norm(gx - gy) / np.linalg.norm(x - y))
        grads.append(np.linalg.norm(gx))
    assert max(ratios) <= beta
    assert max(ratios) >= 0.9 * beta
    assert max(grads) <= G


def test_classification_labels_are_checked():
    S = Dataset(np.array([[1.0, 0.0]]), np.array([0.5]), 1.0)
    with pytest.raises(ConfigError):
        certify_constants("logistic", S)


GEOMETRIES = [NormSpec.l2(), NormSpec.l1(), NormSpec.lp(1.5)]


@pytest.mark.parametrize("kind", ["logistic", "pseudo_huber", "smoothed_hinge"])
@pytest.mark.parametrize("geom", GEOMETRIES, ids=str)
def test_smoothness_lipschitz_and_convexity(kind, geom):
    rng = np.random.default_rng(1)
    src = SyntheticSource(4, 1.5, geom, kind, seed=3)
    A, b = src.draw(rng, 10_000)
    loss = _loss(kind, geom, B=1.5)
    X = 2 * rng.standard_normal((10_000, 4))
    Y = 2 * rng.standard_normal((10_000, 4))
    for i in range(0, 10_000, 5):
        a, bi = A[i : i + 1], b[i : i + 1]
        x, y = X[i], Y[i]
        fx, fy = loss.values(x, a, bi)[0], loss.values(y, a, bi)[0]
        gx, gy = loss.grads(x, a, bi)[0], loss.grads(y, a, bi)[0]
        assert dual_norm(gx - gy, geom) <= loss.beta * norm(x - y, geom) + 1e-9
        assert dual_norm(gx, geom) <= loss.lipschitz + 1e-9
        assert fy <= fx + gx @ (y - x) + 0.5 * loss.beta * norm(y - x, geom) ** 2 + 1e-9
        assert fy >= fx + gx @ (y - x) - 1e-9
        mid = loss.values(0.5 * (x + y), a, bi)[0]
        assert mid <= 0.5 * (fx + fy) + 1e-12


def test_risk_is_mean_of_losses():
    S = synthetic_dataset(0, 7, 3)
    loss = make_loss("logistic", S)
    F = EmpiricalRisk(S, loss)
    x = np.array([0.3, -1.0, 2.0])
    vals = [loss_value(loss, x, S[i]) for i in range(S.n)]
    grads = [loss_grad(loss, x, S[i]) for i in range(S.n)]
    v, g = risk_value_and_grad(F, x)
    assert v == pytest.approx(np.mean(vals), rel=1e-12)
    np.testing.assert_allclose(g, np.mean(grads, axis=0), rtol=1e-12)


def test_single_example_risk_equals_loss():
    S = synthetic_dataset(1, 1, 2)
    loss = make_loss("logistic", S)
    F = EmpiricalRisk(S, loss)
    x = np.array([0.5, 0.25])
    assert F.value(x) == loss_value(loss, x, S[0])
    np.testing.assert_array_equal(F.grad(x), loss_grad(loss, x, S[0]))


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(2)
    S = synthetic_dataset(2, 5, 4)
    F = EmpiricalRisk(S, make_loss("logistic", S))
    for _ in range(10):
        x = rng.standard_normal(4)
        h = 1e-6
        fd = np.array([(F.value(x + h * e) - F.value(x - h * e)) / (2 * h) for e in np.eye(4)])
        np.testing.assert_allclose(F.grad(x), fd, rtol=1e-6, atol=1e-9)


def test_hessian_matches_gradient_differences():
    S = synthetic_dataset(3, 20, 3)
    F = EmpiricalRisk(S, make_loss("logistic", S))
    x = np.array([0.2, -0.4, 0.9])
    h = 1e-6
    fd = np.column_stack([(F.grad(x + h * e) - F.grad(x - h * e)) / (2 * h) for e in np.eye(3)])
    np.testing.assert_allclose(F.hessian(x), fd, atol=1e-8)


def test_regularized_risk_at_zero_lambda_is_base():
    S = synthetic_dataset(4, 30, 3)
    F = EmpiricalRisk(S, make_loss("logistic", S))
    x = np.array([1.0, 2.0, -1.0])
    for reg in (RegularizedRisk(F, 0.0, anchor=np.ones(3)), RegularizedRisk(F, 0.0, mirror=MirrorMap.squared_l2(3))):
        v, g = reg.value_and_grad(x)
        assert abs(v - F.value(x)) <= 1e-12
        np.testing.assert_allclose(g, F.grad(x), atol=1e-12)


def test_regularized_risk_strong_convexity():
    rng = np.random.default_rng(5)
    S = synthetic_dataset(5, 40, 4)
    F = EmpiricalRisk(S, make_loss("logistic", S))
    lam = 0.3
    reg = RegularizedRisk(F, lam, anchor=rng.standard_normal(4))
    for _ in range(2000):
        x, y = 2 * rng.standard_normal(4), 2 * rng.standard_normal(4)
        fx, gx = reg.value_and_grad(x)
        assert reg.value(y) >= fx + gx @ (y - x) + 0.5 * lam * np.sum((y - x) ** 2) - 1e-9


def test_regularizer_requires_anchor_or_mirror():
    S = synthetic_dataset(0, 3, 2)
    F = EmpiricalRisk(S, make_loss("logistic", S))
    with pytest.raises(ConfigError):
        RegularizedRisk(F, 1.0)
    with pytest.raises(ConfigError):
        RegularizedRisk(F, -1.0, anchor=np.zeros(2))


def test_make_neighbor_examples():
    S = synthetic_dataset(6, 2, 3)
    assert make_neighbor(S, 0, S[0]) == S
    z = Example(np.array([0.1, 0.2, 0.3]), -1.0)
    S2 = make_neighbor(S, 1, z)
    np.testing.assert_array_equal(S2.A[0], S.A[0])
    np.testing.assert_array_equal(S2.A[1], z.a)
    assert S2.b[1] == -1.0
    assert make_neighbor(S2, 1, S[1]) == S
    with pytest.raises(IndexError):
        make_neighbor(S, 2, z)


def test_dataset_enforces_feature_bound():
    with pytest.raises(ValueError):
        Dataset(np.array([[2.0, 0.0]]), np.array([1.0]), 1.0)
    with pytest.raises(DegenerateDataError):
        Dataset(np.zeros((0, 2)), np.zeros(0), 1.0)


def test_dataset_csv_round_trip(tmp_path):
    S = synthetic_dataset(7, 9, 3)
    path = tmp_path / "data.csv"
    S.to_csv(path)
    header = path.read_text().splitlines()[0]
    assert header == "b,a_1,a_2,a_3"
    assert Dataset.from_csv(path, feature_bound=S.feature_bound) == S


def test_synthetic_generator_is_keyed_by_seed():
    assert synthetic_dataset(0, 50, 4) == synthetic_dataset(0, 50, 4)
    assert synthetic_dataset(0, 50, 4) != synthetic_dataset(1, 50, 4)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(GEOMETRIES))
def test_synthetic_features_respect_bound(seed, geom):
    S = SyntheticSource(5, 0.7, geom, "logistic", seed).dataset(50)
    assert set(np.unique(S.b)) <= {-1.0, 1.0}
    assert all(dual_norm(a, geom) <= 0.7 + 1e-12 for a in S.A)


def test_quadratic_objective():
    f = QuadraticObjective(np.eye(2) * 2.0, np.array([-2.0, 0.0]))
    v, g = f(np.array([1.0, 0.0]))
    np.testing.assert_allclose(g, 0.0)
    assert f.beta == 2.0
    assert v == pytest.approx(-1.0)
