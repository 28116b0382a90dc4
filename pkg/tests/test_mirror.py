import math

import numpy as np
import pytest

from stabopt.errors import ConfigError, DomainError
from stabopt.mirror import (
    MirrorMap,
    check_relative_smoothness,
    check_three_point,
    lp_nonsmooth_witness,
    lp_sq_bregman_gap,
    mirror_step,
    solve_step_direct,
    stationarity_residual,
)
from stabopt.objectives import EmpiricalRisk, RegularizedRisk, make_loss, synthetic_dataset
from stabopt.vecspace import DomainSpec, NormSpec, norm

MAPS = [
    MirrorMap.neg_entropy(4),
    MirrorMap.squared_l2(4, radius=1.0),
    MirrorMap.squared_lp(4, 1.5, radius=1.0),
]


def _point(R, rng):
    x = R.domain.sample(rng) if R.domain.bounded else rng.standard_normal(R.dim)
    if R.kind == "neg_entropy":
        x = 0.9 * x + 0.1 / R.dim
    return x


def test_bregman_examples():
    R = MirrorMap.squared_l2(2)
    assert R.bregman(np.array([1.0, 0.0]), np.array([0.0, 0.0])) == 0.5
    E = MirrorMap.neg_entropy(2)
    expected = 0.5 * math.log(2.0) + 0.5 * math.log(2.0 / 3.0)
    assert E.bregman(np.array([0.5, 0.5]), np.array([0.25, 0.75])) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(0.14384103622589045)


def test_bregman_of_point_with_itself_is_zero():
    rng = np.random.default_rng(0)
    for R in MAPS:
        x = _point(R, rng)
        assert R.bregman(x, x) == pytest.approx(0.0, abs=1e-14)


def test_entropy_step_example():
    E = MirrorMap.neg_entropy(2)
    g = np.array([-math.log(2.0), math.log(2.0)])
    x = mirror_step(E, np.array([0.5, 0.5]), g, 1.0)
    np.testing.assert_allclose(x, [0.8, 0.2], rtol=1e-14)
    # brute force over the segment
    s = np.linspace(1e-6, 1 - 1e-6, 200_001)
    grid = np.column_stack([s, 1 - s])
    obj = grid @ g + np.sum(grid * np.log(grid / 0.5), axis=1)
    np.testing.assert_allclose(grid[np.argmin(obj)], [0.8, 0.2], atol=1e-5)


def test_ball_step_example():
    R = MirrorMap.squared_l2(2, radius=1.0)
    x = mirror_step(R, np.zeros(2), np.array([-3.0, -4.0]), 1.0)
    np.testing.assert_allclose(x, [0.6, 0.8], rtol=1e-14)


def test_unregularized_euclidean_step_is_gradient_step():
    rng = np.random.default_rng(1)
    R = MirrorMap.squared_l2(5)
    for _ in range(20):
        x, g = rng.standard_normal(5), rng.standard_normal(5)
        beta = rng.uniform(0.1, 10)
        np.testing.assert_allclose(mirror_step(R, x, g, beta, 0.0), x - g / beta, rtol=1e-13, atol=1e-15)


@pytest.mark.parametrize("R", MAPS, ids=str)
def test_step_agrees_with_direct_solver(R):
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(30):
        x_t = _point(R, rng)
        g = 3 * rng.standard_normal(R.dim)
        beta, lam = rng.uniform(0.5, 3.0), rng.uniform(0.0, 1.0)
        a = mirror_step(R, x_t, g, beta, lam)
        b = solve_step_direct(R, x_t, g, beta, lam)
        worst = max(worst, float(np.max(np.abs(a - b))))
        assert stationarity_residual(R, x_t, g, beta, lam, a) <= 1e-9
    assert worst <= 1e-8


def test_radial_clip_projection_matches_grid_search():
    R = MirrorMap.squared_lp(2, 1.5, radius=1.0)
    y = np.array([2.0, -1.0])
    x = R.bregman_project(y)
    theta = np.linspace(0, 2 * np.pi, 400_001)
    circle = np.column_stack([np.cos(theta), np.sin(theta)])
    circle /= np.sum(np.abs(circle) ** 1.5, axis=1, keepdims=True) ** (1 / 1.5)
    obj = R.value(circle) - circle @ y
    # the unconstrained minimizer is outside, so the answer is on the sphere
    assert norm(R.grad_conj(y), NormSpec.lp(1.5)) > 1.0
    np.testing.assert_allclose(x, circle[np.argmin(obj)], atol=1e-5)
    assert R.value(x) - x @ y <= obj.min() + 1e-12


def test_one_strong_convexity():
    rng = np.random.default_rng(3)
    for R in MAPS:
        for _ in range(500):
            x, y = _point(R, rng), _point(R, rng)
            assert R.bregman(y, x) >= 0.5 * norm(y - x, R.norm) ** 2 - 1e-12


def test_entropy_needs_interior_points():
    E = MirrorMap.neg_entropy(3)
    with pytest.raises(DomainError):
        E.grad(np.array([0.5, 0.5, 0.0]))
    with pytest.raises(DomainError):
        E.bregman(np.array([0.2, 0.3, 0.5]), np.array([1.0, 0.0, 0.0]))


def test_map_and_domain_must_match():
    with pytest.raises(ConfigError):
        MirrorMap("neg_entropy", DomainSpec.l2ball(3))
    with pytest.raises(ConfigError):
        MirrorMap("squared_lp", DomainSpec.lpball(3, 1.5), p=1.8)
    with pytest.raises(ConfigError):
        mirror_step(MirrorMap.squared_l2(2), np.zeros(2), np.ones(2), 0.0)


def test_grad_conj_inverts_grad():
    rng = np.random.default_rng(4)
    for R in (MirrorMap.squared_lp(5, 1.5), MirrorMap.squared_lp(5, 1.8), MirrorMap.squared_l2(5)):
        x = rng.standard_normal(5)
        np.testing.assert_allclose(R.grad_conj(R.grad(x)), x, rtol=1e-12)


def _entropy_risk(lam, d=4):
    S = synthetic_dataset(5, 30, d, norm=NormSpec.l1())
    F = EmpiricalRisk(S, make_loss("logistic", S))
    return RegularizedRisk(F, lam, mirror=MirrorMap.neg_entropy(d))


def test_relative_smoothness_with_certified_constants():
    F = _entropy_risk(0.1)
    rng = np.random.default_rng(6)
    X = 0.99 * F.mirror.domain.sample(rng, 2000) + 0.0025
    Y = 0.99 * F.mirror.domain.sample(rng, 2000) + 0.0025
    assert check_relative_smoothness(F, X, Y).status == "pass"


def test_relative_smoothness_catches_wrong_constant():
    F = _entropy_risk(0.1)
    rng = np.random.default_rng(7)
    X = 0.99 * F.mirror.domain.sample(rng, 2000) + 0.0025
    Y = 0.99 * F.mirror.domain.sample(rng, 2000) + 0.0025
    # claiming strong convexity of 2 (lam + beta) is false
    rep = check_relative_smoothness(F, X, Y, strong=2 * (F.lam + F.base.beta))
    assert rep.status == "fail"


@pytest.mark.parametrize("R", MAPS, ids=str)
def test_three_point_property(R):
    rng = np.random.default_rng(8)
    for _ in range(5):
        z = _point(R, rng)
        X = np.array([_point(R, rng) for _ in range(200)])
        rep = check_three_point(R, z, rng.standard_normal(R.dim), 2.0, 0.3, X)
        assert rep.status == "pass"


def test_three_point_catches_a_sign_error():
    R = MirrorMap.neg_entropy(4)
    rng = np.random.default_rng(9)
    z = _point(R, rng)
    X = np.array([_point(R, rng) for _ in range(200)])
    rep = check_three_point(R, z, rng.standard_normal(4), 2.0, 0.3, X, bregman=lambda a, b: -R.bregman(a, b))
    assert rep.status == "fail"


def test_lp_gap_matches_direct_formula():
    for eps in (1e-1, 1e-2, 1e-3):
        direct = np.sum(np.abs([1.0, eps]) ** 1.5) ** (2 / 1.5) - 1.0
        assert lp_sq_bregman_gap(eps, 1.5) == pytest.approx(direct, rel=1e-10)


def test_lp_witness_exceeds_every_quadratic():
    for beta in (1.0, 1e2, 1e4, 1e6):
        w = lp_nonsmooth_witness(1.5, beta)
        assert w is not None
        assert w["gap"] > beta * w["eps"] ** 2 / 2
    # at p = 2 the gap is exactly eps^2, so a constant of 2 or more is never beaten
    assert lp_nonsmooth_witness(2.0, 2.0) is None
