import math

import numpy as np
import pytest

from stabopt.base_opt import BaseOptimizer, OptimizeRequest, base_path
from stabopt.errors import ConfigError
from stabopt.mirror import MirrorMap
from stabopt.objectives import EmpiricalRisk, make_loss, synthetic_dataset
from stabopt.stabreg_rel import (
    MirrorConfig,
    check_breg_anchor_bound,
    check_distance_bound,
    check_final_gap,
    check_rel_mirror_lemma,
    convergence_bound,
    default_lambda,
    precondition_holds,
    regularized_minimizer,
    run_stabreg_rel,
)
from stabopt.vecspace import NormSpec


def _simplex_problem(seed=0, n=200, d=10):
    S = synthetic_dataset(seed, n, d, norm=NormSpec.l1())
    F = EmpiricalRisk(S, make_loss("logistic", S))
    return F, MirrorMap.neg_entropy(d)


def test_lambda_formula():
    # log2(1024 / 16) = 6
    assert default_lambda(1.0, 1.0, 1024, 1.0, 16) == 0.75
    # small n hits the floor lam = beta / T
    assert default_lambda(2.0, 1.0, 4, 1.0, 100) == 0.02
    assert precondition_holds(1.0, 1.0, 1024, 1.0, 20)
    assert not precondition_holds(1.0, 1.0, 1024, 1.0, 19)


def test_unregularized_euclidean_run_is_gradient_descent():
    S = synthetic_dataset(1, 50, 4)
    F = EmpiricalRisk(S, make_loss("logistic", S))
    R = MirrorMap.squared_l2(4)
    cfg = MirrorConfig(R, F.beta, 1.0, 1.0, 50, 30, lam=0.0)
    tr = run_stabreg_rel(cfg, F)
    gd = base_path(BaseOptimizer.gd(), OptimizeRequest(F, F.beta, np.zeros(4), 30))
    np.testing.assert_allclose(tr.iterates(), gd, rtol=1e-13, atol=1e-15)


def test_entropy_run_meets_final_gap_and_contraction():
    F, R = _simplex_problem()
    cfg = MirrorConfig(R, F.beta, F.loss.lipschitz, math.sqrt(math.log(10)), 200, 400)
    assert cfg.precondition_met
    tr = run_stabreg_rel(cfg, F)
    assert all(R.domain.contains(x) for _, x in tr.segments)
    x_star = regularized_minimizer(cfg, F, lam=0.0)
    rep = check_final_gap(tr, cfg, F.value(x_star))
    assert rep.status == "pass"
    assert rep.details["gap"] <= convergence_bound(cfg)
    x_lam = regularized_minimizer(cfg, F)
    parts = check_rel_mirror_lemma(tr, cfg, F, x_lam, X=R.domain.sample(np.random.default_rng(0), 50) * 0.9 + 0.01)
    assert {k: r.status for k, r in parts.items()} == {"i": "pass", "ii": "pass", "iii": "pass"}
    assert parts["ii"].details["max_step_ratio"] <= parts["ii"].details["rho"] * 1.01
    assert check_distance_bound(tr, cfg, x_lam).status == "pass"
    assert check_breg_anchor_bound(cfg, F, x_star=x_star, x_lam=x_lam).status == "pass"


def test_contraction_needs_regularization():
    F, R = _simplex_problem(n=50, d=4)
    cfg = MirrorConfig(R, F.beta, F.loss.lipschitz, 1.0, 50, 20, lam=0.0)
    tr = run_stabreg_rel(cfg, F)
    x_star = regularized_minimizer(cfg, F)
    parts = check_rel_mirror_lemma(tr, cfg, F, x_star)
    assert parts["ii"].status == "not_applicable"
    assert parts["i"].status == "pass"
    assert parts["iii"].status == "pass"


def test_anchor_chain_with_heavy_regularization():
    # lam = 1000 beta pins the regularized minimizer next to x0
    F, R = _simplex_problem(n=50, d=4)
    cfg = MirrorConfig(R, F.beta, F.loss.lipschitz, math.sqrt(math.log(4)), 50, 20, lam=1e3 * F.beta)
    x_lam = regularized_minimizer(cfg, F)
    rep = check_breg_anchor_bound(cfg, F, x_lam=x_lam)
    assert rep.status == "pass"
    assert rep.details["links"][0] <= 1e-6


def test_anchor_chain_catches_a_small_radius():
    F, R = _simplex_problem(n=50, d=4)
    cfg = MirrorConfig(R, F.beta, F.loss.lipschitz, 1e-3, 50, 200)
    x_star = regularized_minimizer(cfg, F, lam=0.0)
    if R.value(x_star) - R.value(cfg.x0) > 1e-6:
        assert check_breg_anchor_bound(cfg, F, x_star=x_star).status == "fail"


def test_checks_outside_the_precondition_are_not_applicable():
    F, R = _simplex_problem(n=200, d=4)
    cfg = MirrorConfig(R, F.beta, F.loss.lipschitz, 1.0, 200, 2)
    assert not cfg.precondition_met
    tr = run_stabreg_rel(cfg, F)
    assert check_final_gap(tr, cfg, 0.0).status == "not_applicable"
    assert check_distance_bound(tr, cfg, tr.final).status == "not_applicable"


def test_geometry_mismatch_is_rejected():
    S = synthetic_dataset(0, 20, 3)
    F = EmpiricalRisk(S, make_loss("logistic", S))
    cfg = MirrorConfig(MirrorMap.neg_entropy(3), F.beta, 1.0, 1.0, 20, 10)
    with pytest.raises(ConfigError):
        run_stabreg_rel(cfg, F)


def test_config_validation():
    R = MirrorMap.neg_entropy(3)
    with pytest.raises(ConfigError):
        MirrorConfig(R, 1.0, 1.0, 1.0, 10, 0)
    with pytest.raises(ConfigError):
        MirrorConfig(R, 1.0, 1.0, 1.0, 10, 5, lam=-1.0)
    with pytest.raises(ConfigError):
        MirrorConfig(R, 1.0, 1.0, 1.0, 10, 5, x0=np.array([1.0, 1.0, 1.0]))
