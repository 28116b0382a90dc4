"""Empirical stability, convergence curves, slope fits and the lemma suite."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass

import numpy as np

from .base_opt import BaseOptimizer, oracle_minimize
from .errors import ConfigError, OracleError, SolverError, StaboptError
from .mirror import MirrorMap, check_relative_smoothness, check_three_point, lp_nonsmooth_witness, lp_sq_bregman_gap
from .objectives import (
    CLASSIFICATION,
    EmpiricalRisk,
    LossModel,
    RegularizedRisk,
    SyntheticSource,
    constants_from_bound,
    make_loss,
    make_neighbor,
)
from .report import InequalityReport, merge, to_jsonable
from .stabreg_convex import (
    RunTrace,
    WrapperConfig,
    minimizer_shift_excess,
    quadratic_reg_minimizer,
    reg_path_excess,
    run_stabreg_convex,
)
from .stabreg_rel import MirrorConfig, check_rel_mirror_lemma, regularized_minimizer, run_stabreg_rel
from .tolerances import TOL
from .vecspace import DomainSpec, NormSpec

SCHEMA_VERSION = 1
ESTIMATE_LABEL = "estimate (lower bound)"


# ---------------------------------------------------------------- algorithms under test


@dataclass(frozen=True)
class AlgorithmSpec:
    """A deterministic training algorithm S -> x, evaluated at checkpoints.

    kind "stabreg_convex" reads x_t at each checkpoint from one run of length
    max(checkpoints); kind "stabreg_rel" treats each checkpoint as its own
    horizon T (lam depends on T); kind "constant" always returns x0.
    Constants beta and G come from the feature bound, never from the data,
    so neighbouring datasets see the same algorithm.
    """

    kind: str
    D: float = 1.0
    base: str = "nag"
    C: float | None = None
    gamma: float | None = None
    mirror: str = "neg_entropy"
    p: float | None = None
    radius: float | None = None

    def __post_init__(self):
        if self.kind not in ("stabreg_convex", "stabreg_rel", "constant"):
            raise ConfigError(f"unknown algorithm kind {self.kind!r}")
        if not self.D > 0:
            raise ConfigError("D must be positive")

    @property
    def label(self) -> str:
        if self.kind == "stabreg_convex":
            return f"stabreg_convex[{self.base}]"
        if self.kind == "stabreg_rel":
            return f"stabreg_rel[{self.mirror}]"
        return "constant"

    def base_optimizer(self) -> BaseOptimizer:
        make = {"gd": BaseOptimizer.gd, "nag": BaseOptimizer.nag}.get(self.base)
        if make is None:
            raise ConfigError(f"base optimizer {self.base!r} is not available to the Euclidean wrapper")
        return make(self.C, self.gamma)

    def mirror_map(self, d) -> MirrorMap:
        if self.mirror == "neg_entropy":
            return MirrorMap.neg_entropy(d)
        if self.mirror == "squared_l2":
            return MirrorMap.squared_l2(d, self.radius)
        if self.mirror == "squared_lp":
            return MirrorMap.squared_lp(d, self.p, self.radius)
        raise ConfigError(f"unknown mirror map {self.mirror!r}")

    def geometry(self, d=2) -> NormSpec:
        if self.kind == "stabreg_rel":
            return self.mirror_map(d).norm
        return NormSpec.l2()

    def domain(self, d) -> DomainSpec:
        if self.kind == "stabreg_rel":
            return self.mirror_map(d).domain
        if self.radius is not None:
            return DomainSpec.l2ball(d, self.radius)
        return DomainSpec.unconstrained(d)

    def outputs(self, S, loss: LossModel, checkpoints) -> dict:
        d = S.d
        dom = self.domain(d)
        x0 = dom.center() if self.kind != "stabreg_rel" else self.mirror_map(d).minimizer()
        if self.kind == "constant":
            return {t: x0 for t in checkpoints}
        risk = EmpiricalRisk(S, loss)
        if self.kind == "stabreg_convex":
            cfg = WrapperConfig(self.base_optimizer(), loss.beta, loss.lipschitz, self.D, S.n, x0,
                                max(checkpoints), dom)
            trace = run_stabreg_convex(cfg, risk, keep_inner=False)
            return {t: trace.iterate(t) for t in checkpoints}
        out = {}
        for T in checkpoints:
            cfg = MirrorConfig(self.mirror_map(d), loss.beta, loss.lipschitz, self.D, S.n, T)
            out[T] = run_stabreg_rel(cfg, risk).final
        return out


# ---------------------------------------------------------------- stability estimation


@dataclass
class StabilityEstimate:
    algorithm: str
    t: int
    n: int
    trials: int
    pool_size: int
    estimate: float
    per_trial: list
    seed: int
    label: str = ESTIMATE_LABEL

    def to_dict(self):
        return asdict(self)


def _pool_feature(source: SyntheticSource, i, seed):
    """i-th pool feature vector: poles first, then extreme points of the feature ball."""
    d, B = source.d, source.feature_bound
    if i < 2 * d:
        a = np.zeros(d)
        a[i // 2] = B if i % 2 == 0 else -B
        return a
    rng = np.random.default_rng([seed, 0xB001, i])
    if source.norm.dual().kind == "linf":
        return B * rng.choice([-1.0, 1.0], size=d)
    u = rng.standard_normal(d)
    return B * u / np.linalg.norm(u)


def evaluation_pool(source: SyntheticSource, pool_size, seed):
    """Fixed evaluation examples; a smaller pool is a prefix of a larger one."""
    A, b = [], []
    labels = (1.0, -1.0) if source.loss_kind in CLASSIFICATION else None
    i = 0
    while len(b) < pool_size:
        a = _pool_feature(source, i, seed)
        if labels is None:
            rng = np.random.default_rng([seed, 0xB002, i])
            choices = (float(a @ source.planted()) / source.feature_bound + rng.logistic(0.0, 0.5),)
        else:
            choices = labels
        for lab in choices:
            if len(b) < pool_size:
                A.append(a)
                b.append(lab)
        i += 1
    return np.array(A).reshape(-1, source.d), np.array(b)


def trial_datasets(source: SyntheticSource, n, seed, trial):
    """Neighbouring pair (S, S') of one trial, plus the replaced index."""
    rng = np.random.default_rng([seed, trial])
    S = source.dataset(n, rng)
    i = int(rng.integers(n))
    z = source.example(rng)
    return S, make_neighbor(S, i, z), i


def estimate_stability(alg: AlgorithmSpec, source: SyntheticSource, n, checkpoints, trials=20, pool_size=500,
                       seed=0, delta=1.0):
    """Sampled lower bound on uniform stability at each checkpoint.

    For every trial: draw S, a replacement index and a fresh example, run the
    algorithm on S and its neighbour, and record the largest loss difference
    over the evaluation pool. The estimate is the maximum over trials.
    """
    if trials < 1:
        raise ConfigError("need at least one trial")
    checkpoints = sorted(int(t) for t in checkpoints)
    beta, G = constants_from_bound(source.loss_kind, source.feature_bound, delta)
    loss = LossModel(source.loss_kind, beta, G, source.norm, delta)
    A, b = evaluation_pool(source, pool_size, seed)
    per = {t: [] for t in checkpoints}
    for trial in range(trials):
        S, S2, _ = trial_datasets(source, n, seed, trial)
        try:
            out1 = alg.outputs(S, loss, checkpoints)
            out2 = alg.outputs(S2, loss, checkpoints)
        except StaboptError as exc:
            raise type(exc)(f"trial {trial}: {exc}") from exc
        for t in checkpoints:
            diff = np.abs(loss.values(out1[t], A, b) - loss.values(out2[t], A, b))
            per[t].append(float(diff.max()))
    return [
        StabilityEstimate(alg.label, t, int(n), trials, pool_size, float(max(per[t])), per[t], seed)
        for t in checkpoints
    ]


def stability_sweep(alg: AlgorithmSpec, make_source, ns, checkpoints, trials=20, pool_size=500, seed=0):
    """estimate_stability over several sample sizes; `make_source()` returns the data source."""
    out = []
    for n in ns:
        out.extend(estimate_stability(alg, make_source(), n, checkpoints, trials, pool_size, seed))
    return out


# ---------------------------------------------------------------- slope fits


@dataclass
class SlopeFit:
    x: list
    y: list
    slope: float
    intercept: float
    residual: float
    window: tuple

    def to_dict(self):
        return asdict(self)


def fit_loglog_slope(x, y, window=None) -> SlopeFit:
    """Least-squares slope of log y against log x over positive points in `window`."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    lo, hi = (-np.inf, np.inf) if window is None else window
    keep = (x > 0) & (y > 0) & (x >= lo) & (x <= hi) & np.isfinite(y)
    if keep.sum() < 2:
        raise ConfigError("slope fit needs at least two positive points in the window")
    lx, ly = np.log(x[keep]), np.log(y[keep])
    if np.ptp(lx) == 0:
        raise ConfigError("slope fit needs distinct abscissae")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = float(np.sqrt(np.mean((ly - (slope * lx + intercept)) ** 2)))
    return SlopeFit(x[keep].tolist(), y[keep].tolist(), float(slope), float(intercept), resid,
                    (float(x[keep].min()), float(x[keep].max())))


@dataclass
class ConvergenceCurve:
    t: list
    gap: list
    clamped: list
    fit: SlopeFit | None
    super_polynomial: bool

    def to_dict(self):
        out = asdict(self)
        out["fit"] = None if self.fit is None else self.fit.to_dict()
        return out


def convergence_curve(ts, values, f_star, window=None, oracle_tol=None) -> ConvergenceCurve:
    """Gap curve of objective `values` at steps `ts` with a log-log slope over `window`.

    Nonpositive gaps are clamped to the oracle tolerance and flagged. A curve
    is called super-polynomial when log-gap is better explained as linear in
    t than in log t.
    """
    oracle_tol = TOL.oracle_gap if oracle_tol is None else oracle_tol
    ts = np.asarray(ts, float)
    gaps = np.asarray(values, float) - f_star
    clamped = gaps <= 0
    gaps = np.where(clamped, oracle_tol, gaps)
    try:
        fit = fit_loglog_slope(ts, gaps, window)
    except ConfigError:
        fit = None
    superpoly = False
    if fit is not None and len(fit.x) >= 3 and fit.slope < 0:
        lx, ly = np.array(fit.x), np.log(fit.y)
        a, c = np.polyfit(lx, ly, 1)
        semi = float(np.sqrt(np.mean((ly - (a * lx + c)) ** 2)))
        superpoly = semi < fit.residual
    return ConvergenceCurve(ts.tolist(), gaps.tolist(), clamped.tolist(), fit, bool(superpoly))


def measure_convergence(trace: RunTrace, f_star, oracle_tol=None, window=None) -> ConvergenceCurve:
    """Gap curve of a run with the default burn-in window.

    Epoch-wrapper traces are sampled at completed-epoch boundaries and the
    window starts at epoch 3; step-wise traces skip the first 10% of steps.
    """
    if trace.algorithm == "stabreg_convex":
        done = trace.completed_epochs
        ts = [e.params.t_next for e in done]
        late = [e.params.t_next for e in done if e.params.k >= 3]
        default_window = (min(late), np.inf) if late else (np.inf, np.inf)
    else:
        ts = list(range(1, trace.T + 1))
        default_window = (max(1.0, 0.1 * trace.T), np.inf)
    values = [trace.values[t] for t in ts]
    return convergence_curve(ts, values, f_star, default_window if window is None else window, oracle_tol)


def write_curve_csv(path, x, y):
    """Plot-ready two-column CSV with header x,y (floats in repr form)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y"])
        for a, b in zip(x, y):
            w.writerow([repr(float(a)), repr(float(b))])


# ---------------------------------------------------------------- theory comparison


def stability_vs_theory(estimates, gamma, slope_slack=0.4, n_band=(-1.4, -0.6), halving_factor=1.5) -> dict:
    """Compare estimates against c t^gamma / n.

    slope_t is the largest per-n log-log slope in t; slope_n is the common
    slope in n of a fit with one intercept per checkpoint. The halving check
    asks est(2n) <= halving_factor * est(n) / 2 for every such pair.
    """
    ts = sorted({e.t for e in estimates})
    ns = sorted({e.n for e in estimates})
    if len(ts) < 3 or len(ns) < 2:
        raise ConfigError("need at least 3 checkpoints and 2 sample sizes")
    table = {(e.n, e.t): e.estimate for e in estimates}
    if all(v == 0 for v in table.values()):
        return {"status": "pass", "trivially_stable": True, "label": ESTIMATE_LABEL}
    slopes_t = {}
    for n in ns:
        try:
            slopes_t[n] = fit_loglog_slope(ts, [table[(n, t)] for t in ts]).slope
        except ConfigError:
            continue
    # common slope in n with per-checkpoint intercepts
    rows, ys = [], []
    for j, t in enumerate(ts):
        for n in ns:
            v = table[(n, t)]
            if v > 0:
                onehot = np.zeros(len(ts))
                onehot[j] = 1.0
                rows.append(np.concatenate([[math.log(n)], onehot]))
                ys.append(math.log(v))
    coef = np.linalg.lstsq(np.array(rows), np.array(ys), rcond=None)[0]
    slope_n = float(coef[0])
    halving = []
    for n in ns:
        if 2 * n in ns:
            for t in ts:
                a, b = table[(n, t)], table[(2 * n, t)]
                if a > 0:
                    halving.append({"n": n, "t": t, "ratio": b / a, "ok": b <= halving_factor * a / 2.0})
    slope_t = max(slopes_t.values()) if slopes_t else float("nan")
    ok_t = bool(slope_t <= gamma + slope_slack)
    ok_n = bool(n_band[0] <= slope_n <= n_band[1])
    return {
        "label": ESTIMATE_LABEL,
        "gamma": gamma,
        "slope_t": slope_t,
        "slope_t_by_n": {str(k): v for k, v in slopes_t.items()},
        "slope_t_limit": gamma + slope_slack,
        "slope_n": slope_n,
        "slope_n_band": list(n_band),
        "halving": halving,
        "halving_ok": all(h["ok"] for h in halving),
        "trivially_stable": False,
        "status": "pass" if ok_t and ok_n else "fail",
    }


# ---------------------------------------------------------------- lemma suite


def _random_spd(rng, d, lo=0.1, hi=10.0):
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return (Q * rng.uniform(lo, hi, d)) @ Q.T


def _random_psd(rng, d):
    M = rng.standard_normal((d, max(1, d - 1)))
    return M @ M.T / d


def lemma_reg_path(rng, sizes, samples=1000, tol=None) -> InequalityReport:
    """Minimizers of a convex quadratic plus (lam/2)||x - x0||^2 at two weights."""
    tol = TOL.property_slack if tol is None else tol
    worst, count = -np.inf, 0
    for d in [1] + list(sizes):
        for _ in range(samples):
            Q = _random_psd(rng, d) if rng.random() < 0.5 else _random_spd(rng, d)
            c = rng.standard_normal(d)
            x0 = rng.standard_normal(d)
            lam1 = float(rng.uniform(0.01, 10.0))
            lam2 = 0.0 if rng.random() < 0.2 else float(rng.uniform(0.0, lam1))
            if lam2 == 0.0 and np.linalg.matrix_rank(Q) < d:
                Q = Q + 0.01 * np.eye(d)
            x1 = quadratic_reg_minimizer(Q, c, x0, lam1)
            x2 = quadratic_reg_minimizer(Q, c, x0, lam2)
            scale = max(1.0, float(np.sum((x2 - x0) ** 2)))
            worst = max(worst, reg_path_excess(x1, x2, x0, lam1, lam2) / scale)
            count += 1
    return InequalityReport("reg_path_distance", float(worst), count, tol, {"relative_to": "max(1, ||x2-x0||^2)"})


def lemma_anchor_split(rng, sizes, samples=300, tol=None, logistic_instances=2) -> InequalityReport:
    """||x0 - x*_lam||^2 + ||x*_lam - x*||^2 <= ||x0 - x*||^2 on quadratics and logistic risks."""
    tol = TOL.lemma_slack if tol is None else tol
    worst, count = -np.inf, 0
    for d in list(sizes):
        for _ in range(samples):
            Q = _random_spd(rng, d)
            c = rng.standard_normal(d)
            x0 = rng.standard_normal(d)
            lam = float(rng.uniform(0.01, 10.0))
            xl = quadratic_reg_minimizer(Q, c, x0, lam)
            xs = np.linalg.solve(Q, -c)
            v = float(np.sum((x0 - xl) ** 2) + np.sum((xl - xs) ** 2) - np.sum((x0 - xs) ** 2))
            worst = max(worst, v)
            count += 1
        for k in range(logistic_instances):
            src = SyntheticSource(d, 1.0, NormSpec.l2(), "logistic", int(rng.integers(2**31)))
            S = src.dataset(50 + 10 * d)
            F = EmpiricalRisk(S, make_loss("logistic", S))
            x0 = np.zeros(d)
            from .base_opt import unregularized_minimizer

            xs = unregularized_minimizer(F, DomainSpec.unconstrained(d))
            for lam in (F.beta, F.beta / 16, F.beta / 256):
                xl = oracle_minimize(RegularizedRisk(F, lam, anchor=x0), DomainSpec.unconstrained(d), mu=lam)
                v = float(np.sum((x0 - xl) ** 2) + np.sum((xl - xs) ** 2) - np.sum((x0 - xs) ** 2))
                worst = max(worst, v)
                count += 1
    return InequalityReport("anchor_split", float(worst), count, tol)


def lemma_minimizer_shift(rng, sizes, samples=1000, tol=None) -> InequalityReport:
    """||x2 - x1|| <= (2/mu)||grad h(x1)|| for f1 convex, f2 = f1 + h mu-strongly convex."""
    tol = TOL.property_slack if tol is None else tol
    worst, count = -np.inf, 0
    # 1-D closed form: f1 = x^2/2, f2 = (x - a)^2/2, so |a| <= 2|a|
    for a in rng.uniform(-10, 10, samples):
        worst = max(worst, minimizer_shift_excess(np.eye(1), np.zeros(1), np.eye(1), np.array([-a]), 1.0))
        count += 1
    for d in sizes:
        for _ in range(samples):
            Q1 = _random_spd(rng, d, 0.01, 5.0)
            Q2 = _random_spd(rng, d, 0.5, 5.0)
            mu = float(np.linalg.eigvalsh(Q2).min())
            c1, c2 = rng.standard_normal(d), rng.standard_normal(d)
            excess = minimizer_shift_excess(Q1, c1, Q2, c2, mu)
            worst = max(worst, excess / max(1.0, float(np.linalg.norm(np.linalg.solve(Q1, c1)))))
            count += 1
        # constrained version on the unit l2 ball through the oracle
        dom = DomainSpec.l2ball(d, 1.0)
        for _ in range(5):
            from .objectives import QuadraticObjective

            Q1 = _random_spd(rng, d, 0.5, 5.0)
            H = _random_psd(rng, d)
            c1, ch = 3 * rng.standard_normal(d), rng.standard_normal(d)
            f1 = QuadraticObjective(Q1, c1)
            f2 = QuadraticObjective(Q1 + H, c1 + ch)
            mu = float(np.linalg.eigvalsh(Q1 + H).min())
            x1 = oracle_minimize(f1, dom, mu=float(np.linalg.eigvalsh(Q1).min()))
            x2 = oracle_minimize(f2, dom, mu=mu)
            gh = H @ x1 + ch
            # oracle points are accurate to sqrt(2 tol / mu) in distance
            err = 2.0 * math.sqrt(2.0 * TOL.oracle_gap / mu)
            worst = max(worst, float(np.linalg.norm(x2 - x1) - 2.0 / mu * np.linalg.norm(gh)) - err)
            count += 1
    return InequalityReport("minimizer_shift", float(worst), count, tol)


def _mirror_instances(d):
    """Mirror maps exercised by the mirror lemmas."""
    return [
        MirrorMap.neg_entropy(d),
        MirrorMap.squared_l2(d, 2.0),
        MirrorMap.squared_lp(d, 1.5),
    ]


def _risk_for(R: MirrorMap, d, rng, n=60):
    src = SyntheticSource(d, 1.0, R.norm, "logistic", int(rng.integers(2**31)))
    S = src.dataset(n)
    return EmpiricalRisk(S, make_loss("logistic", S))


def _interior_sample(R: MirrorMap, rng, m):
    X = R.domain.sample(rng, m)
    if R.kind == "neg_entropy":
        X = 0.98 * X + 0.02 / R.dim
    if R.kind == "squared_lp":
        X = np.where(X == 0, 1e-12, X)
    return X


def lemma_relative_smoothness(rng, sizes, pairs=10000, lam=0.1) -> InequalityReport:
    worst, count, parts = -np.inf, 0, []
    for d in sizes:
        for R in _mirror_instances(d):
            F = RegularizedRisk(_risk_for(R, d, rng), lam, mirror=R)
            m = pairs // 10 if d >= 20 else pairs // 5
            X, Y = _interior_sample(R, rng, m), _interior_sample(R, rng, m)
            rep = check_relative_smoothness(F, X, Y)
            parts.append({"d": d, "mirror": str(R), "max_violation": rep.max_violation})
            worst = max(worst, rep.max_violation)
            count += rep.n_checks
    return InequalityReport("relative_smoothness", float(worst), count, TOL.rel_smooth_slack, {"parts": parts})


def lemma_mirror_contraction(rng, sizes, steps=150) -> dict:
    """(i)-(iii) for mirror steps on F_S + lam R with lam = beta / 10 and a certified x*_lam."""
    out = {"i": [], "ii": [], "iii": []}
    for d in sizes:
        for R in _mirror_instances(d):
            risk = _risk_for(R, d, rng)
            beta = risk.beta
            cfg = MirrorConfig(R, beta, risk.loss.lipschitz, 1.0, risk.dataset.n, steps, lam=beta / 10.0)
            trace = run_stabreg_rel(cfg, risk)
            x_lam = regularized_minimizer(cfg, risk)
            reps = check_rel_mirror_lemma(trace, cfg, risk, x_lam, X=_interior_sample(R, rng, 20))
            for k in out:
                out[k].append((d, str(R), reps[k]))
    merged = {}
    for k, items in out.items():
        rep = merge(f"mirror_contraction_{k}", [r for _, _, r in items], items[0][2].tolerance)
        rep.details = {"parts": [{"d": d, "mirror": m, "max_violation": r.max_violation} for d, m, r in items]}
        merged[k] = rep
    return merged


def lemma_three_point(rng, sizes, steps=20, points=1000, sabotage=None) -> InequalityReport:
    worst, count = -np.inf, 0
    for d in sizes:
        for R in _mirror_instances(d):
            bregman = None
            if sabotage == "bregman_sign":
                bregman = lambda y, x, R=R: -R.bregman(y, x)  # noqa: E731
            X = R.domain.sample(rng, points)
            if R.kind == "neg_entropy":
                X = X  # boundary points are allowed for the first argument
            for _ in range(steps):
                z = _interior_sample(R, rng, 1)[0]
                g = rng.standard_normal(d) * rng.choice([0.1, 1.0, 10.0])
                beta = float(rng.uniform(0.5, 5.0))
                lam = float(rng.choice([0.0, rng.uniform(0.0, 2.0)]))
                rep = check_three_point(R, z, g, beta, lam, X, bregman=bregman)
                worst = max(worst, rep.max_violation)
                count += rep.n_checks
    return InequalityReport("three_point", float(worst), count, TOL.mirror_stationarity)


def lemma_lp_nonsmooth(p=1.5, betas=(1.0, 1e2, 1e4, 1e6)) -> InequalityReport:
    """A witness eps with gap > beta eps^2 / 2 must exist for every beta."""
    rows, missing = [], 0
    for beta in betas:
        w = lp_nonsmooth_witness(p, beta)
        rows.append({"beta": beta, "witness": w})
        missing += w is None
    example = float(lp_sq_bregman_gap(1e-4, p))
    return InequalityReport(
        "lp_nonsmooth",
        float(missing),
        len(betas),
        0.0,
        {"p": p, "witnesses": rows, "gap_at_eps_1e-4": example},
    )


LEMMA_SUITE = (
    "reg_path_distance",
    "anchor_split",
    "minimizer_shift",
    "relative_smoothness",
    "mirror_contraction_i",
    "mirror_contraction_ii",
    "mirror_contraction_iii",
    "three_point",
    "lp_nonsmooth",
)


def verify_all_lemmas(seed=0, sizes=(2, 5, 20), sabotage=None) -> dict:
    """Run every property suite at each dimension in `sizes`.

    Entries are "pass", "fail" or "inconclusive" (an oracle or inner solver
    could not certify its answer). An empty `sizes` gives an empty report.
    """
    sizes = [int(d) for d in sizes]
    report = {"schema_version": SCHEMA_VERSION, "seed": seed, "sizes": sizes, "sabotage": sabotage, "lemmas": {}}
    if not sizes:
        report["status"] = "pass"
        return report
    jobs = {
        "reg_path_distance": lambda rng: lemma_reg_path(rng, sizes),
        "anchor_split": lambda rng: lemma_anchor_split(rng, sizes),
        "minimizer_shift": lambda rng: lemma_minimizer_shift(rng, sizes),
        "relative_smoothness": lambda rng: lemma_relative_smoothness(rng, sizes),
        "mirror_contraction": lambda rng: lemma_mirror_contraction(rng, sizes),
        "three_point": lambda rng: lemma_three_point(rng, sizes, sabotage=sabotage),
        "lp_nonsmooth": lambda rng: lemma_lp_nonsmooth(),
    }
    for j, (name, job) in enumerate(jobs.items()):
        rng = np.random.default_rng([seed, j])
        try:
            res = job(rng)
        except (OracleError, SolverError) as exc:
            keys = [k for k in LEMMA_SUITE if k.startswith(name)]
            for k in keys:
                report["lemmas"][k] = {"name": k, "status": "inconclusive", "passed": False, "reason": str(exc)}
            continue
        for rep in res.values() if isinstance(res, dict) else [res]:
            report["lemmas"][rep.name] = to_jsonable(rep.to_dict())
    statuses = [v["status"] for v in report["lemmas"].values()]
    if "fail" in statuses:
        report["status"] = "fail"
    elif "inconclusive" in statuses:
        report["status"] = "inconclusive"
    else:
        report["status"] = "pass"
    return report


def exit_code(status: str) -> int:
    return {"pass": 0, "fail": 1}.get(status, 2)
