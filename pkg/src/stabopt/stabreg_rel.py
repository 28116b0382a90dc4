"""Stable mirror descent: every step adds lam * R(x) to the mirror-step model.

    x_{t+1} = argmin_x  grad F_S(x_t).(x - x_t) + beta B_R(x, x_t) + lam R(x)

with lam = (beta / T) max{1, 2 log2(beta D n / (G T))} and x_0 = argmin R.
The update is a plain mirror step on F_S + lam R with coefficient
beta + lam, which is what the contraction checks below exploit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .base_opt import oracle_minimize, unregularized_minimizer
from .errors import ConfigError, SolverError
from .mirror import MirrorMap, mirror_step
from .objectives import RegularizedRisk
from .report import InequalityReport
from .stabreg_convex import RunTrace
from .tolerances import TOL
from .vecspace import as_vector, norm


def default_lambda(beta, D, n, G, T) -> float:
    return beta / T * max(1.0, 2.0 * math.log2(beta * D * n / (G * T)))


def precondition_holds(beta, D, n, G, T) -> bool:
    """T >= 2 log2(beta D n / G), the step-count requirement of the guarantees."""
    return T >= 2.0 * math.log2(beta * D * n / G)


@dataclass
class MirrorConfig:
    mirror: MirrorMap
    beta: float
    G: float
    D: float
    n: int
    T: int
    lam: float | None = None
    x0: np.ndarray | None = None

    def __post_init__(self):
        for name in ("beta", "G", "D"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be positive and finite, got {v}")
            setattr(self, name, float(v))
        if int(self.n) != self.n or self.n < 1:
            raise ConfigError("n must be a positive integer")
        if int(self.T) != self.T or self.T < 1:
            raise ConfigError("T must be a positive integer")
        self.n, self.T = int(self.n), int(self.T)
        if self.lam is None:
            self.lam = default_lambda(self.beta, self.D, self.n, self.G, self.T)
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ConfigError("lam must be finite and nonnegative")
        self.lam = float(self.lam)
        self.x0 = self.mirror.minimizer() if self.x0 is None else as_vector(self.x0)
        if not self.mirror.domain.contains(self.x0):
            raise ConfigError("x0 lies outside the mirror map's domain")

    @property
    def precondition_met(self) -> bool:
        return precondition_holds(self.beta, self.D, self.n, self.G, self.T)

    def describe(self) -> dict:
        return {
            "mirror": str(self.mirror),
            "beta": self.beta,
            "G": self.G,
            "D": self.D,
            "n": self.n,
            "T": self.T,
            "lambda": self.lam,
            "precondition_T_min": 2.0 * math.log2(self.beta * self.D * self.n / self.G),
            "precondition_met": self.precondition_met,
        }


def run_stabreg_rel(cfg: MirrorConfig, risk, steps=None) -> RunTrace:
    """T regularized mirror steps from x0 (or `steps` of them, for exploration)."""
    R = cfg.mirror
    if risk.dim != R.dim:
        raise ConfigError("risk dimension does not match the mirror map")
    if risk.loss.norm != R.norm:
        raise ConfigError(f"loss constants are certified for {risk.loss.norm}, the mirror map needs {R.norm}")
    T = cfg.T if steps is None else int(steps)
    x = cfg.x0.copy()
    xs = [x]
    values = [risk.value(x)]
    for t in range(T):
        _, g = risk.value_and_grad(x)
        try:
            x = mirror_step(R, x, g, cfg.beta, cfg.lam)
        except SolverError as exc:
            raise SolverError(f"mirror step {t} failed: {exc}", exc.residual) from exc
        xs.append(x)
        values.append(risk.value(x))
    meta = cfg.describe()
    return RunTrace(
        "stabreg_rel",
        T,
        list(zip(range(T + 1), xs)),
        np.asarray(values),
        np.zeros(T + 1, dtype=int),
        np.full(T + 1, cfg.lam),
        [],
        "budget",
        meta,
    )


def regularized_minimizer(cfg: MirrorConfig, risk, lam=None, tol=None, full_output=False):
    """Certified minimizer of F_S + lam R over the mirror map's domain."""
    lam = cfg.lam if lam is None else lam
    F = RegularizedRisk(risk, lam, mirror=cfg.mirror)
    dom = cfg.mirror.domain
    if lam == 0:
        return unregularized_minimizer(risk, dom, tol=tol, full_output=full_output)
    # every shipped R is 1-strongly convex in a norm dominating l2, so lam is a Euclidean modulus
    return oracle_minimize(F, dom, mu=lam, tol=tol, x0=cfg.x0, full_output=full_output)


def _rate_denominator(lam, beta, t):
    """(1 + lam/beta)^t - 1 divided by lam, with the lam -> 0 limit t / beta."""
    if lam == 0:
        return t / beta
    return math.expm1(t * math.log1p(lam / beta)) / lam


def check_rel_mirror_lemma(trace: RunTrace, cfg: MirrorConfig, risk, x_lam, X=None, tol=None,
                           factor=None) -> dict:
    """Contraction claims for mirror steps on f = F_S + lam R (smooth beta + lam, strong lam).

    (i)   f(x_t) nonincreasing, within `tol`;
    (ii)  B(x*, x_{t+1}) <= (1 - lam/(lam+beta)) B(x*, x_t) at every step whose
          divergence is above the resolvable floor, and the cumulative form
          B(x*, x_t) <= (1 - lam/(lam+beta))^t B(x*, x0);
    (iii) f(x_t) - f(x) <= lam B(x, x0) / ((1 + lam/beta)^t - 1) for x = x* and
          every row of X.
    Multiplicative slack `factor` applies per step to (ii) and to (iii).
    """
    tol = TOL.lemma_slack if tol is None else tol
    factor = TOL.contraction_factor if factor is None else factor
    R, lam, beta = cfg.mirror, cfg.lam, cfg.beta
    F = RegularizedRisk(risk, lam, mirror=R)
    xs = np.vstack([v for _, v in trace.segments])
    T = len(xs) - 1
    fvals = np.array([F.value(x) for x in xs])
    scale = max(1.0, abs(float(fvals[0])))
    # (i)
    incr = np.diff(fvals)
    rep_i = InequalityReport("monotone_decrease", float(incr.max()) if T else -np.inf, T, tol)
    # (ii)
    if lam == 0:
        rep_ii = InequalityReport.not_applicable("bregman_contraction", "lam = 0: no relative strong convexity")
    else:
        rho = 1.0 - lam / (lam + beta)
        B = np.asarray(R.bregman(np.broadcast_to(x_lam, xs.shape), xs))
        floor = TOL.bregman_floor * max(1.0, float(B[0]))
        resolvable = B[:-1] > floor
        ratios = np.divide(B[1:], B[:-1], out=np.zeros(T), where=B[:-1] > 0)
        step_excess = np.where(resolvable, ratios - rho * factor, -np.inf)
        t = np.arange(T + 1)
        cum_excess = B - (rho * factor) ** t * B[0] - floor
        worst = float(max(step_excess.max(initial=-np.inf), cum_excess.max()))
        rep_ii = InequalityReport(
            "bregman_contraction",
            worst,
            int(resolvable.sum()) + T + 1,
            0.0,
            {"rho": rho, "max_step_ratio": float(ratios[resolvable].max(initial=0.0)),
             "steps_checked": int(resolvable.sum())},
        )
    # (iii)
    pts = [np.asarray(x_lam, float)] + ([] if X is None else list(np.atleast_2d(X)))
    worst3 = -np.inf
    t = np.arange(1, T + 1)
    for x in pts:
        fx = F.value(x)
        bx = R.bregman(x, cfg.x0)
        bound = np.array([bx / _rate_denominator(lam, beta, k) for k in t])
        excess = (fvals[1:] - fx) - (bound * factor + 1e-12 * scale)
        worst3 = max(worst3, float(excess.max(initial=-np.inf)))
    rep_iii = InequalityReport("rate_bound", worst3, len(pts) * T, 0.0, {"points": len(pts)})
    return {"i": rep_i, "ii": rep_ii, "iii": rep_iii}


def check_breg_anchor_bound(cfg: MirrorConfig, risk, x_star=None, x_lam=None, tol=None) -> InequalityReport:
    """B(x*_lam, x0) <= R(x*_lam) - R(x0) <= R(x*) - R(x0) <= D^2."""
    tol = TOL.anchor_chain_slack if tol is None else tol
    R = cfg.mirror
    if x_star is None:
        x_star = regularized_minimizer(cfg, risk, lam=0.0)
    if x_lam is None:
        x_lam = regularized_minimizer(cfg, risk)
    links = [
        float(R.bregman(x_lam, cfg.x0)),
        float(R.value(x_lam) - R.value(cfg.x0)),
        float(R.value(x_star) - R.value(cfg.x0)),
        cfg.D**2,
    ]
    excess = max(links[i] - links[i + 1] for i in range(3))
    return InequalityReport("anchor_chain", excess, 3, tol, {"links": links})


def convergence_bound(cfg: MirrorConfig) -> float:
    """2 lam D^2, the explicit bound on the final optimization gap."""
    return 2.0 * cfg.lam * cfg.D**2


def check_final_gap(trace: RunTrace, cfg: MirrorConfig, f_star, tol=None) -> InequalityReport:
    tol = TOL.anchor_chain_slack if tol is None else tol
    if not cfg.precondition_met:
        return InequalityReport.not_applicable("final_gap", "T below the step-count precondition", tol)
    gap = float(trace.values[-1] - f_star)
    bound = convergence_bound(cfg)
    return InequalityReport("final_gap", gap - bound, 1, tol, {"gap": gap, "bound": bound})


def distance_bound(cfg: MirrorConfig) -> float:
    """sqrt(2) G T / (beta n): bound on ||x*_lam - x_T|| in the mirror map's norm."""
    return math.sqrt(2.0) * cfg.G * cfg.T / (cfg.beta * cfg.n)


def check_distance_bound(trace: RunTrace, cfg: MirrorConfig, x_lam, slack=1.10) -> InequalityReport:
    if not cfg.precondition_met:
        return InequalityReport.not_applicable("distance_bound", "T below the step-count precondition")
    dist = norm(np.asarray(x_lam) - trace.final, cfg.mirror.norm)
    bound = distance_bound(cfg)
    return InequalityReport("distance_bound", dist - slack * bound, 1, 0.0, {"distance": dist, "bound": bound})
