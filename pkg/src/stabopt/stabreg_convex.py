"""Epoch-based stable conversion of a Euclidean black-box optimizer.

Epoch k minimizes F_S(x) + (lam_k / 2)||x - x0||^2 by m_k restarted calls
of the base method, each of T_half_k steps, starting from the previous
output; lam_k then halves. Between epoch boundaries the reported iterate
x_t is the last completed epoch output y_k.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .base_opt import BaseOptimizer, OptimizeRequest, oracle_minimize, run_base, unregularized_minimizer
from .errors import ConfigError, NumericError, ScheduleExhausted
from .objectives import RegularizedRisk
from .report import InequalityReport, to_jsonable
from .tolerances import TOL
from .vecspace import DomainSpec, as_vector


def ceil_int(v: float) -> int:
    """Ceiling that does not bump values sitting on an integer up to round-off."""
    r = round(v)
    if abs(v - r) <= 1e-12 * max(1.0, abs(v)):
        return int(r)
    return int(math.ceil(v))


@dataclass(frozen=True)
class EpochParams:
    k: int
    lambda_k: float
    m_k: int
    t_half_k: int
    t_k: int

    @property
    def length(self) -> int:
        return self.m_k * self.t_half_k

    @property
    def t_next(self) -> int:
        return self.t_k + self.length


@dataclass
class WrapperConfig:
    base: BaseOptimizer
    beta: float
    G: float
    D: float
    n: int
    x0: np.ndarray
    T_max: int
    domain: DomainSpec | None = None

    def __post_init__(self):
        self.x0 = as_vector(self.x0)
        for name in ("beta", "G", "D"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be positive and finite, got {v}")
            setattr(self, name, float(v))
        if int(self.n) != self.n or self.n < 1:
            raise ConfigError("n must be a positive integer")
        if int(self.T_max) != self.T_max or self.T_max < 0:
            raise ConfigError("T_max must be a nonnegative integer")
        self.n, self.T_max = int(self.n), int(self.T_max)
        if self.base.kind == "md":
            raise ConfigError("the Euclidean wrapper takes GD or NAG as its base method")
        if self.domain is None:
            self.domain = DomainSpec.unconstrained(self.x0.size)
        if self.domain.kind not in ("unconstrained", "l2ball"):
            raise ConfigError("the Euclidean wrapper runs on R^d or an l2 ball")
        if not self.domain.contains(self.x0):
            raise ConfigError("x0 lies outside the domain")


def epoch_params(k, lam, t_k, cfg: WrapperConfig) -> EpochParams:
    if lam < np.finfo(float).eps * cfg.beta:
        raise ScheduleExhausted(f"lambda_{k} = {lam:.3e} is below machine precision relative to beta")
    m = max(1, ceil_int(2.0 * math.log2(lam * cfg.D * cfg.n / cfg.G)))
    t_half = ceil_int((4.0 * cfg.base.C * (1.0 + cfg.beta / lam)) ** (1.0 / cfg.base.gamma))
    return EpochParams(k, lam, m, t_half, t_k)


def iter_schedule(cfg: WrapperConfig):
    """Epoch records in order; stops silently once lambda underflows."""
    lam, t_k, k = cfg.beta / 4.0, 0, 0
    while True:
        try:
            ep = epoch_params(k, lam, t_k, cfg)
        except ScheduleExhausted:
            return
        yield ep
        t_k, lam, k = ep.t_next, lam / 2.0, k + 1


def epoch_schedule(k, cfg: WrapperConfig) -> EpochParams:
    """Schedule record of epoch k (t_k accumulates the earlier epochs)."""
    if k < 0:
        raise ConfigError("epoch index must be nonnegative")
    t_k, lam = 0, cfg.beta / 4.0
    for i in range(k):
        t_k = epoch_params(i, lam, t_k, cfg).t_next
        lam /= 2.0
    return epoch_params(k, lam, t_k, cfg)


def planned_schedule(cfg: WrapperConfig):
    """Epochs that start within the budget [0, T_max]."""
    out = []
    for ep in iter_schedule(cfg):
        if ep.t_k > cfg.T_max:
            break
        out.append(ep)
    return out


# ---------------------------------------------------------------- traces


@dataclass
class EpochRecord:
    params: EpochParams
    y_start: np.ndarray
    y_end: np.ndarray | None = None
    inner: list = field(default_factory=list)

    @property
    def completed(self) -> bool:
        return self.y_end is not None

    def to_dict(self):
        out = asdict(self.params)
        out["completed"] = self.completed
        out["y_start"] = [float(v) for v in self.y_start]
        out["y_end"] = None if self.y_end is None else [float(v) for v in self.y_end]
        return out


@dataclass
class RunTrace:
    """Iterates x_0..x_T of one run with objective values and metadata.

    `segments` lists (t_start, vector) pairs: x_t equals the vector of the
    last segment starting at or before t. Both algorithms share this type.
    """

    algorithm: str
    T: int
    segments: list
    values: np.ndarray
    epoch_of_t: np.ndarray
    lambda_of_t: np.ndarray
    epochs: list = field(default_factory=list)
    stop_reason: str = "budget"
    meta: dict = field(default_factory=dict)

    def iterate(self, t) -> np.ndarray:
        if not 0 <= t <= self.T:
            raise IndexError(f"t={t} outside [0, {self.T}]")
        starts = [s for s, _ in self.segments]
        i = int(np.searchsorted(starts, t, side="right")) - 1
        return self.segments[i][1]

    def iterates(self) -> np.ndarray:
        return np.vstack([self.iterate(t) for t in range(self.T + 1)])

    @property
    def final(self) -> np.ndarray:
        return self.iterate(self.T)

    @property
    def completed_epochs(self):
        return [e for e in self.epochs if e.completed]

    def gaps(self, f_star) -> np.ndarray:
        return self.values - f_star

    def summary(self, f_star=None) -> dict:
        out = {
            "algorithm": self.algorithm,
            "T": self.T,
            "stop_reason": self.stop_reason,
            "final_value": float(self.values[-1]),
            "epochs_completed": len(self.completed_epochs),
            "final_iterate": [float(v) for v in self.final],
        }
        if f_star is not None:
            out["final_gap"] = float(self.values[-1] - f_star)
        out.update(self.meta)
        return out

    def to_json(self, path, f_star=None):
        doc = {"summary": self.summary(f_star), "epochs": [e.to_dict() for e in self.epochs]}
        Path(path).write_text(json.dumps(to_jsonable(doc), indent=2, sort_keys=True, allow_nan=False) + "\n")

    def to_csv(self, path, f_star):
        """Rows t,obj_gap,epoch_k,lambda_k for t = 0..T (floats in repr form)."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "obj_gap", "epoch_k", "lambda_k"])
            for t in range(self.T + 1):
                w.writerow([t, repr(float(self.values[t] - f_star)), int(self.epoch_of_t[t]),
                            repr(float(self.lambda_of_t[t]))])


def regularized_objective(risk, lam, x0):
    return RegularizedRisk(risk, lam, anchor=x0)


def run_stabreg_convex(cfg: WrapperConfig, risk, keep_inner=True) -> RunTrace:
    """Run the epoch wrapper for T_max steps of the base method.

    Epoch k is executed only if it finishes within the budget; otherwise
    x_t stays at the last completed output up to T_max.
    """
    if risk.dim != cfg.x0.size:
        raise ConfigError("risk dimension does not match x0")
    T = cfg.T_max
    y = cfg.x0.copy()
    segments = [(0, y)]
    epochs = []
    epoch_of_t = np.zeros(T + 1, dtype=int)
    lambda_of_t = np.zeros(T + 1)
    stop = "budget"
    schedule = iter_schedule(cfg)
    while True:
        ep = next(schedule, None)
        if ep is None:
            stop = "lambda_underflow"
            break
        if ep.t_k > T:
            break
        rec = EpochRecord(ep, y)
        epochs.append(rec)
        epoch_of_t[ep.t_k: ep.t_next] = ep.k
        lambda_of_t[ep.t_k: ep.t_next] = ep.lambda_k
        if ep.t_next > T:
            break
        obj = regularized_objective(risk, ep.lambda_k, cfg.x0)
        inner = [y]
        for j in range(ep.m_k):
            req = OptimizeRequest(obj, risk.beta + ep.lambda_k, inner[-1], ep.t_half_k, cfg.domain)
            try:
                inner.append(run_base(cfg.base, req))
            except NumericError as exc:
                ctx = {**exc.context, "epoch": ep.k, "inner": j}
                raise NumericError("base optimizer failed", exc.index, ctx) from exc
        y = inner[-1]
        rec.y_end = y
        rec.inner = inner if keep_inner else []
        segments.append((ep.t_next, y))
    seg_values = [risk.value(v) for _, v in segments]
    starts = np.array([s for s, _ in segments])
    idx = np.searchsorted(starts, np.arange(T + 1), side="right") - 1
    values = np.asarray(seg_values)[idx]
    meta = {
        "base": cfg.base.kind,
        "C": cfg.base.C,
        "gamma": cfg.base.gamma,
        "beta": cfg.beta,
        "G": cfg.G,
        "D": cfg.D,
        "n": cfg.n,
        "schedule": [asdict(e.params) for e in epochs],
    }
    return RunTrace("stabreg_convex", T, segments, values, epoch_of_t, lambda_of_t, epochs, stop, meta)


# ---------------------------------------------------------------- checks


def regularized_minimizers(trace: RunTrace, risk, cfg: WrapperConfig, tol=None):
    """Certified minimizers of the lam_k-regularized risk for every recorded epoch."""
    out = {}
    for rec in trace.epochs:
        lam = rec.params.lambda_k
        obj = regularized_objective(risk, lam, cfg.x0)
        out[rec.params.k] = oracle_minimize(obj, cfg.domain, mu=lam, tol=tol, beta=risk.beta + lam, x0=cfg.x0)
    return out


def check_halving(trace: RunTrace, risk, cfg: WrapperConfig, minimizers=None, tol=None) -> InequalityReport:
    """Per completed epoch, both contraction claims against the exact minimizer x*_k:

        F_k(y_{k+1}) - F_k(x*_k) <= lam_k ||y_k - x*_k||^2 / 2^(m_k + 1)
        ||y_{k+1} - x*_k||^2     <= ||y_k - x*_k||^2 / 2^(m_k)
    """
    tol = TOL.lemma_slack if tol is None else tol
    done = trace.completed_epochs
    if minimizers is None:
        minimizers = regularized_minimizers(trace, risk, cfg)
    rows, worst = [], -np.inf
    for rec in done:
        p = rec.params
        xs = minimizers[p.k]
        obj = regularized_objective(risk, p.lambda_k, cfg.x0)
        d0 = float(np.sum((rec.y_start - xs) ** 2))
        d1 = float(np.sum((rec.y_end - xs) ** 2))
        gap = obj.value(rec.y_end) - obj.value(xs)
        bound_f = p.lambda_k * d0 / 2.0 ** (p.m_k + 1)
        bound_d = d0 / 2.0**p.m_k
        v = max(gap - bound_f, d1 - bound_d)
        worst = max(worst, v)
        rows.append({"k": p.k, "value_gap": gap, "value_bound": bound_f, "dist2": d1, "dist2_bound": bound_d})
    return InequalityReport("halving", float(worst), len(done), tol, {"epochs": rows})


def check_epoch_geometry(trace: RunTrace, risk, cfg: WrapperConfig, minimizers=None, x_star=None,
                         tol=None) -> InequalityReport:
    """Distance and value claims along the epoch outputs, per epoch k:

        ||y_k - x*_k|| <= ||x0 - x*_k||
        ||x0 - x*_k||^2 + ||x*_k - x*||^2 <= ||x0 - x*||^2
        F_S(y_{k+1}) - F_S(x*) <= 3 lam_k ||x0 - x*||^2 / 4   (completed epochs)
    """
    tol = TOL.lemma_slack if tol is None else tol
    if minimizers is None:
        minimizers = regularized_minimizers(trace, risk, cfg)
    if x_star is None:
        x_star = unregularized_minimizer(risk, cfg.domain)
    x0 = cfg.x0
    D2 = float(np.sum((x0 - x_star) ** 2))
    f_star = risk.value(x_star)
    rows, worst = [], -np.inf
    for rec in trace.epochs:
        p = rec.params
        xs = minimizers[p.k]
        a = float(np.linalg.norm(rec.y_start - xs)) - float(np.linalg.norm(x0 - xs))
        b = float(np.sum((x0 - xs) ** 2) + np.sum((xs - x_star) ** 2)) - D2
        row = {"k": p.k, "start_distance_excess": a, "anchor_split_excess": b}
        v = max(a, b)
        if rec.completed:
            c = risk.value(rec.y_end) - f_star - 0.75 * p.lambda_k * D2
            row["value_excess"] = c
            v = max(v, c)
        worst = max(worst, v)
        rows.append(row)
    return InequalityReport("epoch_geometry", float(worst), len(rows), tol, {"epochs": rows, "D2": D2})


def explicit_gap_bound(trace: RunTrace, x_star, x0) -> float | None:
    """3 lam_K ||x0 - x*||^2 / 4 for the last completed epoch K (None before any)."""
    done = trace.completed_epochs
    if not done:
        return None
    return 0.75 * done[-1].params.lambda_k * float(np.sum((np.asarray(x0) - x_star) ** 2))


# ---------------------------------------------------------------- closed-form quadratic checks


def quadratic_reg_minimizer(Q, c, x0, lam):
    """argmin of 0.5 x'Qx + c'x + (lam/2)||x - x0||^2."""
    d = len(c)
    return np.linalg.solve(Q + lam * np.eye(d), lam * np.asarray(x0) - c)


def reg_path_excess(x1, x2, x0, lam1, lam2) -> float:
    """LHS - RHS of ||x1 - x2||^2 <= ((lam1-lam2)/(lam1+lam2)) (||x2-x0||^2 - ||x1-x0||^2),
    for minimizers x1, x2 at regularization weights lam1 > lam2 >= 0."""
    lhs = float(np.sum((x1 - x2) ** 2))
    rhs = (lam1 - lam2) / (lam1 + lam2) * float(np.sum((x2 - x0) ** 2) - np.sum((x1 - x0) ** 2))
    return lhs - rhs


def minimizer_shift_excess(Q1, c1, Q2, c2, mu) -> float:
    """||x2 - x1|| - (2/mu)||grad h(x1)|| with h = f2 - f1, for quadratics
    f_i = 0.5 x'Q_i x + c_i'x that are both mu-strongly convex."""
    x1 = np.linalg.solve(Q1, -c1)
    x2 = np.linalg.solve(Q2, -c2)
    gh = (Q2 - Q1) @ x1 + (c2 - c1)
    return float(np.linalg.norm(x2 - x1) - 2.0 / mu * np.linalg.norm(gh))
