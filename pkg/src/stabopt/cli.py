"""Command-line frontend: `stabopt run-convex | run-mirror | stability | sweep | verify`.

Every command reads an optional YAML config, applies flag overrides (flags
win), writes its outputs into `--out`, and exits 0 on success, 1 on a
runtime or check failure and 2 on a usage error (or an inconclusive lemma
report). Wall-clock timings go to timing.txt so every other file is
byte-identical across repeated runs.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from .base_opt import BaseOptimizer, unregularized_minimizer
from .errors import ConfigError, OracleError, StaboptError
from .harness import (
    AlgorithmSpec,
    estimate_stability,
    exit_code,
    measure_convergence,
    stability_vs_theory,
    verify_all_lemmas,
    write_curve_csv,
)
from .mirror import MIRROR_KINDS, MirrorMap
from .objectives import LOSS_KINDS, EmpiricalRisk, SyntheticSource, make_loss
from .report import InequalityReport, to_jsonable
from .stabreg_convex import (
    WrapperConfig,
    check_epoch_geometry,
    check_halving,
    planned_schedule,
    regularized_minimizers,
    run_stabreg_convex,
    explicit_gap_bound,
)
from .stabreg_rel import (
    MirrorConfig,
    check_breg_anchor_bound,
    check_distance_bound,
    check_final_gap,
    check_rel_mirror_lemma,
    regularized_minimizer,
    run_stabreg_rel,
)
from .tolerances import TOL
from .vecspace import DomainSpec, NormSpec

COMMANDS = ("run-convex", "run-mirror", "stability", "sweep", "verify")
ALGORITHMS = ("stabreg_convex", "stabreg_rel", "constant")
SABOTAGE = (None, "bregman_sign")
SCHEMA_VERSION = 1


# ---------------------------------------------------------------- configuration


@dataclass
class ProblemSpec:
    loss: str = "logistic"
    n: int = 200
    d: int = 5
    seed: int = 0
    geometry: str = "auto"
    feature_bound: float = 1.0
    signal: float = 3.0


@dataclass
class AlgorithmConfig:
    base: str = "nag"
    C: float | None = None
    gamma: float | None = None
    D: float | str = "auto"
    T: int = 2000
    domain: str = "unconstrained"
    radius: float | None = None
    mirror: str = "neg_entropy"
    p: float | None = None
    lam: float | None = None


@dataclass
class HarnessSpec:
    algorithm: str = "stabreg_convex"
    trials: int = 20
    pool_size: int = 500
    checkpoints: list = field(default_factory=lambda: [50, 100, 200, 400, 800])
    ns: list = field(default_factory=lambda: [100, 200, 400])
    sizes: list = field(default_factory=lambda: [2, 5, 20])
    sabotage: str | None = None
    slope_slack: float = 0.4
    halving_factor: float = 1.5


@dataclass
class ExperimentConfig:
    command: str = "run-convex"
    problem: ProblemSpec = field(default_factory=ProblemSpec)
    algorithm: AlgorithmConfig = field(default_factory=AlgorithmConfig)
    harness: HarnessSpec = field(default_factory=HarnessSpec)
    out: str = "results"

    def __post_init__(self):
        try:
            self.validate()
        except TypeError as exc:
            raise ConfigError(f"config value has the wrong type: {exc}") from exc

    def validate(self):
        p, a, h = self.problem, self.algorithm, self.harness
        _member("command", self.command, COMMANDS)
        _member("problem.loss", p.loss, LOSS_KINDS)
        _member("algorithm.base", a.base, ("gd", "nag"))
        _member("algorithm.mirror", a.mirror, MIRROR_KINDS)
        _member("algorithm.domain", a.domain, ("unconstrained", "l2ball", "lpball", "simplex"))
        _member("harness.algorithm", h.algorithm, ALGORITHMS)
        _member("harness.sabotage", h.sabotage, SABOTAGE)
        if p.geometry != "auto":
            NormSpec.parse(p.geometry)
        for name, v in (("problem.n", p.n), ("problem.d", p.d), ("harness.trials", h.trials),
                        ("harness.pool_size", h.pool_size)):
            if not (isinstance(v, int) and v >= 1):
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if not (isinstance(a.T, int) and a.T >= 0):
            raise ConfigError(f"algorithm.T must be a nonnegative integer, got {a.T!r}")
        if a.D != "auto" and not (isinstance(a.D, (int, float)) and math.isfinite(a.D) and a.D > 0):
            raise ConfigError(f"algorithm.D must be 'auto' or a positive number, got {a.D!r}")
        if a.radius is not None and not a.radius > 0:
            raise ConfigError("algorithm.radius must be positive")
        if a.lam is not None and not a.lam >= 0:
            raise ConfigError("algorithm.lam must be nonnegative")
        if not p.feature_bound > 0:
            raise ConfigError("problem.feature_bound must be positive")
        for name in ("checkpoints", "ns", "sizes"):
            vals = getattr(h, name)
            if not all(isinstance(v, int) and v >= 1 for v in vals):
                raise ConfigError(f"harness.{name} must list positive integers")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc or {})
        unknown = set(doc) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        parts = {}
        for name, kind in (("problem", ProblemSpec), ("algorithm", AlgorithmConfig), ("harness", HarnessSpec)):
            sub = dict(doc.pop(name, None) or {})
            bad = set(sub) - {f.name for f in fields(kind)}
            if bad:
                raise ConfigError(f"unknown {name} keys: {sorted(bad)}")
            parts[name] = kind(**sub)
        return cls(**doc, **parts)

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        try:
            doc = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"config is not valid YAML: {exc}") from exc
        if doc is not None and not isinstance(doc, dict):
            raise ConfigError("config must be a mapping")
        return cls.from_dict(doc)


def _member(name, value, allowed):
    if value not in allowed:
        raise ConfigError(f"{name} must be one of {list(allowed)}, got {value!r}")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _d_value(text):
    if text == "auto":
        return text
    try:
        return float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {text!r}") from exc


# flag name -> (section, field, type)
OVERRIDES = {
    "seed": ("problem", "seed", int),
    "loss": ("problem", "loss", str),
    "n": ("problem", "n", int),
    "d": ("problem", "d", int),
    "geometry": ("problem", "geometry", str),
    "feature_bound": ("problem", "feature_bound", float),
    "signal": ("problem", "signal", float),
    "base": ("algorithm", "base", str),
    "C": ("algorithm", "C", float),
    "gamma": ("algorithm", "gamma", float),
    "D": ("algorithm", "D", _d_value),
    "T": ("algorithm", "T", int),
    "domain": ("algorithm", "domain", str),
    "radius": ("algorithm", "radius", float),
    "mirror": ("algorithm", "mirror", str),
    "p": ("algorithm", "p", float),
    "lam": ("algorithm", "lam", float),
    "algorithm": ("harness", "algorithm", str),
    "trials": ("harness", "trials", int),
    "pool_size": ("harness", "pool_size", int),
    "checkpoints": ("harness", "checkpoints", _int_list),
    "ns": ("harness", "ns", _int_list),
    "sizes": ("harness", "sizes", _int_list),
    "sabotage": ("harness", "sabotage", str),
    "slope_slack": ("harness", "slope_slack", float),
    "halving_factor": ("harness", "halving_factor", float),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stabopt", description="Uniformly stable ERM experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd)
        sp.add_argument("--config", help="YAML experiment config")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--dry-run", action="store_true", help="print the resolved plan and exit")
        for flag, (_, _, typ) in OVERRIDES.items():
            sp.add_argument("--" + flag.replace("_", "-"), dest=flag, type=typ, default=None)
    return parser


def resolve_config(args) -> ExperimentConfig:
    """Config file (if any), then flag overrides, then validation."""
    doc = {}
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        doc = ExperimentConfig.loads(text).to_dict()
    doc["command"] = args.command
    for flag, (section, key, _) in OVERRIDES.items():
        value = getattr(args, flag)
        if value is not None:
            doc.setdefault(section, {})[key] = value
    if args.out is not None:
        doc["out"] = args.out
    return ExperimentConfig.from_dict(doc)


# ---------------------------------------------------------------- problem assembly


def mirror_map(cfg: ExperimentConfig) -> MirrorMap:
    a, d = cfg.algorithm, cfg.problem.d
    if a.mirror == "neg_entropy":
        return MirrorMap.neg_entropy(d)
    if a.mirror == "squared_l2":
        return MirrorMap.squared_l2(d, a.radius)
    if a.p is None:
        raise ConfigError("squared_lp needs algorithm.p")
    return MirrorMap.squared_lp(d, a.p, a.radius)


def geometry(cfg: ExperimentConfig, kind: str) -> NormSpec:
    """Data geometry: l2 for the Euclidean wrapper, the mirror map's norm otherwise."""
    want = NormSpec.l2() if kind == "stabreg_convex" else mirror_map(cfg).norm
    if kind == "constant":
        want = NormSpec.l2()
    given = cfg.problem.geometry
    if given != "auto" and NormSpec.parse(given) != want:
        raise ConfigError(f"geometry {given} does not match the algorithm's norm {want}")
    return want


def convex_domain(cfg: ExperimentConfig) -> DomainSpec:
    a, d = cfg.algorithm, cfg.problem.d
    if a.domain == "unconstrained":
        return DomainSpec.unconstrained(d)
    if a.domain == "l2ball":
        return DomainSpec.l2ball(d, 1.0 if a.radius is None else a.radius)
    raise ConfigError("run-convex needs Euclidean geometry: domain unconstrained or l2ball")


def source(cfg: ExperimentConfig, kind: str) -> SyntheticSource:
    p = cfg.problem
    return SyntheticSource(p.d, p.feature_bound, geometry(cfg, kind), p.loss, p.seed, p.signal)


def base_optimizer(cfg: ExperimentConfig) -> BaseOptimizer:
    a = cfg.algorithm
    make = BaseOptimizer.gd if a.base == "gd" else BaseOptimizer.nag
    return make(a.C, a.gamma)


def mirror_radius_bound(R: MirrorMap):
    """sup of R(x) - R(x0) over a bounded domain, or None on R^d."""
    dom = R.domain
    if dom.kind == "simplex":
        return math.log(dom.dim)
    if dom.kind == "unconstrained":
        return None
    return float(R.value(dom.radius * np.eye(dom.dim)[0]))


# ---------------------------------------------------------------- output helpers


def write_json(path, doc):
    Path(path).write_text(json.dumps(to_jsonable(doc), indent=2, sort_keys=True, allow_nan=False) + "\n")


def write_timing(out: Path, timing: dict):
    lines = [f"{k} {v:.6f}" for k, v in timing.items()]
    (out / "timing.txt").write_text("\n".join(lines) + "\n")


def prepare_out(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(cfg.dumps())
    return out


def report_dict(rep: InequalityReport) -> dict:
    return to_jsonable(rep.to_dict())


def _certified(fn):
    """Oracle call at the default tolerance, retried at 1e-9; returns (result, tolerance used)."""
    try:
        return fn(TOL.oracle_gap), TOL.oracle_gap
    except OracleError:
        return fn(1e-9), 1e-9


# ---------------------------------------------------------------- commands


def cmd_run_convex(cfg: ExperimentConfig, dry_run=False, log=print) -> int:
    timing = {}
    t0 = time.perf_counter()
    geometry(cfg, "stabreg_convex")
    dom = convex_domain(cfg)
    S = source(cfg, "stabreg_convex").dataset(cfg.problem.n)
    loss = make_loss(cfg.problem.loss, S)
    risk = EmpiricalRisk(S, loss)
    x0 = dom.center()
    opt, tol_used = _certified(lambda tol: unregularized_minimizer(risk, dom, tol=tol, full_output=True))
    x_star, f_star = opt.x, opt.value
    if cfg.algorithm.D == "auto":
        D = dom.diameter() if dom.bounded else float(np.linalg.norm(x_star - x0))
        D_source = "domain diameter" if dom.bounded else "oracle distance ||x0 - x*||"
        if not D > 0:
            D, D_source = 1.0, "fallback 1.0 (x* = x0)"
    else:
        D, D_source = float(cfg.algorithm.D), "config"
    wcfg = WrapperConfig(base_optimizer(cfg), loss.beta, loss.lipschitz, D, S.n, x0, cfg.algorithm.T, dom)
    if dry_run:
        log(f"beta={wcfg.beta!r} G={wcfg.G!r} D={wcfg.D!r} ({D_source}) n={wcfg.n} T_max={wcfg.T_max}")
        log("k lambda_k m_k t_half_k t_k t_next")
        for ep in planned_schedule(wcfg):
            log(f"{ep.k} {ep.lambda_k!r} {ep.m_k} {ep.t_half_k} {ep.t_k} {ep.t_next}")
        return 0
    timing["setup"] = time.perf_counter() - t0
    t1 = time.perf_counter()
    trace = run_stabreg_convex(wcfg, risk, keep_inner=True)
    timing["run"] = time.perf_counter() - t1
    t2 = time.perf_counter()
    mins = regularized_minimizers(trace, risk, wcfg)
    checks = {
        "halving": check_halving(trace, risk, wcfg, mins),
        "epoch_geometry": check_epoch_geometry(trace, risk, wcfg, mins, x_star),
    }
    bound = explicit_gap_bound(trace, x_star, x0)
    gap = float(trace.values[-1] - f_star)
    if bound is None:
        checks["final_gap"] = InequalityReport.not_applicable("final_gap", "no completed epoch", TOL.lemma_slack)
    else:
        checks["final_gap"] = InequalityReport("final_gap", gap - bound, 1, TOL.lemma_slack,
                                               {"gap": gap, "bound": bound})
    curve = measure_convergence(trace, f_star)
    timing["checks"] = time.perf_counter() - t2
    out = prepare_out(cfg)
    trace.to_csv(out / "trace.csv", f_star)
    trace.to_json(out / "trace.json", f_star)
    write_curve_csv(out / "curve.csv", curve.t, curve.gap)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "algorithm": "stabreg_convex",
        "final_gap": gap,
        "f_star": f_star,
        "oracle_certificate": opt.certificate,
        "oracle_tolerance": tol_used,
        "epochs_completed": len(trace.completed_epochs),
        "stop_reason": trace.stop_reason,
        "schedule": trace.meta["schedule"],
        "beta": wcfg.beta,
        "G": wcfg.G,
        "D": wcfg.D,
        "D_source": D_source,
        "explicit_bound": bound,
        "convergence": curve.to_dict(),
        "checks": {k: report_dict(v) for k, v in checks.items()},
    }
    write_json(out / "summary.json", summary)
    write_timing(out, timing)
    failed = [k for k, v in checks.items() if v.status == "fail"]
    log(f"final gap {gap:.6e}; epochs completed {len(trace.completed_epochs)}; checks failed: {failed or 'none'}")
    return 1 if failed else 0


def cmd_run_mirror(cfg: ExperimentConfig, dry_run=False, log=print) -> int:
    timing = {}
    t0 = time.perf_counter()
    R = mirror_map(cfg)
    S = source(cfg, "stabreg_rel").dataset(cfg.problem.n)
    loss = make_loss(cfg.problem.loss, S)
    risk = EmpiricalRisk(S, loss)
    x0 = R.minimizer()
    probe = MirrorConfig(R, loss.beta, loss.lipschitz, 1.0, S.n, max(cfg.algorithm.T, 1), lam=0.0)
    notes = []
    try:
        opt, tol_used = _certified(lambda tol: regularized_minimizer(probe, risk, lam=0.0, tol=tol,
                                                                    full_output=True))
        x_star, f_star = opt.x, opt.value
    except OracleError as exc:
        opt, x_star, f_star, tol_used = None, None, None, None
        notes.append(f"oracle for x* inconclusive: {exc}")
    if cfg.algorithm.D == "auto":
        if x_star is not None:
            D2, D_source = float(R.value(x_star) - R.value(x0)), "R(x*) - R(x0) from the oracle"
        else:
            D2, D_source = mirror_radius_bound(R), "sup of R(x) - R(x0) over the domain"
        if D2 is None or not D2 > 0:
            D2, D_source = 1.0, "fallback 1.0"
        D = math.sqrt(D2)
    else:
        D, D_source = float(cfg.algorithm.D), "config"
    T = cfg.algorithm.T
    if T < 1:
        raise ConfigError("run-mirror needs T >= 1")
    mcfg = MirrorConfig(R, loss.beta, loss.lipschitz, D, S.n, T, lam=cfg.algorithm.lam, x0=x0)
    if dry_run:
        for k, v in mcfg.describe().items():
            log(f"{k} {v!r}")
        log(f"D_source {D_source}")
        return 0
    timing["setup"] = time.perf_counter() - t0
    t1 = time.perf_counter()
    trace = run_stabreg_rel(mcfg, risk)
    timing["run"] = time.perf_counter() - t1
    timing["mirror_step_mean"] = timing["run"] / T
    t2 = time.perf_counter()
    checks = {}
    if not mcfg.precondition_met:
        notes.append("T is below the step-count precondition; guarantee checks are not applicable")
    if x_star is not None:
        checks["final_gap"] = check_final_gap(trace, mcfg, f_star)
    lam_tol = None
    try:
        x_lam, lam_tol = _certified(lambda tol: regularized_minimizer(mcfg, risk, tol=tol))
    except OracleError as exc:
        x_lam = None
        notes.append(f"oracle for x*_lam inconclusive: {exc}")
    if x_lam is not None:
        checks["distance_bound"] = check_distance_bound(trace, mcfg, x_lam)
        lemma = check_rel_mirror_lemma(trace, mcfg, risk, x_lam)
        checks.update({f"contraction_{k}": v for k, v in lemma.items()})
        if x_star is not None:
            checks["anchor_chain"] = check_breg_anchor_bound(mcfg, risk, x_star, x_lam)
    timing["checks"] = time.perf_counter() - t2
    out = prepare_out(cfg)
    ref = f_star if f_star is not None else float(np.min(trace.values))
    trace.to_csv(out / "trace.csv", ref)
    trace.to_json(out / "trace.json", ref)
    if f_star is not None:
        curve = measure_convergence(trace, f_star)
        write_curve_csv(out / "curve.csv", curve.t, curve.gap)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "algorithm": "stabreg_rel",
        **mcfg.describe(),
        "D_source": D_source,
        "final_gap": None if f_star is None else float(trace.values[-1] - f_star),
        "f_star": f_star,
        "oracle_certificate": None if opt is None else opt.certificate,
        "oracle_tolerance": tol_used,
        "oracle_tolerance_regularized": lam_tol,
        "explicit_bound": 2.0 * mcfg.lam * mcfg.D**2,
        "warnings": notes,
        "checks": {k: report_dict(v) for k, v in checks.items()},
    }
    write_json(out / "summary.json", summary)
    write_timing(out, timing)
    failed = [k for k, v in checks.items() if v.status == "fail"]
    for note in notes:
        log("warning: " + note)
    log(f"lambda {mcfg.lam:.6e}; precondition met: {mcfg.precondition_met}; checks failed: {failed or 'none'}")
    return 1 if failed else 0


def stability_algorithm(cfg: ExperimentConfig, ns) -> tuple:
    """AlgorithmSpec with a data-independent D, plus a note on where D came from."""
    a, kind = cfg.algorithm, cfg.harness.algorithm
    if kind == "constant":
        return AlgorithmSpec("constant"), "unused"
    radius = a.radius
    if a.D != "auto":
        D, note = float(a.D), "config"
    elif kind == "stabreg_rel":
        bound = mirror_radius_bound(mirror_map(cfg))
        if bound is None:
            R = mirror_map(cfg)
            S = source(cfg, kind).dataset(max(ns))
            risk = EmpiricalRisk(S, make_loss(cfg.problem.loss, S))
            x_star = unregularized_minimizer(risk, R.domain)
            bound = float(R.value(x_star) - R.value(R.minimizer()))
            note = f"R(x*) - R(x0) on a reference sample of size {max(ns)}"
        else:
            note = "sup of R(x) - R(x0) over the domain"
        D = math.sqrt(bound) if bound > 0 else 1.0
    else:
        if a.domain == "l2ball":
            D, note = 2.0 * (1.0 if radius is None else radius), "domain diameter"
            radius = 1.0 if radius is None else radius
        else:
            S = source(cfg, kind).dataset(max(ns))
            risk = EmpiricalRisk(S, make_loss(cfg.problem.loss, S))
            x_star = unregularized_minimizer(risk, DomainSpec.unconstrained(cfg.problem.d))
            D = float(np.linalg.norm(x_star)) or 1.0
            note = f"||x*|| on a reference sample of size {max(ns)}"
    if kind == "stabreg_convex" and a.domain not in ("unconstrained", "l2ball"):
        raise ConfigError("stabreg_convex runs on R^d or an l2 ball")
    spec = AlgorithmSpec(kind, D=D, base=a.base, C=a.C, gamma=a.gamma, mirror=a.mirror, p=a.p, radius=radius)
    return spec, note


def _estimate_rows(ests):
    return [{"n": e.n, "t": e.t, "estimate": e.estimate} for e in ests]


def _write_estimates(out: Path, ests):
    with open(out / "stability.csv", "w") as fh:
        fh.write("n,t,estimate\n")
        for e in ests:
            fh.write(f"{e.n},{e.t},{e.estimate!r}\n")


def cmd_stability(cfg: ExperimentConfig, dry_run=False, log=print) -> int:
    h = cfg.harness
    alg, note = stability_algorithm(cfg, [cfg.problem.n])
    if dry_run:
        log(f"algorithm {alg.label} D={alg.D!r} ({note}) n={cfg.problem.n} checkpoints={h.checkpoints}")
        return 0
    t0 = time.perf_counter()
    ests = estimate_stability(alg, source(cfg, h.algorithm), cfg.problem.n, h.checkpoints, h.trials,
                              h.pool_size, cfg.problem.seed)
    out = prepare_out(cfg)
    _write_estimates(out, ests)
    write_curve_csv(out / "curve.csv", [e.t for e in ests], [e.estimate for e in ests])
    write_json(out / "stability.json", {
        "schema_version": SCHEMA_VERSION,
        "algorithm": alg.label,
        "D": alg.D,
        "D_source": note,
        "estimates": [e.to_dict() for e in ests],
    })
    write_timing(out, {"stability": time.perf_counter() - t0})
    for e in ests:
        log(f"t={e.t} n={e.n} {e.label}: {e.estimate:.6e}")
    return 0


def theory_gamma(cfg: ExperimentConfig, alg: AlgorithmSpec) -> float:
    if alg.kind == "stabreg_convex":
        return alg.base_optimizer().gamma
    if alg.kind == "stabreg_rel":
        return 1.0
    return 0.0


def cmd_sweep(cfg: ExperimentConfig, dry_run=False, log=print) -> int:
    h = cfg.harness
    if len(set(h.checkpoints)) < 3 or len(set(h.ns)) < 2:
        raise ConfigError("a sweep needs at least 3 checkpoints and 2 sample sizes")
    alg, note = stability_algorithm(cfg, h.ns)
    gamma = theory_gamma(cfg, alg)
    if dry_run:
        log(f"algorithm {alg.label} D={alg.D!r} ({note}) ns={h.ns} checkpoints={h.checkpoints} gamma={gamma}")
        return 0
    t0 = time.perf_counter()
    ests = []
    for n in h.ns:
        ests.extend(estimate_stability(alg, source(cfg, h.algorithm), n, h.checkpoints, h.trials, h.pool_size,
                                       cfg.problem.seed))
    report = stability_vs_theory(ests, gamma, h.slope_slack, halving_factor=h.halving_factor)
    out = prepare_out(cfg)
    _write_estimates(out, ests)
    for n in h.ns:
        rows = [e for e in ests if e.n == n]
        write_curve_csv(out / f"curve_n{n}.csv", [e.t for e in rows], [e.estimate for e in rows])
    write_json(out / "sweep.json", {
        "schema_version": SCHEMA_VERSION,
        "algorithm": alg.label,
        "D": alg.D,
        "D_source": note,
        "report": report,
        "estimates": _estimate_rows(ests),
    })
    write_timing(out, {"sweep": time.perf_counter() - t0})
    log(f"{alg.label}: slope_t {report.get('slope_t')} slope_n {report.get('slope_n')} -> {report['status']}")
    return exit_code(report["status"])


def cmd_verify(cfg: ExperimentConfig, dry_run=False, log=print) -> int:
    h = cfg.harness
    if dry_run:
        log(f"verify seed={cfg.problem.seed} sizes={h.sizes} sabotage={h.sabotage}")
        return 0
    t0 = time.perf_counter()
    report = verify_all_lemmas(cfg.problem.seed, h.sizes, h.sabotage)
    out = prepare_out(cfg)
    write_json(out / "lemmas.json", report)
    write_timing(out, {"verify": time.perf_counter() - t0})
    for name, entry in report["lemmas"].items():
        log(f"{name}: {entry['status']}")
    log(f"overall: {report['status']}")
    return exit_code(report["status"])


HANDLERS = {
    "run-convex": cmd_run_convex,
    "run-mirror": cmd_run_mirror,
    "stability": cmd_stability,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return HANDLERS[cfg.command](cfg, dry_run=args.dry_run)
    except ConfigError as exc:
        print(f"stabopt: usage error: {exc}", file=sys.stderr)
        return 2
    except StaboptError as exc:
        print(f"stabopt: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
