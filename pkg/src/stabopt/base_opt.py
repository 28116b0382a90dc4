"""Black-box first-order optimizers and a certified high-precision minimizer.

Every base method exposes the call A(f, beta, x0, t) -> x_t together with
declared rate constants (C, gamma), meaning

    f(x_t) - f(x*) <= C * beta * dist(x0, x*)^2 / t^gamma

where dist is the Euclidean distance for GD/NAG and the Bregman divergence
B_R(x*, x0) for mirror descent.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import ConfigError, NumericError, OracleError, SolverError
from .mirror import MirrorMap, _damped_newton, mirror_step
from .tolerances import TOL
from .vecspace import DomainSpec, as_vector, project

BASE_KINDS = ("gd", "nag", "md")
DEFAULT_RATES = {"gd": (0.5, 1.0), "nag": (2.0, 2.0), "md": (1.0, 1.0)}


@dataclass(frozen=True)
class BaseOptimizer:
    kind: str
    C: float
    gamma: float
    mirror: MirrorMap | None = None

    def __post_init__(self):
        if self.kind not in BASE_KINDS:
            raise ConfigError(f"unknown base optimizer {self.kind!r}")
        if not self.C > 0:
            raise ConfigError("rate constant C must be positive")
        if not 0 < self.gamma <= 2:
            raise ConfigError("rate exponent gamma must lie in (0, 2]")
        if self.kind == "md" and self.mirror is None:
            raise ConfigError("mirror descent needs a mirror map")

    @classmethod
    def gd(cls, C=None, gamma=None):
        c0, g0 = DEFAULT_RATES["gd"]
        return cls("gd", c0 if C is None else C, g0 if gamma is None else gamma)

    @classmethod
    def nag(cls, C=None, gamma=None):
        c0, g0 = DEFAULT_RATES["nag"]
        return cls("nag", c0 if C is None else C, g0 if gamma is None else gamma)

    @classmethod
    def md(cls, mirror: MirrorMap, C=None, gamma=None):
        c0, g0 = DEFAULT_RATES["md"]
        return cls("md", c0 if C is None else C, g0 if gamma is None else gamma, mirror)

    def rate_bound(self, beta, dist2, t):
        """Declared bound on f(x_t) - f(x*) given dist(x0, x*)^2."""
        t = np.asarray(t, float)
        with np.errstate(divide="ignore"):
            return self.C * beta * dist2 / t**self.gamma


@dataclass
class OptimizeRequest:
    """One black-box call: `steps` iterations on `objective` from `x0`.

    `objective(x)` must return (value, gradient); `beta` is the smoothness
    constant the method is allowed to use.
    """

    objective: object
    beta: float
    x0: np.ndarray
    steps: int
    domain: DomainSpec | None = None

    def __post_init__(self):
        self.x0 = as_vector(self.x0)
        if int(self.steps) != self.steps or self.steps < 0:
            raise ConfigError("step budget must be a nonnegative integer")
        self.steps = int(self.steps)
        if not self.beta > 0:
            raise ConfigError("smoothness constant must be positive")
        if self.domain is None:
            self.domain = DomainSpec.unconstrained(self.x0.size)
        if not self.domain.contains(self.x0):
            raise ConfigError("start point lies outside the domain")


def _gradient(objective, x, k):
    _, g = objective(x)
    if not np.all(np.isfinite(g)):
        raise NumericError("non-finite gradient", k)
    return g


def iterate_base(opt: BaseOptimizer, req: OptimizeRequest):
    """Yield x_1, ..., x_t of the requested run."""
    f, beta, dom = req.objective, req.beta, req.domain
    x = req.x0.copy()
    if opt.kind == "gd":
        for k in range(req.steps):
            x = project(x - _gradient(f, x, k) / beta, dom)
            yield x
    elif opt.kind == "nag":
        x_prev, y, s = x, x, 1.0
        for k in range(req.steps):
            x = project(y - _gradient(f, y, k) / beta, dom)
            s_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * s * s))
            y = x + ((s - 1.0) / s_next) * (x - x_prev)
            x_prev, s = x, s_next
            yield x
    else:
        R = opt.mirror
        if R.domain != dom:
            raise ConfigError("mirror map domain differs from the request domain")
        for k in range(req.steps):
            x = mirror_step(R, x, _gradient(f, x, k), beta, 0.0)
            yield x


def run_base(opt: BaseOptimizer, req: OptimizeRequest) -> np.ndarray:
    """x_t = A(f, beta, x0, t). Zero steps returns a copy of x0."""
    x = req.x0.copy()
    for k, x in enumerate(iterate_base(opt, req)):
        if not np.all(np.isfinite(x)):
            raise NumericError("non-finite iterate", k + 1)
    return x


def base_path(opt: BaseOptimizer, req: OptimizeRequest) -> np.ndarray:
    """All iterates x_0..x_t stacked row-wise."""
    return np.vstack([req.x0] + list(iterate_base(opt, req)))


# ---------------------------------------------------------------- oracle


@dataclass
class OracleResult:
    x: np.ndarray
    value: float
    certificate: float
    iterations: int
    method: str


def _linear_min(g, dom: DomainSpec) -> float:
    """min over dom of g.y (finite for bounded domains)."""
    if dom.kind == "simplex":
        return float(g.min())
    if dom.kind == "l2ball":
        return -dom.radius * float(np.linalg.norm(g))
    if dom.kind == "lpball":
        q = dom.p / (dom.p - 1.0)
        return -dom.radius * float(np.sum(np.abs(g) ** q) ** (1.0 / q))
    raise ConfigError("linear minimization needs a bounded domain")


def _certificate(f, x, L, mu, dom):
    """Best available upper bound on f(point) - f* and the point it certifies.

    Uses the linearization (Frank-Wolfe) gap on bounded domains and the
    gradient-mapping bound ||G||^2 / (2 mu) whenever mu > 0. Backtracks L
    until the descent inequality holds, which the second bound needs.
    """
    fx, gx = f(x)
    best, point, val = np.inf, x, fx
    if dom.bounded:
        best = max(float(gx @ x) - _linear_min(gx, dom), 0.0)
    if mu is not None and mu > 0:
        while True:
            xp = project(x - gx / L, dom)
            fp, _ = f(xp)
            diff = xp - x
            if fp <= fx + gx @ diff + 0.5 * L * (diff @ diff) + 1e-15 * abs(fx):
                break
            L *= 2.0
        gm = L * diff
        bound = float(gm @ gm) / (2.0 * mu)
        if bound < best:
            best, point, val = bound, xp, fp
    return best, point, val, L


def _simplex_face_newton(objective, x):
    """Newton polish restricted to the face spanned by the support of x.

    Returns None when the solve fails (typically a wrong support guess).
    """
    S = x > 0
    full = np.zeros_like(x)

    def embed(z):
        out = full.copy()
        out[S] = z
        return out

    try:
        z = _damped_newton(
            lambda z: objective.value(embed(z)),
            lambda z: objective.grad(embed(z))[S],
            lambda z: objective.hessian(embed(z))[np.ix_(S, S)],
            x[S] / x[S].sum(),
            max_iter=100,
            simplex=True,
        )
    except (SolverError, np.linalg.LinAlgError):
        return None
    return embed(z)


def _sphere_newton(objective, x, radius, max_iter=50):
    """Newton on the KKT system grad f(x) + nu x = 0, ||x|| = radius."""
    x = radius * x / np.linalg.norm(x)
    nu = -float(objective.grad(x) @ x) / radius**2
    d = x.size
    for _ in range(max_iter):
        g = objective.grad(x)
        r = np.concatenate([g + nu * x, [0.5 * (x @ x - radius**2)]])
        if np.max(np.abs(r)) <= 1e-15 * max(1.0, float(np.abs(g).max())):
            break
        K = np.zeros((d + 1, d + 1))
        K[:d, :d] = objective.hessian(x) + nu * np.eye(d)
        K[:d, d] = x
        K[d, :d] = x
        step = np.linalg.solve(K, -r)
        x, nu = x + step[:d], nu + step[d]
    if nu < 0:
        return None
    return radius * x / np.linalg.norm(x)


def _newton_polish(objective, x, dom):
    """Newton polish on R^d or an l2 ball (interior or boundary); None if it fails."""
    if dom.kind not in ("unconstrained", "l2ball") or not hasattr(objective, "hessian"):
        return None
    try:
        if dom.kind == "l2ball" and np.linalg.norm(x) > dom.radius * (1.0 - 1e-6):
            z = _sphere_newton(objective, x, dom.radius)
        else:
            z = _damped_newton(objective.value, objective.grad, objective.hessian, x, max_iter=50)
    except (SolverError, np.linalg.LinAlgError, ValueError):
        return None
    if z is None or not (np.all(np.isfinite(z)) and dom.contains(z)):
        return None
    return z


def _finish(f, objective, res, mu, dom, full_output):
    """Return `res`, replaced by a Newton-polished point when that certifies better."""
    if res.certificate > 0 and (dom.bounded or (mu is not None and mu > 0)):
        z = _newton_polish(objective, res.x, dom)
        if z is not None:
            cert, point, val, _ = _certificate(f, z, 1.0, mu, dom)
            if cert < res.certificate:
                res = OracleResult(point, val, cert, res.iterations, res.method + "+newton")
    return res if full_output else res.x


def _entropy_regularized(objective):
    R = getattr(objective, "mirror", None)
    return R is not None and R.kind == "neg_entropy" and getattr(objective, "lam", 0.0) > 0


def oracle_minimize(objective, domain: DomainSpec, mu=None, tol=None, beta=None, x0=None, max_iter=200000,
                    full_output=False):
    """High-precision minimizer with a certified objective gap <= tol.

    `mu` is a strong-convexity modulus (Euclidean) for the gradient-mapping
    certificate; bounded domains additionally use the linearization gap,
    which needs convexity only. Entropy-regularized problems on the simplex
    go through equality-constrained Newton. Raises OracleError when no
    certificate is reached within `max_iter` iterations.
    """
    tol = TOL.oracle_gap if tol is None else tol
    f = objective if callable(objective) else objective.value_and_grad
    x = domain.center() if x0 is None else project(as_vector(x0), domain)

    if domain.kind == "simplex" and _entropy_regularized(objective):
        try:
            x = _damped_newton(objective.value, objective.grad, objective.hessian, x, simplex=True)
        except SolverError as exc:
            raise OracleError(f"Newton oracle failed: {exc}") from exc
        fx, gx = f(x)
        # f >= f(x) + g.(y - x) + lam KL(y, x); minimizing the model over the
        # simplex bounds the gap even when some coordinates are nearly zero
        lam = objective.lam
        cert = max(float(gx @ x + lam * logsumexp(-gx / lam, b=x)), 0.0)
        if cert > tol:
            raise OracleError(f"Newton oracle certificate {cert:.3e} exceeds {tol:.1e}")
        res = OracleResult(x, fx, cert, 0, "newton")
        return res if full_output else res.x

    if beta is None:
        beta = getattr(objective, "beta", None)
    L = float(beta) if beta else 1.0
    if not domain.bounded and not (mu is not None and mu > 0):
        raise ConfigError("unconstrained oracle needs a strong-convexity modulus")

    cert, point, val, L = _certificate(f, x, L, mu, domain)
    if cert <= tol:
        return _finish(f, objective, OracleResult(point, val, cert, 0, "start"), mu, domain, full_output)

    # accelerated projected gradient with backtracking and function restarts
    dom = domain
    polish_budget = 20
    x_prev, y, s = x, x, 1.0
    f_prev = f(x)[0]
    last_checked, stalled = x, 0
    for it in range(1, max_iter + 1):
        fy, gy = f(y)
        while True:
            xn = project(y - gy / L, dom)
            fn, _ = f(xn)
            diff = xn - y
            if fn <= fy + gy @ diff + 0.5 * L * (diff @ diff) + 1e-15 * abs(fy):
                break
            L *= 2.0
        if fn > f_prev:
            # restart momentum from the better point
            y, s = x_prev, 1.0
        else:
            s_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * s * s))
            y = xn + ((s - 1.0) / s_next) * (xn - x_prev)
            x_prev, s, f_prev = xn, s_next, fn
        xn = x_prev
        if it % 5 == 0:
            cert, point, val, L = _certificate(f, xn, L, mu, dom)
            stalled = stalled + 1 if np.array_equal(xn, last_checked) else 0
            last_checked = xn
            if stalled >= 20:
                break
            if cert <= tol:
                return _finish(f, objective, OracleResult(point, val, cert, it, "accelerated"), mu, dom, full_output)
            if dom.kind == "simplex" and cert <= 1e-6 and polish_budget > 0 and hasattr(objective, "hessian"):
                polish_budget -= 1
                xp = _simplex_face_newton(objective, xn)
                if xp is not None:
                    fp, gp = f(xp)
                    cp = max(float(gp @ xp - gp.min()), 0.0)
                    if cp <= tol:
                        res = OracleResult(xp, fp, cp, it, "accelerated+face-newton")
                        return res if full_output else res.x
    if stalled >= 20:
        raise OracleError(f"oracle stalled at certificate {cert:.3e} > {tol:.1e}")
    raise OracleError(f"oracle budget of {max_iter} iterations exhausted (certificate {cert:.3e} > {tol:.1e})")


def local_modulus(objective, x) -> float:
    """Half the smallest Hessian eigenvalue at x.

    A working modulus for risks that are only locally strongly convex
    (unregularized logistic risk near its minimizer).
    """
    lam_min = float(np.linalg.eigvalsh(objective.hessian(x)).min())
    if not lam_min > 0:
        raise OracleError("objective is not strongly convex at the candidate point")
    return 0.5 * lam_min


def unregularized_minimizer(risk, domain: DomainSpec, tol=None, full_output=False):
    """Minimizer of a plain empirical risk.

    Bounded domains are certified by the linearization gap. On R^d a first
    pass with a generous modulus locates the basin, Newton iterations
    polish the point, and the result is certified with the local modulus
    found there.
    """
    tol = TOL.oracle_gap if tol is None else tol
    if domain.bounded:
        return oracle_minimize(risk, domain, mu=None, tol=tol, full_output=full_output)
    x = oracle_minimize(risk, domain, mu=risk.beta, tol=tol, max_iter=20000, full_output=True).x
    try:
        x = _damped_newton(risk.value, risk.grad, risk.hessian, x)
    except (SolverError, np.linalg.LinAlgError) as exc:
        raise OracleError(f"Newton polish failed: {exc}") from exc
    mu = local_modulus(risk, x)
    return oracle_minimize(risk, domain, mu=mu, tol=tol, x0=x, full_output=full_output)
