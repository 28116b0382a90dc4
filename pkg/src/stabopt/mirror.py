"""Mirror maps, Bregman divergences and regularized mirror steps.

A mirror step here means

    argmin_{x in X}  g.(x - x_t) + beta * B_R(x, x_t) + lam * R(x)

which, after expanding B_R, is a plain mirror step on the lam-regularized
function with coefficient beta + lam. `mirror_step` uses that form and
closes it with a Bregman projection; `solve_step_direct` minimizes the
displayed objective by constrained Newton iterations without the rewrite.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import kl_div, logsumexp, xlogy

from .errors import ConfigError, DomainError, SolverError
from .report import InequalityReport
from .tolerances import TOL
from .vecspace import DomainSpec, NormSpec, norm, project

MIRROR_KINDS = ("squared_l2", "squared_lp", "neg_entropy")


def _rownorm_p(x, p):
    a = np.abs(x)
    scale = a.max(axis=-1, keepdims=True)
    safe = np.where(scale > 0, scale, 1.0)
    return (safe[..., 0] * np.sum((a / safe) ** p, axis=-1) ** (1.0 / p)) * (scale[..., 0] > 0)


@dataclass(frozen=True)
class MirrorMap:
    """A 1-strongly convex reference function R on `domain`.

    squared_l2:  R = ||x||_2^2 / 2          (l2 geometry; R^d or an l2 ball)
    squared_lp:  R = ||x||_p^2 / (2(p-1))   (lp geometry, 1 < p <= 2; R^d or an lp ball)
    neg_entropy: R = sum x_i log x_i        (l1 geometry; the simplex)
    """

    kind: str
    domain: DomainSpec
    p: float | None = None

    def __post_init__(self):
        k, dom = self.kind, self.domain
        if k not in MIRROR_KINDS:
            raise ConfigError(f"unknown mirror map {k!r}")
        if k == "neg_entropy" and dom.kind != "simplex":
            raise ConfigError("negative entropy is only supported on the simplex")
        if k == "squared_l2" and dom.kind not in ("unconstrained", "l2ball"):
            raise ConfigError("squared_l2 pairs with R^d or an l2 ball")
        if k == "squared_lp":
            p = self.p if self.p is not None else dom.p
            if p is None or not 1.0 < p <= 2.0:
                raise ConfigError(f"squared_lp needs p in (1, 2], got {p}")
            if dom.kind not in ("unconstrained", "lpball") or (dom.kind == "lpball" and dom.p != p):
                raise ConfigError("squared_lp pairs with R^d or an lp ball of the same p")
            object.__setattr__(self, "p", float(p))
        elif self.p is not None:
            raise ConfigError(f"{k} takes no exponent")

    @classmethod
    def squared_l2(cls, dim, radius=None):
        dom = DomainSpec.unconstrained(dim) if radius is None else DomainSpec.l2ball(dim, radius)
        return cls("squared_l2", dom)

    @classmethod
    def squared_lp(cls, dim, p, radius=None):
        dom = DomainSpec.unconstrained(dim) if radius is None else DomainSpec.lpball(dim, p, radius)
        return cls("squared_lp", dom, p)

    @classmethod
    def neg_entropy(cls, dim):
        return cls("neg_entropy", DomainSpec.simplex(dim))

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def norm(self) -> NormSpec:
        """Norm in which R is 1-strongly convex."""
        return {"squared_l2": NormSpec.l2(), "neg_entropy": NormSpec.l1()}.get(self.kind) or NormSpec.lp(self.p)

    def __str__(self):
        return f"squared_lp({self.p:g})" if self.kind == "squared_lp" else self.kind

    # ------------------------------------------------------------ R and its derivatives

    def _check_interior(self, x):
        if self.kind == "neg_entropy" and np.any(np.asarray(x) <= 0):
            raise DomainError("negative entropy gradient is undefined at a zero coordinate")

    def value(self, x):
        x = np.asarray(x, float)
        if self.kind == "squared_l2":
            out = 0.5 * np.sum(x * x, axis=-1)
        elif self.kind == "squared_lp":
            out = _rownorm_p(x, self.p) ** 2 / (2.0 * (self.p - 1.0))
        else:
            if np.any(x < 0):
                raise DomainError("negative entropy needs nonnegative coordinates")
            out = np.sum(xlogy(x, x), axis=-1)
        return float(out) if np.ndim(out) == 0 else out

    def grad(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        if self.kind == "squared_l2":
            return x.copy()
        if self.kind == "neg_entropy":
            self._check_interior(x)
            return 1.0 + np.log(x)
        p = self.p
        N = _rownorm_p(x, p)[..., None]
        w = np.sign(x) * np.abs(x) ** (p - 1.0)
        safe = np.where(N > 0, N, 1.0)
        return np.where(N > 0, safe ** (2.0 - p) * w / (p - 1.0), 0.0)

    def hessian(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        d = x.size
        if self.kind == "squared_l2":
            return np.eye(d)
        if self.kind == "neg_entropy":
            self._check_interior(x)
            return np.diag(1.0 / x)
        p = self.p
        if np.any(x == 0):
            raise DomainError("squared lp Hessian is unbounded at a zero coordinate")
        N = norm(x, NormSpec.lp(p))
        w = np.sign(x) * np.abs(x) ** (p - 1.0)
        return ((2.0 - p) * N ** (2.0 - 2.0 * p) * np.outer(w, w)) / (p - 1.0) + N ** (2.0 - p) * np.diag(
            np.abs(x) ** (p - 2.0)
        )

    def grad_conj(self, y) -> np.ndarray:
        """Inverse of grad R on the whole space (ignores the domain)."""
        y = np.asarray(y, float)
        if self.kind == "squared_l2":
            return y.copy()
        if self.kind == "neg_entropy":
            return np.exp(y - 1.0)
        q = self.p / (self.p - 1.0)
        M = _rownorm_p(y, q)[..., None]
        w = np.sign(y) * np.abs(y) ** (q - 1.0)
        safe = np.where(M > 0, M, 1.0)
        return np.where(M > 0, (self.p - 1.0) * safe ** (2.0 - q) * w, 0.0)

    def minimizer(self) -> np.ndarray:
        """argmin of R over the domain (the canonical start x_0)."""
        return self.domain.center()

    # ------------------------------------------------------------ Bregman machinery

    def bregman(self, y, x):
        """B_R(y, x) = R(y) - R(x) - grad R(x).(y - x); broadcasts over leading axes."""
        y = np.asarray(y, float)
        x = np.asarray(x, float)
        if self.kind == "squared_l2":
            r = y - x
            out = 0.5 * np.sum(r * r, axis=-1)
        elif self.kind == "neg_entropy":
            self._check_interior(x)
            if np.any(y < 0):
                raise DomainError("entropy Bregman divergence needs y >= 0")
            out = np.sum(kl_div(y, x), axis=-1)
        else:
            out = self.value(y) - self.value(x) - np.sum(self.grad(x) * (y - x), axis=-1)
            out = np.maximum(out, 0.0)
        return float(out) if np.ndim(out) == 0 else out

    def bregman_project(self, y_dual, dom: DomainSpec | None = None) -> np.ndarray:
        """argmin_{x in dom} B_R(x, grad_conj(y_dual)), i.e. of R(x) - y_dual.x."""
        dom = self.domain if dom is None else dom
        y = np.asarray(y_dual, float)
        if not np.all(np.isfinite(y)):
            raise SolverError("non-finite dual point")
        if self.kind == "neg_entropy":
            if dom.kind != "simplex":
                raise ConfigError("entropy projections are only implemented onto the simplex")
            return np.exp(y - logsumexp(y))
        x = self.grad_conj(y)
        if dom.kind == "unconstrained":
            return x
        if self.kind == "squared_l2":
            return project(x, dom)
        if dom.kind != "lpball" or dom.p != self.p:
            raise ConfigError("squared_lp projects onto lp balls of its own exponent")
        # R depends on ||x||_p only, so the constrained minimizer keeps the
        # unconstrained direction and clips the radius
        nrm = norm(x, NormSpec.lp(self.p))
        return x if nrm <= dom.radius else x * (dom.radius / nrm)


def mirror_step(R: MirrorMap, x_t, g, beta, lam=0.0) -> np.ndarray:
    """Minimize g.(x - x_t) + beta B_R(x, x_t) + lam R(x) over R's domain."""
    if not beta > 0:
        raise ConfigError("mirror step needs beta > 0")
    if lam < 0:
        raise ConfigError("lam must be nonnegative")
    x_t = np.asarray(x_t, float)
    g = np.asarray(g, float)
    if R.kind == "neg_entropy":
        R._check_interior(x_t)
        # log-space form of (beta*grad R(x_t) - g)/(beta + lam); constants drop out after normalizing
        y = (beta * np.log(x_t) - g) / (beta + lam)
    else:
        y = (beta * R.grad(x_t) - g) / (beta + lam)
    x = R.bregman_project(y)
    if not np.all(np.isfinite(x)):
        raise SolverError("mirror step produced non-finite output")
    if R.kind == "neg_entropy" and np.any(x <= 0):
        # underflow would leave the interior where later steps are undefined
        x = np.maximum(x, np.finfo(float).tiny)
        x /= x.sum()
    return x


def step_objective(R: MirrorMap, x_t, g, beta, lam):
    """Value, gradient and Hessian callables of the regularized step objective."""
    x_t = np.asarray(x_t, float)
    g = np.asarray(g, float)
    Rt, gRt = R.value(x_t), R.grad(x_t)

    def val(x):
        return float(g @ (x - x_t) + beta * (R.value(x) - Rt - gRt @ (x - x_t)) + lam * R.value(x))

    def grad(x):
        gx = R.grad(x)
        return g + beta * (gx - gRt) + lam * gx

    def hess(x):
        H = R.hessian(x)
        return beta * H + lam * H

    return val, grad, hess


def stationarity_residual(R: MirrorMap, x_t, g, beta, lam, x) -> float:
    """Norm of the projected-gradient mapping of the step objective at x,
    relative to the objective's curvature scale beta + lam."""
    _, grad, _ = step_objective(R, x_t, g, beta, lam)
    kappa = beta + lam
    gx = grad(x)
    if R.domain.kind == "simplex":
        # interior point: feasible directions are the zero-sum subspace
        r = gx - gx.mean()
        return float(np.max(np.abs(r)) / kappa)
    return float(np.max(np.abs(x - project(x - gx / kappa, R.domain))))


def _damped_newton(val, grad, hess, x, max_iter=500, simplex=False):
    """Damped Newton with Armijo backtracking; `simplex` keeps sum(x) = 1, x > 0."""
    for _ in range(max_iter):
        gx = grad(x)
        H = hess(x)
        if simplex:
            sol = np.linalg.solve(H, np.column_stack([gx, np.ones_like(gx)]))
            Hinv_g, Hinv_1 = sol[:, 0], sol[:, 1]
            nu = Hinv_g.sum() / Hinv_1.sum()
            step = -(Hinv_g - nu * Hinv_1)
        else:
            step = -np.linalg.solve(H, gx)
        decrement = -float(gx @ step)
        scale = max(1.0, float(np.max(np.abs(x))))
        if decrement <= 1e-28 or np.max(np.abs(step)) <= 1e-13 * scale:
            # quadratic convergence: this last step lands at round-off level
            xn = x + step
            if simplex:
                xn = np.where(xn > 0, xn, x) if np.any(xn <= 0) else xn
                xn = xn / xn.sum()
            return xn
        t = 1.0
        if simplex:
            neg = step < 0
            if np.any(neg):
                t = min(1.0, 0.99 * float(np.min(-x[neg] / step[neg])))
        f0 = val(x)
        # below this the Armijo test compares round-off; take the (quadratically convergent) full step
        noise_floor = 1e-12 * max(1.0, abs(f0))
        while decrement > noise_floor:
            xn = x + t * step
            if (not simplex or np.all(xn > 0)) and val(xn) <= f0 - 0.25 * t * decrement:
                break
            t *= 0.5
            if t < 1e-12:
                raise SolverError("Newton line search failed", decrement)
        else:
            xn = x + t * step
        if simplex:
            xn = xn / xn.sum()
        x = xn
    raise SolverError("Newton step solver hit its iteration cap", decrement)


def solve_step_direct(R: MirrorMap, x_t, g, beta, lam=0.0) -> np.ndarray:
    """Minimize the regularized step objective by damped Newton iterations.

    Serves as a second, independent route to `mirror_step`: it never forms
    the dual point or calls the Bregman projection. A ball constraint is
    handled with a scalar multiplier on (1/2)||x||^2 found by Brent's method.
    """
    x_t = np.asarray(x_t, float)
    val, grad, hess = step_objective(R, x_t, g, beta, lam)
    dom = R.domain
    start = x_t.copy()
    if R.kind == "squared_lp":
        start[start == 0] = 1e-8
    if dom.kind == "simplex":
        return _damped_newton(val, grad, hess, start, simplex=True)
    x = _damped_newton(val, grad, hess, start)
    if dom.kind == "unconstrained":
        return x
    bn = NormSpec.l2() if dom.kind == "l2ball" else NormSpec.lp(dom.p)
    if norm(x, bn) <= dom.radius:
        return x
    # penalty (1/2)||x||^2 in the ball's norm has gradient c * grad R with c = 1 or p - 1
    c = 1.0 if R.kind == "squared_l2" else R.p - 1.0
    cache = {"x": x}

    def radius_gap(mu):
        v = lambda z: val(z) + mu * c * R.value(z)
        gr = lambda z: grad(z) + mu * c * R.grad(z)
        he = lambda z: hess(z) + mu * c * R.hessian(z)
        z = _damped_newton(v, gr, he, cache["x"].copy())
        cache["x"] = z
        return norm(z, bn) - dom.radius

    hi = 1.0
    while radius_gap(hi) > 0:
        hi *= 4.0
        if hi > 1e300:
            raise SolverError("could not bracket the ball multiplier")
    mu = brentq(radius_gap, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    radius_gap(mu)
    return cache["x"]


# ---------------------------------------------------------------- property checks


def _batch_value_grad(F, X):
    vals = np.empty(len(X))
    grads = np.empty_like(X)
    for i, x in enumerate(X):
        vals[i], grads[i] = F.value_and_grad(x)
    return vals, grads


def check_relative_smoothness(F, X, Y, strong=None, smooth=None, tol=None) -> InequalityReport:
    """Two-sided relative bounds of the regularized risk F = F_S + lam R.

    For every pair (x, y):
        f(x) + grad f(x).(y-x) + strong * B(y,x) <= f(y)
        f(x) + grad f(x).(y-x) + smooth * B(y,x) >= f(y)
    with default constants strong = lam and smooth = lam + beta.
    """
    tol = TOL.rel_smooth_slack if tol is None else tol
    R = F.mirror
    if R is None:
        raise ConfigError("relative-smoothness check needs a mirror-map regularizer")
    strong = F.lam if strong is None else strong
    smooth = F.lam + F.base.beta if smooth is None else smooth
    X = np.atleast_2d(X)
    Y = np.atleast_2d(Y)
    fx, gx = _batch_value_grad(F, X)
    fy, _ = _batch_value_grad(F, Y)
    lin = fx + np.sum(gx * (Y - X), axis=1)
    B = R.bregman(Y, X)
    v_strong = lin + strong * B - fy
    v_smooth = fy - (lin + smooth * B)
    worst = float(max(v_strong.max(), v_smooth.max()))
    return InequalityReport(
        "relative_smoothness",
        worst,
        len(X),
        tol,
        {
            "strong_constant": float(strong),
            "smooth_constant": float(smooth),
            "max_violation_strong": float(v_strong.max()),
            "max_violation_smooth": float(v_smooth.max()),
        },
    )


def check_three_point(R: MirrorMap, x_t, g, beta, lam, X, bregman=None, tol=None) -> InequalityReport:
    """Three-point inequality for the step z+ = mirror_step(R, z, g, beta, lam).

    With phi(x) = (g.(x - z) + lam R(x)) / beta, checks for every row x of X
        phi(x) + B(x, z) >= phi(z+) + B(z+, z) + B(x, z+).
    `bregman` replaces R.bregman (used for mutation tests).
    """
    tol = TOL.mirror_stationarity if tol is None else tol
    B = R.bregman if bregman is None else bregman
    z = np.asarray(x_t, float)
    zp = mirror_step(R, z, g, beta, lam)
    X = np.atleast_2d(X)

    def phi(x):
        return (np.asarray(x) - z) @ g / beta + lam * np.asarray(R.value(x)) / beta

    lhs = phi(X) + B(X, z)
    rhs = phi(zp) + B(zp, z) + B(X, zp)
    viol = rhs - lhs
    return InequalityReport("three_point", float(np.max(viol)), len(X), tol, {})


def lp_sq_bregman_gap(eps, p):
    """||y||_p^2 - ||x||_p^2 - grad.(y-x) at x = e_1, y = e_1 + eps e_2."""
    return np.expm1((2.0 / p) * np.log1p(eps**p))


def lp_nonsmooth_witness(p, beta, eps_grid=None):
    """First eps on the grid (largest first) with gap > beta eps^2 / 2, or None.

    Witnesses that ||x||_p^2 (1 < p < 2) has no finite smoothness constant
    w.r.t. the lp norm.
    """
    eps_grid = 10.0 ** -np.arange(1, 41) if eps_grid is None else np.asarray(eps_grid, float)
    for eps in eps_grid:
        gap = lp_sq_bregman_gap(eps, p)
        bound = beta * eps**2 / 2.0
        if gap > bound:
            return {"eps": float(eps), "gap": float(gap), "quadratic_bound": float(bound)}
    return None
