"""Dense vectors, norms, convex domains and Euclidean projections."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SolverError
from .tolerances import TOL

NORM_KINDS = ("l1", "l2", "lp", "linf")
DOMAIN_KINDS = ("unconstrained", "l2ball", "lpball", "simplex")


def as_vector(v) -> np.ndarray:
    """Copy `v` into a 1-D float array, rejecting NaN/inf entries."""
    arr = np.array(v, dtype=float).reshape(-1)
    if arr.size == 0:
        raise ValueError("vectors must have at least one entry")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector has non-finite entries")
    return arr


@dataclass(frozen=True)
class NormSpec:
    kind: str
    p: float | None = None

    def __post_init__(self):
        if self.kind not in NORM_KINDS:
            raise ConfigError(f"unknown norm kind {self.kind!r}")
        if self.kind == "lp":
            if self.p is None or not self.p > 1 or not np.isfinite(self.p):
                raise ConfigError(f"lp norm needs finite p > 1, got {self.p}")
            object.__setattr__(self, "p", float(self.p))
        elif self.p is not None:
            raise ConfigError(f"norm kind {self.kind!r} takes no exponent")

    @classmethod
    def l1(cls):
        return cls("l1")

    @classmethod
    def l2(cls):
        return cls("l2")

    @classmethod
    def linf(cls):
        return cls("linf")

    @classmethod
    def lp(cls, p):
        return cls("lp", p)

    @property
    def exponent(self) -> float:
        return {"l1": 1.0, "l2": 2.0, "linf": np.inf}.get(self.kind, self.p)

    def dual(self) -> "NormSpec":
        if self.kind == "l1":
            return NormSpec.linf()
        if self.kind == "linf":
            return NormSpec.l1()
        if self.kind == "l2":
            return self
        return NormSpec.lp(self.p / (self.p - 1.0))

    def __str__(self):
        return f"lp({self.p:g})" if self.kind == "lp" else self.kind

    @classmethod
    def parse(cls, text: str) -> "NormSpec":
        """Accepts l1, l2, linf, lp(1.5) and lp:1.5."""
        text = text.strip().lower()
        try:
            if text.startswith("lp(") and text.endswith(")"):
                return cls.lp(float(text[3:-1]))
            if text.startswith("lp:"):
                return cls.lp(float(text[3:]))
        except ValueError as exc:
            raise ConfigError(f"cannot parse norm {text!r}") from exc
        return cls(text)


def norm(v, n: NormSpec) -> float:
    v = np.asarray(v, dtype=float)
    a = np.abs(v)
    if n.kind == "l1":
        return float(a.sum())
    if n.kind == "l2":
        return float(np.linalg.norm(v))
    if n.kind == "linf":
        return float(a.max()) if a.size else 0.0
    scale = a.max()
    if scale == 0.0:
        return 0.0
    return float(scale * np.sum((a / scale) ** n.p) ** (1.0 / n.p))


def dual_norm(v, n: NormSpec) -> float:
    return norm(v, n.dual())


@dataclass(frozen=True)
class DomainSpec:
    """A closed convex subset of R^d.

    `radius` and `p` are only meaningful for the ball kinds.
    """

    kind: str
    dim: int
    radius: float = 1.0
    p: float | None = None

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise ConfigError(f"unknown domain kind {self.kind!r}")
        if int(self.dim) < 1:
            raise ConfigError("domain dimension must be >= 1")
        object.__setattr__(self, "dim", int(self.dim))
        if self.kind in ("l2ball", "lpball") and not self.radius > 0:
            raise ConfigError("ball radius must be positive")
        if self.kind == "lpball":
            if self.p is None or not 1.0 < self.p <= 2.0:
                raise ConfigError(f"lp ball needs p in (1, 2], got {self.p}")
            object.__setattr__(self, "p", float(self.p))

    @classmethod
    def unconstrained(cls, dim):
        return cls("unconstrained", dim)

    @classmethod
    def l2ball(cls, dim, radius=1.0):
        return cls("l2ball", dim, float(radius))

    @classmethod
    def lpball(cls, dim, p, radius=1.0):
        return cls("lpball", dim, float(radius), p)

    @classmethod
    def simplex(cls, dim):
        return cls("simplex", dim)

    @property
    def bounded(self) -> bool:
        return self.kind != "unconstrained"

    def diameter(self) -> float:
        """Euclidean diameter (inf when unbounded)."""
        if self.kind == "unconstrained":
            return np.inf
        if self.kind == "simplex":
            return np.sqrt(2.0) if self.dim > 1 else 0.0
        if self.kind == "l2ball":
            return 2.0 * self.radius
        # the l2 radius of an lp ball (p <= 2) equals its lp radius
        return 2.0 * self.radius

    def contains(self, x, tol=None) -> bool:
        tol = TOL.membership if tol is None else tol
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,) or not np.all(np.isfinite(x)):
            return False
        if self.kind == "unconstrained":
            return True
        if self.kind == "simplex":
            return bool(np.all(x >= -tol) and abs(x.sum() - 1.0) <= TOL.simplex_sum)
        n = NormSpec.l2() if self.kind == "l2ball" else NormSpec.lp(self.p)
        return norm(x, n) <= self.radius * (1.0 + tol)

    def center(self) -> np.ndarray:
        if self.kind == "simplex":
            return np.full(self.dim, 1.0 / self.dim)
        return np.zeros(self.dim)

    def sample(self, rng, size=None) -> np.ndarray:
        """Draw points from the domain (uniform for balls and the simplex).

        Unbounded domains draw standard normals.
        """
        m = 1 if size is None else int(size)
        d = self.dim
        if self.kind == "unconstrained":
            out = rng.standard_normal((m, d))
        elif self.kind == "simplex":
            out = rng.dirichlet(np.ones(d), size=m)
        elif self.kind == "l2ball":
            out = uniform_l2_ball(rng, m, d, self.radius)
        else:
            # generalized-gaussian trick: uniform on the unit lp ball
            g = rng.gamma(1.0 / self.p, 1.0, size=(m, d)) ** (1.0 / self.p)
            g *= rng.choice([-1.0, 1.0], size=(m, d))
            e = rng.exponential(1.0, size=(m, 1))
            out = self.radius * g / (np.sum(np.abs(g) ** self.p, axis=1, keepdims=True) + e) ** (1.0 / self.p)
        return out[0] if size is None else out


def uniform_l2_ball(rng, m, d, radius):
    g = rng.standard_normal((m, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = rng.random((m, 1)) ** (1.0 / d)
    return radius * r * g


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum(x) = 1} by sort-and-threshold."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def project_l2_ball(v, radius=1.0) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    r = np.linalg.norm(v)
    if r <= radius:
        return v.copy()
    return v * (radius / r)


def _lp_shrink(a, mu, p, iters=200):
    """Solve u + mu*p*u**(p-1) = a coordinatewise for u in [0, a] (a >= 0)."""
    lo = np.zeros_like(a)
    hi = a.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        over = mid + mu * p * mid ** (p - 1.0) > a
        hi = np.where(over, mid, hi)
        lo = np.where(over, lo, mid)
        if np.all(hi - lo <= 4 * np.finfo(float).eps * np.maximum(a, 1e-300)):
            break
    return 0.5 * (lo + hi)


def project_lp_ball(v, p, radius=1.0, tol=None, max_iter=200) -> np.ndarray:
    """Euclidean projection onto {||x||_p <= radius}, 1 < p <= 2.

    Bisection on the multiplier of the constraint sum |x_i|^p <= radius^p;
    each multiplier value fixes the coordinates through a monotone scalar
    equation solved by an inner bisection.
    """
    tol = TOL.lp_constraint if tol is None else tol
    v = np.asarray(v, dtype=float)
    np_ = NormSpec.lp(p)
    if norm(v, np_) <= radius:
        return v.copy()
    if p == 2.0:
        return project_l2_ball(v, radius)
    a = np.abs(v)
    s = np.sign(v)

    def residual(mu):
        u = _lp_shrink(a, mu, p)
        return norm(u, np_) - radius, u

    lo, hi = 0.0, 1.0
    res_hi, u = residual(hi)
    while res_hi > 0:
        lo, hi = hi, 2.0 * hi
        res_hi, u = residual(hi)
        if hi > 1e300:
            raise SolverError("lp-ball projection could not bracket the multiplier", res_hi)
    res = res_hi
    for _ in range(max_iter):
        if abs(res) <= tol:
            break
        mid = 0.5 * (lo + hi)
        res, u = residual(mid)
        if res > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= np.finfo(float).eps * hi:
            break
    if abs(res) > tol:
        raise SolverError("lp-ball projection did not converge", abs(res))
    return s * u


def project(v, dom: DomainSpec) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if dom.kind == "unconstrained":
        return v.copy()
    if dom.kind == "simplex":
        return project_simplex(v)
    if dom.kind == "l2ball":
        return project_l2_ball(v, dom.radius)
    return project_lp_ball(v, dom.p, dom.radius)
