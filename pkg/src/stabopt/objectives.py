"""Per-example convex losses, datasets and (regularized) empirical risks."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit

from .errors import ConfigError, DegenerateDataError
from .vecspace import NormSpec, as_vector, norm, uniform_l2_ball

LOSS_KINDS = ("logistic", "pseudo_huber", "smoothed_hinge")
CLASSIFICATION = ("logistic", "smoothed_hinge")


@dataclass(frozen=True)
class Example:
    a: np.ndarray
    b: float


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    """n examples stored row-wise; `feature_bound` is measured in `norm.dual()`."""

    A: np.ndarray
    b: np.ndarray
    feature_bound: float
    norm: NormSpec = NormSpec.l2()

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if A.shape[0] < 1:
            raise DegenerateDataError("dataset needs at least one example")
        if A.shape[0] != b.size:
            raise ValueError("feature rows and labels disagree in length")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("dataset contains non-finite values")
        if not self.feature_bound > 0:
            raise ConfigError("feature bound must be positive")
        norms = row_norms(A, self.norm.dual())
        if np.any(norms > self.feature_bound * (1 + 1e-12)):
            raise ValueError(
                f"feature norm {norms.max():.6g} exceeds declared bound {self.feature_bound:.6g}"
            )
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "b", _frozen(b))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]

    def __len__(self):
        return self.n

    def __getitem__(self, i) -> Example:
        return Example(self.A[i].copy(), float(self.b[i]))

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.norm == other.norm
            and self.feature_bound == other.feature_bound
            and np.array_equal(self.A, other.A)
            and np.array_equal(self.b, other.b)
        )

    __hash__ = None

    @classmethod
    def from_examples(cls, examples, feature_bound, norm=NormSpec.l2()):
        examples = list(examples)
        return cls(np.array([e.a for e in examples]), np.array([e.b for e in examples]), feature_bound, norm)

    def to_csv(self, path):
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["b"] + [f"a_{j + 1}" for j in range(self.d)])
            for bi, row in zip(self.b, self.A):
                w.writerow([repr(float(bi))] + [repr(float(x)) for x in row])

    @classmethod
    def from_csv(cls, path, feature_bound=None, norm=NormSpec.l2()):
        with Path(path).open(newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        if not header or header[0] != "b" or any(h != f"a_{j + 1}" for j, h in enumerate(header[1:])):
            raise ValueError(f"unexpected dataset header {header}")
        data = np.array(body, dtype=float).reshape(len(body), len(header))
        A, b = data[:, 1:], data[:, 0]
        if feature_bound is None:
            feature_bound = float(row_norms(A, norm.dual()).max())
        return cls(A, b, feature_bound, norm)


def row_norms(A, n: NormSpec) -> np.ndarray:
    A = np.abs(np.atleast_2d(A))
    if n.kind == "l1":
        return A.sum(axis=1)
    if n.kind == "l2":
        return np.sqrt((A * A).sum(axis=1))
    if n.kind == "linf":
        return A.max(axis=1)
    return np.array([norm(r, n) for r in A])


def make_neighbor(S: Dataset, i: int, z: Example) -> Dataset:
    """Return S with position i (0-based) replaced by z."""
    if not 0 <= i < S.n:
        raise IndexError(f"replacement index {i} outside [0, {S.n})")
    a = as_vector(z.a)
    if a.size != S.d:
        raise ValueError("replacement example has the wrong dimension")
    A = np.array(S.A)
    b = np.array(S.b)
    A[i] = a
    b[i] = z.b
    return Dataset(A, b, S.feature_bound, S.norm)


# ---------------------------------------------------------------- losses


@dataclass(frozen=True)
class LossModel:
    """A convex loss of the linear prediction a.x with certified constants.

    `beta` and `lipschitz` are valid with respect to `norm` (gradients are
    measured in its dual).
    """

    kind: str
    beta: float
    lipschitz: float
    norm: NormSpec = NormSpec.l2()
    delta: float = 1.0

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ConfigError(f"unknown loss kind {self.kind!r}")
        if not (self.beta > 0 and self.lipschitz > 0):
            raise ConfigError("loss constants must be positive")
        if not self.delta > 0:
            raise ConfigError("delta must be positive")

    # scalar profile phi(s) where s is the margin (classification) or residual
    def _arg(self, u, b):
        return b * u if self.kind in CLASSIFICATION else u - b

    def _phi(self, s):
        if self.kind == "logistic":
            return np.logaddexp(0.0, -s)
        if self.kind == "pseudo_huber":
            dl = self.delta
            return dl * dl * (np.sqrt(1.0 + (s / dl) ** 2) - 1.0)
        dl = self.delta
        return np.where(s >= 1.0, 0.0, np.where(s > 1.0 - dl, (1.0 - s) ** 2 / (2 * dl), 1.0 - s - dl / 2))

    def _dphi(self, s):
        if self.kind == "logistic":
            return -expit(-s)
        if self.kind == "pseudo_huber":
            return s / np.sqrt(1.0 + (s / self.delta) ** 2)
        dl = self.delta
        return np.where(s >= 1.0, 0.0, np.where(s > 1.0 - dl, (s - 1.0) / dl, -1.0))

    def _d2phi(self, s):
        if self.kind == "logistic":
            p = expit(s)
            return p * (1.0 - p)
        if self.kind == "pseudo_huber":
            return (1.0 + (s / self.delta) ** 2) ** -1.5
        return np.where((s < 1.0) & (s > 1.0 - self.delta), 1.0 / self.delta, 0.0)

    def values(self, x, A, b) -> np.ndarray:
        """Loss of x on every row of (A, b)."""
        u = np.asarray(A) @ x
        return self._phi(self._arg(u, np.asarray(b)))

    def grads(self, x, A, b) -> np.ndarray:
        A = np.asarray(A)
        b = np.asarray(b)
        s = self._arg(A @ x, b)
        scale = self._dphi(s) * (b if self.kind in CLASSIFICATION else 1.0)
        return scale[:, None] * A


def loss_value(loss: LossModel, x, z: Example) -> float:
    return float(loss.values(np.asarray(x, float), np.atleast_2d(z.a), np.atleast_1d(z.b))[0])


def loss_grad(loss: LossModel, x, z: Example) -> np.ndarray:
    return loss.grads(np.asarray(x, float), np.atleast_2d(z.a), np.atleast_1d(z.b))[0]


def _curvature_and_slope(kind, delta):
    """Bounds on |phi''| and |phi'| for a unit-magnitude label."""
    if kind == "logistic":
        return 0.25, 1.0
    if kind == "pseudo_huber":
        return 1.0, delta
    if kind == "smoothed_hinge":
        return 1.0 / delta, 1.0
    raise ConfigError(f"unsupported loss kind {kind!r}")


def constants_from_bound(kind, feature_bound, delta=1.0, label_bound=1.0):
    """(beta, G) from a bound on the dual norm of the features.

    Data-independent, so neighbouring datasets share them.
    """
    curv, slope = _curvature_and_slope(kind, delta)
    if not feature_bound > 0:
        raise DegenerateDataError("zero feature bound carries no signal")
    lab = label_bound if kind in CLASSIFICATION else 1.0
    return curv * lab * lab * feature_bound**2, slope * lab * feature_bound


def certify_constants(kind, dataset: Dataset, delta=1.0):
    """Smoothness and Lipschitz constants of the loss family on `dataset`.

    Gradients are linear images of the features, so both constants scale
    with the largest dual norm of a feature row; for logistic loss under
    l2 this is beta = max ||a_i||^2 / 4 and G = max ||a_i||.
    """
    if kind not in LOSS_KINDS:
        raise ConfigError(f"unsupported loss kind {kind!r}")
    if dataset.norm.kind not in ("l1", "l2", "lp", "linf"):
        raise ConfigError(f"unsupported geometry {dataset.norm}")
    amax = float(row_norms(dataset.A, dataset.norm.dual()).max())
    if amax == 0.0:
        raise DegenerateDataError("all feature vectors are zero; beta would be 0")
    label = 1.0
    if kind in CLASSIFICATION:
        label = float(np.abs(dataset.b).max())
        if label != 1.0 or not np.all(np.abs(dataset.b) == 1.0):
            raise ConfigError(f"{kind} loss needs labels in {{-1, +1}}")
    return constants_from_bound(kind, amax, delta, label)


def make_loss(kind, dataset: Dataset, delta=1.0, use_bound=False) -> LossModel:
    if use_bound:
        beta, G = constants_from_bound(kind, dataset.feature_bound, delta)
    else:
        beta, G = certify_constants(kind, dataset, delta)
    return LossModel(kind, beta, G, dataset.norm, delta)


# ---------------------------------------------------------------- risks


class EmpiricalRisk:
    """F_S(x) = mean_i loss(x; z_i)."""

    def __init__(self, dataset: Dataset, loss: LossModel):
        if dataset.norm != loss.norm:
            raise ConfigError(f"dataset geometry {dataset.norm} does not match loss geometry {loss.norm}")
        self.dataset = dataset
        self.loss = loss

    @property
    def beta(self) -> float:
        return self.loss.beta

    @property
    def dim(self) -> int:
        return self.dataset.d

    def value(self, x) -> float:
        return float(np.mean(self.loss.values(x, self.dataset.A, self.dataset.b)))

    def grad(self, x) -> np.ndarray:
        return self.value_and_grad(x)[1]

    def value_and_grad(self, x):
        x = np.asarray(x, dtype=float)
        A, b = self.dataset.A, self.dataset.b
        s = self.loss._arg(A @ x, b)
        vals = self.loss._phi(s)
        w = self.loss._dphi(s) * (b if self.loss.kind in CLASSIFICATION else 1.0)
        return float(np.mean(vals)), A.T @ w / A.shape[0]

    def hessian(self, x) -> np.ndarray:
        A, b = self.dataset.A, self.dataset.b
        s = self.loss._arg(A @ np.asarray(x, float), b)
        w = self.loss._d2phi(s) * (b * b if self.loss.kind in CLASSIFICATION else 1.0)
        return (A.T * w) @ A / A.shape[0]

    def __call__(self, x):
        return self.value_and_grad(x)


class RegularizedRisk:
    """F_S plus lam * regularizer.

    With `mirror=None` the regularizer is (1/2)||x - anchor||_2^2; otherwise
    it is the mirror map's reference function R(x).
    """

    def __init__(self, base, lam, anchor=None, mirror=None):
        if lam < 0:
            raise ConfigError("regularization weight must be nonnegative")
        if mirror is None and anchor is None:
            raise ConfigError("squared-Euclidean regularizer needs an anchor")
        self.base = base
        self.lam = float(lam)
        self.anchor = None if anchor is None else as_vector(anchor)
        self.mirror = mirror

    @property
    def beta(self) -> float:
        """Euclidean smoothness (only meaningful for the squared-Euclidean form)."""
        return self.base.beta + self.lam

    @property
    def dim(self) -> int:
        return self.base.dim

    def reg_value_and_grad(self, x):
        if self.mirror is None:
            r = np.asarray(x, float) - self.anchor
            return 0.5 * float(r @ r), r
        return self.mirror.value(x), self.mirror.grad(x)

    def value_and_grad(self, x):
        v, g = self.base.value_and_grad(x)
        if self.lam == 0.0:
            return v, g
        rv, rg = self.reg_value_and_grad(x)
        return v + self.lam * rv, g + self.lam * rg

    def value(self, x) -> float:
        return self.value_and_grad(x)[0]

    def grad(self, x) -> np.ndarray:
        return self.value_and_grad(x)[1]

    def hessian(self, x) -> np.ndarray:
        H = self.base.hessian(x)
        if self.lam == 0.0:
            return H
        if self.mirror is None:
            return H + self.lam * np.eye(H.shape[0])
        return H + self.lam * self.mirror.hessian(x)

    def __call__(self, x):
        return self.value_and_grad(x)


def risk_value_and_grad(F, x):
    return F.value_and_grad(x)


@dataclass
class QuadraticObjective:
    """f(x) = 0.5 x'Qx + c'x + const, used by closed-form checks."""

    Q: np.ndarray
    c: np.ndarray
    const: float = 0.0
    beta: float = field(default=None)

    def __post_init__(self):
        self.Q = np.atleast_2d(np.asarray(self.Q, float))
        self.c = np.asarray(self.c, float).reshape(-1)
        if self.beta is None:
            self.beta = max(float(np.linalg.eigvalsh(self.Q).max()), 1e-300)

    @property
    def dim(self):
        return self.c.size

    def value_and_grad(self, x):
        x = np.asarray(x, float)
        Qx = self.Q @ x
        return float(0.5 * x @ Qx + self.c @ x + self.const), Qx + self.c

    def value(self, x):
        return self.value_and_grad(x)[0]

    def grad(self, x):
        return self.value_and_grad(x)[1]

    def hessian(self, x):
        return self.Q.copy()

    def __call__(self, x):
        return self.value_and_grad(x)


# ---------------------------------------------------------------- data


@dataclass(frozen=True)
class SyntheticSource:
    """Seeded generator of labelled examples from a planted linear model.

    Features are uniform on the dual-norm ball of radius `feature_bound`
    (the l2 ball for Euclidean geometry, the cube for l1 geometry). For lp
    geometry they are drawn from the l2 ball, which lies inside the dual
    ball. Labels follow logistic noise around a planted direction.
    """

    d: int
    feature_bound: float = 1.0
    norm: NormSpec = NormSpec.l2()
    loss_kind: str = "logistic"
    seed: int = 0
    signal: float = 3.0

    def planted(self) -> np.ndarray:
        rng = np.random.default_rng([self.seed, 0x5EED])
        w = rng.standard_normal(self.d)
        return self.signal * w / np.linalg.norm(w)

    def features(self, rng, m) -> np.ndarray:
        dual = self.norm.dual()
        if dual.kind == "l2":
            return uniform_l2_ball(rng, m, self.d, self.feature_bound)
        if dual.kind == "linf":
            return rng.uniform(-self.feature_bound, self.feature_bound, size=(m, self.d))
        if dual.kind == "lp" and dual.p >= 2.0:
            # the l2 ball sits inside the lq ball of the same radius when q >= 2
            return uniform_l2_ball(rng, m, self.d, self.feature_bound)
        raise ConfigError(f"no feature sampler for dual norm {dual}")

    def draw(self, rng, m):
        A = self.features(rng, m)
        u = A @ self.planted() / self.feature_bound
        if self.loss_kind in CLASSIFICATION:
            b = np.where(rng.random(m) < expit(u), 1.0, -1.0)
        else:
            b = u + rng.logistic(0.0, 0.5, size=m)
        return A, b

    def dataset(self, n, rng=None) -> Dataset:
        rng = np.random.default_rng([self.seed, n, self.d]) if rng is None else rng
        A, b = self.draw(rng, n)
        return Dataset(A, b, self.feature_bound, self.norm)

    def example(self, rng) -> Example:
        A, b = self.draw(rng, 1)
        return Example(A[0], float(b[0]))


def synthetic_dataset(seed, n, d, feature_bound=1.0, norm=NormSpec.l2(), loss_kind="logistic") -> Dataset:
    """Deterministic dataset keyed by (seed, n, d, feature_bound)."""
    return SyntheticSource(d, feature_bound, norm, loss_kind, seed).dataset(n)
