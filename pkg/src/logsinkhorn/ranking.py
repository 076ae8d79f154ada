"""Hard and Sinkhorn (soft) ranking of a vector against an increasing anchor grid."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._validation import check_measure, check_vector, power_from_epsilon
from .core import StoppingRule, dense_kernel, run_sinkhorn
from .fsl1d import FslKernel1D

COST_KINDS = ("log", "squared")
BACKENDS = ("fsl", "dense")


def hard_rank(x):
    """Ranks ``1..n`` with the largest entry ranked ``n``; ties are rejected."""
    x = check_vector(x, "x")
    order = np.argsort(x, kind="stable")
    if np.any(np.diff(x[order]) == 0):
        raise ValueError("hard ranking needs pairwise distinct entries")
    ranks = np.empty(x.shape[0])
    ranks[order] = np.arange(1, x.shape[0] + 1)
    return ranks


def preprocess_x(x):
    """Standardize (population std) and squash through the logistic function."""
    x = check_vector(x, "x")
    if x.shape[0] < 2:
        raise ValueError("need at least two entries to standardize")
    centered = x - x.mean()
    scale = np.sqrt(np.mean(centered**2))
    if scale == 0:
        raise ValueError("x has zero variance; jitter it before preprocessing")
    return 1.0 / (1.0 + np.exp(-centered / scale))


def default_grid_and_tau(x_preprocessed, cost_kind="log"):
    """Anchor grid (and ``tau`` for the log cost) for inputs in ``(0, 1)``.

    The log grid is uniform on ``[1, 2]`` with ``tau = (2 - min x)/(1 - 1/e)``,
    which keeps every cost entry inside ``[0, 1]``. The squared grid is uniform
    on ``[0, 1]`` and ``tau`` is ``None``.
    """
    x = check_vector(x_preprocessed, "x")
    n = x.shape[0]
    if n < 2:
        raise ValueError("the anchor grid needs at least two points")
    steps = np.arange(n) / (n - 1)
    if cost_kind == "squared":
        return steps, None
    if cost_kind != "log":
        raise ValueError(f"unknown cost kind {cost_kind!r}")
    return 1.0 + steps, (2.0 - x.min()) / (1.0 - np.exp(-1.0))


@dataclass
class RankingProblem:
    """Inputs of a Sinkhorn ranking: values ``x``, anchors ``y``, weights and cost."""

    x: np.ndarray
    y: np.ndarray
    a: np.ndarray
    b: np.ndarray
    cost_kind: str = "log"
    epsilon: float = 0.1
    tau: Optional[float] = None

    def __post_init__(self):
        self.x = check_vector(self.x, "x")
        n = self.x.shape[0]
        self.y = check_vector(self.y, "y", n)
        self.a = check_measure(self.a, "a", n)
        self.b = check_measure(self.b, "b", n)
        if self.cost_kind not in COST_KINDS:
            raise ValueError(f"cost_kind must be one of {COST_KINDS}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if np.any(np.diff(self.y) <= 0):
            raise ValueError("anchor grid y must be strictly increasing")
        if self.cost_kind == "log":
            if self.tau is None:
                raise ValueError("the log cost needs tau")
            if not self.x.max() < self.y[0]:
                raise ValueError("the log cost needs max(x) < y_1")
            if not self.tau > self.y[-1] - self.x.min():
                raise ValueError("the log cost needs tau > y_n - min(x)")

    @classmethod
    def from_values(cls, x, cost_kind="log", epsilon=0.1, preprocess=True):
        """Uniform weights and the default anchor grid for ``x``."""
        xp = preprocess_x(x) if preprocess else check_vector(x, "x")
        y, tau = default_grid_and_tau(xp, cost_kind)
        n = xp.shape[0]
        w = np.full(n, 1.0 / n)
        return cls(xp, y, w, w.copy(), cost_kind, epsilon, tau)

    @property
    def n(self):
        return self.x.shape[0]

    def cost_matrix(self):
        z = self.y[None, :] - self.x[:, None]
        if self.cost_kind == "squared":
            return z**2
        return -np.log1p(-z / self.tau)

    def kernel(self, backend="fsl"):
        if backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")
        if backend == "dense":
            return dense_kernel(self.cost_matrix(), self.epsilon)
        if self.cost_kind != "log":
            raise ValueError("the fast backend only supports the log cost")
        L = power_from_epsilon(self.epsilon)
        return FslKernel1D.for_ranking(self.x, self.y, self.tau, L, validate=False)


def soft_ranks_from_scalings(kernel, scalings, a, b):
    """``n * diag(phi) K diag(psi) cumsum(b) / a`` computed matrix-free."""
    cb = np.cumsum(b)
    return a.shape[0] * scalings.phi * kernel.apply(scalings.psi * cb) / a


def sinkhorn_rank(problem, stop=None, backend="fsl", return_scalings=False):
    """Soft ranks of ``problem.x``.

    Starts from ``phi = 1/n`` and runs :func:`~logsinkhorn.core.run_sinkhorn`
    (1000 iterations unless ``stop`` says otherwise).
    """
    kernel = problem.kernel(backend)
    n = problem.n
    scalings = run_sinkhorn(kernel, problem.a, problem.b, np.full(n, 1.0 / n), stop)
    ranks = soft_ranks_from_scalings(kernel, scalings, problem.a, problem.b)
    if return_scalings:
        return ranks, scalings
    return ranks


def soft_rank(x, cost="log", epsilon=0.1, n_iter=1000, backend=None, preprocess=True):
    """Convenience wrapper: default problem for ``x`` and a fixed iteration count."""
    problem = RankingProblem.from_values(x, cost, epsilon, preprocess)
    if backend is None:
        backend = "fsl" if cost == "log" else "dense"
    return sinkhorn_rank(problem, StoppingRule.fixed(n_iter), backend)


def minmax_normalize(r):
    r = check_vector(r, "ranks")
    lo, hi = r.min(), r.max()
    if not hi > lo:
        raise ValueError("cannot min-max normalize a constant vector")
    return (r - lo) / (hi - lo)


def mse(u, v):
    u = check_vector(u, "u")
    v = check_vector(v, "v", u.shape[0])
    return float(np.mean((u - v) ** 2))
