"""scikit-learn style wrappers around the solvers.

:class:`SoftRankTransformer` soft-ranks every column of a 2-D array, so it can
sit in a :class:`sklearn.pipeline.Pipeline` like any other transformer.
:class:`EntropicTransport` fits the Sinkhorn scalings between two point clouds.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, validate_data

from ._validation import check_measure, check_points, power_from_epsilon
from .core import (
    DEFAULT_MATERIALIZE_CAP,
    StoppingRule,
    dense_kernel,
    plan_matvec,
    run_sinkhorn,
    transport_cost,
    transport_plan,
)
from .fsl1d import FslKernel1D
from .fsl2d import FslKernel2D
from .logcost import PolynomialCost1D, ReflectorRefractorCost, cost_matrix
from .ranking import RankingProblem, hard_rank, minmax_normalize, sinkhorn_rank


class SoftRankTransformer(TransformerMixin, BaseEstimator):
    """Replace each column by its Sinkhorn ranks.

    Parameters
    ----------
    cost : {"log", "squared"}
    epsilon : float
        Entropic regularization. The fast backend needs ``1/epsilon`` integral.
    n_iter : int
        Number of Sinkhorn iterations (ignored when ``tol`` is set, except as a cap).
    tol : float or None
        Stop on column-marginal error instead of a fixed count.
    backend : {"auto", "fsl", "dense"}
        ``"auto"`` picks the fast kernel for the log cost.
    normalize : bool
        Min-max normalize the ranks of each column to ``[0, 1]``.
    hard : bool
        Return exact integer ranks instead (useful as a reference in pipelines).
    """

    def __init__(
        self,
        cost="log",
        epsilon=0.1,
        n_iter=1000,
        tol=None,
        backend="auto",
        normalize=False,
        hard=False,
    ):
        self.cost = cost
        self.epsilon = epsilon
        self.n_iter = n_iter
        self.tol = tol
        self.backend = backend
        self.normalize = normalize
        self.hard = hard

    def fit(self, X, y=None):
        validate_data(self, X, ensure_min_samples=2)
        if self.cost not in ("log", "squared"):
            raise ValueError(f"unknown cost {self.cost!r}")
        self.backend_ = self._resolve_backend()
        if self.backend_ == "fsl":
            power_from_epsilon(self.epsilon)
        return self

    def _resolve_backend(self):
        if self.backend == "auto":
            return "fsl" if self.cost == "log" else "dense"
        if self.backend not in ("fsl", "dense"):
            raise ValueError(f"unknown backend {self.backend!r}")
        return self.backend

    def transform(self, X):
        check_is_fitted(self, "backend_")
        X = validate_data(self, X, reset=False, ensure_min_samples=2)
        stop = (
            StoppingRule.fixed(self.n_iter)
            if self.tol is None
            else StoppingRule.until(self.tol, self.n_iter)
        )
        out = np.empty_like(X, dtype=np.float64)
        for k in range(X.shape[1]):
            col = X[:, k]
            if self.hard:
                ranks = hard_rank(col)
            else:
                problem = RankingProblem.from_values(col, self.cost, self.epsilon)
                ranks = sinkhorn_rank(problem, stop, self.backend_)
            out[:, k] = minmax_normalize(ranks) if self.normalize else ranks
        return out


class EntropicTransport(BaseEstimator):
    """Entropic optimal transport between two equally sized point clouds.

    Parameters
    ----------
    cost : PolynomialCost1D, ReflectorRefractorCost or "sqeuclidean"
        Log-type costs can use the fast kernel; ``"sqeuclidean"`` is dense only.
    epsilon : float
    n_iter : int
    tol : float or None
    backend : {"auto", "fsl", "dense"}
    materialize_cap : int
        Largest size for which :meth:`plan` forms the transport plan.

    Attributes
    ----------
    kernel_ : kernel applicator used for the fit
    phi_, psi_ : ndarray
    n_iter_ : int
    marginal_error_ : float
    converged_ : bool or None
    """

    def __init__(
        self,
        cost="sqeuclidean",
        epsilon=0.1,
        n_iter=1000,
        tol=None,
        backend="auto",
        materialize_cap=DEFAULT_MATERIALIZE_CAP,
    ):
        self.cost = cost
        self.epsilon = epsilon
        self.n_iter = n_iter
        self.tol = tol
        self.backend = backend
        self.materialize_cap = materialize_cap

    def _build_kernel(self, X, Y):
        cost = self.cost
        fast_ok = isinstance(cost, (PolynomialCost1D, ReflectorRefractorCost))
        backend = self.backend
        if backend == "auto":
            backend = "fsl" if fast_ok else "dense"
        if backend == "fsl":
            if not fast_ok:
                raise ValueError("the fast backend needs a log-type cost")
            L = power_from_epsilon(self.epsilon)
            if isinstance(cost, ReflectorRefractorCost):
                return FslKernel2D(cost.kappa, X, Y, L)
            return FslKernel1D.from_cost(cost, X, Y, L)
        if backend != "dense":
            raise ValueError(f"unknown backend {self.backend!r}")
        if fast_ok:
            C = cost_matrix(cost, X, Y)
        elif cost == "sqeuclidean":
            X2 = X.reshape(X.shape[0], -1)
            Y2 = Y.reshape(Y.shape[0], -1)
            C = ((X2[:, None, :] - Y2[None, :, :]) ** 2).sum(-1)
        else:
            raise ValueError(f"unknown cost {cost!r}")
        self.cost_matrix_ = C
        return dense_kernel(C, self.epsilon)

    def fit(self, X, Y, a=None, b=None):
        """Run Sinkhorn from ``phi = 1/n`` between weights ``a`` on ``X`` and ``b`` on ``Y``."""
        X = check_array(X, ensure_2d=False)
        Y = check_array(Y, ensure_2d=False)
        if isinstance(self.cost, PolynomialCost1D):
            X = check_points(X, "X", dim=1)
            Y = check_points(Y, "Y", dim=1)
        n = X.shape[0]
        if Y.shape[0] != n:
            raise ValueError("X and Y must have the same number of points")
        a = np.full(n, 1.0 / n) if a is None else check_measure(a, "a", n)
        b = np.full(n, 1.0 / n) if b is None else check_measure(b, "b", n)
        self.kernel_ = self._build_kernel(X, Y)
        stop = (
            StoppingRule.fixed(self.n_iter)
            if self.tol is None
            else StoppingRule.until(self.tol, self.n_iter)
        )
        s = run_sinkhorn(self.kernel_, a, b, None, stop)
        self.scalings_ = s
        self.phi_, self.psi_ = s.phi, s.psi
        self.n_iter_ = s.iterations
        self.marginal_error_ = s.marginal_error
        self.converged_ = s.converged
        return self

    def plan(self):
        check_is_fitted(self, "scalings_")
        return transport_plan(self.kernel_, self.scalings_, self.materialize_cap)

    def plan_matvec(self, v):
        check_is_fitted(self, "scalings_")
        return plan_matvec(self.kernel_, self.scalings_, v)

    def transport_cost(self, cost=None):
        """``<Gamma, C>``; ``cost`` defaults to the matrix used by a dense fit."""
        check_is_fitted(self, "scalings_")
        if cost is None:
            cost = getattr(self, "cost_matrix_", None)
            if cost is None:
                raise ValueError("pass the cost matrix explicitly for a fast-kernel fit")
        return transport_cost(self.plan(), cost)
