"""Plain-domain Sinkhorn scaling over an abstract kernel applicator.

The loop only ever touches the kernel through ``apply`` (``K @ xi``) and
``apply_transpose`` (``K.T @ xi``), so the dense kernel defined here and the
fast polynomial kernels in :mod:`logsinkhorn.fsl1d` / :mod:`logsinkhorn.fsl2d`
are interchangeable.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Protocol, runtime_checkable

import numpy as np

from ._validation import SinkhornDivergenceError, check_measure, check_vector

#: Smallest denominator accepted by a scaling update.
DIVISION_FLOOR = 1e-300

#: Largest size for which a matrix-free kernel is materialized column by column.
DEFAULT_MATERIALIZE_CAP = 4096


@runtime_checkable
class KernelApplicator(Protocol):
    n: int

    def apply(self, xi: np.ndarray) -> np.ndarray: ...

    def apply_transpose(self, xi: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class StoppingRule:
    """When to stop the scaling loop.

    With ``tol=None`` exactly ``max_iter`` iterations are run. Otherwise the
    loop stops as soon as the column-marginal error drops to ``tol`` or below,
    or after ``max_iter`` iterations, whichever comes first.
    """

    max_iter: int = 1000
    tol: Optional[float] = None

    def __post_init__(self):
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")
        if self.tol is not None and not self.tol > 0:
            raise ValueError("tol must be positive")

    @classmethod
    def fixed(cls, iterations):
        return cls(max_iter=int(iterations), tol=None)

    @classmethod
    def until(cls, tol, max_iter=10_000):
        return cls(max_iter=int(max_iter), tol=float(tol))


@dataclass
class ScalingPair:
    """Scaling vectors returned by :func:`run_sinkhorn`.

    ``converged`` is ``None`` for fixed-iteration runs. ``trace`` holds
    ``(iteration, marginal_error, seconds_since_start)`` rows when tracing was
    requested. ``elapsed`` covers the iteration loop only.
    """

    phi: np.ndarray
    psi: np.ndarray
    iterations: int
    marginal_error: float
    converged: Optional[bool] = None
    elapsed: float = 0.0
    trace: list = field(default_factory=list)


class DenseKernel:
    """Kernel stored as an explicit ``n x n`` matrix."""

    def __init__(self, matrix):
        K = np.asarray(matrix, dtype=np.float64)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ValueError(f"kernel must be square, got shape {K.shape}")
        self.matrix = np.ascontiguousarray(K)
        self.n = K.shape[0]

    def apply(self, xi):
        return self.matrix @ xi

    def apply_transpose(self, xi):
        return self.matrix.T @ xi

    def to_dense(self):
        return self.matrix


def dense_kernel(cost, epsilon):
    """Build ``K = exp(-C / epsilon)`` from a cost matrix."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon!r}")
    C = np.asarray(cost, dtype=np.float64)
    if not np.all(np.isfinite(C)):
        raise ValueError("cost matrix has non-finite entries")
    K = np.exp(-C / epsilon)
    if np.any(K == 0.0):
        raise ValueError(
            f"exp(-C/epsilon) underflows to zero for epsilon={epsilon!r}; "
            "the dense plain-domain path needs a larger epsilon"
        )
    return DenseKernel(K)


def _guarded_divide(num, den, iteration, what):
    if not den.min() >= DIVISION_FLOOR:
        raise SinkhornDivergenceError(
            f"{what} denominator fell below {DIVISION_FLOOR:g} (or is not finite) "
            f"at iteration {iteration}",
            iteration=iteration,
        )
    return num / den


def run_sinkhorn(kernel, a, b, phi0=None, stop=None, trace=False):
    """Alternate ``psi <- b / (K.T phi)`` and ``phi <- a / (K psi)``.

    Parameters
    ----------
    kernel : KernelApplicator
    a, b : array_like
        Source and target probability vectors of the same length.
    phi0 : array_like, optional
        Positive starting vector, uniform ``1/n`` by default.
    stop : StoppingRule, optional
        Defaults to 1000 fixed iterations.
    trace : bool
        Record the marginal error (and wall-clock offset) at every check.
        Only meaningful in tolerance mode, or to monitor a fixed run.

    Returns
    -------
    ScalingPair
        Before the first update ``psi`` is taken to be all ones, which is the
        convention used for the initial marginal error.

    Raises
    ------
    SinkhornDivergenceError
        If a denominator drops below ``DIVISION_FLOOR`` or stops being finite.
    """
    n = kernel.n
    a = check_measure(a, "a", n)
    b = check_measure(b, "b", n)
    phi = np.full(n, 1.0 / n) if phi0 is None else check_vector(phi0, "phi0", n, positive=True).copy()
    stop = StoppingRule() if stop is None else stop
    tol = stop.tol
    track = trace or tol is not None

    psi = np.ones(n)
    rows = []
    err = None
    t = 0
    start = time.perf_counter()
    while True:
        r = kernel.apply_transpose(phi)
        if track:
            err = float(np.abs(psi * r - b).sum())
            if trace:
                rows.append((t, err, time.perf_counter() - start))
            if tol is not None and err <= tol:
                break
        if t >= stop.max_iter:
            break
        psi = _guarded_divide(b, r, t, "column")
        phi = _guarded_divide(a, kernel.apply(psi), t, "row")
        t += 1
    elapsed = time.perf_counter() - start

    if not np.all(np.isfinite(r)):
        raise SinkhornDivergenceError("non-finite kernel output after the last update", iteration=t)
    if err is None:
        err = float(np.abs(psi * r - b).sum())
    converged = None if tol is None else err <= tol
    return ScalingPair(phi, psi, t, err, converged, elapsed, rows)


def materialize(kernel, cap=DEFAULT_MATERIALIZE_CAP):
    """Return the kernel as a dense matrix, applying it to basis vectors if needed."""
    if hasattr(kernel, "to_dense"):
        return kernel.to_dense()
    if kernel.n > cap:
        raise ValueError(
            f"refusing to materialize a {kernel.n} x {kernel.n} kernel (cap is {cap}); "
            "use plan_matvec instead"
        )
    return kernel.apply(np.eye(kernel.n))


def transport_plan(kernel, scalings, cap=DEFAULT_MATERIALIZE_CAP):
    """``diag(phi) K diag(psi)`` as a dense matrix."""
    K = materialize(kernel, cap)
    return scalings.phi[:, None] * K * scalings.psi[None, :]


def plan_matvec(kernel, scalings, v):
    """``Gamma @ v`` without forming ``Gamma``."""
    return scalings.phi * kernel.apply(scalings.psi * np.asarray(v, dtype=np.float64))


def transport_cost(plan, cost):
    """Frobenius inner product ``<Gamma, C>``."""
    plan = np.asarray(plan, dtype=np.float64)
    cost = np.asarray(cost, dtype=np.float64)
    if plan.shape != cost.shape:
        raise ValueError(f"shape mismatch: plan {plan.shape} vs cost {cost.shape}")
    return float(np.sum(plan * cost))


def marginal_error(kernel, scalings, b):
    """L1 norm of the column-marginal residual ``diag(psi) K.T phi - b``."""
    b = check_vector(b, "b", kernel.n)
    r = kernel.apply_transpose(scalings.phi)
    return float(np.abs(scalings.psi * r - b).sum())
