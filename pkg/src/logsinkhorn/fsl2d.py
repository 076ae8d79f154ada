"""Linear-time kernel for the planar reflector/refractor cost ``-log(1 - kappa <x, y>)``.

Expanding ``(1 - kappa x1 y1 - kappa x2 y2)**L`` only produces products
``(x1 y1)**p (x2 y2)**q`` with ``p + q <= L``, so the kernel action is a
diagonal contraction between two bivariate monomial matrices::

    (K xi)_i = sum_{p+q<=L} b_pq Ax[pq, i] (Ay @ xi)[pq]

Rows are numbered in graded lexicographic order: by total degree ``p + q``,
then by ``p`` ascending.
"""

from __future__ import annotations

import copy
import warnings

import numpy as np

from ._validation import check_points, check_power
from .logcost import ReflectorRefractorCost, reflector_coefficients, validate_support


def monomial_order(L):
    """``[(0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0), ...]`` up to total degree ``L``."""
    return [(p, d - p) for d in range(L + 1) for p in range(d + 1)]


def monomial_index(L):
    """Inverse of :func:`monomial_order`: ``{(p, q): row}``."""
    return {pq: row for row, pq in enumerate(monomial_order(L))}


def monomial_matrix_2d(z, L):
    """Rows ``z1**p z2**q`` for all ``p + q <= L``, each from a lower-degree row."""
    z = check_points(z, "points", dim=2)
    order = monomial_order(L)
    index = {pq: row for row, pq in enumerate(order)}
    A = np.empty((len(order), z.shape[0]))
    A[0] = 1.0
    for row, (p, q) in enumerate(order[1:], start=1):
        if p > 0:
            np.multiply(A[index[p - 1, q]], z[:, 0], out=A[row])
        else:
            np.multiply(A[index[p, q - 1]], z[:, 1], out=A[row])
    return A


def grid_points(n, h=None):
    """The ``n x n`` grid ``(i h, j h)``, ``i, j = 1..n``; ``h`` defaults to ``0.7 / (1.1 n)``."""
    if n < 1:
        raise ValueError("grid side must be positive")
    if h is None:
        h = 0.7 / (1.1 * n)
    ticks = h * np.arange(1, n + 1)
    gx, gy = np.meshgrid(ticks, ticks, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def validate_inner_product_support(kappa, xs, ys):
    """Check ``0 < 1 - kappa <x_i, y_j> < 1`` for every pair.

    For supports in the open positive quadrant the Cauchy-Schwarz bound
    ``kappa max|x| max|y| < 1`` settles it without forming all pairs.
    """
    xs = check_points(xs, "xs", dim=2)
    ys = check_points(ys, "ys", dim=2)
    if np.all(xs > 0) and np.all(ys > 0):
        bound = kappa * np.linalg.norm(xs, axis=1).max() * np.linalg.norm(ys, axis=1).max()
        if bound < 1:
            return
    validate_support(ReflectorRefractorCost(kappa), xs, ys)


class FslKernel2D:
    """Matrix-free kernel ``K_ij = (1 - kappa <x_i, y_j>)**L``.

    ``kappa = 1`` is the reflector cost and ``0 < kappa < 1`` the refractor
    cost. Like :class:`~logsinkhorn.fsl1d.FslKernel1D`, an instance holds
    scratch space and is not safe for concurrent ``apply`` calls.
    """

    def __init__(self, kappa, xs, ys, L, validate=True):
        self.kappa = ReflectorRefractorCost(kappa).kappa
        self.L = check_power(L)
        xs = check_points(xs, "xs", dim=2)
        ys = check_points(ys, "ys", dim=2)
        if xs.shape != ys.shape:
            raise ValueError("source and target supports must have the same size")
        if validate:
            validate_inner_product_support(self.kappa, xs, ys)
        self.n = xs.shape[0]
        self.order = monomial_order(self.L)
        if len(self.order) >= self.n:
            warnings.warn(
                f"{len(self.order)} monomials for {self.n} points: the fast kernel "
                "does more work than the dense one here",
                RuntimeWarning,
                stacklevel=2,
            )
        self.ax = monomial_matrix_2d(xs, self.L)
        self.ay = monomial_matrix_2d(ys, self.L)
        self.bpq = reflector_coefficients(self.kappa, self.L, self.order)
        self._eta = np.zeros(len(self.order))
        self.madds = 0

    def clone(self):
        other = copy.copy(self)
        other._eta = np.zeros_like(self._eta)
        other.madds = 0
        return other

    def _contract(self, xi, a_in, a_out):
        xi = np.asarray(xi, dtype=np.float64)
        if xi.shape[0] != self.n:
            raise ValueError(f"expected {self.n} entries, got {xi.shape[0]}")
        T = a_in.shape[0]
        k = 1 if xi.ndim == 1 else xi.shape[1]
        self.madds += k * (2 * T * self.n + T)
        if xi.ndim == 1:
            eta = np.dot(a_in, xi, out=self._eta)
            eta *= self.bpq
            return eta @ a_out
        eta = a_in @ xi
        return a_out.T @ (self.bpq[:, None] * eta)

    def apply(self, xi):
        return self._contract(xi, self.ay, self.ax)

    def apply_transpose(self, xi):
        return self._contract(xi, self.ax, self.ay)
