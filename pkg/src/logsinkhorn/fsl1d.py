"""Linear-time application of ``K = P**L`` for one-dimensional log-type costs.

``K_ij = sum_{z,v} b[z, v] x_i**z y_j**v`` so ``K @ xi`` factors as

1. ``eta = Ay @ xi``              (monomial moments of ``xi``, O(MLN))
2. ``S = b @ eta``                (nonzeros of ``b`` only, O((ML)^2))
3. ``out = Ax.T @ S``             (O(MLN))

and ``K.T @ xi`` swaps the roles of ``Ax`` / ``Ay`` and transposes ``b``.

A kernel owns scratch buffers for the two short intermediate vectors, so a
single instance must not be applied from several threads at once; use
:meth:`FslKernel1D.clone` to give each thread its own.
"""

from __future__ import annotations

import copy
import math

import numpy as np

from ._validation import check_points, check_power
from .logcost import (
    MAX_EXPANDED_DEGREE,
    expand_power_1d,
    ranking_coefficients,
    ranking_polynomial,
    validate_support,
)


def monomial_matrix(z, degree):
    """Rows ``z**0, z**1, ..., z**degree`` built by repeated multiplication."""
    z = np.asarray(z, dtype=np.float64)
    A = np.empty((degree + 1, z.shape[0]))
    A[0] = 1.0
    for k in range(1, degree + 1):
        np.multiply(A[k - 1], z, out=A[k])
    return A


class FslKernel1D:
    """Matrix-free kernel for ``K_ij = P(x_i, y_j)**L`` with ``P`` a bivariate polynomial.

    Parameters
    ----------
    ax, ay : ndarray of shape (T, n)
        Monomial matrices of the source and target supports.
    b : ndarray of shape (T, T)
        Coefficients of ``P**L`` in those monomials.
    compensated : bool
        Use ``math.fsum`` for the two long contractions. Slow; diagnostics only.

    Attributes
    ----------
    madds : int
        Running count of multiply-adds performed by ``apply``/``apply_transpose``.
    """

    def __init__(self, ax, ay, b, compensated=False):
        self.ax = np.ascontiguousarray(ax, dtype=np.float64)
        self.ay = np.ascontiguousarray(ay, dtype=np.float64)
        self.b = np.ascontiguousarray(b, dtype=np.float64)
        T = self.b.shape[0]
        if self.b.shape != (T, T) or self.ax.shape[0] != T or self.ay.shape[0] != T:
            raise ValueError("monomial matrices and coefficient table disagree in size")
        if self.ax.shape[1] != self.ay.shape[1]:
            raise ValueError("source and target supports must have the same size")
        self.n = self.ax.shape[1]
        self.compensated = compensated
        # structural nonzeros, row-major, consulted by step 2
        self._rows, self._cols = np.nonzero(self.b)
        self._vals = self.b[self._rows, self._cols]
        self.nnz = self._vals.size
        self._eta = np.zeros(T)
        self.madds = 0

    @classmethod
    def from_cost(cls, cost, xs, ys, L, validate=True, **kwargs):
        """Generic constructor: expand ``P**L`` by repeated convolution."""
        L = check_power(L)
        xs = check_points(xs, "xs", dim=1)
        ys = check_points(ys, "ys", dim=1)
        if xs.shape != ys.shape:
            raise ValueError("source and target supports must have the same size")
        degree = cost.degree_bound * L
        if degree >= MAX_EXPANDED_DEGREE:
            raise ValueError(f"M*L = {degree} is at or above the cap {MAX_EXPANDED_DEGREE}")
        if validate:
            validate_support(cost, xs, ys)
        b = expand_power_1d(cost, L)
        return cls(monomial_matrix(xs, degree), monomial_matrix(ys, degree), b, **kwargs)

    @classmethod
    def for_ranking(cls, x, y, tau, L, validate=True, **kwargs):
        """Kernel of ``(1 - (y - x)/tau)**L`` on supports pre-divided by ``tau``."""
        L = check_power(L)
        x = check_points(x, "x", dim=1)
        y = check_points(y, "y", dim=1)
        if x.shape != y.shape:
            raise ValueError("x and y must have the same length")
        if validate:
            validate_support(ranking_polynomial(tau), x, y)
        b = ranking_coefficients(L)
        return cls(monomial_matrix(x / tau, L), monomial_matrix(y / tau, L), b, **kwargs)

    @property
    def degree(self):
        return self.b.shape[0] - 1

    def clone(self):
        """Copy sharing the read-only tables but with private scratch space."""
        other = copy.copy(self)
        other._eta = np.zeros_like(self._eta)
        other.madds = 0
        return other

    def _contract(self, xi, a_in, a_out, transpose):
        if not (isinstance(xi, np.ndarray) and xi.dtype == np.float64):
            xi = np.asarray(xi, dtype=np.float64)
        if xi.shape[0] != self.n:
            raise ValueError(f"expected {self.n} entries, got {xi.shape[0]}")
        k = 1 if xi.ndim == 1 else xi.shape[1]
        T = a_in.shape[0]
        self.madds += k * (2 * T * self.n + self.nnz)
        if self.compensated:
            return self._contract_fsum(xi, a_in, a_out, transpose)
        rows, cols = (self._cols, self._rows) if transpose else (self._rows, self._cols)
        if xi.ndim == 1:
            eta = np.dot(a_in, xi, out=self._eta)
            S = np.bincount(rows, weights=self._vals * eta[cols], minlength=T)
            return S @ a_out
        eta = a_in @ xi
        S = np.zeros((T, k))
        np.add.at(S, rows, self._vals[:, None] * eta[cols])
        return a_out.T @ S

    def _contract_fsum(self, xi, a_in, a_out, transpose):
        if xi.ndim == 2:
            return np.column_stack(
                [self._contract_fsum(col, a_in, a_out, transpose) for col in xi.T]
            )
        T = a_in.shape[0]
        eta = np.array([math.fsum(a_in[k] * xi) for k in range(T)])
        b = self.b.T if transpose else self.b
        S = np.array([math.fsum(b[k] * eta) for k in range(T)])
        return np.array([math.fsum(a_out[:, i] * S) for i in range(self.n)])

    def apply(self, xi):
        """``K @ xi``; ``xi`` may be a vector or an ``(n, k)`` block."""
        return self._contract(xi, self.ay, self.ax, transpose=False)

    def apply_transpose(self, xi):
        """``K.T @ xi``."""
        return self._contract(xi, self.ax, self.ay, transpose=True)
