"""Log-type transport costs ``C = -log P`` and the coefficient tables of ``P**L``."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.signal import convolve2d

from ._validation import SupportValidationError, check_points, check_power

FACTORIAL_CEILING = 170
MAX_EXPANDED_DEGREE = 512


@dataclass(frozen=True, eq=False)
class PolynomialCost1D:
    """Bivariate polynomial ``P(x, y) = sum a[z, v] x**z y**v`` on the real line.

    ``coeffs`` is an ``(M+1, M+1)`` table; trailing all-zero rows/columns are
    trimmed so that ``degree_bound`` is tight. A constant ``P`` gets ``M = 0``.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=np.float64))
        if c.ndim != 2:
            raise ValueError("coeffs must be a 2-D table")
        if not np.all(np.isfinite(c)):
            raise ValueError("coeffs must be finite")
        nz = np.argwhere(c != 0)
        if nz.size == 0:
            raise ValueError("P must have at least one nonzero coefficient")
        M = int(nz.max())
        table = np.zeros((M + 1, M + 1))
        h, w = min(c.shape[0], M + 1), min(c.shape[1], M + 1)
        table[:h, :w] = c[:h, :w]
        object.__setattr__(self, "coeffs", table)

    @property
    def degree_bound(self):
        return self.coeffs.shape[0] - 1

    def evaluate(self, xs, ys):
        """``P(x_i, y_j)`` on the grid of all pairs, shape ``(len(xs), len(ys))``."""
        xs = check_points(xs, "xs", dim=1)
        ys = check_points(ys, "ys", dim=1)
        return npoly.polygrid2d(xs, ys, self.coeffs)

    def to_dict(self):
        return {"M": self.degree_bound, "coeffs": self.coeffs.tolist()}


def ranking_polynomial(tau):
    """``P(x, y) = 1 - (y - x) / tau``, the polynomial behind the log ranking cost."""
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau!r}")
    return PolynomialCost1D(np.array([[1.0, -1.0 / tau], [1.0 / tau, 0.0]]))


@dataclass(frozen=True)
class ReflectorRefractorCost:
    """``P(x, y) = 1 - kappa <x, y>`` on the plane; ``kappa = 1`` is the reflector."""

    kappa: float = 1.0

    def __post_init__(self):
        if not 0 < self.kappa <= 1:
            raise ValueError(f"kappa must lie in (0, 1], got {self.kappa!r}")

    @property
    def degree_bound(self):
        return 1

    def evaluate(self, xs, ys):
        xs = check_points(xs, "xs", dim=2)
        ys = check_points(ys, "ys", dim=2)
        return 1.0 - self.kappa * (xs @ ys.T)

    def to_dict(self):
        return {"kappa": self.kappa}


def load_cost(source):
    """Build a cost from a dict, a JSON string or a path to a JSON file.

    ``{"M": int, "coeffs": [[...], ...]}`` gives a :class:`PolynomialCost1D`;
    ``{"kappa": float}`` gives a :class:`ReflectorRefractorCost`.
    """
    if isinstance(source, (str, os.PathLike)):
        text = str(source)
        if not text.lstrip().startswith("{"):
            with open(source) as fh:
                text = fh.read()
        source = json.loads(text)
    if "kappa" in source:
        return ReflectorRefractorCost(float(source["kappa"]))
    if "coeffs" not in source:
        raise ValueError("cost description needs either 'kappa' or 'coeffs'")
    cost = PolynomialCost1D(np.asarray(source["coeffs"], dtype=np.float64))
    if "M" in source and int(source["M"]) != cost.degree_bound:
        raise ValueError(
            f"declared M={source['M']} does not match the coefficient table (M={cost.degree_bound})"
        )
    return cost


def validate_support(cost, xs, ys):
    """Raise :class:`SupportValidationError` unless ``0 < P(x_i, y_j) < 1`` for all pairs."""
    P = cost.evaluate(xs, ys)
    bad = ~((P > 0) & (P < 1))
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise SupportValidationError(int(i), int(j), float(P[i, j]))
    return P


def cost_matrix(cost, xs, ys):
    return -np.log(validate_support(cost, xs, ys))


def multinomial(k, parts):
    """``k! / (k_1! ... k_m!)`` by moving one unit at a time out of the last part.

    Starts from ``(0, ..., 0, k)`` whose coefficient is 1 and uses
    ``C(.., k_i, .., k_m) = C(.., k_i - 1, .., k_m + 1) * (k_m + 1) / k_i``.
    """
    parts = [int(p) for p in parts]
    if len(parts) < 2:
        raise ValueError("need at least two parts")
    if any(p < 0 for p in parts):
        raise ValueError(f"parts must be nonnegative, got {parts}")
    if sum(parts) != k:
        raise ValueError(f"parts {parts} do not sum to {k}")
    if k > FACTORIAL_CEILING:
        raise ValueError(f"k={k} exceeds the supported ceiling {FACTORIAL_CEILING}")
    value = 1
    last = k
    for target in parts[:-1]:
        for count in range(1, target + 1):
            # every intermediate is itself a multinomial, so the division is exact
            value = value * last // count
            last -= 1
    return float(value)


def trinomial_triangle(L):
    """Table ``T[p, q] = L! / (p! q! (L-p-q)!)`` for ``p + q <= L`` (zero elsewhere).

    Walks the triangle from ``T[0, 0] = 1`` with one multiply-divide per entry.
    """
    L = check_power(L)
    if L > FACTORIAL_CEILING:
        raise ValueError(f"L={L} exceeds the supported ceiling {FACTORIAL_CEILING}")
    T = np.zeros((L + 1, L + 1))
    col = 1
    for p in range(L + 1):
        if p > 0:
            col = col * (L - p + 1) // p
        val = col
        T[p, 0] = val
        for q in range(1, L - p + 1):
            val = val * (L - p - q + 1) // q
            T[p, q] = val
    return T


def expand_power_1d(cost, L):
    """Coefficients ``b`` with ``sum b[z, v] x**z y**v == P(x, y)**L``.

    Generic path: ``L - 1`` successive 2-D convolutions of the coefficient table.
    """
    L = check_power(L)
    a = cost.coeffs
    if cost.degree_bound * L > MAX_EXPANDED_DEGREE:
        raise ValueError(
            f"M*L = {cost.degree_bound * L} exceeds the limit {MAX_EXPANDED_DEGREE}"
        )
    b = a.copy()
    for _ in range(L - 1):
        b = convolve2d(b, a)
    return b


def ranking_coefficients(L):
    """Closed form of ``(1 + x - y)**L``: ``b[z, v] = (-1)**v L!/(z! v! (L-z-v)!)``."""
    T = trinomial_triangle(L)
    signs = (-1.0) ** np.arange(T.shape[1])
    return T * signs[None, :]


def reflector_coefficients(kappa, L, order):
    """``b_pq = (-kappa)**(p+q) L!/(p! q! (L-p-q)!)`` listed in ``order``."""
    T = trinomial_triangle(L)
    return np.array([(-kappa) ** (p + q) * T[p, q] for p, q in order])
