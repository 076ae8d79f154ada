import numpy as np
import pytest

from logsinkhorn import PolynomialCost1D

EXAMPLE_X = np.array([0.3, 1.2, -0.25])
EXAMPLE_Y = np.array([0.0, 0.5, 1.0])
EXAMPLE_PLAN = np.array(
    [
        [0.108, 0.151, 0.074],
        [0.010, 0.081, 0.242],
        [0.216, 0.101, 0.017],
    ]
)
EXAMPLE_SOFT_RANKS = np.array([1.900, 2.698, 1.402])


def absolute_polynomial(cost, xs, ys):
    """Evaluate sum |a| |x|^z |y|^v, the round-off scale of the monomial expansion."""
    return PolynomialCost1D(np.abs(cost.coeffs)).evaluate(np.abs(xs), np.abs(ys))


def random_polynomial_cost(rng, M, xs, ys, center=0.6, spread=0.3):
    """Random sign-mixed P of exact degree M with values in [center - spread, center + spread].

    P = center + alpha * Q where Q has coefficients in [-1, 1] and alpha is chosen
    so that sum |alpha q| |x|^z |y|^v <= spread on the supports. Then
    sum|a||x|^z|y|^v / P <= (center + spread) / (center - spread), which bounds
    the cancellation in the expansion of P**L.
    """
    q = rng.uniform(-1, 1, (M + 1, M + 1))
    q[0, 0] = 0.0
    q[M, rng.integers(M + 1)] = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.0)
    scale = absolute_polynomial(PolynomialCost1D(q), xs, ys).max()
    c = q * (spread / scale)
    c[0, 0] = center
    return PolynomialCost1D(c)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
