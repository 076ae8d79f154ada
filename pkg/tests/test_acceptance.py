"""Acceptance checks, one test per criterion.

Each test prints a single ``criterion N PASS|FAIL`` line with the measured
numbers. Run on its own with ``python3 tests/test_acceptance.py`` or
``pytest tests/test_acceptance.py -v``.
"""

import time
import warnings
from itertools import product

import numpy as np
import pytest
from scipy.optimize import linprog

from logsinkhorn import (
    FslKernel1D,
    FslKernel2D,
    RankingProblem,
    StoppingRule,
    dense_kernel,
    expand_power_1d,
    hard_rank,
    multinomial,
    run_sinkhorn,
    transport_plan,
)
from logsinkhorn.bench import ExperimentConfig, run_experiment
from logsinkhorn.ranking import sinkhorn_rank

from conftest import EXAMPLE_PLAN, EXAMPLE_SOFT_RANKS, EXAMPLE_X, EXAMPLE_Y, random_polynomial_cost

pytestmark = pytest.mark.slow


@pytest.fixture
def verdict(capsys):
    def record(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number} {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail

    return record


def test_criterion_1_worked_example(verdict):
    t0 = time.perf_counter()
    hard = hard_rank(EXAMPLE_X)
    w = np.full(3, 1 / 3)
    problem = RankingProblem(EXAMPLE_X, EXAMPLE_Y, w, w.copy(), "squared", 0.5)
    ranks, s = sinkhorn_rank(problem, backend="dense", return_scalings=True)
    plan = transport_plan(problem.kernel("dense"), s)
    elapsed = time.perf_counter() - t0
    rank_err = np.abs(ranks - EXAMPLE_SOFT_RANKS).max()
    plan_err = np.abs(plan - EXAMPLE_PLAN).max()
    ok = hard.tolist() == [2, 3, 1] and rank_err <= 2e-3 and plan_err <= 5e-4 and elapsed < 1
    verdict(
        1,
        ok,
        f"hard={hard.astype(int).tolist()} soft={np.round(ranks, 4).tolist()} "
        f"rank_err={rank_err:.2e} plan_err={plan_err:.2e} time={elapsed:.3f}s",
    )


def test_criterion_2_fsl_matches_dense_1d(verdict):
    t0 = time.perf_counter()
    report = run_experiment(ExperimentConfig("fsl-vs-dense-1d", n=200, L=10, iterations=1000, repeats=1))
    elapsed = time.perf_counter() - t0
    frob = report.summary["frobenius"]
    verdict(2, frob <= 1e-12 and elapsed < 30, f"frobenius={frob:.3e} time={elapsed:.1f}s")


def test_criterion_3_fsl_matches_dense_2d(verdict):
    t0 = time.perf_counter()
    frobs = {}
    for kappa in (1.0, 0.5):
        cfg = ExperimentConfig("fsl-vs-dense-2d", n=20, L=10, kappa=kappa, iterations=1000, repeats=1, seed=0)
        frobs[kappa] = run_experiment(cfg).summary["frobenius"]
    elapsed = time.perf_counter() - t0
    ok = max(frobs.values()) <= 1e-12 and elapsed < 120
    verdict(
        3,
        ok,
        f"frobenius kappa=1: {frobs[1.0]:.3e}, kappa=0.5: {frobs[0.5]:.3e} time={elapsed:.1f}s",
    )


def test_criterion_4_cost_comparison(verdict):
    parts, ok = [], True
    for n in (200, 400):
        rows = [
            run_experiment(ExperimentConfig("rank-compare", n=n, L=10, iterations=1000, repeats=1, seed=seed)).runs[0]
            for seed in range(10)
        ]
        log = np.array([r["log_mse"] for r in rows])
        sq = np.array([r["sq_mse"] for r in rows])
        wins = int(np.sum(log < sq))
        in_band = bool(np.all((log >= 1e-3) & (log <= 1e-2)))
        ok &= wins >= 9 and in_band
        parts.append(f"N={n}: log wins {wins}/10, log mse {log.mean():.4e}, sq mse {sq.mean():.4e}")
    verdict(4, ok, "; ".join(parts))


def test_criterion_5_linear_scaling_and_speedup(verdict):
    t0 = time.perf_counter()
    counts = []
    for n in (400, 800, 1600):
        x = np.linspace(0.05, 0.95, n)
        k = FslKernel1D.for_ranking(x, 1 + np.arange(n) / (n - 1), 3.0, 10)
        k.apply(np.ones(n))
        counts.append(k.madds)
    ratios = [hi / lo for lo, hi in zip(counts, counts[1:])]
    report = run_experiment(
        ExperimentConfig("fsl-vs-dense-1d", n=1600, L=10, iterations=1000, repeats=30)
    )
    speedup = report.summary["speedup"]
    elapsed = time.perf_counter() - t0
    ok = all(1.9 <= r <= 2.1 for r in ratios) and speedup >= 50 and elapsed < 600
    verdict(
        5,
        ok,
        f"madds ratios={[round(r, 4) for r in ratios]} speedup={speedup:.1f}x "
        f"(fsl {report.summary['fsl_loop_time'] * 1e3:.1f} ms, "
        f"dense {report.summary['dense_loop_time'] * 1e3:.0f} ms) time={elapsed:.0f}s",
    )


def _lp_hard_rank(x):
    n = x.shape[0]
    y = np.arange(n) / (n - 1)
    C = (y[None, :] - x[:, None]) ** 2
    A = np.vstack([np.kron(np.eye(n), np.ones(n)), np.kron(np.ones(n), np.eye(n))])
    res = linprog(C.ravel(), A_eq=A, b_eq=np.full(2 * n, 1 / n), bounds=(0, None), method="highs")
    return n * n * res.x.reshape(n, n) @ (np.arange(1, n + 1) / n)


def _factorial_multinomial(parts):
    from math import factorial

    out = factorial(sum(parts))
    for p in parts:
        out //= factorial(p)
    return out


def test_criterion_6_property_suites(verdict):
    gen = np.random.default_rng(20240601)
    worst = dict(apply1d=0.0, adj1d=0.0, apply2d=0.0, adj2d=0.0, expansion=0.0)

    def rel(a, b):
        return float(np.max(np.abs(a - b) / np.abs(b)))

    for _ in range(100):
        n, M, L = int(gen.integers(1, 65)), int(gen.integers(1, 4)), int(gen.integers(1, 9))
        xs, ys = gen.random(n), gen.random(n)
        cost = random_polynomial_cost(gen, M, xs, ys)
        k = FslKernel1D.from_cost(cost, xs, ys, L)
        K = cost.evaluate(xs, ys) ** L
        xi, u = gen.random(n), gen.random(n)
        worst["apply1d"] = max(worst["apply1d"], rel(k.apply(xi), K @ xi), rel(k.apply_transpose(xi), K.T @ xi))
        worst["adj1d"] = max(worst["adj1d"], rel(u @ k.apply(xi), k.apply_transpose(u) @ xi))
        b = expand_power_1d(cost, L)
        lhs = np.polynomial.polynomial.polygrid2d(xs, ys, b)
        worst["expansion"] = max(worst["expansion"], rel(lhs, K))

    for _ in range(100):
        side = int(gen.integers(1, 9))
        L = int(gen.integers(1, 9))
        kappa = float(gen.choice([1.0, 0.5, 0.25]))
        h = 0.7 / (1.1 * side)
        ticks = h * np.arange(1, side + 1)
        pts = np.column_stack([g.ravel() for g in np.meshgrid(ticks, ticks, indexing="ij")])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            k = FslKernel2D(kappa, pts, pts, L)
        K = (1 - kappa * pts @ pts.T) ** L
        xi, u = gen.random(pts.shape[0]), gen.random(pts.shape[0])
        worst["apply2d"] = max(worst["apply2d"], rel(k.apply(xi), K @ xi), rel(k.apply_transpose(xi), K.T @ xi))
        worst["adj2d"] = max(worst["adj2d"], rel(u @ k.apply(xi), k.apply_transpose(u) @ xi))

    multinomial_ok = all(
        multinomial(k, parts) == _factorial_multinomial(parts)
        for k in range(1, 21)
        for m in (2, 3)
        for parts in product(range(k + 1), repeat=m)
        if sum(parts) == k
    )

    lp_ok = True
    for _ in range(50):
        n = int(gen.integers(2, 7))
        x = gen.random(n)
        lp_ok &= bool(np.allclose(_lp_hard_rank(x), hard_rank(x), atol=1e-8, rtol=0))

    ok = (
        worst["apply1d"] <= 1e-10
        and worst["apply2d"] <= 1e-10
        and worst["adj1d"] <= 1e-12
        and worst["adj2d"] <= 1e-12
        and worst["expansion"] <= 1e-10
        and multinomial_ok
        and lp_ok
    )
    detail = " ".join(f"{k}={v:.1e}" for k, v in worst.items())
    verdict(6, ok, f"{detail} multinomial={multinomial_ok} hard_rank_lp={lp_ok}")


def test_criterion_7_marginal_curve(verdict):
    t0 = time.perf_counter()
    report = run_experiment(ExperimentConfig("marginal-curve", n=2000, Ls=(10, 15, 20), repeats=30))
    elapsed = time.perf_counter() - t0
    pairs = []
    for r in report.runs:
        if r["backend"] != "fsl":
            continue
        twin = next(
            d for d in report.runs if d["backend"] == "dense" and d["L"] == r["L"] and d["tol"] == r["tol"]
        )
        pairs.append((r["L"], r["tol"], r["to_tol_time"], twin["to_tol_time"]))
    all_reached = all(r["reached"] for r in report.runs)
    ok = all_reached and all(f <= d for _, _, f, d in pairs) and elapsed < 600
    worst = max(f / d for _, _, f, d in pairs) if all_reached else float("nan")
    tols = sorted({p[1] for p in pairs}, reverse=True)
    verdict(
        7,
        ok,
        f"{len(pairs)} (L, tol) points, tol {tols[0]:g}..{tols[-1]:g}, all reached={all_reached}, "
        f"worst fsl/dense time ratio={worst:.3f} time={elapsed:.0f}s",
    )


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
