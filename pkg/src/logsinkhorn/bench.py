"""Seeded experiments comparing the fast and dense Sinkhorn kernels.

Every experiment returns an :class:`ExperimentReport`. All fields except the
wall-clock ones (names ending in ``_time`` plus the derived ``speedup``) are a
deterministic function of the configuration, so two runs with the same seed
agree on them exactly.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .core import (
    DEFAULT_MATERIALIZE_CAP,
    StoppingRule,
    dense_kernel,
    run_sinkhorn,
    transport_plan,
)
from .fsl2d import FslKernel2D, grid_points
from .logcost import ReflectorRefractorCost, cost_matrix
from .ranking import (
    RankingProblem,
    hard_rank,
    minmax_normalize,
    mse,
    soft_ranks_from_scalings,
)

EXPERIMENTS = ("rank-compare", "fsl-vs-dense-1d", "fsl-vs-dense-2d", "marginal-curve")
TIMING_KEYS = ("speedup", "fsl_not_slower_fraction")
WARMUP_ITERATIONS = 50


@dataclass
class ExperimentConfig:
    experiment: str
    n: int = 200
    L: int = 10
    Ls: tuple = (10, 15, 20)
    kappa: float = 1.0
    iterations: int = 1000
    tol: float = 1e-5
    tol_start: float = 1e-1
    n_tols: int = 5
    max_iter: int = 10_000
    repeats: int = 30
    seed: int = 0
    backend: str = "both"
    dim: int = 1
    parallel_repeats: bool = False
    materialize_cap: int = DEFAULT_MATERIALIZE_CAP

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {EXPERIMENTS}")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")
        if self.L < 1 or any(L < 1 for L in self.Ls):
            raise ValueError("L must be a positive integer")
        if not 0 < self.kappa <= 1:
            raise ValueError("kappa must lie in (0, 1]")
        if self.backend not in ("fsl", "dense", "both"):
            raise ValueError("backend must be fsl, dense or both")
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        if not 0 < self.tol <= self.tol_start:
            raise ValueError("need 0 < tol <= tol_start")
        self.Ls = tuple(int(L) for L in self.Ls)

    @property
    def backends(self):
        return ("fsl", "dense") if self.backend == "both" else (self.backend,)


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    runs: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    version: str = __version__

    def deterministic_view(self):
        """The report with wall-clock fields stripped."""

        def keep(d):
            return {k: v for k, v in d.items() if not _is_timing(k)}

        return {
            "experiment": self.experiment,
            "config": self.config,
            "runs": [keep(r) for r in self.runs],
            "summary": keep(self.summary),
        }

    def to_json(self):
        return json.dumps(asdict(self), indent=2, default=_json_default)

    def to_csv(self):
        """Long format: ``section,index,field,value`` with one block per run."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["section", "index", "field", "value"])
        w.writerow(["meta", "", "experiment", self.experiment])
        w.writerow(["meta", "", "version", self.version])
        for k, v in self.config.items():
            w.writerow(["config", "", k, _fmt(v)])
        for i, run in enumerate(self.runs):
            for k, v in run.items():
                w.writerow(["run", i, k, _fmt(v)])
        for k, v in self.summary.items():
            w.writerow(["summary", "", k, _fmt(v)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        rows = list(csv.reader(io.StringIO(text)))
        meta, config, runs, summary = {}, {}, {}, {}
        for section, index, key, value in rows[1:]:
            if section == "meta":
                meta[key] = value
            elif section == "config":
                config[key] = _parse(value)
            elif section == "run":
                runs.setdefault(int(index), {})[key] = _parse(value)
            elif section == "summary":
                summary[key] = _parse(value)
        return cls(
            meta["experiment"],
            config,
            [runs[i] for i in sorted(runs)],
            summary,
            meta.get("version", ""),
        )


def _is_timing(key):
    return key.endswith("_time") or key in TIMING_KEYS


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (tuple, list)):
        return json.dumps([_json_default(x) if isinstance(x, np.generic) else x for x in v])
    return str(v)


def _parse(s):
    if s == "":
        return None
    if s in ("true", "false"):
        return s == "true"
    if s.startswith("["):
        return json.loads(s)
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    return s


def gen_random_measure(n, rng):
    """I.i.d. uniform draws normalized to sum to one. ``rng`` is a seed or Generator."""
    rng = np.random.default_rng(rng)
    w = rng.random(n)
    while np.any(w == 0):  # measure-zero event, but weights must stay positive
        w = np.where(w == 0, rng.random(n), w)
    return w / w.sum()


def _streams(seed, count):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def _map(fn, items, parallel):
    if parallel and len(items) > 1:
        with ThreadPoolExecutor() as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def run_rank_compare(config):
    """Hard ranks against Sinkhorn ranks with the log and squared costs (dense solver)."""
    eps = 1.0 / config.L
    stop = StoppingRule.fixed(config.iterations)

    def one(item):
        run, rng = item
        theta = rng.permutation(config.n) + 1.0
        hard = hard_rank(theta)
        reference = minmax_normalize(hard)
        row = {"run": run, "theta": theta.tolist(), "hard_rank": hard.tolist()}
        for kind, tag in (("log", "log"), ("squared", "sq")):
            problem = RankingProblem.from_values(theta, kind, eps)
            kernel = problem.kernel("dense")
            s = run_sinkhorn(kernel, problem.a, problem.b, None, stop)
            ranks = soft_ranks_from_scalings(kernel, s, problem.a, problem.b)
            row[f"{tag}_mse"] = mse(minmax_normalize(ranks), reference)
            row[f"{tag}_time"] = s.elapsed
        return row

    runs = _map(one, list(enumerate(_streams(config.seed, config.repeats))), config.parallel_repeats)
    summary = {
        "log_mse_mean": float(np.mean([r["log_mse"] for r in runs])),
        "sq_mse_mean": float(np.mean([r["sq_mse"] for r in runs])),
        "log_wins": int(sum(r["log_mse"] < r["sq_mse"] for r in runs)),
        "log_time": float(np.mean([r["log_time"] for r in runs])),
        "sq_time": float(np.mean([r["sq_time"] for r in runs])),
    }
    return ExperimentReport(config.experiment, _config_dict(config), runs, summary)


def _config_dict(config):
    d = asdict(config)
    d["Ls"] = list(d["Ls"])
    return d


def _instance_1d(config, L):
    """Ranking instance with the log cost; returns a kernel factory and the weights."""
    rng = np.random.default_rng(config.seed)
    theta = rng.permutation(config.n) + 1.0
    problem = RankingProblem.from_values(theta, "log", 1.0 / L)
    return (lambda backend: problem.kernel(backend)), problem.a, problem.b


def _instance_2d(config, L):
    pts = grid_points(config.n)
    rng = np.random.default_rng(config.seed)
    a = gen_random_measure(pts.shape[0], rng)
    b = gen_random_measure(pts.shape[0], rng)
    kappa = config.kappa

    def factory(backend):
        if backend == "fsl":
            return FslKernel2D(kappa, pts, pts, L)
        return dense_kernel(cost_matrix(ReflectorRefractorCost(kappa), pts, pts), 1.0 / L)

    return factory, a, b


def run_fsl_vs_dense(config):
    """Fixed-iteration timings of both kernels on one instance plus plan agreement."""
    dim = 2 if config.experiment == "fsl-vs-dense-2d" else 1
    factory, a, b = (_instance_2d if dim == 2 else _instance_1d)(config, config.L)
    n_points = a.shape[0]
    stop = StoppingRule.fixed(config.iterations)

    def one(item):
        run, backend = item
        t0 = time.perf_counter()
        kernel = factory(backend)
        setup = time.perf_counter() - t0
        s = run_sinkhorn(kernel, a, b, None, stop)
        return {
            "run": run,
            "backend": backend,
            "iterations": s.iterations,
            "marginal_error": s.marginal_error,
            "setup_time": setup,
            "loop_time": s.elapsed,
        }, kernel, s

    # untimed warmup, then backends interleaved so load spikes hit both alike
    for backend in config.backends:
        run_sinkhorn(factory(backend), a, b, None, StoppingRule.fixed(WARMUP_ITERATIONS))
    items = [(r, be) for r in range(config.repeats) for be in config.backends]
    results = _map(one, items, config.parallel_repeats)
    runs = [row for row, _, _ in results]
    summary = {"n_points": n_points}
    for be in config.backends:
        summary[f"{be}_loop_time"] = float(np.mean([r["loop_time"] for r in runs if r["backend"] == be]))
        summary[f"{be}_setup_time"] = float(np.mean([r["setup_time"] for r in runs if r["backend"] == be]))
    if len(config.backends) == 2:
        summary["speedup"] = summary["dense_loop_time"] / summary["fsl_loop_time"]
        first = {row["backend"]: (k, s) for row, k, s in results if row["run"] == 0}
        if n_points <= config.materialize_cap:
            plans = {be: transport_plan(k, s, config.materialize_cap) for be, (k, s) in first.items()}
            summary["frobenius"] = float(np.linalg.norm(plans["fsl"] - plans["dense"]))
        else:
            summary["frobenius"] = None
    return ExperimentReport(config.experiment, _config_dict(config), runs, summary)


def tolerance_schedule(config):
    count = max(config.n_tols, 1)
    return np.geomspace(config.tol_start, config.tol, count)


def run_marginal_curve(config):
    """Time for each backend to bring the marginal error under a geometric tolerance schedule."""
    tols = tolerance_schedule(config)
    stop = StoppingRule.until(tols[-1], config.max_iter)
    runs = []
    for L in config.Ls:
        factory, a, b = (_instance_2d if config.dim == 2 else _instance_1d)(config, L)
        for backend in config.backends:
            per_repeat = []
            for _ in range(config.repeats):
                s = run_sinkhorn(factory(backend), a, b, None, stop, trace=True)
                per_repeat.append(s.trace)
            for tol in tols:
                hits = [_first_hit(tr, tol) for tr in per_repeat]
                reached = all(h is not None for h in hits)
                runs.append(
                    {
                        "L": L,
                        "backend": backend,
                        "tol": float(tol),
                        "reached": reached,
                        "iterations": hits[0][0] if reached else None,
                        "to_tol_time": float(np.mean([h[2] for h in hits])) if reached else None,
                    }
                )
    summary = {"cap_hit": any(not r["reached"] for r in runs)}
    if len(config.backends) == 2:
        faster = []
        for r in runs:
            if r["backend"] != "fsl" or not r["reached"]:
                continue
            twin = next(
                d for d in runs if d["backend"] == "dense" and d["L"] == r["L"] and d["tol"] == r["tol"]
            )
            if twin["reached"]:
                faster.append(r["to_tol_time"] <= twin["to_tol_time"])
        summary["fsl_not_slower_fraction"] = None if not faster else float(np.mean(faster))
    return ExperimentReport(config.experiment, _config_dict(config), runs, summary)


def _first_hit(trace, tol):
    for row in trace:
        if row[1] <= tol:
            return row
    return None


def run_experiment(config):
    if config.experiment == "rank-compare":
        return run_rank_compare(config)
    if config.experiment == "marginal-curve":
        return run_marginal_curve(config)
    return run_fsl_vs_dense(config)
