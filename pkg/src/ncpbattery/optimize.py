"""Seeded derivative-free minimization over a box.

The global phase is a (mu/mu_w, lambda) evolution strategy with rank-based
recombination weights, mirrored sampling and cumulative step-size
adaptation, run in the unit cube and mapped affinely onto the box.  The
population doubles on every restart, and each restart draws from its own
stream spawned from ``cfg.seed``.  A bounded Nelder-Mead polish finishes each
restart.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize


@dataclass(frozen=True)
class OptimizerConfig:
    seed: int = 0
    population: int = 40
    max_evals: int = 20000
    restarts: int = 8
    tol: float = 1e-6
    bounds: tuple[tuple[float, float], ...] | None = None
    polish_fraction: float = 0.1

    def __post_init__(self):
        if self.population < 4:
            raise ValueError("population must be at least 4")
        if self.restarts < 1 or self.max_evals < 1:
            raise ValueError("restarts and max_evals must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.bounds is not None:
            b = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
            if any(not lo < hi for lo, hi in b):
                raise ValueError("every bound needs lo < hi")
            object.__setattr__(self, "bounds", b)

    def with_bounds(self, bounds: Sequence[tuple[float, float]]) -> "OptimizerConfig":
        return OptimizerConfig(
            self.seed, self.population, self.max_evals, self.restarts, self.tol, tuple(bounds), self.polish_fraction
        )

    def scaled(self, factor: int) -> "OptimizerConfig":
        return OptimizerConfig(
            self.seed,
            self.population,
            self.max_evals * factor,
            self.restarts,
            self.tol,
            self.bounds,
            self.polish_fraction,
        )


@dataclass
class OptimizeResult:
    best_value: float
    best_point: np.ndarray
    evals: int
    converged: bool
    history: list[float] = field(default_factory=list)


class _BudgetExhausted(Exception):
    pass


class _Counter:
    """Objective wrapper that counts evaluations and remembers the best point."""

    def __init__(self, objective, lo, hi, budget, vectorized):
        self.objective = objective
        self.lo = lo
        self.hi = hi
        self.budget = budget
        self.vectorized = vectorized
        self.evals = 0
        self.best_value = np.inf
        self.best_point = None
        self.history: list[float] = []

    @property
    def remaining(self) -> int:
        return self.budget - self.evals

    def batch(self, xs: np.ndarray) -> np.ndarray:
        if self.remaining <= 0:
            raise _BudgetExhausted
        xs = np.clip(np.atleast_2d(xs), self.lo, self.hi)
        if self.vectorized:
            vals = np.asarray(self.objective(xs), dtype=float).reshape(-1)
        else:
            vals = np.array([float(self.objective(x)) for x in xs])
        vals = np.where(np.isnan(vals), np.inf, vals)
        self.evals += len(xs)
        i = int(np.argmin(vals))
        if vals[i] < self.best_value:
            self.best_value = float(vals[i])
            self.best_point = xs[i].copy()
        self.history.append(self.best_value)
        return vals

    def single(self, x: np.ndarray) -> float:
        return float(self.batch(x[None, :])[0])


def _bounds(cfg: OptimizerConfig, n: int | None):
    if cfg.bounds is None:
        if n is None:
            raise ValueError("cfg.bounds must be set")
        return np.full(n, -1.0), np.full(n, 1.0)
    lo = np.array([b[0] for b in cfg.bounds])
    hi = np.array([b[1] for b in cfg.bounds])
    return lo, hi


# ES step sizes live in unit-cube coordinates
SIGMA0 = 0.5
SIGMA_STOP = 1e-2
# below-default damping lets the step size shrink faster on rugged landscapes
DAMPING = 0.7
# rough length of an ES run; caps the population of late restarts
TYPICAL_GENERATIONS = 100


def _es_run(counter: _Counter, rng: np.random.Generator, lam: int, budget: int, tol: float):
    lo, hi = counter.lo, counter.hi
    width = hi - lo
    n = len(lo)
    lam += lam % 2
    mu = lam // 2
    w = np.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
    w /= w.sum()
    mu_eff = 1.0 / np.sum(w**2)
    c_s = (mu_eff + 2) / (n + mu_eff + 5)
    d_s = DAMPING * (1 + 2 * max(0.0, np.sqrt((mu_eff - 1) / (n + 1)) - 1) + c_s)
    chi_n = np.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n**2))
    stall_window = 10 + int(np.ceil(30 * n / lam))

    mean = rng.uniform(0, 1, n)
    sigma = SIGMA0
    path = np.zeros(n)
    best_val, best_u = np.inf, mean
    gen_best: list[float] = []
    stop_at = counter.evals + budget
    # the polish phase supplies the last digits, so stop the ES early
    while counter.evals + lam + 1 <= stop_at and sigma > SIGMA_STOP:
        # mirrored pairs cancel sampling noise in the mean update
        z = rng.standard_normal((lam // 2, n))
        z = np.vstack([z, -z])
        u = mean + sigma * z
        # reflect into the unit cube
        u = 1 - np.abs(1 - np.mod(u, 2))
        # the mean rides along: on rugged landscapes it tracks the smoothed minimum
        vals = counter.batch(lo + np.vstack([u, mean]) * width)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best_u = float(vals[i]), (u[i] if i < lam else mean).copy()
        vals = vals[:lam]
        order = np.argsort(vals, kind="stable")
        gen_best.append(float(vals[order[0]]))
        if len(gen_best) > stall_window:
            recent = gen_best[-stall_window:]
            if max(recent) - min(recent) < tol:
                break
        new_mean = w @ u[order[:mu]]
        z_w = (new_mean - mean) / sigma
        path = (1 - c_s) * path + np.sqrt(c_s * (2 - c_s) * mu_eff) * z_w
        sigma = min(sigma * np.exp((c_s / d_s) * (np.linalg.norm(path) / chi_n - 1)), 1.0)
        mean = new_mean
    return best_val, lo + best_u * width


def _polish(counter: _Counter, start: np.ndarray, budget: int, tol: float) -> tuple[float, np.ndarray, bool]:
    lo, hi = counter.lo, counter.hi
    n = len(start)
    f0 = counter.single(start)
    if budget <= n + 1:
        return f0, start, False
    step = 0.05 * (hi - lo)
    simplex = np.vstack([start] + [np.clip(start + step[i] * np.eye(n)[i], lo, hi) for i in range(n)])
    for i in range(1, n + 1):
        if np.allclose(simplex[i], start):
            simplex[i, i - 1] = np.clip(start[i - 1] - step[i - 1], lo[i - 1], hi[i - 1])
    stop_at = counter.evals + budget
    best = [f0, start.copy()]

    def f(x):
        if counter.evals >= stop_at:
            raise _BudgetExhausted
        v = counter.single(x)
        if v < best[0]:
            best[0], best[1] = v, np.clip(x, lo, hi)
        return v

    converged = False
    try:
        res = minimize(
            f,
            start,
            method="Nelder-Mead",
            bounds=list(zip(lo, hi)),
            options={
                "initial_simplex": simplex,
                "xatol": tol,
                "fatol": tol * 1e-2,
                "maxfev": budget,
                "adaptive": n > 4,
            },
        )
        converged = bool(res.success)
    except _BudgetExhausted:
        pass
    return best[0], best[1], converged


def local_polish(
    objective: Callable, start, cfg: OptimizerConfig, *, budget: int | None = None, vectorized: bool = False
) -> tuple[float, np.ndarray]:
    """Bounded Nelder-Mead descent; never returns a value above ``objective(start)``."""
    start = np.asarray(start, dtype=float)
    lo, hi = _bounds(cfg, len(start))
    if np.any(start < lo) or np.any(start > hi):
        raise ValueError("start lies outside the bounds")
    budget = cfg.max_evals if budget is None else budget
    counter = _Counter(objective, lo, hi, budget + 1, vectorized)
    value, point, _ = _polish(counter, start, budget, cfg.tol)
    return value, point


def global_minimize(
    objective: Callable,
    cfg: OptimizerConfig,
    *,
    vectorized: bool = False,
    x0: Sequence | None = None,
) -> OptimizeResult:
    """Minimize ``objective`` over ``cfg.bounds``.

    ``vectorized`` objectives receive an (k, n) array and return k values.
    Points in ``x0`` are evaluated before the search, along with the box
    centre, so the result never exceeds their values.  ``cfg.max_evals``
    counts every evaluation, polish included.
    """
    lo, hi = _bounds(cfg, None if cfg.bounds is not None else len(np.atleast_2d(x0)[0]))
    counter = _Counter(objective, lo, hi, cfg.max_evals + cfg.population, vectorized)
    seeds = [0.5 * (lo + hi)] + ([np.asarray(p, dtype=float) for p in np.atleast_2d(x0)] if x0 is not None else [])
    counter.batch(np.array(seeds))

    # restart k uses population * 2**k (halved while a typical run would not fit)
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)
    converged = False
    try:
        for k, ss in enumerate(streams):
            remaining = cfg.max_evals - counter.evals
            if remaining <= 0:
                break
            lam = cfg.population * 2**k
            while lam > cfg.population and lam * TYPICAL_GENERATIONS > remaining:
                lam //= 2
            polish_budget = int(remaining * cfg.polish_fraction)
            rng = np.random.default_rng(ss)
            _, x_best = _es_run(counter, rng, lam, remaining - polish_budget, cfg.tol)
            polish_budget = min(polish_budget, cfg.max_evals - counter.evals)
            if polish_budget > 0:
                _, _, ok = _polish(counter, x_best, polish_budget, cfg.tol)
                converged = converged or ok
    except _BudgetExhausted:
        pass
    return OptimizeResult(
        counter.best_value,
        counter.best_point.copy(),
        counter.evals,
        converged,
        counter.history,
    )
