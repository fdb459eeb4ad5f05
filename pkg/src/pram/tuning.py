"""Two-dimensional (alpha, log-lambda) grids and K-fold cross-validation.

Scores are trimmed mean squared prediction errors on held-out folds; the
selected pair minimizes the fold-averaged score, with ties broken toward the
larger lambda and then the larger alpha (the sparser, more robust fit).
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .losses import Dataset, LossSpec, WeightSpec
from .penalties import PenaltySpec
from .solver import DivergenceError, SolverConfig, two_step_fit


def resolve_workers(requested=None, default=1):
    """Worker count after applying the PRAM_THREADS cap (0 = auto)."""
    env = os.environ.get("PRAM_THREADS", "").strip()
    cap = None
    if env:
        cap = int(env)
        if cap == 0:
            cap = os.cpu_count() or 1
    if requested is None or requested == 0:
        requested = cap if cap is not None else default
        if requested == 0:
            requested = os.cpu_count() or 1
    if cap is not None:
        requested = min(requested, cap)
    return max(1, requested)


@dataclass(frozen=True)
class TuningGrid:
    alphas: np.ndarray
    lambdas: np.ndarray

    def __post_init__(self):
        for name in ("alphas", "lambdas"):
            vals = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, vals)
            if vals.size == 0:
                raise ValueError(f"{name} must be nonempty")
            if np.any(vals <= 0) or np.any(np.diff(vals) <= 0):
                raise ValueError(f"{name} must be positive and strictly increasing")


@dataclass
class CVResult:
    score_matrix: np.ndarray
    best_alpha: float
    best_lambda: float
    fold_assignment: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def default_grid(n, p, n_alpha=8, n_lambda=8):
    """alphas uniform on [0.1, 10]*sqrt(n/log p); lambdas log-uniform on
    [0.01, 2.5]*sqrt(log p / n)."""
    if p <= 1:
        raise ValueError("p must exceed 1 (log p would degenerate)")
    if n < 2:
        raise ValueError("n must be at least 2")
    if n_alpha < 2 or n_lambda < 2:
        raise ValueError("grid sizes must be at least 2")
    sa = math.sqrt(n / math.log(p))
    sl = math.sqrt(math.log(p) / n)
    alphas = np.linspace(0.1 * sa, 10.0 * sa, n_alpha)
    lambdas = np.exp(np.linspace(math.log(0.01 * sl), math.log(2.5 * sl), n_lambda))
    return TuningGrid(alphas, lambdas)


def trimmed_mspe(squared_errors, trim_fraction=0.1):
    """Mean of the squared errors after dropping the largest floor(trim*m)."""
    e = np.asarray(squared_errors, dtype=float)
    if e.size == 0:
        raise ValueError("squared_errors must be nonempty")
    if not 0 <= trim_fraction < 0.5:
        raise ValueError("trim_fraction must lie in [0, 0.5)")
    k = int(math.floor(trim_fraction * e.size))
    kept = np.sort(e)[: e.size - k]
    return float(np.mean(kept))


def fold_split(n, K, seed):
    """Deterministic fold labels: a seeded permutation chunked into K folds
    whose sizes differ by at most one."""
    if K < 2:
        raise ValueError("K must be at least 2")
    if n < K:
        raise ValueError("need n >= K")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    perm = rng.permutation(n)
    assignment = np.empty(n, dtype=int)
    for k, chunk in enumerate(np.array_split(perm, K)):
        assignment[chunk] = k
    return assignment


def _cv_path_task(payload):
    """Scores for one (alpha, fold): a warm-started descent along the lambda
    path from the largest lambda down."""
    (data, alpha, lambdas, loss_family, penalty_family, penalty_shape, wspec,
     config, assignment, fold, trim) = payload
    train = assignment != fold
    test = ~train
    dtrain = Dataset(data.design[train], data.response[train])
    Xtest, ytest = data.design[test], data.response[test]

    lspec = LossSpec(loss_family, alpha if loss_family != "quadratic" else None)
    scores = np.empty(len(lambdas))
    n_diverged = 0
    warm = None
    for j in range(len(lambdas) - 1, -1, -1):
        lam = float(lambdas[j])
        pspec = PenaltySpec(penalty_family, lam, penalty_shape)
        try:
            fit = two_step_fit(dtrain, lspec, pspec, wspec, init_lambda=lam,
                               config=config, step1_init=warm)
            warm = fit.diagnostics["step1_beta"]
            sq = (ytest - Xtest @ fit.beta_hat) ** 2
            scores[j] = trimmed_mspe(sq, trim)
        except DivergenceError:
            scores[j] = np.inf
            n_diverged += 1
            warm = None
    return scores, n_diverged


def cross_validate(data, grid, K=10, trim=0.1, loss_family="huber",
                   penalty_family="lasso", penalty_shape=None, wspec=None,
                   config=None, seed=0, workers=1):
    """K-fold CV over the (alpha, lambda) grid; returns the score matrix and
    the minimizing pair."""
    if config is None:
        config = SolverConfig()
    if wspec is None:
        wspec = WeightSpec("none")
    assignment = fold_split(data.n, K, seed)
    alphas, lambdas = grid.alphas, grid.lambdas

    tasks = [
        (data, float(a), lambdas, loss_family, penalty_family, penalty_shape,
         wspec, config, assignment, fold, trim)
        for a in alphas for fold in range(K)
    ]
    workers = resolve_workers(workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cv_path_task, tasks, chunksize=1))
    else:
        results = [_cv_path_task(t) for t in tasks]

    score = np.zeros((len(alphas), len(lambdas)))
    n_diverged = 0
    for idx, (col, bad) in enumerate(results):
        ai = idx // K
        score[ai] += col
        n_diverged += bad
    score /= K

    best = np.min(score)
    ties = np.argwhere(score == best)
    ai_best, lj_best = max(ties, key=lambda t: (t[1], t[0]))
    return CVResult(
        score_matrix=score,
        best_alpha=float(alphas[ai_best]),
        best_lambda=float(lambdas[lj_best]),
        fold_assignment=assignment,
        diagnostics={"n_diverged_cells": n_diverged, "seed": seed},
    )
