"""Monte-Carlo study harness: three designs x five error laws.

Designs: ex1 (homogeneous Gaussian covariates), ex2 (heteroscedastic noise
scaled by the squared signal), ex3 (a contaminated fraction of rows carries
recentered chi-square covariates). Every error law is centered analytically
so the regression errors have population mean zero. All randomness flows
from one master seed through named Philox substreams, so replicate i is
reproducible and unchanged when the replicate count grows.

RNG pinning: numpy's Philox bit generator with SeedSequence(master, spawn_key)
derivation; fixtures were recorded with numpy 2.2.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .losses import Dataset, LossSpec, WeightSpec
from .penalties import PenaltySpec
from .solver import SolverConfig, two_step_fit
from .tuning import cross_validate, default_grid, resolve_workers

DESIGNS = ("ex1", "ex2", "ex3")
ERROR_LAWS = ("normal04", "t3", "mixn", "lognormal", "weibull")

# analytic means subtracted from the raw draws, one per error law
LAW_CENTERS = {
    "normal04": 0.0,
    "t3": 0.0,
    "mixn": 0.5 * (-1.0) + 0.5 * 8.0,
    "lognormal": math.exp(0.845),
    "weibull": 0.15 * math.gamma(1.0 + 1.0 / 0.3),
}


def default_beta(p):
    """(3 x5, 2 x5, 1.5 x5, 0 ...): the 15-sparse truth used in the studies."""
    if p < 15:
        raise ValueError("default beta needs p >= 15")
    beta = np.zeros(p)
    beta[0:5] = 3.0
    beta[5:10] = 2.0
    beta[10:15] = 1.5
    return beta


@dataclass(frozen=True)
class SimScenario:
    design: str = "ex1"
    error_law: str = "normal04"
    n: int = 100
    p: int = 500
    beta_true: np.ndarray = None
    contamination_fraction: float = 0.2
    chi_df: int = 10
    contamination_mode: str = "rows"

    def __post_init__(self):
        if self.design not in DESIGNS:
            raise ValueError(f"unknown design {self.design!r}")
        if self.error_law not in ERROR_LAWS:
            raise ValueError(f"unknown error law {self.error_law!r}")
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        if not 0 <= self.contamination_fraction <= 1:
            raise ValueError("contamination_fraction must lie in [0, 1]")
        if self.contamination_mode not in ("rows", "entries"):
            raise ValueError("contamination_mode must be 'rows' or 'entries'")
        if self.beta_true is None:
            object.__setattr__(self, "beta_true", default_beta(self.p))
        else:
            object.__setattr__(
                self, "beta_true", np.asarray(self.beta_true, dtype=float))
            if len(self.beta_true) != self.p:
                raise ValueError("beta_true length must equal p")

    @property
    def name(self):
        return f"{self.design}/{self.error_law}"


def gen_errors(law, n, rng):
    """n centered draws from the named error law."""
    if law == "normal04":
        e = rng.normal(0.0, 2.0, size=n)
    elif law == "t3":
        e = math.sqrt(2.0) * rng.standard_t(3, size=n)
    elif law == "mixn":
        pick = rng.random(n) < 0.5
        e = np.where(pick, rng.normal(-1.0, 2.0, size=n), rng.normal(8.0, 1.0, size=n))
    elif law == "lognormal":
        e = np.exp(1.3 * rng.standard_normal(n))
    elif law == "weibull":
        e = 0.15 * rng.weibull(0.3, size=n)
    else:
        raise ValueError(f"unknown error law {law!r}")
    return e - LAW_CENTERS[law]


def gen_design(scenario, rng):
    """Covariate matrix; ex3 overwrites a random ceil(frac*n) row subset
    with recentered chi-square entries."""
    n, p = scenario.n, scenario.p
    X = rng.standard_normal((n, p))
    if scenario.design == "ex3" and scenario.contamination_fraction > 0:
        df = scenario.chi_df
        if scenario.contamination_mode == "rows":
            m = math.ceil(scenario.contamination_fraction * n)
            rows = rng.choice(n, size=m, replace=False)
            X[rows] = rng.chisquare(df, size=(m, p)) - df
        else:
            mask = rng.random((n, p)) < scenario.contamination_fraction
            X[mask] = rng.chisquare(df, size=int(mask.sum())) - df
    return X


def gen_dataset(scenario, rng, errors_override=None, force_unit_multiplier=False):
    """(Dataset, beta_true) for one replicate.

    errors_override injects a fixed error vector (test hook);
    force_unit_multiplier collapses the ex2 heteroscedastic multiplier to 1.
    """
    X = gen_design(scenario, rng)
    if errors_override is not None:
        eps = np.asarray(errors_override, dtype=float)
    else:
        eps = gen_errors(scenario.error_law, scenario.n, rng)
    signal = X @ scenario.beta_true
    if scenario.design == "ex2" and not force_unit_multiplier:
        c = math.sqrt(3.0) * float(scenario.beta_true @ scenario.beta_true)
        y = signal + (signal**2 / c) * eps
    else:
        y = signal + eps
    return Dataset(X, y), scenario.beta_true


@dataclass(frozen=True)
class SelectionMetrics:
    l2_error: float
    l1_error: float
    model_size: int
    fpr_percent: float
    fnr_percent: float

    def as_dict(self):
        return {
            "l2_error": self.l2_error,
            "l1_error": self.l1_error,
            "model_size": self.model_size,
            "fpr_percent": self.fpr_percent,
            "fnr_percent": self.fnr_percent,
        }


METRIC_KEYS = ("l2_error", "l1_error", "model_size", "fpr_percent", "fnr_percent")


def selection_metrics(beta_hat, beta_true):
    """Estimation errors and support recovery rates against the truth."""
    beta_hat = np.asarray(beta_hat, dtype=float)
    beta_true = np.asarray(beta_true, dtype=float)
    if beta_hat.shape != beta_true.shape:
        raise ValueError("beta_hat and beta_true must have equal length")
    diff = beta_hat - beta_true
    sel = beta_hat != 0
    true_sup = beta_true != 0
    n_true = int(true_sup.sum())
    n_null = int((~true_sup).sum())
    fpr = 100.0 * np.sum(sel & ~true_sup) / n_null if n_null else 0.0
    fnr = 100.0 * np.sum(~sel & true_sup) / n_true if n_true else 0.0
    return SelectionMetrics(
        l2_error=float(np.sqrt(diff @ diff)),
        l1_error=float(np.sum(np.abs(diff))),
        model_size=int(sel.sum()),
        fpr_percent=float(fpr),
        fnr_percent=float(fnr),
    )


@dataclass(frozen=True)
class EstimatorSpec:
    """A named (loss, penalty, weighting) combination, e.g. WHA-MCP."""

    loss_family: str
    penalty_family: str
    weight: WeightSpec = WeightSpec("none")
    penalty_shape: float = None
    label: str = None

    def __post_init__(self):
        if self.label is None:
            prefix = {"huber": "HA", "tukey": "TA", "cauchy": "CA", "quadratic": "QA"}
            suffix = {"lasso": "Lasso", "mcp": "MCP", "scad": "SCAD"}
            name = f"{prefix[self.loss_family]}-{suffix[self.penalty_family]}"
            if self.weight.kind != "none":
                name = "W" + name
            object.__setattr__(self, "label", name)


def parse_estimator(text):
    """'ha-mcp', 'wta-lasso', ... -> EstimatorSpec; leading w means the
    infinity-cap weighting with cap 4."""
    s = text.strip().lower().replace("_", "-")
    weighted = False
    if len(s) > 3 and s[0] == "w" and s[1:3] in ("ha", "ta", "ca", "qa"):
        weighted = True
        s = s[1:]
    loss_codes = {"ha": "huber", "ta": "tukey", "ca": "cauchy", "qa": "quadratic"}
    try:
        code, pen = s.split("-", 1)
        loss = loss_codes[code]
    except (ValueError, KeyError):
        raise ValueError(f"cannot parse estimator name {text!r}") from None
    if pen not in ("lasso", "mcp", "scad"):
        raise ValueError(f"unknown penalty in estimator name {text!r}")
    weight = WeightSpec("infcap", 4.0) if weighted else WeightSpec("none")
    return EstimatorSpec(loss, pen, weight)


@dataclass
class StudySummary:
    rows: list
    per_replicate: list
    n_replicates: int
    master_seed: int

    def row(self, scenario_name, estimator_label):
        for r in self.rows:
            if r["scenario"] == scenario_name and r["estimator"] == estimator_label:
                return r
        raise KeyError((scenario_name, estimator_label))

    def as_dict(self):
        return {
            "n_replicates": self.n_replicates,
            "master_seed": self.master_seed,
            "rows": self.rows,
            "per_replicate": self.per_replicate,
        }


def _stream(master_seed, *key):
    seq = np.random.SeedSequence(master_seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(seq))


def _derive_seed(master_seed, *key):
    return int(np.random.SeedSequence(master_seed, spawn_key=tuple(key))
               .generate_state(1, np.uint64)[0])


def _run_replicate(payload):
    """One replicate of one scenario: generate data once, then tune and fit
    every estimator on it."""
    (scenario, estimators, si, rep, master_seed, K, n_alpha, n_lambda, trim,
     config) = payload
    rng = _stream(master_seed, 0, si, rep)
    data, beta_true = gen_dataset(scenario, rng)
    grid = default_grid(scenario.n, scenario.p, n_alpha, n_lambda)
    out = []
    for ei, est in enumerate(estimators):
        cv_seed = _derive_seed(master_seed, 1, si, ei, rep)
        try:
            cv = cross_validate(
                data, grid, K=K, trim=trim, loss_family=est.loss_family,
                penalty_family=est.penalty_family, penalty_shape=est.penalty_shape,
                wspec=est.weight, config=config, seed=cv_seed, workers=1)
            lspec = LossSpec(est.loss_family,
                             cv.best_alpha if est.loss_family != "quadratic" else None)
            pspec = PenaltySpec(est.penalty_family, cv.best_lambda, est.penalty_shape)
            fit = two_step_fit(data, lspec, pspec, est.weight,
                               init_lambda=cv.best_lambda, config=config)
            metrics = selection_metrics(fit.beta_hat, beta_true)
            out.append({
                "scenario": scenario.name, "estimator": est.label, "replicate": rep,
                "metrics": metrics.as_dict(),
                "best_alpha": cv.best_alpha, "best_lambda": cv.best_lambda,
                "converged": fit.converged, "error": None,
            })
        except Exception as exc:  # recorded, never silently dropped
            out.append({
                "scenario": scenario.name, "estimator": est.label, "replicate": rep,
                "metrics": None, "best_alpha": None, "best_lambda": None,
                "converged": False, "error": f"{type(exc).__name__}: {exc}",
            })
    return out


def run_study(scenarios, estimators, n_replicates, K=10, n_alpha=8, n_lambda=8,
              trim=0.1, master_seed=0, config=None, workers=None):
    """Replicated simulation study; fully reproducible from master_seed.

    Every estimator in a replicate sees the same generated dataset (the
    per-replicate data stream is keyed by scenario and replicate only), so
    estimator comparisons are paired.
    """
    if n_replicates < 1:
        raise ValueError("n_replicates must be at least 1")
    if config is None:
        config = SolverConfig()
    scenarios = list(scenarios)
    estimators = list(estimators)
    tasks = [
        (scn, estimators, si, rep, master_seed, K, n_alpha, n_lambda, trim, config)
        for si, scn in enumerate(scenarios) for rep in range(n_replicates)
    ]
    workers = resolve_workers(workers, default=os.cpu_count() or 1)
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_replicate, tasks, chunksize=1))
    else:
        chunks = [_run_replicate(t) for t in tasks]
    per_replicate = [rec for chunk in chunks for rec in chunk]

    rows = []
    for scn in scenarios:
        for est in estimators:
            recs = [r for r in per_replicate
                    if r["scenario"] == scn.name and r["estimator"] == est.label]
            good = [r for r in recs if r["metrics"] is not None]
            row = {
                "scenario": scn.name, "estimator": est.label,
                "n_ok": len(good), "n_failed": len(recs) - len(good),
            }
            for key in METRIC_KEYS:
                vals = np.array([r["metrics"][key] for r in good], dtype=float)
                row[key] = {
                    "mean": float(np.mean(vals)) if vals.size else None,
                    "sd": float(np.std(vals, ddof=1)) if vals.size > 1 else None,
                }
            rows.append(row)
    return StudySummary(rows=rows, per_replicate=per_replicate,
                        n_replicates=n_replicates, master_seed=master_seed)
