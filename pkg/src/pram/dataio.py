"""CSV ingestion, prescreening, prediction and the random-split RPE protocol.

CSV dialect is strict: comma-separated, UTF-8, header row required, every
cell a finite decimal number. Reports are JSON documents written atomically
(temp file then rename) and always embed the fully resolved run
configuration so a run can be reproduced from the report plus the input.
"""

import csv
import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .losses import Dataset, LossSpec
from .penalties import PenaltySpec
from .solver import SolverConfig, two_step_fit
from .tuning import cross_validate, default_grid, resolve_workers, trimmed_mspe


def _parse_csv(path):
    """Strict numeric CSV parse: (header, matrix). Errors name row and column."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"input file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, header row required") from None
        header = [h.strip() for h in header]
        rows = []
        for i, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValueError(f"{path}: row {i} has {len(row)} cells, "
                                 f"expected {len(header)}")
            vals = []
            for j, cell in enumerate(row):
                try:
                    v = float(cell)
                except ValueError:
                    raise ValueError(f"{path}: row {i}, column {header[j]!r}: "
                                     f"cannot parse {cell!r} as a number") from None
                if not math.isfinite(v):
                    raise ValueError(f"{path}: row {i}, column {header[j]!r}: "
                                     f"non-finite value {cell!r}")
                vals.append(v)
            rows.append(vals)
    return header, np.asarray(rows, dtype=float).reshape(len(rows), len(header))


def load_csv(path, response_column):
    """Read a numeric CSV into a Dataset, extracting the response column."""
    header, mat = _parse_csv(path)
    if response_column not in header:
        raise ValueError(f"{path}: response column {response_column!r} not found "
                         f"in header {header}")
    if mat.shape[0] < 2:
        raise ValueError(f"{path}: need at least 2 data rows, found {mat.shape[0]}")
    y_idx = header.index(response_column)
    y = mat[:, y_idx]
    X = np.delete(mat, y_idx, axis=1)
    names = [h for k, h in enumerate(header) if k != y_idx]
    return Dataset(X, y, column_names=names)


def load_design_csv(path):
    """Read a numeric CSV as a bare design matrix: (matrix, column names)."""
    header, mat = _parse_csv(path)
    if mat.shape[0] < 1:
        raise ValueError(f"{path}: no data rows")
    return mat, header


def save_csv(path, data, response_name="y"):
    """Inverse of load_csv; floats written with repr (17 significant digits)."""
    names = data.column_names or [f"x{j+1}" for j in range(data.p)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([response_name] + list(names))
        for i in range(data.n):
            writer.writerow([repr(float(data.response[i]))]
                            + [repr(float(v)) for v in data.design[i]])


def prescreen(data, p1, p2):
    """Keep the p1 highest-variance columns, then the p2 of those most
    correlated (in absolute value) with the response.

    Survivors keep their original column order; ranking ties go to the lower
    original column index.
    """
    if not 1 <= p2 <= p1 <= data.p:
        raise ValueError("need 1 <= p2 <= p1 <= p")
    y = data.response
    if np.std(y) == 0:
        raise ValueError("response is constant; correlations are undefined")
    variances = np.var(data.design, axis=0)
    # stable sort on descending variance keeps lower index first on ties
    by_var = np.argsort(-variances, kind="stable")[:p1]
    Xv = data.design[:, by_var]
    yc = y - y.mean()
    xc = Xv - Xv.mean(axis=0)
    denom = np.sqrt(np.sum(xc**2, axis=0) * np.sum(yc**2))
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.where(denom > 0, np.abs(xc.T @ yc) / denom, 0.0)
    by_corr = np.argsort(-corr, kind="stable")[:p2]
    keep = np.sort(by_var[by_corr])
    names = [data.column_names[j] for j in keep] if data.column_names else None
    return Dataset(data.design[:, keep], y, column_names=names)


def predict(beta_hat, new_design, intercept=0.0):
    """Linear predictor new_design @ beta_hat (+ intercept, if the model was
    fit on standardized columns)."""
    beta_hat = np.asarray(beta_hat, dtype=float)
    new_design = np.asarray(new_design, dtype=float)
    if new_design.ndim != 2 or new_design.shape[1] != len(beta_hat):
        raise ValueError("design column count must match coefficient length")
    return new_design @ beta_hat + intercept


def _rpe_split_task(payload):
    (data, estimators, n_test, seed, K, n_alpha, n_lambda, trim, config,
     fixed_tuning) = payload
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    test_idx = rng.choice(data.n, size=n_test, replace=False)
    mask = np.zeros(data.n, dtype=bool)
    mask[test_idx] = True
    train = Dataset(data.design[~mask], data.response[~mask])
    Xte, yte = data.design[mask], data.response[mask]

    mspes = []
    for ei, est in enumerate(estimators):
        try:
            if fixed_tuning is not None:
                alpha, lam = fixed_tuning
            else:
                grid = default_grid(train.n, train.p, n_alpha, n_lambda)
                cv = cross_validate(
                    data=train, grid=grid, K=K, trim=trim,
                    loss_family=est.loss_family, penalty_family=est.penalty_family,
                    penalty_shape=est.penalty_shape, wspec=est.weight,
                    config=config, seed=seed * 1000003 + ei, workers=1)
                alpha, lam = cv.best_alpha, cv.best_lambda
            lspec = LossSpec(est.loss_family,
                             alpha if est.loss_family != "quadratic" else None)
            pspec = PenaltySpec(est.penalty_family, lam, est.penalty_shape)
            fit = two_step_fit(train, lspec, pspec, est.weight, init_lambda=lam,
                               config=config)
            mspes.append(float(np.mean((yte - Xte @ fit.beta_hat) ** 2)))
        except Exception:
            mspes.append(None)
    return mspes


def rpe_eval(data, estimators, baseline, n_test, n_splits, seed, K=10,
             n_alpha=8, n_lambda=8, trim=0.1, config=None, fixed_tuning=None,
             workers=None):
    """Relative MSPE of each estimator against the baseline over repeated
    random train/test splits.

    Each split holds out a fresh uniformly random n_test-subset, tunes and
    fits every estimator on the remainder (or reuses fixed_tuning = (alpha,
    lambda)), and records test MSPE ratios. Failed fits are recorded as
    missing for that split.
    """
    if not 1 <= n_test < data.n:
        raise ValueError("need 1 <= n_test < n")
    if n_splits < 1:
        raise ValueError("n_splits must be at least 1")
    if config is None:
        config = SolverConfig()
    estimators = list(estimators)
    labels = [e.label for e in estimators]
    if baseline.label not in labels:
        estimators.append(baseline)
        labels.append(baseline.label)
    base_idx = labels.index(baseline.label)

    seeds = [int(np.random.SeedSequence(seed, spawn_key=(2, s))
                 .generate_state(1, np.uint64)[0]) for s in range(n_splits)]
    tasks = [(data, estimators, n_test, s, K, n_alpha, n_lambda, trim, config,
              fixed_tuning) for s in seeds]
    workers = resolve_workers(workers, default=1)
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            split_mspes = list(pool.map(_rpe_split_task, tasks, chunksize=1))
    else:
        split_mspes = [_rpe_split_task(t) for t in tasks]

    rpe = {label: [] for label in labels}
    n_missing = {label: 0 for label in labels}
    for mspes in split_mspes:
        base = mspes[base_idx]
        for label, m in zip(labels, mspes):
            if m is None or base is None or base == 0:
                rpe[label].append(None)
                n_missing[label] += 1
            else:
                rpe[label].append(m / base)
    return {
        "baseline": baseline.label,
        "n_splits": n_splits,
        "n_test": n_test,
        "rpe": rpe,
        "n_missing": n_missing,
    }


def write_report(path, report):
    """Atomic JSON dump: write to a temp file in the target directory, then
    rename over the destination. Non-finite numbers become null."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(jsonable(report), fh, indent=2, sort_keys=True,
                      allow_nan=False)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj
