"""Command-line toolkit: fit, cv, simulate, predict, rpe, prescreen.

Every command emits a JSON report (to --out, atomically, or to stdout) that
embeds the fully resolved configuration and the library version. Failures
print a machine-readable error object and exit nonzero. PRAM_THREADS caps
worker parallelism (0 = one worker per CPU).
"""

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .dataio import jsonable, load_csv, load_design_csv, predict, prescreen, \
    rpe_eval, save_csv, write_report
from .losses import LossSpec, WeightSpec
from .penalties import PenaltySpec
from .simulation import ERROR_LAWS, SimScenario, parse_estimator, run_study
from .solver import SolverConfig, two_step_fit
from .tuning import cross_validate, default_grid

LOSSES = ("huber", "tukey", "cauchy", "quadratic")
PENALTIES = ("lasso", "scad", "mcp")


def _add_common(p, *, need_input=True):
    if need_input:
        p.add_argument("--input", required=True, help="input CSV path")
        p.add_argument("--response", required=True, help="response column name")
    p.add_argument("--out", default=None, help="report path (stdout if omitted)")


def _add_model(p):
    p.add_argument("--loss", choices=LOSSES, default="huber")
    p.add_argument("--penalty", choices=PENALTIES, default="lasso")
    p.add_argument("--weight", choices=("none", "infcap"), default="none")
    p.add_argument("--cap", type=float, default=4.0,
                   help="infinity-norm cap for --weight infcap")
    p.add_argument("--shape", type=float, default=None,
                   help="SCAD a / MCP b (defaults 3.7 / 3)")
    p.add_argument("--standardize", action="store_true",
                   help="standardize columns before fitting, back-transform after")


def _add_solver(p):
    p.add_argument("--radius", type=float, default=1e4)
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--tol", type=float, default=1e-7)


def _add_tuning(p):
    p.add_argument("--grid-alpha", type=int, default=8)
    p.add_argument("--grid-lambda", type=int, default=8)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--trim", type=float, default=0.1)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pram",
        description="Penalized robust approximated quadratic M-estimation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit at a fixed (alpha, lambda)")
    _add_common(p)
    _add_model(p)
    _add_solver(p)
    p.add_argument("--alpha", type=float, default=None,
                   help="robustness scale (required unless --loss quadratic)")
    p.add_argument("--lambda", dest="lam", type=float, required=True)

    p = sub.add_parser("cv", help="2-D grid search by K-fold CV, fit at the best pair")
    _add_common(p)
    _add_model(p)
    _add_solver(p)
    _add_tuning(p)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("simulate", help="replicated simulation study")
    _add_common(p, need_input=False)
    _add_solver(p)
    _add_tuning(p)
    p.add_argument("--scenario", choices=("ex1", "ex2", "ex3"), default="ex1")
    p.add_argument("--error-law", choices=ERROR_LAWS, default="normal04")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--p", type=int, default=500)
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--estimators", default="ha-lasso,ha-mcp",
                   help="comma list like ha-mcp,wta-mcp")

    p = sub.add_parser("predict", help="linear predictions from a fitted model report")
    p.add_argument("--input", required=True, help="CSV of new observations")
    p.add_argument("--response", default=None,
                   help="optional response column (excluded; MSPE reported)")
    p.add_argument("--model", required=True, help="JSON report from fit/cv")
    p.add_argument("--out", default=None)

    p = sub.add_parser("rpe", help="relative MSPE over repeated random splits")
    _add_common(p)
    _add_solver(p)
    _add_tuning(p)
    p.add_argument("--estimators", default="ha-lasso,ca-lasso,ha-mcp,ca-mcp")
    p.add_argument("--baseline", default="ha-lasso")
    p.add_argument("--n-test", type=int, default=6)
    p.add_argument("--replicates", type=int, default=100,
                   help="number of random splits")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--fixed-tuning", nargs=2, type=float, default=None,
                   metavar=("ALPHA", "LAMBDA"),
                   help="skip per-split CV and use this pair")

    p = sub.add_parser("prescreen", help="variance then correlation screening")
    _add_common(p)
    p.add_argument("--p1", type=int, required=True)
    p.add_argument("--p2", type=int, required=True)
    p.add_argument("--csv-out", default=None, help="write the reduced dataset here")
    return parser


def _resolved_config(args):
    cfg = {k: v for k, v in vars(args).items() if k != "command"}
    if "lam" in cfg:
        cfg["lambda"] = cfg.pop("lam")
    cfg["pram_threads"] = os.environ.get("PRAM_THREADS")
    return cfg


def _wspec(args):
    return WeightSpec(args.weight, args.cap) if args.weight != "none" \
        else WeightSpec("none")


def _solver_config(args):
    return SolverConfig(radius_R=args.radius, max_iter=args.max_iter, tol=args.tol)


def _standardized(data):
    mean = data.design.mean(axis=0)
    sd = data.design.std(axis=0)
    if np.any(sd == 0):
        raise ValueError("constant column cannot be standardized")
    from .losses import Dataset

    return Dataset((data.design - mean) / sd, data.response,
                   column_names=data.column_names), mean, sd


def _coef_entry(data, beta, standardize, mean, sd):
    if standardize:
        beta = beta / sd
        intercept = -float(mean @ beta)
    else:
        intercept = 0.0
    names = data.column_names or [f"x{j+1}" for j in range(data.p)]
    coef = {names[j]: float(beta[j]) for j in np.nonzero(beta)[0]}
    return beta, intercept, {"coefficients": coef, "intercept": intercept,
                             "column_names": names, "p": data.p}


def _fit_report(args, data, lspec, pspec):
    wspec = _wspec(args)
    config = _solver_config(args)
    fit_data, mean, sd = _standardized(data) if args.standardize else (data, None, None)
    fit = two_step_fit(fit_data, lspec, pspec, wspec, config=config)
    beta, intercept, coef_block = _coef_entry(
        data, fit.beta_hat, args.standardize, mean, sd)
    residuals = data.response - predict(beta, data.design, intercept)
    block = dict(coef_block)
    block.update({
        "iterations": fit.iterations,
        "converged": fit.converged,
        "kkt_residual": fit.kkt_residual,
        "objective": float(fit.objective_trace[-1]),
        "alpha_used": fit.alpha_used,
        "lambda_used": fit.lambda_used,
        "model_size": int(np.count_nonzero(beta)),
        "in_sample_mspe": float(np.mean(residuals**2)),
    })
    return block


def cmd_fit(args):
    data = load_csv(args.input, args.response)
    if args.loss != "quadratic" and args.alpha is None:
        raise ValueError("--alpha is required unless --loss quadratic")
    lspec = LossSpec(args.loss, args.alpha)
    pspec = PenaltySpec(args.penalty, args.lam, args.shape)
    return {"fit": _fit_report(args, data, lspec, pspec)}


def cmd_cv(args):
    data = load_csv(args.input, args.response)
    fit_data = _standardized(data)[0] if args.standardize else data
    grid = default_grid(fit_data.n, fit_data.p, args.grid_alpha, args.grid_lambda)
    cv = cross_validate(
        fit_data, grid, K=args.folds, trim=args.trim, loss_family=args.loss,
        penalty_family=args.penalty, penalty_shape=args.shape, wspec=_wspec(args),
        config=_solver_config(args), seed=args.seed,
        workers=os.cpu_count() or 1)
    args.alpha, args.lam = cv.best_alpha, cv.best_lambda
    lspec = LossSpec(args.loss, cv.best_alpha if args.loss != "quadratic" else None)
    pspec = PenaltySpec(args.penalty, cv.best_lambda, args.shape)
    return {
        "cv": {
            "alphas": grid.alphas,
            "lambdas": grid.lambdas,
            "score_matrix": cv.score_matrix,
            "best_alpha": cv.best_alpha,
            "best_lambda": cv.best_lambda,
            "n_diverged_cells": cv.diagnostics["n_diverged_cells"],
        },
        "fit": _fit_report(args, data, lspec, pspec),
    }


def cmd_simulate(args):
    scenario = SimScenario(design=args.scenario, error_law=args.error_law,
                           n=args.n, p=args.p)
    estimators = [parse_estimator(s) for s in args.estimators.split(",") if s]
    summary = run_study(
        [scenario], estimators, n_replicates=args.replicates, K=args.folds,
        n_alpha=args.grid_alpha, n_lambda=args.grid_lambda, trim=args.trim,
        master_seed=args.seed, config=_solver_config(args))
    return {"study": summary.as_dict()}


def cmd_predict(args):
    with open(args.model, encoding="utf-8") as fh:
        model = json.load(fh)
    block = model.get("fit")
    if block is None:
        raise ValueError(f"{args.model}: no 'fit' block; not a fit/cv report")
    names = block["column_names"]
    beta = np.zeros(len(names))
    for name, val in block["coefficients"].items():
        beta[names.index(name)] = val
    intercept = block.get("intercept", 0.0)

    if args.response is not None:
        data = load_csv(args.input, args.response)
        X, names_in, y = data.design, data.column_names, data.response
    else:
        X, names_in = load_design_csv(args.input)
        y = None
    if names_in and names_in != names:
        if sorted(names_in) == sorted(names):
            X = X[:, [names_in.index(c) for c in names]]
        elif X.shape[1] != len(beta):
            raise ValueError("input columns do not match the model's columns")
    preds = predict(beta, X, intercept)
    out = {"predictions": preds}
    if y is not None:
        out["mspe"] = float(np.mean((y - preds) ** 2))
    return {"predict": out}


def cmd_rpe(args):
    data = load_csv(args.input, args.response)
    estimators = [parse_estimator(s) for s in args.estimators.split(",") if s]
    baseline = parse_estimator(args.baseline)
    fixed = tuple(args.fixed_tuning) if args.fixed_tuning else None
    report = rpe_eval(
        data, estimators, baseline, n_test=args.n_test, n_splits=args.replicates,
        seed=args.seed, K=args.folds, n_alpha=args.grid_alpha,
        n_lambda=args.grid_lambda, trim=args.trim, config=_solver_config(args),
        fixed_tuning=fixed, workers=os.cpu_count() or 1)
    return {"rpe": report}


def cmd_prescreen(args):
    data = load_csv(args.input, args.response)
    reduced = prescreen(data, args.p1, args.p2)
    if args.csv_out:
        save_csv(args.csv_out, reduced, response_name=args.response)
    return {
        "prescreen": {
            "kept_columns": reduced.column_names,
            "n": reduced.n,
            "p": reduced.p,
            "csv_out": args.csv_out,
        }
    }


COMMANDS = {
    "fit": cmd_fit,
    "cv": cmd_cv,
    "simulate": cmd_simulate,
    "predict": cmd_predict,
    "rpe": cmd_rpe,
    "prescreen": cmd_prescreen,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        body = COMMANDS[args.command](args)
        report = {
            "command": args.command,
            "config": _resolved_config(args),
            "library_version": __version__,
        }
        report.update(body)
        if args.out:
            write_report(args.out, report)
            print(f"report written to {args.out}")
        else:
            print(json.dumps(jsonable(report), indent=2, sort_keys=True))
        return 0
    except Exception as exc:
        err = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        print(json.dumps(err))
        return 1


if __name__ == "__main__":
    sys.exit(main())
