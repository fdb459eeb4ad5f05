"""Independent reference implementations used to check the library.

These deliberately avoid the library's solver paths: the Lasso oracle is a
plain coordinate descent, the prox oracle a dense grid search, and gradients
are checked by central finite differences.
"""

import numpy as np


def cd_lasso(X, y, lam, max_sweeps=20000, tol=1e-12):
    """Coordinate descent for (1/2n)||y - Xb||^2 + lam*||b||_1."""
    n, p = X.shape
    col_sq = (X**2).sum(axis=0) / n
    beta = np.zeros(p)
    r = y.copy()
    for _ in range(max_sweeps):
        max_delta = 0.0
        for j in range(p):
            if col_sq[j] == 0.0:
                continue
            old = beta[j]
            rho = (X[:, j] @ r) / n + col_sq[j] * old
            new = np.sign(rho) * max(abs(rho) - lam, 0.0) / col_sq[j]
            if new != old:
                r += X[:, j] * (old - new)
                beta[j] = new
                max_delta = max(max_delta, abs(new - old))
        if max_delta < tol:
            break
    return beta


def cd_lasso_kkt(X, y, beta, lam):
    """Max KKT violation of the coordinate-descent objective at beta."""
    n = len(y)
    g = X.T @ (y - X @ beta) / n
    active = beta != 0
    viol = 0.0
    if np.any(~active):
        viol = max(viol, float(np.max(np.abs(g[~active])) - lam))
    if np.any(active):
        viol = max(viol, float(np.max(np.abs(g[active] - lam * np.sign(beta[active])))))
    return max(viol, 0.0)


def grid_prox_1d(v, kappa, lo=-20.0, hi=20.0, step=1e-4):
    """Dense-grid argmin of 0.5*(b - v)^2 + kappa*|b|."""
    grid = np.arange(lo, hi + step, step)
    vals = 0.5 * (grid - v) ** 2 + kappa * np.abs(grid)
    return float(grid[np.argmin(vals)])


def fd_gradient(f, beta, eps=1e-6):
    """Central finite-difference gradient of a scalar function."""
    beta = np.asarray(beta, dtype=float)
    g = np.zeros_like(beta)
    for j in range(len(beta)):
        bp = beta.copy()
        bm = beta.copy()
        bp[j] += eps
        bm[j] -= eps
        g[j] = (f(bp) - f(bm)) / (2 * eps)
    return g
