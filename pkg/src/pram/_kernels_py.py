"""Pure-numpy fallback for the hot empirical-loss kernels.

Mirrors the compiled extension in pram._ext: same signatures, same family
codes (0 quadratic, 1 huber, 2 tukey, 3 cauchy). Selected by pram._backend
when the extension is unavailable or PRAM_BACKEND=python.
"""

import numpy as np

BACKEND_NAME = "python"


def _loss_vec(code, alpha, u):
    if code == 0:
        return 0.5 * u**2
    if code == 1:
        return np.where(np.abs(u) <= alpha, 0.5 * u**2, alpha * np.abs(u) - 0.5 * alpha**2)
    if code == 2:
        t = np.minimum(u**2 / alpha**2, 1.0)
        return np.where(
            np.abs(u) >= alpha, alpha**2 / 6.0, (u**2 / 6.0) * (3.0 - 3.0 * t + t**2)
        )
    return 0.5 * alpha**2 * np.log1p((u / alpha) ** 2)


def _psi_vec(code, alpha, u):
    if code == 0:
        return u
    if code == 1:
        return np.clip(u, -alpha, alpha)
    if code == 2:
        return np.where(np.abs(u) <= alpha, u * (1.0 - u**2 / alpha**2) ** 2, 0.0)
    return u * alpha**2 / (alpha**2 + u**2)


def loss_only(X, y, beta, code, alpha, w, v):
    u = (y - X @ beta) * v
    return float(np.mean((w / v) * _loss_vec(code, alpha, u)))


def loss_and_grad(X, y, beta, code, alpha, w, v, grad_out):
    u = (y - X @ beta) * v
    grad_out[:] = -(X.T @ (w * _psi_vec(code, alpha, u))) / len(y)
    return float(np.mean((w / v) * _loss_vec(code, alpha, u)))


def soft_threshold_norm(z, kappa, out):
    np.multiply(np.sign(z), np.maximum(np.abs(z) - kappa, 0.0), out=out)
    return float(np.sum(np.abs(out)))


def q_val_grad(pcode, lam, shape, beta, grad_out):
    ab = np.abs(beta)
    sgn = np.sign(beta)
    if pcode == 0:
        grad_out[:] = 0.0
        return 0.0
    if pcode == 2:  # mcp
        inside = ab <= shape * lam
        q = np.where(inside, beta**2 / (2.0 * shape), lam * ab - shape * lam**2 / 2.0)
        grad_out[:] = np.where(inside, beta / shape, lam * sgn)
        return float(np.sum(q))
    # scad
    mid = (ab > lam) & (ab <= shape * lam)
    outer = ab > shape * lam
    q = np.where(
        mid,
        lam * ab + (beta**2 - 2.0 * shape * lam * ab + lam**2) / (2.0 * (shape - 1.0)),
        np.where(outer, lam * ab - (shape + 1.0) * lam**2 / 2.0, 0.0),
    )
    grad_out[:] = np.where(
        mid, sgn * (ab - lam) / (shape - 1.0), np.where(outer, lam * sgn, 0.0))
    return float(np.sum(q))
