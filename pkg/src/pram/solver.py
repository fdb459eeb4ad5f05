"""Composite gradient descent for penalized robust regression.

Minimizes  empirical_loss(beta) + penalty(beta)  subject to ||beta||_1 <= R.
The penalty is split as penalty = lam*||.||_1 - q with q smooth, so each
iteration is a soft-threshold (exact prox over the l1 ball) of a gradient
step on loss - q, with backtracking on the step size. A convex Huber+Lasso
run provides the warm start for nonconvex targets (two-step procedure).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from ._backend import kernels
from .losses import LossSpec, WeightSpec, empirical_gradient, loss_deriv, \
    loss_second_deriv
from .penalties import PENALTY_CODES, PenaltySpec, q_value_and_grad


class DivergenceError(RuntimeError):
    """Objective became non-finite during iteration."""


@dataclass(frozen=True)
class SolverConfig:
    radius_R: float = 1e4
    max_iter: int = 5000
    tol: float = 1e-7
    eta0: float = 1.0
    shrink: float = 0.5

    def __post_init__(self):
        if not self.radius_R > 0:
            raise ValueError("radius_R must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be a positive integer")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not self.eta0 > 0:
            raise ValueError("eta0 must be positive")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")


@dataclass
class FitResult:
    beta_hat: np.ndarray
    iterations: int
    converged: bool
    objective_trace: np.ndarray
    kkt_residual: float
    alpha_used: float
    lambda_used: float
    diagnostics: dict = field(default_factory=dict)


def soft_threshold(v, kappa):
    """Componentwise sign(v)(|v| - kappa)_+."""
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - kappa, 0.0)


def _extra_threshold(a, R):
    """Smallest theta >= 0 with sum((a - theta)_+) = R, for sum(a_+) > R.

    a holds |v| - kappa; the equation is piecewise linear in theta, so the
    exact breakpoint solve on the sorted positive entries is used.
    """
    u = np.sort(a[a > 0])[::-1]
    css = np.cumsum(u)
    k = np.arange(1, len(u) + 1)
    ok = np.nonzero(u > (css - R) / k)[0]
    k_star = ok[-1] + 1
    return max((css[k_star - 1] - R) / k_star, 0.0)


def constrained_prox(v, kappa, R):
    """argmin over {||b||_1 <= R} of 0.5*||b - v||^2 + kappa*||b||_1.

    Soft-threshold at kappa when that is feasible; otherwise the threshold
    is raised to kappa + theta with theta solving ||result||_1 = R.
    """
    if not R > 0:
        raise ValueError("R must be positive")
    v = np.asarray(v, dtype=float)
    z = soft_threshold(v, kappa)
    if np.sum(np.abs(z)) <= R:
        return z
    theta = _extra_threshold(np.abs(v) - kappa, R)
    return soft_threshold(v, kappa + theta)


def kkt_residual(data, beta, lspec, pspec, wspec=None, R=1e4):
    """Scalar first-order stationarity measure; 0 at an exact solution.

    Computed on the decomposition grad(loss - q) + lam*subdiff(||.||_1): zero
    coordinates contribute (|g_j| - lam)_+, active ones |g_j + lam*sign|.
    When the l1-ball constraint is active its multiplier is profiled out.
    """
    beta = np.asarray(beta, dtype=float)
    l1 = np.sum(np.abs(beta))
    if l1 > R * (1 + 1e-8):
        raise ValueError("beta violates the l1 side constraint")
    g = empirical_gradient(data, beta, lspec, wspec) - q_value_and_grad(pspec, beta)[1]
    lam = pspec.lam
    active = beta != 0

    def residual(theta):
        lam_eff = lam + theta
        r_zero = np.maximum(np.abs(g[~active]) - lam_eff, 0.0)
        r_act = np.abs(g[active] + lam_eff * np.sign(beta[active]))
        hi = 0.0
        if r_zero.size:
            hi = max(hi, float(np.max(r_zero)))
        if r_act.size:
            hi = max(hi, float(np.max(r_act)))
        return hi

    if l1 < R * (1 - 1e-9):
        return residual(0.0)
    # active ball: minimize over the nonnegative constraint multiplier
    hi = lam + float(np.max(np.abs(g))) + 1.0
    best = minimize_scalar(residual, bounds=(0.0, hi), method="bounded",
                           options={"xatol": 1e-12})
    return min(residual(0.0), float(best.fun))


def composite_gd(data, lspec, pspec, wspec, config, init):
    """Composite gradient iteration with backtracking line search.

    beta^{t+1} = prox over the l1 ball of the step  beta^t - eta*grad(L - q),
    with eta shrunk until
        Lbar(beta+) <= Lbar(beta) + <grad, d> + ||d||^2 / (2 eta).
    Stops when the relative objective change drops below config.tol.
    """
    if wspec is None:
        wspec = WeightSpec("none")
    beta = np.ascontiguousarray(init, dtype=float).copy()
    if beta.shape != (data.p,):
        raise ValueError(f"init must have length p={data.p}")
    R = config.radius_R
    if np.sum(np.abs(beta)) > R * (1 + 1e-10):
        raise ValueError("init violates the l1 side constraint")
    w, v = wspec.weights_for(data.design)
    X, y = data.design, data.response
    code, alpha = lspec.code, float(lspec.alpha)
    pcode = PENALTY_CODES[pspec.family]
    lam = pspec.lam
    shape = pspec.shape if pspec.shape is not None else 0.0
    p = data.p

    # double-buffered state so accepted candidates reuse their fused gradient
    lgrad, lgrad_c = np.empty(p), np.empty(p)
    qgrad, qgrad_c = np.empty(p), np.empty(p)
    cand, gbar, z, d = np.empty(p), np.empty(p), np.empty(p), np.empty(p)

    lval = kernels.loss_and_grad(X, y, beta, code, alpha, w, v, lgrad)
    qval = kernels.q_val_grad(pcode, lam, shape, beta, qgrad)
    lbar = lval - qval
    phi = lbar + lam * float(np.sum(np.abs(beta)))
    trace = [phi]
    if not np.isfinite(phi):
        raise DivergenceError("objective is non-finite at the initial point")

    eta = config.eta0
    converged = False
    iterations = 0
    eta_floor = config.eta0 * 1e-14
    shrunk_prev = False
    since_expand = 0
    for _ in range(config.max_iter):
        np.subtract(lgrad, qgrad, out=gbar)
        # one optional expansion step, attempted when the step size has been
        # stable for a few iterations
        if not shrunk_prev and since_expand >= 4:
            eta = eta / config.shrink
            since_expand = 0
        else:
            since_expand += 1
        shrunk_prev = False
        while True:
            np.multiply(gbar, -eta, out=z)
            z += beta
            l1 = kernels.soft_threshold_norm(z, eta * lam, cand)
            if l1 > R:
                cand[:] = constrained_prox(z, eta * lam, R)
                l1 = float(np.sum(np.abs(cand)))
            np.subtract(cand, beta, out=d)
            d2 = float(d @ d)
            lval_c = kernels.loss_and_grad(X, y, cand, code, alpha, w, v, lgrad_c)
            qval_c = kernels.q_val_grad(pcode, lam, shape, cand, qgrad_c)
            lbar_c = lval_c - qval_c
            bound = lbar + float(gbar @ d) + d2 / (2 * eta)
            if lbar_c <= bound + 1e-12 * max(1.0, abs(lbar)):
                break
            shrunk_prev = True
            eta *= config.shrink
            if eta < eta_floor:
                break
        if eta < eta_floor:
            break
        iterations += 1
        phi_new = lbar_c + lam * l1
        if not np.isfinite(phi_new):
            raise DivergenceError(f"objective diverged at iteration {iterations}")
        trace.append(phi_new)
        beta, cand = cand, beta
        lgrad, lgrad_c = lgrad_c, lgrad
        qgrad, qgrad_c = qgrad_c, qgrad
        lbar = lbar_c
        rel = abs(phi - phi_new) / max(1.0, abs(phi))
        phi = phi_new
        if rel < config.tol:
            converged = True
            break

    kkt = kkt_residual(data, beta, lspec, pspec, wspec, R)
    return FitResult(
        beta_hat=beta,
        iterations=iterations,
        converged=converged,
        objective_trace=np.asarray(trace),
        kkt_residual=kkt,
        alpha_used=float(lspec.alpha),
        lambda_used=lam,
    )


def two_step_fit(data, target_lspec, target_pspec, wspec=None, init_lspec=None,
                 init_lambda=None, config=None, step1_init=None,
                 enforce_huber_init=True):
    """Convex Huber+Lasso fit, then the target fit warm-started from it.

    Step 1 starts from the zero vector (or step1_init when given, e.g. along
    a lambda path); its solution initializes the composite gradient run on
    the target loss/penalty pair and is recorded in the result diagnostics.
    """
    if config is None:
        config = SolverConfig()
    if init_lspec is None:
        alpha = target_lspec.alpha if np.isfinite(target_lspec.alpha) else 1e6
        init_lspec = LossSpec("huber", alpha)
    elif enforce_huber_init and init_lspec.family != "huber":
        raise ValueError("step-1 loss must be Huber (pass enforce_huber_init=False "
                         "to override)")
    if init_lambda is None:
        init_lambda = target_pspec.lam
    init_pspec = PenaltySpec("lasso", init_lambda)
    if step1_init is None:
        step1_init = np.zeros(data.p)

    step1 = composite_gd(data, init_lspec, init_pspec, wspec, config, step1_init)
    result = composite_gd(data, target_lspec, target_pspec, wspec, config,
                          step1.beta_hat)
    result.diagnostics["step1_beta"] = step1.beta_hat
    result.diagnostics["step1_iterations"] = step1.iterations
    result.diagnostics["step1_converged"] = step1.converged
    return result


def plugin_variance(data, beta_hat, lspec, nu, rcond_max=1e12):
    """Sandwich variance  nu_S' D^-1 V D^-1 nu_S  on the fitted support.

    D is the second-derivative-weighted Gram block on S, V the sample
    covariance of psi(residual) * x_S. Unweighted residuals only.
    """
    beta_hat = np.asarray(beta_hat, dtype=float)
    S = np.nonzero(beta_hat)[0]
    if S.size == 0:
        raise ValueError("beta_hat has empty support")
    r = data.response - data.design @ beta_hat
    Xs = data.design[:, S]
    lpp = loss_second_deriv(lspec, r)
    lp = loss_deriv(lspec, r)
    D = (Xs * lpp[:, None]).T @ Xs / data.n
    cond = np.linalg.cond(D)
    if not np.isfinite(cond) or cond > rcond_max:
        raise np.linalg.LinAlgError(
            f"plug-in Hessian block is numerically singular (cond={cond:.3e})")
    Z = Xs * lp[:, None]
    V = np.atleast_2d(np.cov(Z, rowvar=False, bias=False))
    t = np.linalg.solve(D, np.asarray(nu, dtype=float)[S])
    return float(t @ V @ t)


def rsc_probe(data, lspec, wspec, beta1, beta2):
    """Curvature probe: gradient-difference inner product and the norm gaps.

    Returns {'lhs', 'l2_gap', 'l1_gap'}; diagnostic only, lhs may be
    negative for re-descending losses far from the truth.
    """
    beta1 = np.asarray(beta1, dtype=float)
    beta2 = np.asarray(beta2, dtype=float)
    g1 = empirical_gradient(data, beta1, lspec, wspec)
    g2 = empirical_gradient(data, beta2, lspec, wspec)
    d = beta1 - beta2
    return {
        "lhs": float((g1 - g2) @ d),
        "l2_gap": float(d @ d),
        "l1_gap": float(np.sum(np.abs(d)) ** 2),
    }
