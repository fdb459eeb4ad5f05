"""Robust approximated quadratic losses and the weighted empirical objective.

Families: Huber, Tukey's biweight and Cauchy, each indexed by a robustness
scale alpha, plus the plain quadratic loss as the alpha -> infinity reference.
Every family satisfies l(u) -> u^2/2 pointwise as alpha grows, so the
penalized estimators built on them approximate mean regression while keeping
a bounded influence of large residuals at finite alpha.
"""

from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels

FAMILIES = ("huber", "tukey", "cauchy", "quadratic")

# integer codes shared with the compiled kernels
FAMILY_CODES = {"quadratic": 0, "huber": 1, "tukey": 2, "cauchy": 3}


@dataclass(frozen=True)
class LossSpec:
    """Loss family plus robustness scale alpha (ignored for quadratic)."""

    family: str
    alpha: float = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown loss family {self.family!r}")
        if self.family == "quadratic":
            if self.alpha is None:
                object.__setattr__(self, "alpha", np.inf)
        else:
            if self.alpha is None or not np.isfinite(self.alpha) or self.alpha <= 0:
                raise ValueError("alpha must be a finite positive number")

    @property
    def code(self):
        return FAMILY_CODES[self.family]


@dataclass(frozen=True)
class WeightSpec:
    """Covariate downweighting: none, or w(x) = min(1, cap/||x||_inf)."""

    kind: str = "none"
    cap: float = 4.0

    def __post_init__(self):
        if self.kind not in ("none", "infcap"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind == "infcap" and not self.cap > 0:
            raise ValueError("cap must be positive")

    def weights_for(self, design):
        """Per-row (w, v) arrays for a design matrix; v is identically 1."""
        n = design.shape[0]
        v = np.ones(n)
        if self.kind == "none":
            return np.ones(n), v
        sup = np.max(np.abs(design), axis=1)
        w = np.where(sup > self.cap, self.cap / np.where(sup > 0, sup, 1.0), 1.0)
        return w, v


@dataclass
class Dataset:
    """An (n x p) design matrix with its response vector."""

    design: np.ndarray
    response: np.ndarray
    column_names: list = field(default=None)

    def __post_init__(self):
        self.design = np.ascontiguousarray(self.design, dtype=float)
        self.response = np.ascontiguousarray(self.response, dtype=float)
        if self.design.ndim != 2:
            raise ValueError("design must be a 2-D matrix")
        if self.response.ndim != 1:
            raise ValueError("response must be a 1-D vector")
        n, p = self.design.shape
        if n < 1 or p < 1:
            raise ValueError("need at least one row and one column")
        if len(self.response) != n:
            raise ValueError("design and response row counts disagree")
        if not np.all(np.isfinite(self.design)) or not np.all(np.isfinite(self.response)):
            raise ValueError("design and response must be finite")
        if self.column_names is not None and len(self.column_names) != p:
            raise ValueError("column_names length must equal p")

    @property
    def n(self):
        return self.design.shape[0]

    @property
    def p(self):
        return self.design.shape[1]


def _check_u(spec, u):
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise ValueError("u must be finite")
    return u


def loss_value(spec, u):
    """l_alpha(u) for a scalar or array argument."""
    u = _check_u(spec, u)
    a = spec.alpha
    if spec.family == "quadratic":
        out = 0.5 * u**2
    elif spec.family == "huber":
        out = np.where(np.abs(u) <= a, 0.5 * u**2, a * np.abs(u) - 0.5 * a**2)
    elif spec.family == "tukey":
        # stable form of (a^2/6)(1 - (1 - u^2/a^2)^3) inside the window
        t = np.minimum(u**2 / a**2, 1.0)
        out = (u**2 / 6.0) * (3.0 - 3.0 * t + t**2)
        out = np.where(np.abs(u) >= a, a**2 / 6.0, out)
    else:  # cauchy
        out = 0.5 * a**2 * np.log1p((u / a) ** 2)
    return out if out.ndim else float(out)


def loss_deriv(spec, u):
    """First derivative (psi function); odd, zero at the origin."""
    u = _check_u(spec, u)
    a = spec.alpha
    if spec.family == "quadratic":
        out = u + 0.0
    elif spec.family == "huber":
        out = np.clip(u, -a, a)
    elif spec.family == "tukey":
        out = np.where(np.abs(u) <= a, u * (1.0 - u**2 / a**2) ** 2, 0.0)
    else:  # cauchy
        out = u * a**2 / (a**2 + u**2)
    return out if out.ndim else float(out)


def loss_second_deriv(spec, u):
    """Second derivative; at the Huber/Tukey window edge |u| = alpha the
    interior-branch value is returned."""
    u = _check_u(spec, u)
    a = spec.alpha
    if spec.family == "quadratic":
        out = np.ones_like(u)
    elif spec.family == "huber":
        out = np.where(np.abs(u) <= a, 1.0, 0.0)
    elif spec.family == "tukey":
        t = u**2 / a**2
        out = np.where(np.abs(u) <= a, (1.0 - t) * (1.0 - 5.0 * t), 0.0)
    else:  # cauchy
        out = a**2 * (a**2 - u**2) / (a**2 + u**2) ** 2
    return out if out.ndim else float(out)


def weight_eval(wspec, x_row):
    """(w, v) for one covariate row."""
    x_row = np.asarray(x_row, dtype=float)
    if not np.all(np.isfinite(x_row)):
        raise ValueError("x_row must be finite")
    if wspec.kind == "none":
        return 1.0, 1.0
    sup = float(np.max(np.abs(x_row))) if x_row.size else 0.0
    w = 1.0 if sup <= wspec.cap or sup == 0.0 else wspec.cap / sup
    return w, 1.0


def _as_weights(data, wspec):
    if wspec is None:
        wspec = WeightSpec("none")
    return wspec.weights_for(data.design)


def _check_beta(data, beta):
    beta = np.ascontiguousarray(beta, dtype=float)
    if beta.shape != (data.p,):
        raise ValueError(f"beta must have length p={data.p}")
    return beta


def empirical_loss(data, beta, lspec, wspec=None, weights=None):
    """(1/n) sum_i [w_i/v_i] * l_alpha((y_i - x_i'beta) v_i)."""
    beta = _check_beta(data, beta)
    w, v = weights if weights is not None else _as_weights(data, wspec)
    return kernels.loss_only(
        data.design, data.response, beta, lspec.code, float(lspec.alpha), w, v
    )


def empirical_gradient(data, beta, lspec, wspec=None, weights=None):
    """Gradient -(1/n) sum_i w_i * l'_alpha((y_i - x_i'beta) v_i) * x_i."""
    beta = _check_beta(data, beta)
    w, v = weights if weights is not None else _as_weights(data, wspec)
    grad = np.empty_like(beta)
    kernels.loss_and_grad(
        data.design, data.response, beta, lspec.code, float(lspec.alpha), w, v, grad
    )
    return grad


def empirical_loss_grad(data, beta, lspec, weights):
    """Fused loss value and gradient; the solver's hot call."""
    beta = _check_beta(data, beta)
    w, v = weights
    grad = np.empty_like(beta)
    val = kernels.loss_and_grad(
        data.design, data.response, beta, lspec.code, float(lspec.alpha), w, v, grad
    )
    return val, grad
