"""Amenable sparsity penalties: Lasso, SCAD and MCP.

Each penalty is coordinate-separable and comes with its derivative, the
smooth remainder q(beta) = lambda*||beta||_1 - penalty(beta) used by the
composite gradient solver, and its (mu, delta) amenability constants.
"""

import math
from dataclasses import dataclass

import numpy as np

FAMILIES = ("lasso", "scad", "mcp")

# integer codes shared with the compiled kernels
PENALTY_CODES = {"lasso": 0, "scad": 1, "mcp": 2}

DEFAULT_SCAD_A = 3.7
DEFAULT_MCP_B = 3.0


@dataclass(frozen=True)
class PenaltySpec:
    """Parametric description of a penalty: family name, level and shape.

    shape is the SCAD a (> 2) or the MCP b (> 0); it is ignored for the
    Lasso and defaults to 3.7 / 3.0 respectively when omitted.
    """

    family: str
    lam: float
    shape: float = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown penalty family {self.family!r}")
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ValueError("lambda must be a finite nonnegative number")
        if self.shape is None:
            default = {"scad": DEFAULT_SCAD_A, "mcp": DEFAULT_MCP_B, "lasso": None}
            object.__setattr__(self, "shape", default[self.family])
        if self.family == "scad" and not self.shape > 2:
            raise ValueError("SCAD requires shape a > 2")
        if self.family == "mcp" and not self.shape > 0:
            raise ValueError("MCP requires shape b > 0")


def penalty_scalar(spec, t):
    """Penalty value at t (scalar or array), symmetric in t."""
    lam, a = spec.lam, spec.shape
    t = np.asarray(t, dtype=float)
    at = np.abs(t)
    if spec.family == "lasso":
        out = lam * at
    elif spec.family == "scad":
        out = np.where(
            at <= lam,
            lam * at,
            np.where(
                at <= a * lam,
                -(at**2 - 2 * a * lam * at + lam**2) / (2 * (a - 1)),
                (a + 1) * lam**2 / 2,
            ),
        )
    else:  # mcp
        out = np.where(at <= a * lam, lam * at - t**2 / (2 * a), a * lam**2 / 2)
    return out if out.ndim else float(out)


def penalty_deriv(spec, t):
    """d/dt of penalty_scalar; at t = 0 returns the right limit +lambda."""
    lam, a = spec.lam, spec.shape
    t = np.asarray(t, dtype=float)
    at = np.abs(t)
    # sign convention: sign(0) taken as +1 so the origin returns +lambda
    sgn = np.where(t >= 0, 1.0, -1.0)
    if spec.family == "lasso":
        out = lam * sgn
    elif spec.family == "scad":
        out = sgn * np.where(
            at <= lam,
            lam,
            np.where(at <= a * lam, (a * lam - at) / (a - 1), 0.0),
        )
    else:  # mcp
        out = sgn * lam * np.maximum(0.0, 1.0 - at / (lam * a)) if lam > 0 else 0.0 * t
    return out if np.ndim(out) else float(out)


def penalty_vector(spec, beta):
    """Coordinate sum of penalty_scalar over a coefficient vector."""
    beta = np.asarray(beta, dtype=float)
    return float(np.sum(penalty_scalar(spec, beta)))


def q_value_and_grad(spec, beta):
    """Smooth remainder q(beta) = lam*||beta||_1 - penalty(beta) and its gradient.

    q is differentiable everywhere, including the origin, which is what makes
    the composite prox step a plain soft-threshold.
    """
    lam, a = spec.lam, spec.shape
    beta = np.asarray(beta, dtype=float)
    ab = np.abs(beta)
    sgn = np.sign(beta)
    if spec.family == "lasso":
        return 0.0, np.zeros_like(beta)
    if spec.family == "mcp":
        inside = ab <= a * lam
        q = np.where(inside, beta**2 / (2 * a), lam * ab - a * lam**2 / 2)
        grad = np.where(inside, beta / a, lam * sgn)
        return float(np.sum(q)), grad
    # scad
    q = np.where(
        ab <= lam,
        0.0,
        np.where(
            ab <= a * lam,
            lam * ab + (beta**2 - 2 * a * lam * ab + lam**2) / (2 * (a - 1)),
            lam * ab - (a + 1) * lam**2 / 2,
        ),
    )
    grad = np.where(
        ab <= lam,
        0.0,
        np.where(ab <= a * lam, sgn * (ab - lam) / (a - 1), lam * sgn),
    )
    return float(np.sum(q)), grad


def amenability(spec):
    """(mu, delta) amenability constants; Lasso has delta = inf."""
    if spec.family == "lasso":
        return 0.0, math.inf
    if spec.family == "scad":
        return 1.0 / (spec.shape - 1.0), spec.shape
    return 1.0 / spec.shape, spec.shape
