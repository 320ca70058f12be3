"""Pinball (quantile) loss, empirical quantile risk, and its subgradient.

The subgradient convention at the kink y = u uses the closed inequality
1{y <= u}, so the (1 - tau) branch fires there. Averaging by 1/n is included
so the subgradient is exactly the gradient of the empirical risk; reductions
use numpy's pairwise summation in input row order, which keeps results
independent of thread count.
"""

from dataclasses import dataclass
import math

import numpy as np


@dataclass(frozen=True)
class QuantileLevel:
    """Quantile level tau in the open interval (0, 1)."""

    tau: float

    def __post_init__(self):
        t = float(self.tau)
        if not math.isfinite(t) or not 0.0 < t < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau!r}")
        object.__setattr__(self, "tau", t)


def tau_value(tau) -> float:
    """Validate a quantile level given as a QuantileLevel or a bare float."""
    if isinstance(tau, QuantileLevel):
        return tau.tau
    return QuantileLevel(float(tau)).tau


@dataclass(frozen=True)
class Dataset:
    """Design matrix x (n rows, d columns) and response vector y (length n)."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        if x.ndim != 2:
            raise ValueError(f"x must be a matrix, got shape {x.shape}")
        if x.shape[0] != y.shape[0]:
            raise ValueError(
                f"x has {x.shape[0]} rows but y has {y.shape[0]} entries"
            )
        if x.shape[0] < 1 or x.shape[1] < 1:
            raise ValueError("dataset needs at least one row and one column")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
            raise ValueError("dataset contains non-finite entries")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]


def _check_theta(theta, d: int) -> np.ndarray:
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.shape[0] != d:
        raise ValueError(f"theta has length {theta.shape[0]}, expected {d}")
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta contains non-finite entries")
    return theta


def pinball_values(residuals: np.ndarray, tau: float) -> np.ndarray:
    """Vectorized pinball loss of residuals r = y - u."""
    return np.where(residuals > 0.0, tau * residuals, (tau - 1.0) * residuals)


def pinball_loss(y: float, u: float, tau) -> float:
    """Pinball loss (y - u) * (tau - 1{y <= u})."""
    t = tau_value(tau)
    if not (math.isfinite(y) and math.isfinite(u)):
        raise ValueError(f"pinball_loss needs finite inputs, got y={y}, u={u}")
    r = y - u
    return r * t if r > 0.0 else r * (t - 1.0)


def empirical_risk(data: Dataset, theta, tau) -> float:
    """Mean pinball loss of the linear predictor x @ theta over the sample."""
    t = tau_value(tau)
    theta = _check_theta(theta, data.d)
    resid = data.y - data.x @ theta
    return float(np.mean(pinball_values(resid, t)))


def kink_weights(residuals: np.ndarray, tau: float) -> np.ndarray:
    """Per-row loss derivative in u: (1 - tau) when y <= u, else -tau."""
    return np.where(residuals <= 0.0, 1.0 - tau, -tau)


def risk_subgradient(data: Dataset, theta, tau) -> np.ndarray:
    """A subgradient of the empirical risk at theta.

    Rows on the kink (y = x @ theta) contribute the (1 - tau) branch. The
    1/n average is included, so this is the gradient wherever the risk is
    differentiable.
    """
    t = tau_value(tau)
    theta = _check_theta(theta, data.d)
    resid = data.y - data.x @ theta
    w = kink_weights(resid, t)
    # einsum keeps a fixed single-threaded reduction order
    return np.einsum("i,ij->j", w, data.x) / data.n
