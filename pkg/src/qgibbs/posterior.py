"""The Gibbs posterior: exp(-lam * empirical_risk) times the sparsity prior.

Samplers ascend the unnormalized log density. lam multiplies the *averaged*
empirical risk r_n (the 1/n is inside), so the tuning values of the rate
calculators apply directly.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .loss import Dataset, QuantileLevel, _check_theta, empirical_risk, kink_weights, tau_value
from .prior import PriorConfig, log_prior_grad, log_prior_unnorm


@dataclass(frozen=True)
class GibbsConfig:
    """Quantile level, inverse temperature lam >= 0, and prior hyperparameters.

    lam = 0 reduces the posterior to the prior; any positive value tempers
    toward low empirical risk.
    """

    tau: float = 0.5
    lam: float = 1.0
    prior: PriorConfig = field(default_factory=PriorConfig)

    def __post_init__(self):
        object.__setattr__(self, "tau", tau_value(self.tau))
        if not (math.isfinite(self.lam) and self.lam >= 0.0):
            raise ValueError(f"lam must be a finite nonnegative real, got {self.lam!r}")

    @property
    def quantile(self) -> QuantileLevel:
        return QuantileLevel(self.tau)


class PosteriorTarget:
    """Unnormalized log density and gradient of the Gibbs posterior on a dataset.

    Immutable after construction; evaluation is pure and thread-safe. A
    C-contiguous transpose of x is cached so the gradient's row reduction
    runs through a fixed fast path.
    """

    def __init__(self, data: Dataset, cfg: GibbsConfig):
        self.data = data
        self.cfg = cfg
        self._xt = np.ascontiguousarray(data.x.T)

    @property
    def d(self) -> int:
        return self.data.d

    def log_density(self, theta) -> float:
        return -self.cfg.lam * empirical_risk(self.data, theta, self.cfg.tau) + log_prior_unnorm(
            theta, self.cfg.prior
        )

    def grad(self, theta) -> np.ndarray:
        theta = _check_theta(theta, self.data.d)
        resid = self.data.y - self.data.x @ theta
        w = kink_weights(resid, self.cfg.tau)
        risk_grad = self._xt @ w / self.data.n
        return -self.cfg.lam * risk_grad + log_prior_grad(theta, self.cfg.prior)

    def in_support(self, theta) -> bool:
        """Strict interior of the prior's l1 ball (all of R^d when c1 is infinite)."""
        if math.isinf(self.cfg.prior.c1):
            return True
        return float(np.sum(np.abs(theta))) < self.cfg.prior.c1

    def default_eta(self) -> float:
        """Step-size heuristic 0.5 / (lam * mean row norm^2 + 1 / varsigma^2).

        Keeps the drift step bounded for any lam and dimension; callers may
        always override.
        """
        row_norm_sq = float(np.mean(np.sum(self.data.x**2, axis=1)))
        return 0.5 / (self.cfg.lam * row_norm_sq + 1.0 / self.cfg.prior.varsigma**2)


def log_density_unnorm(target: PosteriorTarget, theta) -> float:
    """log of the Gibbs posterior density at theta, up to an additive constant."""
    return target.log_density(theta)


def log_density_grad(target: PosteriorTarget, theta) -> np.ndarray:
    """Gradient of log_density_unnorm (ascent direction)."""
    return target.grad(theta)
