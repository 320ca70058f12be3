"""Scaled Student-type sparsity prior: density proportional to prod (varsigma^2 + theta_i^2)^-2.

The normalizing constant is never computed; all consumers work with the
unnormalized log density. An optional l1-ball radius c1 truncates the
support (hard cutoff, -inf outside). Exact sampling uses the identity
theta = (varsigma / sqrt(3)) * T with T a Student-t draw with 3 degrees of
freedom, which reproduces the density exactly.
"""

from dataclasses import dataclass
import math

import numpy as np


@dataclass(frozen=True)
class PriorConfig:
    """Scale varsigma > 0 and l1-ball radius c1 (infinity disables truncation)."""

    varsigma: float = 1.0
    c1: float = math.inf

    def __post_init__(self):
        if not (math.isfinite(self.varsigma) and self.varsigma > 0.0):
            raise ValueError(f"varsigma must be positive, got {self.varsigma!r}")
        if not self.c1 > 0.0:
            raise ValueError(f"c1 must be positive, got {self.c1!r}")


def log_prior_unnorm(theta, cfg: PriorConfig) -> float:
    """log prior up to an additive constant: -2 * sum log(varsigma^2 + theta_i^2)."""
    theta = np.asarray(theta, dtype=float).ravel()
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta contains non-finite entries")
    if math.isfinite(cfg.c1) and np.sum(np.abs(theta)) > cfg.c1:
        return -math.inf
    return float(-2.0 * np.sum(np.log(cfg.varsigma**2 + theta**2)))


def log_prior_grad(theta, cfg: PriorConfig) -> np.ndarray:
    """Gradient of log_prior_unnorm; component i is -4 theta_i / (varsigma^2 + theta_i^2)."""
    theta = np.asarray(theta, dtype=float).ravel()
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta contains non-finite entries")
    if math.isfinite(cfg.c1) and np.sum(np.abs(theta)) >= cfg.c1:
        raise ValueError(
            "log-prior gradient is undefined at or outside the l1 ball of radius c1"
        )
    return -4.0 * theta / (cfg.varsigma**2 + theta**2)


def sample_prior(d: int, cfg: PriorConfig, rng: np.random.Generator) -> np.ndarray:
    """d independent draws from the prior.

    With finite c1 the whole vector is redrawn until it lands inside the
    ball (rejection sampling); c1 is normally large enough that the first
    draw is accepted.
    """
    if d < 1:
        raise ValueError(f"d must be a positive integer, got {d!r}")
    scale = cfg.varsigma / math.sqrt(3.0)
    for _ in range(1000):
        theta = scale * rng.standard_t(3, size=d)
        if not math.isfinite(cfg.c1) or np.sum(np.abs(theta)) <= cfg.c1:
            return theta
    raise RuntimeError(
        f"rejection sampling failed: c1={cfg.c1} rejects 1000 consecutive draws"
    )
