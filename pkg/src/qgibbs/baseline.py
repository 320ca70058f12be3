"""Smoothed l1-penalized quantile regression: the comparator and sampler initializer.

The pinball loss is Huberized on a band of half-width gamma around the kink
so the objective has a gradient everywhere, then minimized by proximal
gradient (ISTA) with backtracking. K-fold cross-validation selects the
penalty by held-out unsmoothed pinball loss, breaking ties toward the larger
(sparser) penalty.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import ConfigError, DivergenceError
from .loss import Dataset, pinball_values, tau_value
from .seeding import derive_rng


@dataclass(frozen=True)
class LassoConfig:
    tau: float
    penalty: float
    gamma: float
    max_iter: int = 500
    tol: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "tau", tau_value(self.tau))
        if self.penalty < 0.0 or not math.isfinite(self.penalty):
            raise ValueError(f"penalty must be nonnegative, got {self.penalty!r}")
        if not (math.isfinite(self.gamma) and self.gamma > 0.0):
            raise ValueError(f"gamma must be positive, got {self.gamma!r}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be positive, got {self.max_iter!r}")
        if not self.tol > 0.0:
            raise ValueError(f"tol must be positive, got {self.tol!r}")


def smoothed_values(residuals: np.ndarray, tau: float, gamma: float):
    """Vectorized Huberized pinball: (values, derivative in u) for r = y - u."""
    r = np.asarray(residuals, dtype=float)
    upper = r >= gamma * tau
    lower = r <= -gamma * (1.0 - tau)
    mid = ~(upper | lower)
    values = np.empty_like(r)
    du = np.empty_like(r)
    values[upper] = tau * r[upper] - gamma * tau**2 / 2.0
    du[upper] = -tau
    values[lower] = (tau - 1.0) * r[lower] - gamma * (1.0 - tau) ** 2 / 2.0
    du[lower] = 1.0 - tau
    values[mid] = r[mid] ** 2 / (2.0 * gamma)
    du[mid] = -r[mid] / gamma
    return values, du


def smoothed_pinball(y: float, u: float, tau, gamma: float):
    """Huberized pinball loss and its exact derivative in u at a single point."""
    t = tau_value(tau)
    if not gamma > 0.0:
        raise ValueError(f"gamma must be positive, got {gamma!r}")
    values, du = smoothed_values(np.array([y - u]), t, gamma)
    return float(values[0]), float(du[0])


def soft_threshold(v: np.ndarray, threshold: float) -> np.ndarray:
    """Proximal operator of threshold * |.|_1."""
    return np.sign(v) * np.maximum(np.abs(v) - threshold, 0.0)


def default_gamma(data: Dataset) -> float:
    """Smoothing half-width: 1e-2 times the response standard deviation."""
    sd = float(np.std(data.y))
    return 1e-2 * sd if sd > 0.0 else 1e-2


def default_penalty_grid(data: Dataset, tau, gamma: float | None = None, size: int = 30) -> np.ndarray:
    """30 log-spaced penalties spanning [1e-3, 1] times the zero-fit gradient bound.

    The upper end is the infinity norm of the smooth-part gradient at
    theta = 0, above which the all-zero solution is optimal.
    """
    t = tau_value(tau)
    if gamma is None:
        gamma = default_gamma(data)
    _, du = smoothed_values(data.y, t, gamma)
    lam_max = float(np.max(np.abs(np.einsum("i,ij->j", du, data.x)))) / data.n
    lam_max = max(lam_max, 1e-12)
    return np.geomspace(1e-3 * lam_max, lam_max, size)


def _objective(data: Dataset, theta: np.ndarray, cfg: LassoConfig):
    resid = data.y - data.x @ theta
    values, du = smoothed_values(resid, cfg.tau, cfg.gamma)
    smooth = float(np.mean(values))
    return smooth, du, resid


def fit_quantile_lasso(data: Dataset, cfg: LassoConfig, init=None) -> np.ndarray:
    """Proximal-gradient minimizer of mean smoothed pinball + penalty * |theta|_1.

    Backtracking on the smooth part guarantees the objective is nonincreasing
    across iterations; stops when the relative objective change drops below
    cfg.tol or after cfg.max_iter iterations.
    """
    theta = (
        np.zeros(data.d)
        if init is None
        else np.asarray(init, dtype=float).ravel().copy()
    )
    if theta.shape[0] != data.d:
        raise ValueError(f"init has length {theta.shape[0]}, expected {data.d}")
    xt = np.ascontiguousarray(data.x.T)

    smooth, du, _ = _objective(data, theta, cfg)
    obj = smooth + cfg.penalty * float(np.sum(np.abs(theta)))
    if not math.isfinite(obj):
        raise DivergenceError("objective is non-finite at the initial point")
    step = 1.0
    for _ in range(cfg.max_iter):
        grad = xt @ du / data.n
        # backtracking on the quadratic upper bound of the smooth part
        while True:
            cand = soft_threshold(theta - step * grad, step * cfg.penalty)
            diff = cand - theta
            sq = float(diff @ diff)
            smooth_cand, du_cand, _ = _objective(data, cand, cfg)
            if smooth_cand <= smooth + float(grad @ diff) + sq / (2.0 * step) + 1e-12:
                break
            step *= 0.5
            if step < 1e-18:
                return theta
        obj_cand = smooth_cand + cfg.penalty * float(np.sum(np.abs(cand)))
        if not math.isfinite(obj_cand):
            raise DivergenceError("objective became non-finite during the fit")
        if obj_cand > obj:
            break
        rel_change = (obj - obj_cand) / max(1.0, abs(obj))
        theta, obj, smooth, du = cand, obj_cand, smooth_cand, du_cand
        step *= 2.0
        if rel_change < cfg.tol:
            break
    return theta


def _heldout_loss(train: Dataset, test_x, test_y, theta, tau: float) -> float:
    resid = test_y - test_x @ theta
    return float(np.sum(pinball_values(resid, tau)))


def cv_quantile_lasso(
    data: Dataset,
    tau,
    penalty_grid,
    folds: int = 5,
    seed: int = 0,
    gamma: float | None = None,
    max_iter: int = 500,
    tol: float = 1e-8,
):
    """K-fold CV over an ascending penalty grid; returns (best_penalty, theta).

    Rows are partitioned by a seeded shuffle. Fits walk the grid from the
    largest penalty down with warm starts; the score is the pooled held-out
    unsmoothed pinball loss. Exact ties go to the larger penalty, and the
    final fit re-runs on the full data at the winner.
    """
    t = tau_value(tau)
    grid = np.asarray(penalty_grid, dtype=float).ravel()
    if grid.size == 0:
        raise ConfigError("penalty grid is empty")
    if np.any(np.diff(grid) < 0):
        raise ConfigError("penalty grid must be sorted ascending")
    if folds < 2:
        raise ConfigError(f"need at least 2 folds, got {folds}")
    if folds > data.n:
        raise ConfigError(f"cannot split {data.n} rows into {folds} folds")
    if gamma is None:
        gamma = default_gamma(data)

    perm = derive_rng(seed, "cv-folds").permutation(data.n)
    fold_ids = np.array_split(perm, folds)
    total_loss = np.zeros(grid.size)
    for held in fold_ids:
        mask = np.ones(data.n, dtype=bool)
        mask[held] = False
        train = Dataset(data.x[mask], data.y[mask])
        theta = np.zeros(data.d)
        for gi in range(grid.size - 1, -1, -1):
            cfg = LassoConfig(t, grid[gi], gamma, max_iter, tol)
            theta = fit_quantile_lasso(train, cfg, init=theta)
            total_loss[gi] += _heldout_loss(train, data.x[held], data.y[held], theta, t)
    mean_loss = total_loss / data.n
    best = int(np.flatnonzero(mean_loss == mean_loss.min()).max())

    theta = np.zeros(data.d)
    for gi in range(grid.size - 1, best - 1, -1):
        cfg = LassoConfig(t, grid[gi], gamma, max_iter, tol)
        theta = fit_quantile_lasso(data, cfg, init=theta)
    return float(grid[best]), theta
