"""Rate calculators for the prediction-error bounds, and the empirical scaling check.

The slow rate is xi = s* log(n sqrt(d) / s*) / sqrt(n); the fast rate is
delta = xi / sqrt(n). Outputs are rate terms only: the oracle-inequality
constants are unspecified, so empirical verification targets scaling
exponents, not absolute levels.
"""

from dataclasses import dataclass
import csv
import math

import numpy as np

from .errors import ConfigError
from .simulate import EvalProtocol, SimulationSpec, lmc_method, run_replications, spec_with


@dataclass(frozen=True)
class BoundConstants:
    """K (variance domination), C (loss bound), c_x (moment bound), kappa (eigenvalue).

    K and C are unknowable for real data; treat defaults as heuristics.
    """

    K: float = 1.0
    C: float = 1.0
    c_x: float = 1.0
    kappa: float = 1.0

    def __post_init__(self):
        for name in ("K", "C", "c_x", "kappa"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise ValueError(f"{name} must be positive, got {v!r}")


@dataclass(frozen=True)
class RateQuery:
    n: int
    d: int
    s_star: int
    epsilon: float = 0.05

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError(f"n and d must be >= 1, got n={self.n}, d={self.d}")
        if self.s_star < 1:
            raise ValueError(f"s_star must be >= 1, got {self.s_star!r}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon!r}")


def slow_rate_xi(q: RateQuery) -> float:
    """s* log(n sqrt(d) / s*) / sqrt(n)."""
    arg = q.n * math.sqrt(q.d) / q.s_star
    if arg <= 1.0:
        raise ValueError(
            f"rate is vacuous: n sqrt(d) / s_star = {arg:g} must exceed 1"
        )
    return q.s_star * math.log(arg) / math.sqrt(q.n)


def fast_rate_delta(q: RateQuery) -> float:
    """s* log(n sqrt(d) / s*) / n, computed exactly as xi / sqrt(n)."""
    return slow_rate_xi(q) / math.sqrt(q.n)


def theoretical_tuning(q: RateQuery, c: BoundConstants, regime: str = "fast"):
    """(lambda, varsigma) prescribed by the bounds.

    slow: lambda = sqrt(n); fast: lambda = n / max(2K, C). Both regimes use
    varsigma = 1 / (c_x * n * sqrt(d)). lambda applies to the averaged
    empirical risk.
    """
    if regime == "slow":
        lam = math.sqrt(q.n)
    elif regime == "fast":
        lam = q.n / max(2.0 * c.K, c.C)
    else:
        raise ValueError(f"regime must be 'slow' or 'fast', got {regime!r}")
    varsigma = 1.0 / (c.c_x * q.n * math.sqrt(q.d))
    return lam, varsigma


def high_prob_terms(q: RateQuery, regime: str = "fast") -> float:
    """The log(2/epsilon) deviation term of the high-probability bounds.

    Rate value only; the multiplying constants are unspecified.
    """
    base = math.log(2.0 / q.epsilon)
    if regime == "slow":
        return base / math.sqrt(q.n)
    if regime == "fast":
        return base / q.n
    raise ValueError(f"regime must be 'slow' or 'fast', got {regime!r}")


@dataclass(frozen=True)
class ScalingPoint:
    n: int
    d: int
    mean_mse: float
    sd_mse: float
    theoretical_delta: float


@dataclass(frozen=True)
class ScalingRecord:
    points: tuple
    slope: float
    intercept: float
    degenerate: bool

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["n", "mean_mse", "sd", "theoretical_delta"])
            for p in self.points:
                writer.writerow([p.n, repr(p.mean_mse), repr(p.sd_mse), repr(p.theoretical_delta)])

    def slope_summary(self) -> str:
        if self.degenerate:
            return "scaling slope: degenerate (non-positive mean mse at some grid point)"
        return (
            f"scaling slope: log(mean mse) ~ {self.slope:+.4f} * log(n) "
            f"{self.intercept:+.4f} over n in {[p.n for p in self.points]}"
        )


def fit_loglog_slope(ns, values):
    """Least-squares slope/intercept of log(values) on log(ns)."""
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    slope, intercept = np.polyfit(np.log(ns), np.log(values), 1)
    return float(slope), float(intercept)


def scaling_experiment(
    template: SimulationSpec,
    n_grid,
    reps: int,
    master_seed: int,
    d_mode: str = "2n",
    method=None,
    eval_protocol: EvalProtocol = EvalProtocol(),
    threads: int = 1,
) -> ScalingRecord:
    """Empirical check of the fast rate: mean mse of the posterior mean versus n.

    For each n in the grid (at least 3 points) the simulation harness runs
    `reps` replications with the LMC method and records the mean mse; the
    record carries the least-squares slope of log(mean mse) on log(n). With
    d_mode='2n' the dimension scales as 2n, otherwise the template's d is
    kept fixed.
    """
    n_grid = [int(v) for v in n_grid]
    if len(n_grid) < 3:
        raise ConfigError(f"n_grid needs at least 3 points, got {n_grid}")
    if d_mode not in ("2n", "fixed"):
        raise ConfigError(f"d_mode must be '2n' or 'fixed', got {d_mode!r}")
    if method is None:
        method = lmc_method()

    points = []
    for n in n_grid:
        d = 2 * n if d_mode == "2n" else template.d
        spec = spec_with(
            template,
            n=n,
            d=d,
            replications=reps,
            master_seed=master_seed,
        )
        table = run_replications(spec, [method], eval_protocol, threads=threads)
        row = table.lookup(method.name, "mse")
        delta = fast_rate_delta(RateQuery(n, d, template.s_star))
        points.append(ScalingPoint(n, d, row.mean, row.sd, delta))

    degenerate = any(not p.mean_mse > 0.0 for p in points)
    if degenerate:
        slope = intercept = math.nan
    else:
        slope, intercept = fit_loglog_slope(
            [p.n for p in points], [p.mean_mse for p in points]
        )
    return ScalingRecord(tuple(points), slope, intercept, degenerate)
