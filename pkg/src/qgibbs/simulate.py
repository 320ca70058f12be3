"""Synthetic benchmark engine: data generation, metrics, and seeded replications.

Data follow y = x @ theta_star + u with standard-normal design, theta_star
carrying s_star standard-normal nonzeros, and noise shifted so its
tau-quantile is exactly zero. Each replication runs every method on a fresh
training set, scores mean pinball error on an independently generated
evaluation set of the same size (the quantity the risk bounds control) and
mean squared parameter error against theta_star; in-sample error is
available behind a flag for comparability with summed-risk conventions.
Replication RNG streams are derived from (master_seed, replication index),
so tables are reproducible and independent of thread scheduling.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
import csv
import math

import numpy as np
from scipy import stats

from .baseline import cv_quantile_lasso, default_penalty_grid
from .errors import ConfigError, DivergenceError
from .loss import Dataset, empirical_risk, tau_value
from .posterior import GibbsConfig, PosteriorTarget
from .prior import PriorConfig
from .samplers import SamplerConfig, lmc_run, mala_run, posterior_mean
from .seeding import derive_rng, derive_seed


@dataclass(frozen=True)
class NoiseFamily:
    """One of the three noise laws: gaussian(sigma), cauchy(scale), scaled_t(df, factor)."""

    kind: str
    sigma: float = 0.0
    scale: float = 0.0
    df: float = 0.0
    factor: float = 0.0

    def __post_init__(self):
        if self.kind == "gaussian":
            if not self.sigma > 0.0:
                raise ValueError(f"gaussian noise needs sigma > 0, got {self.sigma!r}")
        elif self.kind == "cauchy":
            if not self.scale > 0.0:
                raise ValueError(f"cauchy noise needs scale > 0, got {self.scale!r}")
        elif self.kind == "scaled_t":
            if not self.df >= 1.0:
                raise ValueError(f"scaled_t noise needs df >= 1, got {self.df!r}")
            if not self.factor > 0.0:
                raise ValueError(f"scaled_t noise needs factor > 0, got {self.factor!r}")
        else:
            raise ValueError(f"unknown noise kind {self.kind!r}")

    @classmethod
    def gaussian(cls, sigma: float) -> "NoiseFamily":
        return cls("gaussian", sigma=float(sigma))

    @classmethod
    def cauchy(cls, scale: float) -> "NoiseFamily":
        return cls("cauchy", scale=float(scale))

    @classmethod
    def scaled_t(cls, df: float, factor: float) -> "NoiseFamily":
        return cls("scaled_t", df=float(df), factor=float(factor))

    def label(self) -> str:
        if self.kind == "gaussian":
            return f"gaussian({self.sigma:g})"
        if self.kind == "cauchy":
            return f"cauchy({self.scale:g})"
        return f"scaled_t({self.df:g},{self.factor:g})"


def quantile_shift(noise: NoiseFamily, tau) -> float:
    """tau-quantile of the raw noise law (the centering constant)."""
    t = tau_value(tau)
    if noise.kind == "gaussian":
        return noise.sigma * float(stats.norm.ppf(t))
    if noise.kind == "cauchy":
        return noise.scale * math.tan(math.pi * (t - 0.5))
    return noise.factor * float(stats.t.ppf(t, noise.df))


def gen_noise(noise: NoiseFamily, tau, n: int, rng: np.random.Generator) -> np.ndarray:
    """n draws from the noise law, shifted so the population tau-quantile is 0."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n!r}")
    if noise.kind == "gaussian":
        raw = rng.normal(0.0, noise.sigma, size=n)
    elif noise.kind == "cauchy":
        raw = noise.scale * rng.standard_cauchy(size=n)
    else:
        raw = noise.factor * rng.standard_t(noise.df, size=n)
    return raw - quantile_shift(noise, tau)


def gen_theta_star(d: int, s_star: int, rng: np.random.Generator) -> np.ndarray:
    """Sparse coefficient vector: s_star standard-normal entries at uniform positions."""
    if not 1 <= s_star <= d:
        raise ValueError(f"s_star must satisfy 1 <= s_star <= d, got {s_star!r}")
    theta = np.zeros(d)
    support = rng.choice(d, size=s_star, replace=False)
    theta[support] = rng.standard_normal(s_star)
    return theta


@dataclass(frozen=True)
class SimulationSpec:
    n: int
    d: int
    s_star: int
    noise: NoiseFamily
    tau: float = 0.5
    replications: int = 100
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "tau", tau_value(self.tau))
        if self.n < 1 or self.d < 1:
            raise ValueError(f"n and d must be positive, got n={self.n}, d={self.d}")
        if not 1 <= self.s_star <= self.d:
            raise ValueError(
                f"s_star must satisfy 1 <= s_star <= d, got {self.s_star!r}"
            )
        if self.replications < 1:
            raise ValueError(f"replications must be >= 1, got {self.replications!r}")


def _draw_dataset(spec: SimulationSpec, theta_star, rng) -> Dataset:
    x = rng.standard_normal((spec.n, spec.d))
    u = gen_noise(spec.noise, spec.tau, spec.n, rng)
    return Dataset(x, x @ theta_star + u)


def gen_dataset(spec: SimulationSpec, rep_index: int):
    """Training set and theta_star for one replication (index-derived stream)."""
    rng = derive_rng(spec.master_seed, "rep", rep_index)
    theta_star = gen_theta_star(spec.d, spec.s_star, rng)
    return _draw_dataset(spec, theta_star, rng), theta_star


def gen_replication(spec: SimulationSpec, rep_index: int):
    """(train, eval, theta_star): eval is a fresh set of size n, same theta_star."""
    rng = derive_rng(spec.master_seed, "rep", rep_index)
    theta_star = gen_theta_star(spec.d, spec.s_star, rng)
    train = _draw_dataset(spec, theta_star, rng)
    holdout = _draw_dataset(spec, theta_star, rng)
    return train, holdout, theta_star


def mpe(data: Dataset, theta, tau) -> float:
    """Mean pinball prediction error; identical to the empirical risk."""
    return empirical_risk(data, theta, tau)


def mse(theta_hat, theta_star, d: int | None = None) -> float:
    """Squared distance between the vectors divided by their length."""
    a = np.asarray(theta_hat, dtype=float).ravel()
    b = np.asarray(theta_star, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    if d is not None and d != a.shape[0]:
        raise ValueError(f"d={d} does not match vector length {a.shape[0]}")
    return float(np.sum((a - b) ** 2)) / a.shape[0]


@dataclass(frozen=True)
class FitMethod:
    """A named fit procedure (data, tau, init, seed) -> theta.

    wants_init marks sampler methods that start from the baseline CV fit;
    is_baseline marks the CV lasso itself, which reuses the shared fit.
    """

    name: str
    fit: object
    wants_init: bool = False
    is_baseline: bool = False


def lasso_method(folds: int = 5, grid_size: int = 30, max_iter: int = 500, tol: float = 1e-8) -> FitMethod:
    def fit(data, tau, init, seed):
        grid = default_penalty_grid(data, tau, size=grid_size)
        _, theta = cv_quantile_lasso(
            data, tau, grid, folds=folds, seed=seed, max_iter=max_iter, tol=tol
        )
        return theta

    return FitMethod("lasso", fit, is_baseline=True)


def _sampler_method(name, kind, lam, varsigma, lambda_scale, n_iter, burn_in, thin, eta, c1):
    if lambda_scale not in ("per_observation", "averaged"):
        raise ConfigError(
            f"lambda_scale must be 'per_observation' or 'averaged', got {lambda_scale!r}"
        )

    def fit(data, tau, init, seed):
        lam_eff = lam * data.n if lambda_scale == "per_observation" else lam
        cfg = GibbsConfig(tau=tau, lam=lam_eff, prior=PriorConfig(varsigma, c1))
        target = PosteriorTarget(data, cfg)
        step = eta if eta is not None else target.default_eta()
        scfg = SamplerConfig(
            eta=step, n_iter=n_iter, burn_in=burn_in, thin=thin, seed=seed,
            adapt=(kind == "mala"),
        )
        start = np.zeros(data.d) if init is None else init
        if kind == "mala":
            chain = mala_run(target.log_density, target.grad, data.d, start, scfg)
        else:
            support = None if math.isinf(c1) else target.in_support
            chain = lmc_run(target.grad, data.d, start, scfg, in_support=support)
        return posterior_mean(chain)

    return FitMethod(name, fit, wants_init=True)


def lmc_method(
    lam: float = 1.0,
    varsigma: float = 1.0,
    lambda_scale: str = "per_observation",
    n_iter: int = 30000,
    burn_in: int = 500,
    thin: int = 1,
    eta: float | None = None,
    c1: float = math.inf,
) -> FitMethod:
    """Posterior-mean estimator from an LMC chain, lasso-initialized.

    With the default lambda_scale the passed lam weights each observation's
    loss (effective inverse temperature lam * n on the averaged risk),
    matching the summed-gradient convention of the simulation protocol;
    'averaged' passes lam through unchanged.
    """
    return _sampler_method("lmc", "lmc", lam, varsigma, lambda_scale, n_iter, burn_in, thin, eta, c1)


def mala_method(
    lam: float = 1.0,
    varsigma: float = 1.0,
    lambda_scale: str = "per_observation",
    n_iter: int = 30000,
    burn_in: int = 500,
    thin: int = 1,
    eta: float | None = None,
    c1: float = math.inf,
) -> FitMethod:
    return _sampler_method("mala", "mala", lam, varsigma, lambda_scale, n_iter, burn_in, thin, eta, c1)


def oracle_method() -> FitMethod:
    """Returns theta_star itself (wired inside run_replications); for harness tests."""
    return FitMethod("oracle", None)


@dataclass(frozen=True)
class EvalProtocol:
    """How replications are scored: held-out mpe always, in-sample behind a flag."""

    in_sample: bool = False
    cv_folds: int = 5
    cv_grid_size: int = 30
    cv_max_iter: int = 500
    cv_tol: float = 1e-8


@dataclass(frozen=True)
class ResultRow:
    method: str
    noise: str
    tau: float
    metric: str
    mean: float
    sd: float
    reps: int
    failures: int


@dataclass
class ResultTable:
    rows: list

    CSV_COLUMNS = ("method", "noise", "tau", "metric", "mean", "sd", "reps", "failures")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.CSV_COLUMNS)
            for r in self.rows:
                writer.writerow(
                    [r.method, r.noise, repr(r.tau), r.metric, repr(r.mean), repr(r.sd), r.reps, r.failures]
                )

    def to_text(self) -> str:
        """Aligned table: one row per (noise, tau, metric), one column per method."""
        methods = []
        for r in self.rows:
            if r.method not in methods:
                methods.append(r.method)
        cells = {}
        keys = []
        for r in self.rows:
            key = (r.noise, r.tau, r.metric)
            if key not in cells:
                cells[key] = {}
                keys.append(key)
            cells[key][r.method] = f"{r.mean:.4f} ({r.sd:.4f})"
        widths = [
            max(len("noise"), *(len(k[0]) for k in keys)) if keys else 5,
            5,
            max(len("metric"), *(len(k[2]) for k in keys)) if keys else 6,
        ]
        header = (
            f"{'noise':<{widths[0]}}  {'tau':<{widths[1]}}  {'metric':<{widths[2]}}"
        )
        colw = max([len(m) for m in methods] + [17])
        for m in methods:
            header += f"  {m:>{colw}}"
        lines = [header, "-" * len(header)]
        for noise, tau, metric in keys:
            line = f"{noise:<{widths[0]}}  {tau:<{widths[1]}g}  {metric:<{widths[2]}}"
            for m in methods:
                line += f"  {cells[(noise, tau, metric)].get(m, ''):>{colw}}"
            lines.append(line)
        return "\n".join(lines) + "\n"

    def lookup(self, method: str, metric: str) -> ResultRow:
        for r in self.rows:
            if r.method == method and r.metric == metric:
                return r
        raise KeyError(f"no row for method={method!r}, metric={metric!r}")


def _one_replication(spec, methods, eval_protocol, rep_index):
    train, holdout, theta_star = gen_replication(spec, rep_index)
    baseline_theta = None
    if any(m.wants_init or m.is_baseline for m in methods):
        grid = default_penalty_grid(train, spec.tau, size=eval_protocol.cv_grid_size)
        _, baseline_theta = cv_quantile_lasso(
            train,
            spec.tau,
            grid,
            folds=eval_protocol.cv_folds,
            seed=derive_seed(spec.master_seed, "rep", rep_index, "baseline"),
            max_iter=eval_protocol.cv_max_iter,
            tol=eval_protocol.cv_tol,
        )
    out = {}
    for m in methods:
        try:
            if m.name == "oracle":
                theta = theta_star
            elif m.is_baseline:
                theta = baseline_theta
            else:
                theta = m.fit(
                    train,
                    spec.tau,
                    baseline_theta if m.wants_init else None,
                    derive_seed(spec.master_seed, "rep", rep_index, "method", m.name),
                )
        except DivergenceError:
            out[m.name] = None
            continue
        metrics = {
            "mpe": mpe(holdout, theta, spec.tau),
            "mse": mse(theta, theta_star),
        }
        if eval_protocol.in_sample:
            metrics["mpe_insample"] = mpe(train, theta, spec.tau)
        out[m.name] = metrics
    return out


def run_replications(
    spec: SimulationSpec,
    methods,
    eval_protocol: EvalProtocol = EvalProtocol(),
    threads: int = 1,
) -> ResultTable:
    """Run the replication protocol and aggregate mean/sd per (method, metric).

    Sampler methods are initialized at the shared baseline CV fit. A
    replication where a method diverges is dropped from that method's
    aggregate and counted in the failures column. Deterministic for a given
    master seed at any thread count.
    """
    methods = list(methods)
    if not methods:
        raise ConfigError("need at least one method")
    names = [m.name for m in methods]
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate method names: {names}")

    indices = range(spec.replications)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_rep = list(
                pool.map(lambda i: _one_replication(spec, methods, eval_protocol, i), indices)
            )
    else:
        per_rep = [_one_replication(spec, methods, eval_protocol, i) for i in indices]

    metric_names = ["mpe", "mse"] + (["mpe_insample"] if eval_protocol.in_sample else [])
    rows = []
    for m in methods:
        results = [r[m.name] for r in per_rep]
        ok = [r for r in results if r is not None]
        failures = len(results) - len(ok)
        for metric in metric_names:
            values = np.array([r[metric] for r in ok])
            mean = float(np.mean(values)) if values.size else math.nan
            sd = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
            rows.append(
                ResultRow(
                    m.name, spec.noise.label(), spec.tau, metric, mean, sd, len(ok), failures
                )
            )
    return ResultTable(rows)


# the four benchmark regimes shipped as named presets: (n, d, s_star)
PRESETS = {
    "table1": (50, 100, 5),
    "table2": (50, 100, 25),
    "table3": (200, 400, 5),
    "table4": (200, 400, 100),
}


def preset_spec(
    name: str,
    noise: NoiseFamily | None = None,
    tau: float = 0.5,
    replications: int = 100,
    master_seed: int = 0,
) -> SimulationSpec:
    if name not in PRESETS:
        raise ConfigError(
            f"unknown preset {name!r}; valid presets: {', '.join(sorted(PRESETS))}"
        )
    n, d, s_star = PRESETS[name]
    if noise is None:
        noise = NoiseFamily.gaussian(3.0)
    return SimulationSpec(n, d, s_star, noise, tau, replications, master_seed)


def concat_tables(tables) -> ResultTable:
    rows = []
    for t in tables:
        rows.extend(t.rows)
    return ResultTable(rows)


def spec_with(spec: SimulationSpec, **changes) -> SimulationSpec:
    return replace(spec, **changes)
