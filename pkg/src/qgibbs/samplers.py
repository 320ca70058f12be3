"""Constant-step unadjusted Langevin (LMC) and Metropolis-adjusted Langevin (MALA).

Both chains ascend a caller-supplied log-density gradient:

    theta' = theta + eta * grad(theta) + sqrt(2 eta) * W,   W ~ N(0, I)

MALA corrects the proposal with a Metropolis-Hastings step and can adapt eta
during burn-in; LMC never adapts. Chains are deterministic given the seed.
A non-finite iterate aborts the run with a DivergenceError rather than being
clipped.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import DivergenceError

# burn-in adaptation multiplies eta by exp(+delta) on accept and by
# exp(-delta * target / (1 - target)) on reject, equilibrating the
# acceptance rate at the target
_ADAPT_DELTA = 0.02


@dataclass(frozen=True)
class SamplerConfig:
    eta: float
    n_iter: int = 30000
    burn_in: int = 500
    thin: int = 1
    seed: int = 0
    adapt: bool = True
    target_accept: float = 0.5

    def __post_init__(self):
        if not (math.isfinite(self.eta) and self.eta > 0.0):
            raise ValueError(f"eta must be positive, got {self.eta!r}")
        if self.n_iter < 1:
            raise ValueError(f"n_iter must be positive, got {self.n_iter!r}")
        if not 0 <= self.burn_in < self.n_iter:
            raise ValueError(
                f"burn_in must satisfy 0 <= burn_in < n_iter, got {self.burn_in!r}"
            )
        if self.thin < 1:
            raise ValueError(f"thin must be >= 1, got {self.thin!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed!r}")
        if not 0.0 < self.target_accept < 1.0:
            raise ValueError(
                f"target_accept must lie in (0, 1), got {self.target_accept!r}"
            )

    @property
    def n_kept(self) -> int:
        return (self.n_iter - self.burn_in) // self.thin


@dataclass(frozen=True)
class Chain:
    """Kept draws (rows) plus sampler diagnostics.

    accept_rate is the post-burn-in MALA acceptance rate; 1.0 for LMC by
    convention. final_eta is the step size after any adaptation froze.
    """

    draws: np.ndarray
    accept_rate: float
    final_eta: float
    seed: int
    burn_in: int = 0
    thin: int = 1

    def __len__(self) -> int:
        return self.draws.shape[0]

    def kept_iterations(self) -> np.ndarray:
        """Absolute iteration index of each kept draw."""
        k = self.draws.shape[0]
        return self.burn_in + self.thin * np.arange(1, k + 1)


def _check_init(init, d: int) -> np.ndarray:
    init = np.asarray(init, dtype=float).ravel()
    if init.shape[0] != d:
        raise ValueError(f"init has length {init.shape[0]}, expected {d}")
    if not np.all(np.isfinite(init)):
        raise ValueError("init contains non-finite entries")
    return init.copy()


def lmc_step(theta: np.ndarray, grad_value: np.ndarray, eta: float, noise: np.ndarray) -> np.ndarray:
    """One Langevin update; exposed so tests can drive it with fixed noise."""
    return theta + eta * grad_value + math.sqrt(2.0 * eta) * noise


def lmc_run(grad, d: int, init, cfg: SamplerConfig, in_support=None) -> Chain:
    """Unadjusted Langevin chain with constant step size (adapt is ignored).

    For targets with restricted support, pass in_support(theta) -> bool; a
    move landing outside is rejected and the chain stays in place (matching
    the hard-cutoff treatment of truncated priors).
    """
    theta = _check_init(init, d)
    if in_support is not None and not in_support(theta):
        raise ValueError("init lies outside the support of the target density")
    rng = np.random.default_rng(cfg.seed)
    draws = np.empty((cfg.n_kept, d))
    k = 0
    for s in range(1, cfg.n_iter + 1):
        prop = lmc_step(theta, grad(theta), cfg.eta, rng.standard_normal(d))
        # sum is finite iff every coordinate is (modulo overflow, which is
        # divergence too)
        if not math.isfinite(float(np.sum(prop))):
            raise DivergenceError(
                f"LMC produced a non-finite state at iteration {s}; reduce eta"
            )
        if in_support is None or in_support(prop):
            theta = prop
        if s > cfg.burn_in and (s - cfg.burn_in) % cfg.thin == 0:
            draws[k] = theta
            k += 1
    return Chain(draws[:k], 1.0, cfg.eta, cfg.seed, cfg.burn_in, cfg.thin)


def mala_accept_logprob(logp_cur, logp_prop, logq_fwd, logq_rev) -> float:
    """log of the MH acceptance probability, capped at 0."""
    return min(0.0, logp_prop - logp_cur + logq_rev - logq_fwd)


def mala_run(logp, grad, d: int, init, cfg: SamplerConfig) -> Chain:
    """Metropolis-adjusted Langevin chain.

    Proposals are Normal(theta + eta * grad(theta), 2 eta I); rejected
    proposals repeat the current state. With cfg.adapt the step size is
    multiplied by exp(+-delta) during burn-in to steer the acceptance rate
    toward cfg.target_accept, then frozen.
    """
    theta = _check_init(init, d)
    rng = np.random.default_rng(cfg.seed)
    lp = float(logp(theta))
    if not math.isfinite(lp):
        raise ValueError("init lies outside the support of the target density")
    g = np.asarray(grad(theta), dtype=float)

    eta = cfg.eta
    up = math.exp(_ADAPT_DELTA)
    down = math.exp(-_ADAPT_DELTA * cfg.target_accept / (1.0 - cfg.target_accept))

    draws = np.empty((cfg.n_kept, d))
    k = 0
    accepted_post = 0
    for s in range(1, cfg.n_iter + 1):
        noise = rng.standard_normal(d)
        log_u = math.log(rng.uniform())
        prop = theta + eta * g + math.sqrt(2.0 * eta) * noise
        lp_prop = float(logp(prop))
        accept = False
        if math.isfinite(lp_prop):
            g_prop = np.asarray(grad(prop), dtype=float)
            # log q(prop | theta) = -|prop - theta - eta g|^2 / (4 eta) up to
            # a constant; forward term reduces to -|noise|^2 / 2
            logq_fwd = -0.5 * float(noise @ noise)
            back = theta - prop - eta * g_prop
            logq_rev = -float(back @ back) / (4.0 * eta)
            accept = log_u < mala_accept_logprob(lp, lp_prop, logq_fwd, logq_rev)
        if accept:
            theta, lp, g = prop, lp_prop, g_prop
            if not math.isfinite(float(np.sum(theta))):
                raise DivergenceError(
                    f"MALA accepted a non-finite state at iteration {s}"
                )
        if cfg.adapt and s <= cfg.burn_in:
            eta = eta * up if accept else eta * down
        if s > cfg.burn_in:
            accepted_post += accept
            if (s - cfg.burn_in) % cfg.thin == 0:
                draws[k] = theta
                k += 1
    rate = accepted_post / (cfg.n_iter - cfg.burn_in)
    return Chain(draws[:k], rate, eta, cfg.seed, cfg.burn_in, cfg.thin)


def posterior_mean(chain: Chain) -> np.ndarray:
    """Coordinatewise arithmetic mean of the kept draws."""
    if len(chain) == 0:
        raise ValueError("chain has no kept draws")
    return chain.draws.mean(axis=0)


@dataclass(frozen=True)
class ChainSummary:
    mean: np.ndarray
    sd: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float
    accept_rate: float
    final_eta: float


def chain_summary(chain: Chain, level: float = 0.9) -> ChainSummary:
    """Per-coordinate mean, sd, and equal-tailed credible interval."""
    if len(chain) == 0:
        raise ValueError("chain has no kept draws")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level!r}")
    lo, hi = np.quantile(chain.draws, [(1.0 - level) / 2.0, (1.0 + level) / 2.0], axis=0)
    return ChainSummary(
        mean=chain.draws.mean(axis=0),
        sd=chain.draws.std(axis=0),
        lower=lo,
        upper=hi,
        level=level,
        accept_rate=chain.accept_rate,
        final_eta=chain.final_eta,
    )


def chain_to_csv(chain: Chain, path) -> None:
    """Dump kept draws, one CSV row per draw: iter, theta_1..theta_d."""
    d = chain.draws.shape[1]
    iters = chain.kept_iterations()
    with open(path, "w", newline="") as fh:
        fh.write("iter," + ",".join(f"theta_{j + 1}" for j in range(d)) + "\n")
        for it, row in zip(iters, chain.draws):
            fh.write(str(int(it)) + "," + ",".join(repr(float(v)) for v in row) + "\n")
