"""Command-line surface: simulate | fit | predict | bounds | scaling | replay.

Every run resolves its configuration (defaults < config file < explicit
flags), derives all randomness from one --seed, and writes a manifest
alongside its outputs; `replay <manifest>` regenerates the outputs
bit-identically. Exit codes: 0 success, 2 configuration error, 3 runtime
(divergence) error, 4 I/O or data error.
"""

import argparse
import datetime
import json
import os
import sys

import numpy as np

from . import __version__, bounds as bounds_mod, dataio, simulate as sim
from .baseline import cv_quantile_lasso, default_penalty_grid
from .errors import ConfigError, DataError, DivergenceError
from .loss import Dataset, empirical_risk, pinball_values
from .posterior import GibbsConfig, PosteriorTarget
from .prior import PriorConfig
from .samplers import SamplerConfig, chain_summary, chain_to_csv, lmc_run, mala_run, posterior_mean
from .seeding import derive_seed

EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_IO = 4

SCALING_PRESETS = {
    # n_grid, reps, n_iter, burn_in, thin
    "fastcheck": ([50, 100, 200], 3, 2000, 200, 5),
    "full": ([100, 200, 400, 800], 10, 30000, 500, 10),
}


def _write_manifest(outdir, subcommand, config):
    manifest = {
        "subcommand": subcommand,
        "config": config,
        "seed": config.get("seed"),
        "artifact_version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    with open(os.path.join(outdir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _merge_config(defaults, file_config, cli_values):
    """defaults < config file < explicit CLI flags; unknown file keys are errors."""
    resolved = dict(defaults)
    for key, raw in file_config.items():
        if key not in defaults:
            raise ConfigError(f"unknown configuration key {key!r}")
        default = defaults[key]
        if isinstance(default, bool):
            resolved[key] = raw.strip().lower() in ("1", "true", "yes", "on")
        elif isinstance(default, int) and not isinstance(default, bool):
            resolved[key] = int(raw)
        elif isinstance(default, float):
            resolved[key] = float(raw)
        else:
            resolved[key] = raw
    for key, value in cli_values.items():
        if value is not None:
            resolved[key] = value
    return resolved


def _noise_from_config(config):
    kind = config["noise"]
    if kind == "gaussian":
        return sim.NoiseFamily.gaussian(config["sigma"])
    if kind == "cauchy":
        return sim.NoiseFamily.cauchy(config["scale"])
    if kind == "scaled_t":
        return sim.NoiseFamily.scaled_t(config["df"], config["factor"])
    raise ConfigError(
        f"unknown noise {kind!r}; valid: gaussian, cauchy, scaled_t, all"
    )


def _sampler_kwargs(config):
    return dict(
        lam=config["lam"],
        varsigma=config["varsigma"],
        lambda_scale=config["lambda_scale"],
        n_iter=config["n_iter"],
        burn_in=config["burn_in"],
        thin=config["thin"],
        eta=config["eta"] if config["eta"] > 0 else None,
    )


def _methods_from_config(config):
    methods = []
    for name in config["methods"].split(","):
        name = name.strip()
        if name == "lmc":
            methods.append(sim.lmc_method(**_sampler_kwargs(config)))
        elif name == "mala":
            methods.append(sim.mala_method(**_sampler_kwargs(config)))
        elif name == "lasso":
            methods.append(sim.lasso_method(grid_size=config["grid_size"], folds=config["folds"]))
        else:
            raise ConfigError(f"unknown method {name!r}; valid: lmc, mala, lasso")
    return methods


SIMULATE_DEFAULTS = {
    "preset": "",
    "n": 0,
    "d": 0,
    "s": 0,
    "noise": "gaussian",
    "sigma": 3.0,
    "scale": 1.0,
    "df": 3.0,
    "factor": 2.0,
    "tau": "0.5",
    "reps": 100,
    "seed": 0,
    "methods": "lmc,mala,lasso",
    "lam": 1.0,
    "varsigma": 1.0,
    "lambda_scale": "per_observation",
    "eta": 0.0,
    "n_iter": 30000,
    "burn_in": 500,
    "thin": 1,
    "folds": 5,
    "grid_size": 30,
    "in_sample": False,
    "threads": 1,
    "out": "",
}


def run_simulate(config):
    outdir = config["out"]
    if not outdir:
        raise ConfigError("simulate requires --out")
    if config["preset"]:
        if config["preset"] not in sim.PRESETS:
            raise ConfigError(
                f"unknown preset {config['preset']!r}; valid presets: "
                + ", ".join(sorted(sim.PRESETS))
            )
        n, d, s = sim.PRESETS[config["preset"]]
        config["n"], config["d"], config["s"] = n, d, s
    if config["n"] < 1 or config["d"] < 1 or config["s"] < 1:
        raise ConfigError("need --preset or all of --n, --d, --s")

    noises = (
        [sim.NoiseFamily.gaussian(config["sigma"]),
         sim.NoiseFamily.cauchy(config["scale"]),
         sim.NoiseFamily.scaled_t(config["df"], config["factor"])]
        if config["noise"] == "all"
        else [_noise_from_config(config)]
    )
    taus = [0.1, 0.5, 0.9] if config["tau"] == "all" else [float(config["tau"])]

    methods = _methods_from_config(config)
    eval_protocol = sim.EvalProtocol(
        in_sample=config["in_sample"],
        cv_folds=config["folds"],
        cv_grid_size=config["grid_size"],
    )
    tables = []
    for noise in noises:
        for tau in taus:
            spec = sim.SimulationSpec(
                config["n"], config["d"], config["s"], noise, tau,
                config["reps"], config["seed"],
            )
            tables.append(
                sim.run_replications(spec, methods, eval_protocol, threads=config["threads"])
            )
    table = sim.concat_tables(tables)

    os.makedirs(outdir, exist_ok=True)
    table.to_csv(os.path.join(outdir, "results.csv"))
    with open(os.path.join(outdir, "results.txt"), "w") as fh:
        fh.write(table.to_text())
    _write_manifest(outdir, "simulate", config)
    print(table.to_text(), end="")
    print(f"wrote {outdir}/results.csv")


FIT_DEFAULTS = {
    "data": "",
    "response": "y",
    "method": "lasso",
    "tau": 0.5,
    "standardize": True,
    "log_response": False,
    "top_corr": 0,
    "lam": 1.0,
    "varsigma": 1.0,
    "lambda_scale": "per_observation",
    "eta": 0.0,
    "n_iter": 30000,
    "burn_in": 500,
    "thin": 1,
    "penalty": -1.0,
    "folds": 5,
    "grid_size": 30,
    "seed": 0,
    "init": "",
    "dump_chain": False,
    "threads": 1,
    "out": "",
}


def _load_theta(path):
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if lines and lines[0] == "theta":
        lines = lines[1:]
    return np.array([float(v) for v in lines])


def _write_theta(path, theta):
    with open(path, "w") as fh:
        fh.write("theta\n")
        for v in theta:
            fh.write(repr(float(v)) + "\n")


def _predictions_and_mpe(theta, params, x_raw, y_raw, tau):
    x_std = params.transform_x(x_raw)
    predictions = params.inverse_y(x_std @ theta)
    result_mpe = None
    if y_raw is not None:
        result_mpe = float(np.mean(pinball_values(y_raw - predictions, tau)))
    return predictions, result_mpe


def run_fit(config):
    outdir = config["out"]
    if not outdir:
        raise ConfigError("fit requires --out")
    if not config["data"]:
        raise ConfigError("fit requires --data")
    if config["method"] not in ("lmc", "mala", "lasso"):
        raise ConfigError(f"unknown method {config['method']!r}; valid: lmc, mala, lasso")
    tau = config["tau"]
    if not 0.0 < tau < 1.0:
        raise ConfigError(f"tau must lie in (0, 1), got {tau}")

    raw = dataio.load_csv(config["data"], config["response"])
    columns = None
    if config["top_corr"] > 0:
        columns = dataio.top_correlated_columns(raw, config["top_corr"])
    if config["standardize"]:
        params = dataio.fit_standardization(raw, config["log_response"], columns)
    else:
        ncols = len(columns) if columns is not None else raw.d
        params = dataio.StandardizationParams(
            np.zeros(ncols), np.ones(ncols), 0.0, 1.0, config["log_response"], columns
        )
    data = Dataset(params.transform_x(raw.x), params.transform_y(raw.y))

    summary = {"method": config["method"], "tau": tau, "n": data.n, "d": data.d}
    chain = None
    if config["method"] == "lasso" and config["penalty"] >= 0.0:
        from .baseline import LassoConfig, default_gamma, fit_quantile_lasso

        theta = fit_quantile_lasso(
            data, LassoConfig(tau, config["penalty"], gamma=default_gamma(data))
        )
        summary["penalty"] = config["penalty"]
        summary["init"] = "zeros"
    else:
        grid = default_penalty_grid(data, tau, size=config["grid_size"])
        best_penalty, lasso_theta = cv_quantile_lasso(
            data, tau, grid, folds=config["folds"],
            seed=derive_seed(config["seed"], "cv"),
        )
        if config["method"] == "lasso":
            theta = lasso_theta
            summary["penalty"] = best_penalty
            summary["init"] = "zeros"
        else:
            if config["init"]:
                init = _load_theta(config["init"])
                summary["init"] = config["init"]
            else:
                init = lasso_theta
                summary["init"] = "cv_lasso"
                summary["init_penalty"] = best_penalty
            lam_eff = (
                config["lam"] * data.n
                if config["lambda_scale"] == "per_observation"
                else config["lam"]
            )
            target = PosteriorTarget(
                data, GibbsConfig(tau=tau, lam=lam_eff, prior=PriorConfig(config["varsigma"]))
            )
            eta = config["eta"] if config["eta"] > 0 else target.default_eta()
            scfg = SamplerConfig(
                eta=eta, n_iter=config["n_iter"], burn_in=config["burn_in"],
                thin=config["thin"], seed=derive_seed(config["seed"], "chain"),
                adapt=(config["method"] == "mala"),
            )
            if config["method"] == "mala":
                chain = mala_run(target.log_density, target.grad, data.d, init, scfg)
            else:
                chain = lmc_run(target.grad, data.d, init, scfg)
            theta = posterior_mean(chain)
            summary["eta"] = eta
            summary["lam_effective"] = lam_eff
            summary["accept_rate"] = chain.accept_rate
            summary["final_eta"] = chain.final_eta

    _, train_mpe = _predictions_and_mpe(theta, params, raw.x, raw.y, tau)
    summary["train_mpe"] = train_mpe

    os.makedirs(outdir, exist_ok=True)
    _write_theta(os.path.join(outdir, "theta.csv"), theta)
    params.to_json(os.path.join(outdir, "params.json"))
    with open(os.path.join(outdir, "fit_summary.json"), "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
        fh.write("\n")
    if chain is not None:
        cs = chain_summary(chain)
        with open(os.path.join(outdir, "chain_summary.csv"), "w") as fh:
            fh.write("coord,mean,sd,lower90,upper90\n")
            for j in range(len(cs.mean)):
                fh.write(
                    f"{j + 1},{float(cs.mean[j])!r},{float(cs.sd[j])!r},"
                    f"{float(cs.lower[j])!r},{float(cs.upper[j])!r}\n"
                )
        if config["dump_chain"]:
            chain_to_csv(chain, os.path.join(outdir, "chain.csv"))
    _write_manifest(outdir, "fit", config)
    print(f"fit {config['method']} on {config['data']}: train mpe {train_mpe:.6f}")
    print(f"wrote {outdir}/theta.csv")


PREDICT_DEFAULTS = {
    "model": "",
    "data": "",
    "response": "",
    "tau": -1.0,
    "seed": 0,
    "threads": 1,
    "out": "",
}


def run_predict(config):
    outdir = config["out"]
    if not outdir or not config["model"] or not config["data"]:
        raise ConfigError("predict requires --model, --data, and --out")
    with open(os.path.join(config["model"], "manifest.json")) as fh:
        model_manifest = json.load(fh)
    model_config = model_manifest["config"]
    tau = config["tau"] if config["tau"] > 0 else model_config["tau"]
    if not 0.0 < tau < 1.0:
        raise ConfigError(f"tau must lie in (0, 1), got {tau}")
    response = config["response"] or model_config["response"]

    theta = _load_theta(os.path.join(config["model"], "theta.csv"))
    params = dataio.StandardizationParams.from_json(
        os.path.join(config["model"], "params.json")
    )

    try:
        raw = dataio.load_csv(config["data"], response)
        x_raw, y_raw = raw.x, raw.y
    except DataError:
        # response column may be absent: predictions only, no mpe
        import csv as _csv

        with open(config["data"], newline="") as fh:
            reader = _csv.reader(fh)
            header = next(reader)
            if response in header:
                raise
            rows = [[float(c) for c in row] for row in reader]
        x_raw, y_raw = np.array(rows), None

    if params.columns is None:
        if x_raw.shape[1] != theta.size:
            raise ConfigError(
                f"data has {x_raw.shape[1]} covariates but the model expects {theta.size}"
            )
    elif x_raw.shape[1] <= max(params.columns):
        raise ConfigError(
            f"data has {x_raw.shape[1]} covariates but the model selects column "
            f"{max(params.columns)}"
        )
    predictions, pred_mpe = _predictions_and_mpe(theta, params, x_raw, y_raw, tau)

    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "predictions.csv"), "w") as fh:
        fh.write("prediction\n")
        for v in predictions:
            fh.write(repr(float(v)) + "\n")
    if pred_mpe is not None:
        with open(os.path.join(outdir, "mpe.txt"), "w") as fh:
            fh.write(repr(pred_mpe) + "\n")
        print(f"mpe {pred_mpe:.6f}")
    _write_manifest(outdir, "predict", config)
    print(f"wrote {outdir}/predictions.csv")


BOUNDS_DEFAULTS = {
    "n": 100,
    "d": 400,
    "s": 5,
    "epsilon": 0.05,
    "bound_k": 1.0,
    "bound_c": 1.0,
    "c_x": 1.0,
    "kappa": 1.0,
    "regime": "fast",
    "seed": 0,
    "threads": 1,
    "out": "",
}


def run_bounds(config):
    if not 0.0 < config["epsilon"] < 1.0:
        raise ConfigError(f"epsilon must lie in (0, 1), got {config['epsilon']}")
    query = bounds_mod.RateQuery(config["n"], config["d"], config["s"], config["epsilon"])
    constants = bounds_mod.BoundConstants(
        config["bound_k"], config["bound_c"], config["c_x"], config["kappa"]
    )
    xi = bounds_mod.slow_rate_xi(query)
    delta = bounds_mod.fast_rate_delta(query)
    lam_slow, varsigma = bounds_mod.theoretical_tuning(query, constants, "slow")
    lam_fast, _ = bounds_mod.theoretical_tuning(query, constants, "fast")
    dev_slow = bounds_mod.high_prob_terms(query, "slow")
    dev_fast = bounds_mod.high_prob_terms(query, "fast")

    print(f"xi = {xi:.6f}")
    print(f"delta = {delta:.6f}")
    print(f"lambda_slow = {lam_slow:.6f}")
    print(f"lambda_fast = {lam_fast:.6f}")
    print(f"varsigma = {varsigma:.6g}")
    print(f"deviation_slow = {dev_slow:.6f}")
    print(f"deviation_fast = {dev_fast:.6f}")
    if config["out"]:
        os.makedirs(config["out"], exist_ok=True)
        with open(os.path.join(config["out"], "rates.csv"), "w") as fh:
            fh.write("quantity,value\n")
            for name, value in [
                ("xi", xi), ("delta", delta), ("lambda_slow", lam_slow),
                ("lambda_fast", lam_fast), ("varsigma", varsigma),
                ("deviation_slow", dev_slow), ("deviation_fast", dev_fast),
            ]:
                fh.write(f"{name},{value!r}\n")
        _write_manifest(config["out"], "bounds", config)


SCALING_DEFAULTS = {
    "preset": "",
    "n_grid": "100,200,400,800",
    "reps": 10,
    "s": 5,
    "noise": "gaussian",
    "sigma": 3.0,
    "scale": 1.0,
    "df": 3.0,
    "factor": 2.0,
    "tau": 0.5,
    "d_mode": "2n",
    "d": 0,
    "lam": 1.0,
    "varsigma": 1.0,
    "lambda_scale": "per_observation",
    "eta": 0.0,
    "n_iter": 30000,
    "burn_in": 500,
    "thin": 10,
    "folds": 5,
    "grid_size": 30,
    "seed": 0,
    "threads": 1,
    "out": "",
}


def run_scaling(config):
    outdir = config["out"]
    if not outdir:
        raise ConfigError("scaling requires --out")
    if config["preset"]:
        if config["preset"] not in SCALING_PRESETS:
            raise ConfigError(
                f"unknown preset {config['preset']!r}; valid presets: "
                + ", ".join(sorted(SCALING_PRESETS))
            )
        n_grid, reps, n_iter, burn_in, thin = SCALING_PRESETS[config["preset"]]
        config["n_grid"] = ",".join(str(v) for v in n_grid)
        config["reps"] = reps
        config["n_iter"] = n_iter
        config["burn_in"] = burn_in
        config["thin"] = thin
    n_grid = [int(v) for v in str(config["n_grid"]).split(",") if v.strip()]
    noise = _noise_from_config(config)
    tau = float(config["tau"])
    if not 0.0 < tau < 1.0:
        raise ConfigError(f"tau must lie in (0, 1), got {tau}")

    template = sim.SimulationSpec(
        n=max(n_grid), d=config["d"] if config["d_mode"] == "fixed" else 2 * max(n_grid),
        s_star=config["s"], noise=noise, tau=tau,
        replications=config["reps"], master_seed=config["seed"],
    )
    method = sim.lmc_method(**_sampler_kwargs(config))
    eval_protocol = sim.EvalProtocol(cv_folds=config["folds"], cv_grid_size=config["grid_size"])
    record = bounds_mod.scaling_experiment(
        template, n_grid, config["reps"], config["seed"],
        d_mode=config["d_mode"], method=method, eval_protocol=eval_protocol,
        threads=config["threads"],
    )
    os.makedirs(outdir, exist_ok=True)
    record.to_csv(os.path.join(outdir, "scaling.csv"))
    with open(os.path.join(outdir, "scaling_summary.txt"), "w") as fh:
        fh.write(record.slope_summary() + "\n")
    _write_manifest(outdir, "scaling", config)
    print(record.slope_summary())
    print(f"wrote {outdir}/scaling.csv")


RUNNERS = {
    "simulate": (run_simulate, SIMULATE_DEFAULTS),
    "fit": (run_fit, FIT_DEFAULTS),
    "predict": (run_predict, PREDICT_DEFAULTS),
    "bounds": (run_bounds, BOUNDS_DEFAULTS),
    "scaling": (run_scaling, SCALING_DEFAULTS),
}


def _add_flags(parser, defaults):
    for key, default in defaults.items():
        flag = "--" + key.replace("_", "-")
        if isinstance(default, bool):
            parser.add_argument(flag, dest=key, action=argparse.BooleanOptionalAction, default=None)
        elif isinstance(default, int) and not isinstance(default, bool):
            parser.add_argument(flag, dest=key, type=int, default=None)
        elif isinstance(default, float):
            parser.add_argument(flag, dest=key, type=float, default=None)
        else:
            parser.add_argument(flag, dest=key, type=str, default=None)
    parser.add_argument("--config", dest="config_file", type=str, default=None,
                        help="key=value file; explicit flags override its entries")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qgibbs",
        description=(
            "Sparse Gibbs-posterior quantile prediction. Configuration "
            "precedence: defaults < --config file < explicit flags."
        ),
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    helps = {
        "simulate": "run the synthetic benchmark presets/grids",
        "fit": "fit one method to a CSV dataset",
        "predict": "predict with a fitted model directory",
        "bounds": "evaluate the rate calculators",
        "scaling": "empirical fast-rate scaling experiment",
    }
    for name, (_, defaults) in RUNNERS.items():
        p = sub.add_parser(name, help=helps[name])
        _add_flags(p, defaults)
    rp = sub.add_parser("replay", help="re-run a subcommand from its manifest")
    rp.add_argument("manifest", type=str)
    rp.add_argument("--out", dest="out", type=str, default=None)
    rp.add_argument("--threads", dest="threads", type=int, default=None)
    return parser


def _dispatch(subcommand, config):
    runner, _ = RUNNERS[subcommand]
    runner(config)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.subcommand == "replay":
            with open(args.manifest) as fh:
                manifest = json.load(fh)
            subcommand = manifest["subcommand"]
            if subcommand not in RUNNERS:
                raise ConfigError(f"manifest names unknown subcommand {subcommand!r}")
            config = dict(manifest["config"])
            if args.out is not None:
                config["out"] = args.out
            if args.threads is not None:
                config["threads"] = args.threads
            _dispatch(subcommand, config)
        else:
            _, defaults = RUNNERS[args.subcommand]
            file_config = (
                dataio.load_config(args.config_file) if args.config_file else {}
            )
            cli_values = {k: getattr(args, k) for k in defaults}
            config = _merge_config(defaults, file_config, cli_values)
            _dispatch(args.subcommand, config)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
