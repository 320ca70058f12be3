"""CSV ingestion, standardization, train/test splitting, and key=value configs.

Standardization uses the population convention (divisor n) and stores the
per-column statistics so predictions can be mapped back to original units.
In split pipelines the statistics are computed on the training rows only and
applied to the test rows; a whole-dataset mode exists for strict replication
attempts.
"""

from dataclasses import dataclass
import configparser
import csv
import json
import math

import numpy as np

from .errors import ConfigError, DataError
from .loss import Dataset
from .seeding import derive_rng


def load_csv(path, response: str) -> Dataset:
    """Read a headed CSV into a Dataset; every non-response column is a covariate."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        if response not in header:
            raise DataError(
                f"{path}: response column {response!r} not found; columns: {header}"
            )
        y_col = header.index(response)
        if len(header) < 2:
            raise DataError(f"{path}: no covariate columns besides {response!r}")
        rows = []
        for i, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataError(
                    f"{path}: row {i} has {len(row)} cells, expected {len(header)}"
                )
            parsed = []
            for name, cell in zip(header, row):
                cell = cell.strip()
                if cell == "":
                    raise DataError(f"{path}: row {i}, column {name!r}: blank cell")
                try:
                    value = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: row {i}, column {name!r}: non-numeric cell {cell!r}"
                    ) from None
                if not math.isfinite(value):
                    raise DataError(
                        f"{path}: row {i}, column {name!r}: non-finite value {cell!r}"
                    )
                parsed.append(value)
            rows.append(parsed)
    if not rows:
        raise DataError(f"{path}: no data rows")
    table = np.array(rows)
    y = table[:, y_col]
    x = np.delete(table, y_col, axis=1)
    return Dataset(x, y)


def covariate_names(path, response: str) -> list:
    """Header names of the covariate columns, in dataset column order."""
    with open(path, newline="") as fh:
        header = [h.strip() for h in next(csv.reader(fh))]
    return [h for h in header if h != response]


def dataset_to_csv(data: Dataset, path, response: str = "y", names=None) -> None:
    if names is None:
        names = [f"x{j + 1}" for j in range(data.d)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([response] + list(names))
        for yi, xi in zip(data.y, data.x):
            writer.writerow([repr(float(yi))] + [repr(float(v)) for v in xi])


@dataclass(frozen=True)
class StandardizationParams:
    """Per-column centering/scaling statistics plus the response transform."""

    x_mean: np.ndarray
    x_sd: np.ndarray
    y_mean: float
    y_sd: float
    log_response: bool
    columns: tuple | None = None  # covariate subset, when screening was applied

    def transform_x(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.columns is not None:
            x = x[:, list(self.columns)]
        return (x - self.x_mean) / self.x_sd

    def transform_y(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.log_response:
            if np.any(y <= 0.0):
                raise ValueError("log_response requires strictly positive responses")
            y = np.log(y)
        return (y - self.y_mean) / self.y_sd

    def inverse_y(self, z: np.ndarray) -> np.ndarray:
        y = np.asarray(z, dtype=float) * self.y_sd + self.y_mean
        return np.exp(y) if self.log_response else y

    def to_json(self, path) -> None:
        payload = {
            "x_mean": [float(v) for v in self.x_mean],
            "x_sd": [float(v) for v in self.x_sd],
            "y_mean": float(self.y_mean),
            "y_sd": float(self.y_sd),
            "log_response": self.log_response,
            "columns": None if self.columns is None else list(self.columns),
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")

    @classmethod
    def from_json(cls, path) -> "StandardizationParams":
        with open(path) as fh:
            payload = json.load(fh)
        return cls(
            x_mean=np.array(payload["x_mean"], dtype=float),
            x_sd=np.array(payload["x_sd"], dtype=float),
            y_mean=float(payload["y_mean"]),
            y_sd=float(payload["y_sd"]),
            log_response=bool(payload["log_response"]),
            columns=None if payload["columns"] is None else tuple(payload["columns"]),
        )


def fit_standardization(
    data: Dataset, log_response: bool = False, columns=None
) -> StandardizationParams:
    """Compute standardization statistics (population sd, divisor n) on `data`."""
    x = data.x if columns is None else data.x[:, list(columns)]
    x_mean = x.mean(axis=0)
    x_sd = x.std(axis=0)
    if np.any(x_sd <= 0.0):
        bad = int(np.flatnonzero(x_sd <= 0.0)[0])
        raise ValueError(f"covariate column {bad} is constant; cannot standardize")
    y = data.y
    if log_response:
        if np.any(y <= 0.0):
            raise ValueError("log_response requires strictly positive responses")
        y = np.log(y)
    y_sd = float(y.std())
    if y_sd <= 0.0:
        raise ValueError("response is constant; cannot standardize")
    return StandardizationParams(
        x_mean, x_sd, float(y.mean()), y_sd, log_response,
        None if columns is None else tuple(int(c) for c in columns),
    )


def standardize(data: Dataset, log_response: bool = False):
    """Center/scale covariates and response; returns the transformed data and params."""
    params = fit_standardization(data, log_response)
    return Dataset(params.transform_x(data.x), params.transform_y(data.y)), params


def top_correlated_columns(data: Dataset, k: int) -> tuple:
    """Indices of the k covariates with highest absolute Pearson correlation with y."""
    if not 1 <= k <= data.d:
        raise ConfigError(f"k must satisfy 1 <= k <= d, got {k}")
    xc = data.x - data.x.mean(axis=0)
    yc = data.y - data.y.mean()
    x_sd = xc.std(axis=0)
    y_sd = yc.std()
    denom = np.where(x_sd > 0.0, x_sd, np.inf) * (y_sd if y_sd > 0.0 else np.inf)
    corr = np.abs(xc.T @ yc / data.n) / denom
    # stable ties: higher |corr| first, lower index wins among equals
    order = np.lexsort((np.arange(data.d), -corr))
    return tuple(int(j) for j in sorted(order[:k]))


@dataclass(frozen=True)
class SplitSpec:
    """Either a train fraction in (0, 1) or explicit (train, test) counts, plus a seed."""

    train_fraction: float | None = None
    train_count: int | None = None
    test_count: int | None = None
    seed: int = 0

    def __post_init__(self):
        by_fraction = self.train_fraction is not None
        by_counts = self.train_count is not None or self.test_count is not None
        if by_fraction == by_counts:
            raise ConfigError(
                "specify exactly one of train_fraction or explicit counts"
            )
        if by_fraction and not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(
                f"train_fraction must lie in (0, 1), got {self.train_fraction!r}"
            )
        if by_counts and (self.train_count is None or self.test_count is None):
            raise ConfigError("explicit counts need both train_count and test_count")

    def sizes(self, n: int):
        if self.train_fraction is not None:
            n_train = int(round(self.train_fraction * n))
        else:
            if self.train_count + self.test_count != n:
                raise ConfigError(
                    f"counts ({self.train_count}, {self.test_count}) do not sum to n={n}"
                )
            n_train = self.train_count
        if not 1 <= n_train <= n - 1:
            raise ConfigError(
                f"split leaves an empty part: train={n_train} of n={n}"
            )
        return n_train, n - n_train


def split(data: Dataset, spec: SplitSpec):
    """Seeded uniform shuffle of rows; first block is the training set."""
    n_train, _ = spec.sizes(data.n)
    perm = derive_rng(spec.seed, "split").permutation(data.n)
    train_idx, test_idx = perm[:n_train], perm[n_train:]
    return (
        Dataset(data.x[train_idx], data.y[train_idx]),
        Dataset(data.x[test_idx], data.y[test_idx]),
    )


def load_config(path) -> dict:
    """Flat key=value configuration with cosmetic [sections]; keys must be unique."""
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_string(fh.read(), source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    flat = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            if key in flat:
                raise ConfigError(f"{path}: duplicate key {key!r} across sections")
            flat[key] = value
    return flat
