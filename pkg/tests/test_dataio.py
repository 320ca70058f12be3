import numpy as np
import pytest

from qgibbs.dataio import (
    SplitSpec,
    StandardizationParams,
    dataset_to_csv,
    fit_standardization,
    load_config,
    load_csv,
    split,
    standardize,
    top_correlated_columns,
)
from qgibbs.errors import ConfigError, DataError
from qgibbs.loss import Dataset


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_load_csv_basic(tmp_path):
    path = write(tmp_path, "y,a,b\n1,2,3\n4,5,6\n7,8,9\n")
    data = load_csv(path, "y")
    assert data.n == 3 and data.d == 2
    np.testing.assert_array_equal(data.y, [1.0, 4.0, 7.0])
    np.testing.assert_array_equal(data.x[:, 0], [2.0, 5.0, 8.0])


def test_load_csv_response_position_independent(tmp_path):
    path = write(tmp_path, "a,y,b\n2,1,3\n5,4,6\n")
    data = load_csv(path, "y")
    np.testing.assert_array_equal(data.y, [1.0, 4.0])
    np.testing.assert_array_equal(data.x, [[2.0, 3.0], [5.0, 6.0]])


def test_load_csv_blank_cell_names_row_and_column(tmp_path):
    path = write(tmp_path, "y,a\n1,2\n3,\n")
    with pytest.raises(DataError, match=r"row 3.*'a'"):
        load_csv(path, "y")


def test_load_csv_non_numeric_cell(tmp_path):
    path = write(tmp_path, "y,a\n1,2\nfoo,4\n")
    with pytest.raises(DataError, match=r"row 3.*'y'.*foo"):
        load_csv(path, "y")


def test_load_csv_missing_response(tmp_path):
    path = write(tmp_path, "a,b\n1,2\n")
    with pytest.raises(DataError, match="'fat'"):
        load_csv(path, "fat")


def test_csv_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    data = Dataset(rng.standard_normal((7, 3)), rng.standard_normal(7))
    path = tmp_path / "out.csv"
    dataset_to_csv(data, path, response="resp")
    again = load_csv(path, "resp")
    np.testing.assert_array_equal(again.x, data.x)
    np.testing.assert_array_equal(again.y, data.y)


def test_standardize_columns_have_zero_mean_unit_sd():
    rng = np.random.default_rng(1)
    data = Dataset(rng.standard_normal((50, 4)) * 3 + 2, rng.standard_normal(50) + 7)
    out, params = standardize(data)
    np.testing.assert_allclose(out.x.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(out.x.std(axis=0), 1.0, rtol=1e-12)
    np.testing.assert_allclose(out.y.mean(), 0.0, atol=1e-12)
    # population convention, divisor n
    assert params.y_sd == pytest.approx(float(np.std(data.y)), rel=1e-14)


def test_standardize_idempotent_on_normalized_input():
    rng = np.random.default_rng(2)
    data = Dataset(rng.standard_normal((30, 3)), rng.standard_normal(30))
    once, _ = standardize(data)
    twice, _ = standardize(once)
    np.testing.assert_allclose(twice.x, once.x, atol=1e-12)
    np.testing.assert_allclose(twice.y, once.y, atol=1e-12)


def test_standardize_inverse_round_trip():
    rng = np.random.default_rng(3)
    y = np.abs(rng.standard_normal(40)) + 0.5
    data = Dataset(rng.standard_normal((40, 2)), y)
    for log_response in (False, True):
        _, params = standardize(data, log_response=log_response)
        z = params.transform_y(data.y)
        np.testing.assert_allclose(params.inverse_y(z), data.y, atol=1e-10)


def test_standardize_rejects_constant_column():
    x = np.ones((10, 2))
    x[:, 1] = np.arange(10)
    with pytest.raises(ValueError, match="constant"):
        standardize(Dataset(x, np.arange(10.0)))


def test_standardize_rejects_nonpositive_response_under_log():
    rng = np.random.default_rng(4)
    data = Dataset(rng.standard_normal((5, 2)), np.array([1.0, 2.0, -1.0, 3.0, 4.0]))
    with pytest.raises(ValueError, match="positive"):
        standardize(data, log_response=True)


def test_params_json_round_trip(tmp_path):
    params = StandardizationParams(
        np.array([1.0, 2.0]), np.array([0.5, 4.0]), 3.0, 1.5, True, (0, 3)
    )
    path = tmp_path / "params.json"
    params.to_json(path)
    again = StandardizationParams.from_json(path)
    np.testing.assert_array_equal(again.x_mean, params.x_mean)
    np.testing.assert_array_equal(again.x_sd, params.x_sd)
    assert again.y_mean == 3.0 and again.y_sd == 1.5
    assert again.log_response is True and again.columns == (0, 3)


def test_train_only_statistics_do_not_recenter_test():
    rng = np.random.default_rng(5)
    train = Dataset(rng.standard_normal((60, 3)), rng.standard_normal(60))
    test = Dataset(rng.standard_normal((40, 3)) + 5.0, rng.standard_normal(40))
    params = fit_standardization(train)
    transformed = params.transform_x(test.x)
    assert np.all(np.abs(transformed.mean(axis=0)) > 1.0)


def test_top_correlated_columns_finds_planted_column():
    rng = np.random.default_rng(6)
    x = rng.standard_normal((100, 6))
    y = x[:, 4] * 2.0 + 0.01 * rng.standard_normal(100)
    cols = top_correlated_columns(Dataset(x, y), 1)
    assert cols == (4,)
    with pytest.raises(ConfigError):
        top_correlated_columns(Dataset(x, y), 7)


@pytest.mark.parametrize(
    "n,train,test", [(215, 151, 64), (120, 84, 36)]
)
def test_split_reference_protocol_sizes(n, train, test):
    rng = np.random.default_rng(7)
    data = Dataset(rng.standard_normal((n, 2)), rng.standard_normal(n))
    spec = SplitSpec(train_count=train, test_count=test, seed=3)
    tr, te = split(data, spec)
    assert tr.n == train and te.n == test


def test_split_partition_property():
    rng = np.random.default_rng(8)
    data = Dataset(rng.standard_normal((30, 1)), np.arange(30.0))
    for seed in range(5):
        tr, te = split(data, SplitSpec(train_fraction=0.6, seed=seed))
        combined = np.sort(np.concatenate([tr.y, te.y]))
        np.testing.assert_array_equal(combined, np.arange(30.0))


def test_split_deterministic():
    rng = np.random.default_rng(9)
    data = Dataset(rng.standard_normal((20, 2)), rng.standard_normal(20))
    a = split(data, SplitSpec(train_fraction=0.5, seed=42))
    b = split(data, SplitSpec(train_fraction=0.5, seed=42))
    np.testing.assert_array_equal(a[0].x, b[0].x)
    np.testing.assert_array_equal(a[1].y, b[1].y)


def test_split_spec_validation():
    with pytest.raises(ConfigError):
        SplitSpec()
    with pytest.raises(ConfigError):
        SplitSpec(train_fraction=0.5, train_count=10, test_count=5)
    with pytest.raises(ConfigError):
        SplitSpec(train_fraction=1.5)
    with pytest.raises(ConfigError):
        SplitSpec(train_count=10)
    rng = np.random.default_rng(10)
    data = Dataset(rng.standard_normal((10, 1)), np.arange(10.0))
    with pytest.raises(ConfigError):
        split(data, SplitSpec(train_count=4, test_count=5, seed=0))
    with pytest.raises(ConfigError):
        split(data, SplitSpec(train_fraction=0.01, seed=0))


def test_load_config_flattens_sections(tmp_path):
    path = write(
        tmp_path,
        "[gibbs]\ntau = 0.25\nlam = 2.0\n\n[sampler]\nn_iter = 100\n",
        name="run.cfg",
    )
    config = load_config(path)
    assert config == {"tau": "0.25", "lam": "2.0", "n_iter": "100"}


def test_load_config_duplicate_key_is_error(tmp_path):
    path = write(tmp_path, "[a]\ntau = 0.1\n[b]\ntau = 0.2\n", name="dup.cfg")
    with pytest.raises(ConfigError, match="duplicate"):
        load_config(path)
