import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deeptrend.dataio import (
    FlowTable,
    FlowTableError,
    SyntheticSpec,
    generate_synthetic,
    load_csv,
    make_windows,
    save_csv,
    split_train_test,
)
from deeptrend.detrend import SLOTS_PER_WEEK, compute_residual, compute_trend

W = SLOTS_PER_WEEK


def small_table(weeks=2, stations=2, seed=0):
    return generate_synthetic(SyntheticSpec(weeks=weeks, stations=stations, seed=seed))


def write_rows(path, rows):
    path.write_text("\n".join(rows) + "\n")


def test_load_shape(tmp_path):
    save_csv(small_table(), tmp_path / "f.csv")
    table = load_csv(tmp_path / "f.csv")
    assert table.values.shape == (4032, 2)
    assert table.n_weeks == 2


def test_roundtrip_is_identical(tmp_path):
    table = small_table(weeks=2, stations=3, seed=4)
    values = table.values.copy()
    values[[5, 77], [0, 2]] = np.nan
    table = FlowTable(table.timestamps, table.stations, values)
    save_csv(table, tmp_path / "f.csv", comment="seed=4")
    assert load_csv(tmp_path / "f.csv").equals(table)


def test_empty_cell_is_missing(tmp_path):
    write_rows(tmp_path / "f.csv", ["timestamp,a,b", "2016-01-04T00:00:00,1,", "2016-01-04T00:05:00,,2.5"])
    table = load_csv(tmp_path / "f.csv")
    assert np.isnan(table.values[0, 1]) and np.isnan(table.values[1, 0])
    assert table.values[1, 1] == 2.5


@pytest.mark.parametrize(
    "rows, message",
    [
        (["timestamp,a", "2016-01-04T00:00:00,1", "2016-01-04T00:00:00,2"], "row 3: duplicated"),
        (["timestamp,a", "2016-01-04T00:05:00,1", "2016-01-04T00:00:00,2"], "row 3: non-monotone"),
        (["timestamp,a", "2016-01-04T00:00:00,1", "2016-01-04T00:15:00,2"], "row 3: gapped"),
        (["timestamp,a,b", "2016-01-04T00:00:00,1"], "row 2: expected 3 fields"),
        (["timestamp,a", "2016-01-04T00:00:00,abc"], "row 2: unparseable number"),
        (["timestamp,a", "yesterday,1"], "row 2: unparseable timestamp"),
        (["time,a", "2016-01-04T00:00:00,1"], "row 1: header"),
    ],
)
def test_load_errors_cite_row(tmp_path, rows, message):
    write_rows(tmp_path / "f.csv", rows)
    with pytest.raises(FlowTableError, match=message):
        load_csv(tmp_path / "f.csv")


def test_split_weeks():
    table = small_table(weeks=16, stations=1)
    train, test = split_train_test(table, 12)
    assert (train.n_weeks, test.n_weeks) == (12, 4)
    assert train.timestamps[-1] + np.timedelta64(5, "m") == test.timestamps[0]
    joined = np.concatenate([train.values, test.values])
    assert joined.tobytes() == table.values.tobytes()


@settings(max_examples=10, deadline=None)
@given(st.integers(2, 4), st.data())
def test_split_is_lossless_and_aligned(weeks, data):
    k = data.draw(st.integers(1, weeks - 1))
    table = small_table(weeks=weeks, stations=1, seed=weeks)
    train, test = split_train_test(table, k)
    assert len(train.values) == k * W
    assert np.concatenate([train.values, test.values]).tobytes() == table.values.tobytes()
    assert np.concatenate([train.timestamps, test.timestamps]).tolist() == table.timestamps.tolist()


def test_split_needs_test_part():
    with pytest.raises(FlowTableError):
        split_train_test(small_table(weeks=2), 2)


def test_window_count():
    assert len(make_windows([np.arange(20.0)], [np.arange(20.0)], 12)) == 8


def test_first_window():
    s = np.arange(1.0, 21.0)
    ds = make_windows([s], [s], 12)
    assert ds.inputs[0, :, 0].tolist() == list(range(1, 13))
    assert ds.targets[0, 0] == 13.0
    assert ds.target_index[0] == 12


def test_windows_match_slicing(rng):
    L, N = 57, 7
    a, b, c = rng.normal(size=(3, L))
    ds = make_windows([a, b], [c, a], N)
    assert ds.inputs.shape == (L - N, N, 2) and ds.targets.shape == (L - N, 2)
    for s in range(L - N):
        np.testing.assert_array_equal(ds.inputs[s, :, 0], a[s : s + N])
        np.testing.assert_array_equal(ds.inputs[s, :, 1], b[s : s + N])
        assert ds.targets[s].tolist() == [c[s + N], a[s + N]]


@given(st.integers(1, 30), st.integers(1, 200))
def test_window_count_property(N, extra):
    L = N + extra
    assert len(make_windows([np.zeros(L)], [np.zeros(L)], N)) == L - N


def test_window_errors():
    with pytest.raises(ValueError, match="lengths differ"):
        make_windows([np.zeros(20)], [np.zeros(19)], 5)
    with pytest.raises(ValueError, match="exceed"):
        make_windows([np.zeros(12)], [np.zeros(12)], 12)


@pytest.mark.parametrize("weeks", [2, 3, 4])
def test_noiseless_generator_is_periodic(weeks):
    spec = SyntheticSpec(weeks=weeks, stations=2, noise_std=0.0, phi=0.0, seed=5)
    table = generate_synthetic(spec)
    for st in table.stations:
        s = table.series(st)
        np.testing.assert_array_equal(s.values, np.tile(s.values[:W], weeks))
        trend = compute_trend(s, weeks).values
        if weeks in (2, 4):
            np.testing.assert_array_equal(trend, s.values[:W])
        else:
            # (a + a + a) / 3 can land one ulp away from a
            np.testing.assert_allclose(trend, s.values[:W], rtol=2.3e-16, atol=0)


def test_generator_weekend_modulation():
    spec = SyntheticSpec(weeks=2, stations=1, noise_std=0.0, phi=0.0, weekend_factor=0.5)
    v = generate_synthetic(spec).values[:, 0]
    weekday = v[:288] - spec.level
    saturday = v[5 * 288 : 6 * 288] - spec.level
    np.testing.assert_allclose(saturday, 0.5 * weekday, atol=1e-9)


def test_generator_deterministic():
    assert small_table(seed=3).equals(small_table(seed=3))
    assert not small_table(seed=3).equals(small_table(seed=4))


def test_generator_autocorrelation():
    spec = SyntheticSpec(weeks=6, stations=1, phi=0.8, noise_std=1.0, seed=11)
    table = generate_synthetic(spec)
    s = table.series(table.stations[0])
    r = compute_residual(s, compute_trend(s)).values
    r = r - r.mean()
    lag1 = float(np.sum(r[1:] * r[:-1]) / np.sum(r * r))
    assert abs(lag1 - 0.8) < 0.05


def test_generator_residual_mean():
    spec = SyntheticSpec(weeks=6, stations=1, seed=12)
    _, parts = generate_synthetic(spec, return_components=True)
    resid = parts[0][1]
    # AR(1) standard error of the mean
    se = np.sqrt(spec.residual_variance * (1 + spec.phi) / (1 - spec.phi) / len(resid))
    assert abs(resid.mean()) < 3 * se


@pytest.mark.parametrize("kwargs", [{"phi": 1.0}, {"phi": -1.2}, {"weeks": 1}])
def test_spec_invariants(kwargs):
    with pytest.raises(ValueError):
        SyntheticSpec(**kwargs)


def test_unknown_station():
    with pytest.raises(KeyError):
        small_table().series("nope")
