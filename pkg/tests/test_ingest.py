import json
from datetime import datetime, timezone

import numpy as np
import pytest

from src.core.errors import (
    ChannelMismatchError, ConfigError, EmptyFileError, InvalidPriceError, NonMonotonicTimestampsError,
)
from src.data.household import channel_column, load_household_config, parse_household_config
from src.data.ingest import (
    GapReport, fill_gaps, integrate_hourly, mask_runs, parse_consumption, parse_prices, write_price_csv,
    write_refit_csv,
)

from conftest import hourly_series

T0 = 1420070400  # 2015-01-01 00:00 UTC

HOUSEHOLD = {
    "household": "h1",
    "consumption_file": "consumption.csv",
    "price_file": "prices.csv",
    "devices": [
        {"channel": 1, "name": "kettle", "role": "availability", "on_threshold_watts": 50},
        {"channel": 2, "name": "washer", "role": "shiftable", "on_threshold_watts": 100, "duration_k": 1},
    ],
}


def write_consumption(path, rows):
    lines = ["Time,Unix,Aggregate,Appliance1,Appliance2"]
    for unix, kettle, washer in rows:
        stamp = datetime.fromtimestamp(unix, timezone.utc).strftime("%Y-%m-%d %H:%M:%S")
        lines.append(f"{stamp},{unix},{kettle + washer},{kettle},{washer}")
    path.write_text("\n".join(lines) + "\n")


@pytest.fixture
def config(tmp_path):
    return parse_household_config(HOUSEHOLD, base_dir=tmp_path)


def test_mask_runs():
    assert mask_runs(np.array([True, True, False, True])) == [(0, 2), (3, 1)]
    assert mask_runs(np.zeros(3, dtype=bool)) == []


def test_integrate_hourly_time_weights_samples():
    first, energy = integrate_hourly(np.array([T0, T0 + 1800]), np.array([100.0, 200.0]))
    assert first == T0
    assert energy.tolist() == [150.0]


def test_integrate_hourly_caps_hold_and_marks_empty_hours():
    first, energy = integrate_hourly(np.array([T0, T0 + 7200]), np.array([100.0, 300.0]), max_hold_seconds=3600)
    assert energy[0] == pytest.approx(100.0)
    assert np.isnan(energy[1])
    assert energy[2] == pytest.approx(300.0)


def test_parse_consumption_resamples_per_device(tmp_path, config):
    rows = [(T0 + 3600 * h, 60.0 if h == 7 else 0.0, 500.0 if h in (18, 19) else 0.0) for h in range(24)]
    write_consumption(tmp_path / "consumption.csv", rows)
    parsed = parse_consumption(tmp_path / "consumption.csv", config)
    assert set(parsed.series) == {"kettle", "washer"}
    washer = parsed.series["washer"]
    assert washer.start == datetime(2015, 1, 1)
    assert len(washer) == 24
    assert washer.energy_wh[18] == pytest.approx(500.0)
    assert parsed.series["kettle"].energy_wh[7] == pytest.approx(60.0)
    assert parsed.malformed_rows == 0 and parsed.missing_hours == 0


def test_integrate_hourly_conserves_energy():
    rng = np.random.default_rng(6)
    for _ in range(20):
        steps = rng.integers(1, 900, size=int(rng.integers(30, 120)))
        unix = T0 + np.concatenate(([0], np.cumsum(steps)))
        watts = rng.uniform(0.0, 3000.0, size=len(unix))
        first, energy = integrate_hourly(unix, watts)
        end = first + 3600 * len(energy)
        held = np.diff(np.append(unix, end))
        assert first == T0 and not np.isnan(energy).any()
        assert energy.sum() == pytest.approx(float(watts @ held) / 3600, rel=1e-6)


def test_parse_consumption_skips_malformed_rows(tmp_path, config):
    write_consumption(tmp_path / "consumption.csv", [(T0 + 3600 * h, 0.0, 0.0) for h in range(24)])
    text = (tmp_path / "consumption.csv").read_text().splitlines()
    text.insert(3, "garbage,not-a-number,,,")
    (tmp_path / "consumption.csv").write_text("\n".join(text) + "\n")
    parsed = parse_consumption(tmp_path / "consumption.csv", config)
    assert parsed.rows_read == 25
    assert parsed.malformed_rows == 1
    assert not np.isnan(parsed.series["washer"].energy_wh).any()


def test_parse_consumption_counts_backwards_rows(tmp_path, config):
    rows = [(T0, 0.0, 0.0), (T0 + 3600, 0.0, 0.0), (T0 + 1800, 0.0, 0.0), (T0 + 7200, 0.0, 0.0)]
    write_consumption(tmp_path / "consumption.csv", rows)
    assert parse_consumption(tmp_path / "consumption.csv", config).backwards_rows == 1


def test_parse_consumption_channel_mismatch(tmp_path):
    path = tmp_path / "consumption.csv"
    path.write_text(f"Time,Unix,Aggregate,Appliance1\n2015-01-01 00:00:00,{T0},1,1\n")
    config = parse_household_config(HOUSEHOLD, base_dir=tmp_path)
    with pytest.raises(ChannelMismatchError) as info:
        parse_consumption(path, config)
    assert "Appliance2" in str(info.value)
    assert info.value.line == 1


def test_parse_consumption_empty_file(tmp_path, config):
    path = tmp_path / "consumption.csv"
    path.write_text("")
    with pytest.raises(EmptyFileError):
        parse_consumption(path, config)
    path.write_text("Time,Unix,Aggregate,Appliance1,Appliance2\n")
    with pytest.raises(EmptyFileError):
        parse_consumption(path, config)


def test_fill_gaps_only_short_runs():
    series = hourly_series("washer", [1, np.nan, np.nan, 2, np.nan, np.nan, np.nan, np.nan, 3])
    report = GapReport()
    filled = fill_gaps(series, max_gap_hours=3, report=report)
    assert filled.energy_wh[:4].tolist() == [1.0, 0.0, 0.0, 2.0]
    assert np.isnan(filled.energy_wh[4:8]).all()
    assert (report.filled_gaps, report.filled_hours, report.long_gaps, report.missing_hours) == (1, 2, 1, 4)
    assert report.long_gap_spans == [(datetime(2015, 1, 1, 4), 4)]


def test_fill_gaps_without_missing_hours_is_identity():
    series = hourly_series("washer", [1.0, 2.0, 3.0])
    assert fill_gaps(series, 3) == series


def test_parse_prices_interpolates_short_gaps(tmp_path):
    path = tmp_path / "prices.csv"
    path.write_text("timestamp,price\n2015-01-01T00:00:00,10\n2015-01-01T01:00:00,20\n2015-01-01T04:00:00,50\n")
    curve = parse_prices(path)
    assert curve.prices.tolist() == [10.0, 20.0, 30.0, 40.0, 50.0]
    assert curve.gaps == ((datetime(2015, 1, 1, 2), 2),)


def test_parse_prices_leaves_long_gaps(tmp_path):
    path = tmp_path / "prices.csv"
    path.write_text("timestamp,price\n2015-01-01T00:00:00,10\n2015-01-01T06:00:00,70\n")
    curve = parse_prices(path)
    assert len(curve) == 2
    assert curve.gaps == ((datetime(2015, 1, 1, 1), 5),)
    assert np.isnan(curve.lookup(np.array(["2015-01-01T03"], dtype="datetime64[h]"))[0])


def test_parse_prices_converts_per_kwh(tmp_path):
    path = tmp_path / "prices.csv"
    path.write_text("timestamp,price\n2015-01-01T00:00:00+01:00,0.05\n")
    curve = parse_prices(path, unit="per_kWh")
    assert curve.prices[0] == pytest.approx(50.0)
    assert curve.source_unit == "per_kWh"


def test_parse_prices_duplicate_hour_keeps_first(tmp_path):
    path = tmp_path / "prices.csv"
    path.write_text("timestamp,price\n2015-01-01T00:00:00,10\n2015-01-01T01:00:00,20\n"
                    "2015-01-01T01:00:00,99\n2015-01-01T02:00:00,30\n")
    assert parse_prices(path).prices.tolist() == [10.0, 20.0, 30.0]


def test_parse_prices_errors_name_the_line(tmp_path):
    path = tmp_path / "prices.csv"
    path.write_text("timestamp,price\n2015-01-01T00:00:00,10\n2015-01-01T01:00:00,NaN\n")
    with pytest.raises(InvalidPriceError) as info:
        parse_prices(path)
    assert info.value.line == 3
    path.write_text("timestamp,price\n2015-01-01T02:00:00,10\n2015-01-01T01:00:00,20\n")
    with pytest.raises(NonMonotonicTimestampsError):
        parse_prices(path)
    path.write_text("timestamp,price\n2015-01-01T02:30:00,10\n")
    with pytest.raises(InvalidPriceError):
        parse_prices(path)


def test_channel_column():
    assert channel_column(4) == "Appliance4"
    assert channel_column("7") == "Appliance7"
    assert channel_column("Aggregate") == "Aggregate"
    with pytest.raises(ConfigError):
        channel_column("fridge")


def test_household_config_resolves_relative_paths(tmp_path):
    path = tmp_path / "house.json"
    path.write_text(json.dumps(HOUSEHOLD))
    config = load_household_config(path)
    assert config.consumption_file == tmp_path.resolve() / "consumption.csv"
    assert [d.id for d in config.shiftable] == ["washer"]
    assert config.shiftable[0].k == 1
    with pytest.raises(ConfigError):
        config.check_files()


def test_household_config_rejects_bad_documents(tmp_path):
    with pytest.raises(ConfigError):
        parse_household_config({"household": "h1"})
    missing_shiftable = dict(HOUSEHOLD, devices=HOUSEHOLD["devices"][:1])
    with pytest.raises(ConfigError):
        parse_household_config(missing_shiftable)
    bad_role = dict(HOUSEHOLD, devices=[dict(HOUSEHOLD["devices"][0], role="fridge")])
    with pytest.raises(ConfigError):
        parse_household_config(bad_role)
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_household_config(path)


def test_consumption_reserialization_is_stable(tmp_path, config):
    rng = np.random.default_rng(9)
    rows = []
    for hour in range(24):
        if hour in (9, 10):
            continue
        for half in (0, 1800):
            rows.append((T0 + 3600 * hour + half, float(rng.integers(0, 100)), float(rng.integers(100, 3000))))
    write_consumption(tmp_path / "consumption.csv", rows)
    first = parse_consumption(tmp_path / "consumption.csv", config).series
    assert np.isnan(first["washer"].energy_wh[[9, 10]]).all()

    columns = {"Appliance1": "kettle", "Appliance2": "washer"}
    write_refit_csv(tmp_path / "again.csv", {column: first[device] for column, device in columns.items()})
    second = parse_consumption(tmp_path / "again.csv", config).series
    assert second == first
    write_refit_csv(tmp_path / "third.csv", {column: second[device] for column, device in columns.items()})
    assert (tmp_path / "third.csv").read_bytes() == (tmp_path / "again.csv").read_bytes()


def test_price_reserialization_is_stable(tmp_path):
    lines = ["timestamp,price"] + [f"2015-01-01T{h:02d}:00:00+01:00,{40 + h * 0.25}" for h in range(24) if h != 5]
    (tmp_path / "prices.csv").write_text("\n".join(lines) + "\n")
    first = parse_prices(tmp_path / "prices.csv")
    write_price_csv(tmp_path / "again.csv", first)
    second = parse_prices(tmp_path / "again.csv")
    assert np.array_equal(second.hours, first.hours)
    assert np.array_equal(second.prices, first.prices)
    write_price_csv(tmp_path / "third.csv", second)
    assert (tmp_path / "third.csv").read_bytes() == (tmp_path / "again.csv").read_bytes()
