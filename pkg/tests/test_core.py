import json
from datetime import date, datetime

import numpy as np
import pytest

from src.core.errors import ConfigError, IncompleteCoverageError, UserInputError
from src.core.hours import day_span, hour_grid, hour_range
from src.core.types import (
    ActivityMatrix, DailyUsageTargets, DeviceRole, DeviceSpec, HourlyLoadSeries, HourStamp,
    PriceCurve, Recommendation, Thresholds, TypicalLoadProfile, UsageRun,
)


def test_hour_stamp_rejects_hour_24():
    with pytest.raises(ValueError):
        HourStamp(date(2015, 1, 1), 24)


def test_hour_stamp_shift_crosses_midnight():
    assert HourStamp(date(2015, 1, 31), 23).shifted(2) == HourStamp(date(2015, 2, 1), 1)
    assert str(HourStamp(date(2015, 1, 1), 5)) == "2015-01-01 05:00"


def test_hour_range_spills_into_next_day():
    stamps = hour_range(date(2015, 3, 1), 2)
    assert len(stamps) == 26
    assert stamps[0] == HourStamp(date(2015, 3, 1), 0)
    assert stamps[23] == HourStamp(date(2015, 3, 1), 23)
    assert stamps[-1] == HourStamp(date(2015, 3, 2), 1)
    assert stamps == sorted(stamps)


def test_hour_range_without_extra_hours():
    assert [s.hour for s in hour_range(date(2015, 3, 1), 0)] == list(range(24))


def test_hour_range_negative_k():
    with pytest.raises(ValueError):
        hour_range(date(2015, 3, 1), -1)


def test_hour_grid_matches_hour_range():
    grid = hour_grid(date(2016, 2, 28), 3)
    stamps = [HourStamp.from_datetime(h) for h in grid.astype(datetime)]
    assert stamps == hour_range(date(2016, 2, 28), 3)


def test_day_span_is_inclusive():
    assert day_span(date(2015, 1, 30), date(2015, 2, 1)) == [date(2015, 1, 30), date(2015, 1, 31), date(2015, 2, 1)]


def test_device_spec_validation():
    with pytest.raises(ConfigError):
        DeviceSpec("kettle", "h1", DeviceRole.AVAILABILITY, 0.0)
    with pytest.raises(ConfigError):
        DeviceSpec("washer", "h1", DeviceRole.SHIFTABLE, 10.0, duration_k=-1)
    spec = DeviceSpec("washer", "h1", "both", 10.0)
    assert spec.role is DeviceRole.BOTH
    assert spec.role.is_shiftable and spec.role.signals_availability
    with pytest.raises(ConfigError):
        spec.k
    assert spec.with_duration(2).k == 2


def test_config_error_is_user_input_error():
    assert issubclass(ConfigError, UserInputError)


def test_load_series_rejects_negative_energy():
    with pytest.raises(ValueError):
        HourlyLoadSeries("d", datetime(2015, 1, 1), [1.0, -2.0])


def test_load_series_equality_treats_nan_as_equal():
    a = HourlyLoadSeries("d", datetime(2015, 1, 1), [1.0, np.nan])
    b = HourlyLoadSeries("d", datetime(2015, 1, 1), [1.0, np.nan])
    assert a == b
    assert a.missing.tolist() == [False, True]
    with pytest.raises(ValueError):
        a.energy_wh[0] = 3.0


def test_activity_matrix_must_be_binary_and_ordered():
    with pytest.raises(ValueError):
        ActivityMatrix((date(2015, 1, 1),), np.full((1, 24), 2))
    with pytest.raises(ValueError):
        ActivityMatrix((date(2015, 1, 2), date(2015, 1, 1)), np.zeros((2, 24)))


def test_activity_matrix_before_keeps_earlier_days():
    days = (date(2015, 1, 1), date(2015, 1, 2), date(2015, 1, 4))
    matrix = ActivityMatrix(days, np.eye(3, 24, dtype=np.uint8))
    earlier = matrix.before(date(2015, 1, 4))
    assert earlier.dates == days[:2]
    assert date(2015, 1, 3) not in matrix
    assert matrix.get(date(2015, 1, 4), 2) == 1


def test_usage_targets_shape_checked():
    with pytest.raises(ValueError):
        DailyUsageTargets((date(2015, 1, 1),), {"washer": np.array([1, 0])})


def test_usage_run_rejects_empty_load():
    with pytest.raises(ValueError):
        UsageRun("washer", HourStamp(date(2015, 1, 1), 3), ())


def test_price_curve_lookup_marks_absent_hours():
    hours = np.array(["2015-01-01T00", "2015-01-01T01", "2015-01-01T03"], dtype="datetime64[h]")
    curve = PriceCurve(hours, [10.0, 20.0, 40.0])
    found = curve.lookup(np.array(["2015-01-01T01", "2015-01-01T02", "2015-01-02T00"], dtype="datetime64[h]"))
    assert found[0] == 20.0
    assert np.isnan(found[1]) and np.isnan(found[2])


def test_price_curve_requires_increasing_hours():
    hours = np.array(["2015-01-01T01", "2015-01-01T00"], dtype="datetime64[h]")
    with pytest.raises(ValueError):
        PriceCurve(hours, [1.0, 2.0])


def test_price_curve_dict_form():
    hours = np.array(["2015-01-01T00", "2015-01-01T01"], dtype="datetime64[h]")
    curve = PriceCurve(hours, [10.0, 20.0], gaps=((datetime(2015, 1, 1, 2), 5),))
    assert PriceCurve.from_dict(curve.to_dict()) == curve


def test_thresholds_range():
    with pytest.raises(ConfigError):
        Thresholds(1.5, 0.1)
    assert Thresholds(0.0, 1.0).to_dict() == {"availability": 0.0, "usage": 1.0}


def test_recommendation_final_only_when_both_flags_clear():
    day = date(2015, 1, 1)
    assert Recommendation(day, "washer", 3, 0, 0, 3, 10.0).final_label == "3"
    assert Recommendation(day, "washer", 3, 0, 1, None, 10.0).final_label == "no"
    with pytest.raises(ValueError):
        Recommendation(day, "washer", 3, 0, 0, None)
    with pytest.raises(ValueError):
        Recommendation(day, "washer", 3, 1, 0)
    with pytest.raises(ValueError):
        Recommendation(day, "washer", None, 0, 0)


def test_incomplete_coverage_lists_missing_hours():
    missing = [HourStamp(date(2015, 1, 1), h) for h in range(8)]
    error = IncompleteCoverageError(missing)
    assert error.missing == tuple(missing)
    assert "(+2 more)" in str(error)


ROUND_TRIP_VALUES = [
    HourStamp(date(2015, 12, 31), 23),
    DeviceSpec("washer", "h1", DeviceRole.BOTH, 12.5, duration_k=2),
    DeviceSpec("kettle", "h1", DeviceRole.AVAILABILITY, 3.0),
    HourlyLoadSeries("washer", datetime(2015, 3, 29, 1), [0.1, np.nan, 1 / 3, 1e-12]),
    ActivityMatrix((date(2015, 1, 1), date(2015, 1, 3)), np.eye(2, 24, k=5, dtype=np.uint8)),
    DailyUsageTargets((date(2015, 1, 1), date(2015, 1, 2)), {"washer": [1, 0], "dryer": [0, 0]}),
    UsageRun("washer", HourStamp(date(2015, 1, 1), 22), (700.25, 0.1 + 0.2, 0.0), 1),
    TypicalLoadProfile("washer", (2 / 3, 1e-9, 450.0), 17),
    PriceCurve(np.array(["2015-01-01T00", "2015-01-01T05"], dtype="datetime64[h]"), [-3.25, 0.1 + 0.7],
               "per_kWh", ((datetime(2015, 1, 1, 1), 4),)),
    Thresholds(0.125, 1.0),
    Recommendation(date(2015, 1, 2), "washer", 8, 0, 0, 8, 1 / 7),
    Recommendation(date(2015, 1, 2), "dryer", 8, 0, 1, None, 31.5),
    Recommendation(date(2015, 1, 2), "dryer", None, 1, 1),
]


@pytest.mark.parametrize("value", ROUND_TRIP_VALUES, ids=lambda v: type(v).__name__)
def test_core_types_survive_json(value):
    restored = type(value).from_dict(json.loads(json.dumps(value.to_dict())))
    assert restored == value
    assert restored.to_dict() == value.to_dict()
