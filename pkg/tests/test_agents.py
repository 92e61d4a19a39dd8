from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.agents.availability import AvailabilityForecast, base_rate_by_hour, forecast_availability
from src.agents.load import RunningProfile, profiles_by_date, typical_profile
from src.agents.price import partial_price_vector, price_coverage, price_vector
from src.agents.recommendation import (
    best_start, candidate_hours, recommend, recommend_device, recommendation_rows, window_costs,
)
from src.agents.usage import UsageForecast, base_rate, forecast_usage
from src.core.errors import DimensionMismatchError, IncompleteCoverageError, NoHistoryError
from src.core.types import (
    ActivityMatrix, DeviceRole, DeviceSpec, HourStamp, PriceCurve, Thresholds, TypicalLoadProfile, UsageRun,
)
from src.evaluation.synthetic import SyntheticConfig, generate_synthetic

from conftest import START

DAY = date(2015, 6, 1)


def brute_force(prices, profile, probabilities, thresholds, usage_probability):
    best, best_cost = None, None
    for hour in range(24):
        if probabilities[hour] <= thresholds.availability:
            continue
        cost = sum(prices[hour + j] * profile[j] for j in range(len(profile)))
        if best_cost is None or cost < best_cost:
            best, best_cost = hour, cost
    availability_flag = int(best is None)
    usage_flag = int(usage_probability <= thresholds.usage)
    final = best if not availability_flag and not usage_flag else None
    return best, availability_flag, usage_flag, final, best_cost


def test_recommendation_matches_exhaustive_search():
    rng = np.random.default_rng(17)
    for _ in range(1000):
        k = int(rng.integers(0, 4))
        prices = rng.integers(0, 10, size=24 + k).astype(float)
        profile = rng.integers(1, 6, size=k + 1).astype(float)
        probabilities = rng.integers(0, 9, size=24) / 8
        usage_probability = float(rng.integers(0, 9) / 8)
        thresholds = Thresholds(float(rng.integers(0, 9) / 8), float(rng.integers(0, 9) / 8))
        device = DeviceSpec("washer", "h1", DeviceRole.SHIFTABLE, 10.0, duration_k=k)
        rec = recommend_device(DAY, device, thresholds, TypicalLoadProfile("washer", profile, 1), prices,
                               probabilities, usage_probability)
        best, availability_flag, usage_flag, final, cost = brute_force(
            prices, profile, probabilities, thresholds, usage_probability)
        assert (rec.best_hour, rec.availability_flag, rec.usage_flag, rec.final_hour) == \
            (best, availability_flag, usage_flag, final)
        if cost is not None:
            assert rec.estimated_cost == pytest.approx(cost)


def three_devices():
    return [
        DeviceSpec("washing_machine", "h1", DeviceRole.SHIFTABLE, 10.0, duration_k=1),
        DeviceSpec("dishwasher", "h1", DeviceRole.SHIFTABLE, 10.0, duration_k=1),
        DeviceSpec("tumble_dryer", "h1", DeviceRole.SHIFTABLE, 10.0, duration_k=1),
        DeviceSpec("kettle", "h1", DeviceRole.AVAILABILITY, 10.0),
    ]


def test_exemplary_three_device_output():
    devices = three_devices()
    prices = np.full(25, 50.0)
    prices[[8, 9]] = 10.0
    present = np.zeros(24)
    present[7:23] = 0.8
    profiles = {d.id: TypicalLoadProfile(d.id, (1.0, 1.0), 5) for d in devices if d.role.is_shiftable}
    usage = {
        "washing_machine": UsageForecast(DAY, "washing_machine", 0.9),
        "dishwasher": UsageForecast(DAY, "dishwasher", 0.05),
        "tumble_dryer": UsageForecast(DAY, "tumble_dryer", 0.1),
    }
    recs = recommend(DAY, devices, Thresholds(0.5, 0.125), profiles, {1: prices},
                     AvailabilityForecast(DAY, present), usage)
    assert [r.device for r in recs] == ["washing_machine", "dishwasher", "tumble_dryer"]
    assert [r.best_hour for r in recs] == [8, 8, 8]
    assert [r.availability_flag for r in recs] == [0, 0, 0]
    assert [r.usage_flag for r in recs] == [0, 1, 1]
    assert [r.final_label for r in recs] == ["8", "no", "no"]
    rows = recommendation_rows(recs)
    assert rows[0]["final_recommendation"] == "8"
    assert rows[1]["estimated_cost"] == pytest.approx(20.0)


def test_device_without_profile_is_skipped():
    devices = three_devices()[:2]
    profiles = {"washing_machine": TypicalLoadProfile("washing_machine", (1.0, 1.0), 2)}
    usage = {d.id: UsageForecast(DAY, d.id, 0.9) for d in devices}
    recs = recommend(DAY, devices, Thresholds(0.5, 0.125), profiles, {1: np.ones(25)},
                     AvailabilityForecast(DAY, np.ones(24)), usage)
    assert [r.device for r in recs] == ["washing_machine"]


def test_user_never_available_sets_availability_flag(washer):
    rec = recommend_device(DAY, washer, Thresholds(0.5, 0.125), TypicalLoadProfile("washer", (1.0, 1.0), 1),
                           np.ones(25), np.full(24, 0.5), 0.9)
    assert rec.availability_flag == 1
    assert rec.best_hour is None and rec.final_hour is None and rec.estimated_cost is None
    assert rec.final_label == "no"


def test_usage_probability_at_threshold_flags_usage(washer):
    rec = recommend_device(DAY, washer, Thresholds(0.5, 0.25), TypicalLoadProfile("washer", (1.0, 1.0), 1),
                           np.arange(25.0), np.ones(24), 0.25)
    assert rec.best_hour == 0
    assert rec.usage_flag == 1 and rec.final_hour is None


def test_cost_scale_applies_to_estimated_cost(washer):
    rec = recommend_device(DAY, washer, Thresholds(0.5, 0.1), TypicalLoadProfile("washer", (1000.0, 500.0), 1),
                           np.full(25, 40.0), np.ones(24), 0.9, cost_scale=1e-6)
    assert rec.estimated_cost == pytest.approx(0.06)


def test_unpriced_windows_are_never_chosen():
    prices = np.ones(25)
    prices[[3, 24]] = np.nan
    costs = window_costs(prices, np.array([1.0, 1.0]))
    assert np.isnan(costs[[2, 3, 23]]).all()
    assert best_start(costs, np.array([2, 3, 4])) == 4
    assert best_start(costs, np.array([2, 23])) is None
    with pytest.raises(DimensionMismatchError):
        window_costs(np.ones(24), np.array([1.0, 1.0]))


def test_ties_go_to_the_earliest_hour():
    costs = np.array([5.0] * 24)
    assert best_start(costs, np.array([9, 4, 17])) == 4
    assert candidate_hours(np.array([0.5, 0.6] + [0.0] * 22), 0.5).tolist() == [1]


def run_on(day, load, hour=18):
    return UsageRun("washer", HourStamp(day, hour), load)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1e4), st.floats(0, 1e4)), min_size=1, max_size=40))
def test_running_profile_equals_batch_mean(loads):
    runs = [run_on(START + timedelta(days=i), load) for i, load in enumerate(loads)]
    running = RunningProfile("washer", 1)
    running.extend(runs)
    batch = typical_profile(runs, 1)
    assert running.profile().run_count == batch.run_count == len(runs)
    assert running.profile().values == pytest.approx(batch.values, rel=1e-9, abs=1e-6)


def test_running_profile_rejects_wrong_length():
    running = RunningProfile("washer", 1)
    with pytest.raises(NoHistoryError):
        running.profile()
    with pytest.raises(DimensionMismatchError):
        running.add(run_on(START, (1.0, 2.0, 3.0)))


def test_profiles_only_use_runs_before_each_date():
    runs = [run_on(START, (2.0, 2.0)), run_on(START + timedelta(days=1), (4.0, 0.0), hour=0),
            run_on(START + timedelta(days=3), (9.0, 9.0))]
    dates = [START + timedelta(days=i) for i in range(5)]
    profiles = profiles_by_date(runs, dates, "washer", 1)
    assert START not in profiles
    assert profiles[dates[1]].values == (2.0, 2.0)
    assert profiles[dates[2]].values == (3.0, 1.0)
    assert profiles[dates[3]].run_count == 2
    assert profiles[dates[4]].values == pytest.approx((5.0, 11.0 / 3.0))
    assert typical_profile(runs, 1, cutoff=dates[2]).values == (3.0, 1.0)
    with pytest.raises(NoHistoryError):
        typical_profile(runs, 1, cutoff=START)


def hourly_curve(first, prices):
    hours = np.datetime64(first.isoformat(), "h") + np.arange(len(prices), dtype="timedelta64[h]")
    return PriceCurve(hours, prices)


def test_price_vector_needs_every_hour():
    curve = hourly_curve(DAY, np.arange(25.0))
    assert price_vector(curve, DAY, 1).tolist() == list(np.arange(25.0))
    with pytest.raises(IncompleteCoverageError) as info:
        price_vector(curve, DAY, 2)
    assert info.value.missing == (HourStamp(DAY + timedelta(days=1), 1),)
    partial = partial_price_vector(curve, DAY, 2)
    assert np.isnan(partial[-1]) and not np.isnan(partial[:-1]).any()
    assert price_coverage(curve) == (DAY, DAY + timedelta(days=1))


def test_availability_forecast_falls_back_without_history(closed_form_household):
    matrix = closed_form_household.matrix
    first = forecast_availability(matrix, matrix.dates[0])
    assert first.fallback
    assert first.probabilities.tolist() == [0.0] * 24
    early = forecast_availability(matrix, matrix.dates[3])
    assert early.fallback and early.probabilities.tolist() == [1.0] * 24
    assert base_rate_by_hour(matrix, matrix.dates[3]).tolist() == [1.0] * 24


def test_always_present_user_gets_high_probabilities(closed_form_household):
    matrix = closed_form_household.matrix
    forecast = forecast_availability(matrix, matrix.dates[20])
    assert not forecast.fallback
    assert forecast.trained_through == matrix.dates[19]
    assert (forecast.probabilities >= 0.5).all()


def test_availability_forecast_ignores_the_forecast_day(noisy_household):
    matrix = noisy_household.matrix
    day = matrix.dates[25]
    flipped = matrix.values.copy()
    flipped[25:] = 1 - flipped[25:]
    altered = ActivityMatrix(matrix.dates, flipped)
    assert np.array_equal(forecast_availability(matrix, day).probabilities,
                          forecast_availability(altered, day).probabilities)


def test_usage_forecast(noisy_household):
    prepared = noisy_household
    targets, matrix = prepared.usage_targets, prepared.matrix
    fallback = forecast_usage(targets, matrix, "appliance", matrix.dates[2])
    assert fallback.fallback
    assert fallback.probability == base_rate(targets, "appliance", matrix.dates[2])
    forecast = forecast_usage(targets, matrix, "appliance", matrix.dates[30])
    assert not forecast.fallback
    assert 0.0 < forecast.probability < 1.0
    assert forecast.training_rows == 30 - 7
    with pytest.raises(ValueError):
        UsageForecast(DAY, "washer", 1.5)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=24, max_size=24), st.floats(0, 1), st.floats(0, 1))
def test_raising_the_availability_threshold_never_adds_hours(probabilities, low, high):
    low, high = sorted((low, high))
    assert set(candidate_hours(np.array(probabilities), high)) <= set(candidate_hours(np.array(probabilities), low))


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_raising_the_usage_threshold_never_clears_the_usage_flag(usage_probability, low, high):
    low, high = sorted((low, high))
    profile = TypicalLoadProfile("washer", (1.0,), 1)
    device = DeviceSpec("washer", "h1", DeviceRole.SHIFTABLE, 10.0, duration_k=0)
    flags = [recommend_device(DAY, device, Thresholds(0.5, t), profile, np.ones(24), np.ones(24),
                              usage_probability).usage_flag for t in (low, high)]
    assert flags[1] >= flags[0]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 200), min_size=26, max_size=26),
       st.lists(st.integers(0, 1), min_size=24, max_size=24),
       st.sampled_from([0.25, 0.5, 2.0, 3.0, 10.0, 1000.0]))
def test_scaling_prices_keeps_the_best_hour(prices, present, scale):
    device = DeviceSpec("washer", "h1", DeviceRole.SHIFTABLE, 10.0, duration_k=2)
    profile = TypicalLoadProfile("washer", (700.0, 300.0, 50.0), 4)
    prices = np.array(prices, dtype=float)
    present = np.array(present, dtype=float)
    plain = recommend_device(DAY, device, Thresholds(0.5, 0.1), profile, prices, present, 0.9)
    scaled = recommend_device(DAY, device, Thresholds(0.5, 0.1), profile, prices * scale, present, 0.9)
    assert scaled.best_hour == plain.best_hour
    assert scaled.final_hour == plain.final_hour


def test_planted_evening_presence_is_learned():
    prepared = generate_synthetic(SyntheticConfig(days=60, availability_hours=tuple(range(18, 23)))).prepare()
    forecast = forecast_availability(prepared.matrix, prepared.matrix.dates[-1])
    assert not forecast.fallback
    evening = np.zeros(24, dtype=bool)
    evening[18:23] = True
    assert forecast.probabilities[evening].mean() > forecast.probabilities[~evening].mean()
    assert (forecast.probabilities[evening] >= 0.5).all()


def test_planted_saturday_usage_is_learned():
    prepared = generate_synthetic(SyntheticConfig(days=140, usage_weekdays=(5,))).prepare()
    last_week = prepared.matrix.dates[-7:]
    probability = {day.weekday(): forecast_usage(prepared.usage_targets, prepared.matrix, "appliance", day).probability
                   for day in last_week}
    assert sorted(probability) == list(range(7))
    saturday = probability.pop(5)
    assert all(saturday > p for p in probability.values())
