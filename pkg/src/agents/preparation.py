"""Preparation Agent: hourly load series to targets, usage runs and feature rows."""
import logging
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..core.errors import InsufficientHistoryError
from ..core.types import (
    HOURS_PER_DAY, ActivityMatrix, DailyUsageTargets, DeviceSpec, HourlyLoadSeries,
    HourStamp, PriceCurve, UsageRun,
)
from ..data.ingest import GapReport, fill_gaps, mask_runs
from ..utils.constants import LAG_DAYS, MAX_GAP_HOURS, RECENT_HOURS

logger = logging.getLogger(__name__)

DAYS_PER_WEEK = 7


@dataclass(frozen=True, eq=False)
class FeatureRow:
    features: np.ndarray
    label: int
    date: date
    hour: Optional[int] = None
    device: Optional[str] = None

    def __post_init__(self) -> None:
        features = np.array(self.features, dtype=float)
        if np.any(np.isnan(features)):
            raise ValueError(f"Feature row for {self.date} holds NaN")
        features.setflags(write=False)
        object.__setattr__(self, "features", features)


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Stacked feature rows of one model family, keyed by date (and hour)."""
    X: np.ndarray
    y: np.ndarray
    dates: np.ndarray
    hours: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.y)

    def before(self, cutoff: date) -> "FeatureMatrix":
        return self._select(self.dates < np.datetime64(cutoff, "D"))

    def on(self, day: date) -> "FeatureMatrix":
        return self._select(self.dates == np.datetime64(day, "D"))

    def within(self, days: Sequence[date]) -> "FeatureMatrix":
        wanted = np.array(list(days), dtype="datetime64[D]")
        return self._select(np.isin(self.dates, wanted))

    def _select(self, mask: np.ndarray) -> "FeatureMatrix":
        return FeatureMatrix(self.X[mask], self.y[mask], self.dates[mask],
                             None if self.hours is None else self.hours[mask])

    @classmethod
    def from_rows(cls, rows: Sequence[FeatureRow]) -> "FeatureMatrix":
        if not rows:
            return cls(np.zeros((0, 0)), np.zeros(0, dtype=int), np.zeros(0, dtype="datetime64[D]"))
        hours = None if rows[0].hour is None else np.array([r.hour for r in rows], dtype=int)
        return cls(np.vstack([r.features for r in rows]), np.array([r.label for r in rows], dtype=int),
                   np.array([r.date for r in rows], dtype="datetime64[D]"), hours)


@dataclass
class PreparedHousehold:
    household: str
    devices: List[DeviceSpec]
    series: Dict[str, HourlyLoadSeries]
    matrix: ActivityMatrix
    usage_targets: DailyUsageTargets
    runs: Dict[str, List[UsageRun]]
    prices: PriceCurve
    excluded_days: Tuple[date, ...] = ()
    gaps: GapReport = field(default_factory=GapReport)

    @property
    def shiftable(self) -> List[DeviceSpec]:
        return [d for d in self.devices if d.role.is_shiftable]

    @property
    def dates(self) -> Tuple[date, ...]:
        return self.matrix.dates

    def device(self, device_id: str) -> DeviceSpec:
        for spec in self.devices:
            if spec.id == device_id:
                return spec
        raise KeyError(device_id)


def detect_active_hours(series: HourlyLoadSeries, spec: DeviceSpec) -> np.ndarray:
    """1 where the hour's energy strictly exceeds the power threshold held for one hour."""
    energy = np.nan_to_num(series.energy_wh, nan=0.0)
    return (energy > spec.on_threshold_watts).astype(np.uint8)


def _day_of(start: datetime, offset: int) -> date:
    return (start + timedelta(hours=offset)).date()


def _as_days(start: datetime, values: np.ndarray) -> Tuple[List[date], np.ndarray]:
    if start.hour or len(values) % HOURS_PER_DAY:
        raise ValueError("Hourly sequences must cover whole days starting at midnight")
    n_days = len(values) // HOURS_PER_DAY
    return [start.date() + timedelta(days=i) for i in range(n_days)], values.reshape(n_days, HOURS_PER_DAY)


def build_availability_targets(active: Mapping[str, np.ndarray], start: datetime,
                               excluded_days: Sequence[date] = ()) -> ActivityMatrix:
    """Hourly logical OR across availability devices, one row per covered day."""
    if not active:
        raise ValueError("At least one availability device is required")
    combined = np.zeros_like(next(iter(active.values())), dtype=np.uint8)
    for values in active.values():
        combined |= np.asarray(values, dtype=np.uint8)
    days, rows = _as_days(start, combined)
    excluded = set(excluded_days)
    keep = [i for i, d in enumerate(days) if d not in excluded]
    return ActivityMatrix(tuple(days[i] for i in keep), rows[keep])


def active_blocks(active: np.ndarray) -> List[Tuple[int, int]]:
    """(start offset, length) of every maximal block of consecutive active hours."""
    return mask_runs(np.asarray(active, dtype=bool))


def resolve_duration(active: np.ndarray, spec: DeviceSpec) -> DeviceSpec:
    """Fill in duration_k as the median block length minus one when not configured."""
    if spec.duration_k is not None:
        return spec
    lengths = [length for _, length in active_blocks(active)]
    if not lengths:
        logger.warning(f"Device {spec.id}: no usage detected, defaulting duration_k to 0")
        return spec.with_duration(0)
    duration_k = max(int(np.floor(np.median(lengths) + 0.5)) - 1, 0)
    logger.info(f"Device {spec.id}: duration_k={duration_k} from median of {len(lengths)} runs")
    return spec.with_duration(duration_k)


def extract_runs(active: np.ndarray, series: HourlyLoadSeries, spec: DeviceSpec) -> List[UsageRun]:
    """One run per block of active hours, with a load vector of exactly k+1 hours.

    Hours of the window past the end of the block are zero; blocks longer than
    k+1 hours are truncated.
    """
    window = spec.k + 1
    energy = np.nan_to_num(series.energy_wh, nan=0.0)
    runs = []
    per_day: Dict[date, int] = {}
    for start, length in active_blocks(active):
        load = np.zeros(window)
        take = min(length, window)
        load[:take] = energy[start:start + take]
        stamp = HourStamp.from_datetime(series.start + timedelta(hours=start))
        index = per_day.get(stamp.date, 0)
        per_day[stamp.date] = index + 1
        runs.append(UsageRun(spec.id, stamp, tuple(load.tolist()), index))
    return runs


def build_usage_targets(runs: Mapping[str, Sequence[UsageRun]], dates: Sequence[date]) -> DailyUsageTargets:
    """1 for (device, date) when at least one run of the device starts that date."""
    index = {d: i for i, d in enumerate(dates)}
    values = {}
    for device, device_runs in runs.items():
        column = np.zeros(len(dates), dtype=np.uint8)
        for run in device_runs:
            position = index.get(run.date)
            if position is not None:
                column[position] = 1
        values[device] = column
    return DailyUsageTargets(tuple(dates), values)


def _one_hot(position: int, size: int) -> np.ndarray:
    vector = np.zeros(size)
    vector[position] = 1.0
    return vector


def _require_days(container, target_date: date, lag_days: int) -> List[date]:
    lags = [target_date - timedelta(days=i) for i in range(1, lag_days + 1)]
    missing = [d for d in lags if d not in container]
    if missing:
        raise InsufficientHistoryError(f"No history for {missing[0]} (needed by {target_date})")
    return lags


def _availability_block(matrix: ActivityMatrix, target_date: date, lag_days: int,
                        recent_hours: int) -> np.ndarray:
    """Feature vectors of all 24 hours of ``target_date``."""
    lags = _require_days(matrix, target_date, max(lag_days, 2 if recent_hours else 1))
    lag_rows = np.stack([matrix.row(d) for d in lags[:lag_days]], axis=1).astype(float)
    # Two days back to back, so hour h-j of day d-1 may reach into day d-2
    yesterday = np.concatenate([matrix.row(lags[1]), matrix.row(lags[0])]).astype(float)
    hours = np.arange(HOURS_PER_DAY)
    recent = np.stack([yesterday[HOURS_PER_DAY + hours - j] for j in range(1, recent_hours + 1)], axis=1)
    weekday = np.tile(_one_hot(target_date.weekday(), DAYS_PER_WEEK), (HOURS_PER_DAY, 1))
    return np.hstack([np.eye(HOURS_PER_DAY), weekday, lag_rows, recent])


def availability_features(matrix: ActivityMatrix, target_date: date, target_hour: int,
                          lag_days: int = LAG_DAYS, recent_hours: int = RECENT_HOURS) -> FeatureRow:
    """Hour and weekday one-hots, same-hour daily lags and the hours before it on day d-1.

    The label is the matrix entry for (target_date, target_hour), or 0 when the
    target date itself is not covered (forecasting a day without targets).
    """
    block = _availability_block(matrix, target_date, lag_days, recent_hours)
    label = matrix.get(target_date, target_hour) if target_date in matrix else 0
    return FeatureRow(block[target_hour], label, target_date, hour=target_hour)


def availability_feature_matrix(matrix: ActivityMatrix, lag_days: int = LAG_DAYS,
                                recent_hours: int = RECENT_HOURS,
                                extra_dates: Sequence[date] = ()) -> FeatureMatrix:
    """Feature rows for every covered (date, hour) with enough history.

    ``extra_dates`` adds rows for uncovered dates (label 0), used to forecast a
    day past the end of the data.
    """
    blocks, labels, dates = [], [], []
    for day in list(matrix.dates) + [d for d in extra_dates if d not in matrix]:
        try:
            block = _availability_block(matrix, day, lag_days, recent_hours)
        except InsufficientHistoryError:
            continue
        blocks.append(block)
        labels.append(matrix.row(day) if day in matrix else np.zeros(HOURS_PER_DAY, dtype=np.uint8))
        dates.extend([day] * HOURS_PER_DAY)
    if not blocks:
        dim = HOURS_PER_DAY + DAYS_PER_WEEK + lag_days + recent_hours
        return FeatureMatrix(np.zeros((0, dim)), np.zeros(0, dtype=int),
                             np.zeros(0, dtype="datetime64[D]"), np.zeros(0, dtype=int))
    return FeatureMatrix(np.vstack(blocks), np.concatenate(labels).astype(int),
                         np.array(dates, dtype="datetime64[D]"), np.tile(np.arange(HOURS_PER_DAY), len(blocks)))


def usage_features(targets: DailyUsageTargets, matrix: ActivityMatrix, device: str,
                   target_date: date, lag_days: int = LAG_DAYS) -> FeatureRow:
    """Weekday one-hot, daily usage lags and daily availability-fraction lags."""
    lags = _require_days(targets, target_date, lag_days)
    usage = [float(targets.get(device, d)) for d in lags]
    presence = [float(matrix.row(d).mean()) if d in matrix else 0.0 for d in lags]
    features = np.concatenate([_one_hot(target_date.weekday(), DAYS_PER_WEEK), usage, presence])
    label = targets.get(device, target_date) if target_date in targets else 0
    return FeatureRow(features, label, target_date, device=device)


def usage_feature_matrix(targets: DailyUsageTargets, matrix: ActivityMatrix, device: str,
                         lag_days: int = LAG_DAYS, extra_dates: Sequence[date] = ()) -> FeatureMatrix:
    rows = []
    for day in list(targets.dates) + [d for d in extra_dates if d not in targets]:
        try:
            rows.append(usage_features(targets, matrix, device, day, lag_days))
        except InsufficientHistoryError:
            continue
    if not rows:
        return FeatureMatrix(np.zeros((0, DAYS_PER_WEEK + 2 * lag_days)), np.zeros(0, dtype=int),
                             np.zeros(0, dtype="datetime64[D]"))
    return FeatureMatrix.from_rows(rows)


def excluded_days_of(series: Mapping[str, HourlyLoadSeries]) -> Tuple[date, ...]:
    """Days on which any device still has a missing hour."""
    excluded = set()
    for s in series.values():
        for offset in np.flatnonzero(s.missing):
            excluded.add(_day_of(s.start, int(offset)))
    return tuple(sorted(excluded))


def prepare_household(household: str, devices: Sequence[DeviceSpec],
                      series: Mapping[str, HourlyLoadSeries], prices: PriceCurve,
                      max_gap_hours: int = MAX_GAP_HOURS) -> PreparedHousehold:
    """Gap-fill, detect usage, resolve durations and build every target."""
    gaps = GapReport()
    filled = {device: fill_gaps(s, max_gap_hours, gaps) for device, s in series.items()}
    excluded = excluded_days_of(filled)
    start = next(iter(filled.values())).start

    active = {spec.id: detect_active_hours(filled[spec.id], spec) for spec in devices}
    matrix = build_availability_targets(
        {spec.id: active[spec.id] for spec in devices if spec.role.signals_availability}, start, excluded)

    excluded_set = set(excluded)
    resolved, runs = [], {}
    for spec in devices:
        if spec.role.is_shiftable:
            spec = resolve_duration(active[spec.id], spec)
            runs[spec.id] = [r for r in extract_runs(active[spec.id], filled[spec.id], spec)
                             if r.date not in excluded_set]
        resolved.append(spec)
    usage_targets = build_usage_targets(runs, matrix.dates)

    if excluded:
        logger.warning(f"Household {household}: excluding {len(excluded)} days with long gaps")
    logger.info(f"Household {household}: {len(matrix)} usable days, "
                f"{sum(len(r) for r in runs.values())} usage runs")
    return PreparedHousehold(household, resolved, filled, matrix, usage_targets, runs,
                             prices, excluded, gaps)

