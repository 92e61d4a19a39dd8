"""Raw file ingestion: REFIT-style consumption CSVs and day-ahead price CSVs.

Consumption is resampled to hourly energy by integrating the piecewise-constant
power signal: each sample's wattage holds until the next sample, for at most
``max_hold_seconds``; the last sample of a file holds to the end of its hour.
Hours without any sample are missing (NaN).
"""
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
import pandas as pd

from ..core.errors import (
    ChannelMismatchError, EmptyFileError, IngestError, InvalidPriceError,
    NonMonotonicTimestampsError,
)
from ..core.types import HOURS_PER_DAY, HourlyLoadSeries, PriceCurve
from ..utils.constants import (
    MAX_GAP_HOURS, MAX_HOLD_SECONDS, MAX_PRICE_INTERPOLATION_HOURS, PRICE_UNIT_FACTORS,
)
from .household import HouseholdConfig

logger = logging.getLogger(__name__)

SECONDS_PER_HOUR = 3600
TIMESTAMP_OFFSET = re.compile(r"(Z|[+-]\d{2}:?\d{2})$")
MAX_LOGGED_ROWS = 5


@dataclass
class ParsedConsumption:
    """Hourly series per configured device plus row-level bookkeeping."""
    series: Dict[str, HourlyLoadSeries]
    rows_read: int = 0
    malformed_rows: int = 0
    backwards_rows: int = 0
    missing_hours: int = 0


@dataclass
class GapReport:
    filled_gaps: int = 0
    filled_hours: int = 0
    long_gaps: int = 0
    missing_hours: int = 0
    long_gap_spans: List[Tuple[datetime, int]] = field(default_factory=list)


def mask_runs(mask: np.ndarray) -> List[Tuple[int, int]]:
    """(start, length) of every run of True values."""
    if not mask.any():
        return []
    padded = np.concatenate(([False], mask, [False])).astype(np.int8)
    edges = np.diff(padded)
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    return [(int(s), int(e - s)) for s, e in zip(starts, ends)]


def integrate_hourly(unix: np.ndarray, watts: np.ndarray,
                     max_hold_seconds: float = MAX_HOLD_SECONDS) -> Tuple[int, np.ndarray]:
    """Time-weighted hourly energy (Wh) of a piecewise-constant power signal.

    Returns the unix time of the first hour start and one value per hour; hours
    that contain no sample are NaN.
    """
    unix = np.asarray(unix, dtype=float)
    watts = np.asarray(watts, dtype=float)
    first_hour = int(np.floor(unix[0] / SECONDS_PER_HOUR)) * SECONDS_PER_HOUR
    last_hour = int(np.floor(unix[-1] / SECONDS_PER_HOUR)) * SECONDS_PER_HOUR
    n_hours = (last_hour - first_hour) // SECONDS_PER_HOUR + 1

    hold_until = np.empty_like(unix)
    hold_until[:-1] = unix[1:]
    hold_until[-1] = last_hour + SECONDS_PER_HOUR
    hold_until = np.minimum(hold_until, unix + max_hold_seconds)

    # Cumulative energy is linear over each hold and flat after it
    cumulative = np.concatenate(([0.0], np.cumsum(watts * (hold_until - unix))))
    knots = np.empty(2 * len(unix))
    knots[0::2] = unix
    knots[1::2] = hold_until
    energy_at_knots = np.empty(2 * len(unix))
    energy_at_knots[0::2] = cumulative[:-1]
    energy_at_knots[1::2] = cumulative[1:]

    boundaries = first_hour + SECONDS_PER_HOUR * np.arange(n_hours + 1, dtype=float)
    energy = np.diff(np.interp(boundaries, knots, energy_at_knots)) / SECONDS_PER_HOUR

    hour_of_sample = ((unix - first_hour) // SECONDS_PER_HOUR).astype(int)
    sampled = np.bincount(hour_of_sample, minlength=n_hours) > 0
    energy[~sampled] = np.nan
    return first_hour, np.maximum(energy, 0.0)


def _to_local_grid(first_hour_unix: int, columns: Mapping[str, np.ndarray],
                   timezone: Optional[str]) -> pd.DataFrame:
    """Place hourly UTC values on a naive local grid of whole days."""
    n_hours = len(next(iter(columns.values())))
    index = pd.date_range(pd.Timestamp(first_hour_unix, unit="s"), periods=n_hours, freq="h")
    frame = pd.DataFrame(dict(columns), index=index)
    if timezone:
        local = index.tz_localize("UTC").tz_convert(timezone).tz_localize(None)
        frame.index = local
        duplicated = frame.index.duplicated(keep="first")
        if duplicated.any():
            logger.debug(f"Dropping {int(duplicated.sum())} duplicated local hours (DST fall-back)")
        frame = frame[~duplicated]
    first_day = frame.index[0].normalize()
    last_day = frame.index[-1].normalize()
    full_grid = pd.date_range(first_day, last_day + pd.Timedelta(hours=HOURS_PER_DAY - 1), freq="h")
    return frame.reindex(full_grid)


def parse_consumption(path, config: HouseholdConfig,
                      max_hold_seconds: float = MAX_HOLD_SECONDS) -> ParsedConsumption:
    """Read a REFIT-layout CSV (Time,Unix,Aggregate,Appliance1..N) into hourly series."""
    path = Path(path)
    try:
        header = pd.read_csv(path, nrows=0, encoding="utf-8")
    except pd.errors.EmptyDataError as e:
        raise EmptyFileError("file is empty", str(path)) from e
    columns = [str(c).strip() for c in header.columns]
    wanted = [m.column for m in config.channels]
    absent = [c for c in ["Unix"] + wanted if c not in columns]
    if absent:
        raise ChannelMismatchError(
            f"header {','.join(columns)} lacks configured channels {','.join(absent)}", str(path), 1)

    raw = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    raw.columns = columns
    if raw.empty:
        raise EmptyFileError("no data rows below the header", str(path))

    numeric = raw[["Unix"] + wanted].apply(lambda column: pd.to_numeric(column.str.strip(), errors="coerce"))
    malformed = numeric.isna().any(axis=1) | (numeric[wanted] < 0).any(axis=1)
    for row in np.flatnonzero(malformed.to_numpy())[:MAX_LOGGED_ROWS]:
        logger.warning(f"{path}:{row + 2}: skipping malformed row")
    numeric = numeric[~malformed]

    unix = numeric["Unix"].to_numpy(dtype=float)
    if len(unix):
        previous_max = np.concatenate(([-np.inf], np.maximum.accumulate(unix)[:-1]))
        backwards = unix < previous_max
    else:
        backwards = np.zeros(0, dtype=bool)
    for row in numeric.index[backwards][:MAX_LOGGED_ROWS]:
        logger.warning(f"{path}:{row + 2}: skipping row whose Unix time goes backwards")
    numeric = numeric[~backwards]

    if numeric.empty:
        raise EmptyFileError("no usable data rows", str(path))

    unix = numeric["Unix"].to_numpy(dtype=float)
    hourly = {}
    first_hour = 0
    for mapping in config.channels:
        first_hour, energy = integrate_hourly(unix, numeric[mapping.column].to_numpy(dtype=float),
                                              max_hold_seconds)
        hourly[mapping.device.id] = energy

    grid = _to_local_grid(first_hour, hourly, config.timezone)
    start = grid.index[0].to_pydatetime()
    series = {device: HourlyLoadSeries(device, start, grid[device].to_numpy(dtype=float))
              for device in hourly}

    result = ParsedConsumption(
        series=series,
        rows_read=len(raw),
        malformed_rows=int(malformed.sum()),
        backwards_rows=int(backwards.sum()),
        missing_hours=int(grid.isna().any(axis=1).sum()),
    )
    if result.malformed_rows or result.backwards_rows:
        logger.warning(f"{path}: skipped {result.malformed_rows} malformed and "
                       f"{result.backwards_rows} out-of-order rows of {result.rows_read}")
    logger.info(f"Parsed {len(series)} devices over {len(grid) // HOURS_PER_DAY} days from {path.name}")
    return result


def fill_gaps(series: HourlyLoadSeries, max_gap_hours: int = MAX_GAP_HOURS,
              report: Optional[GapReport] = None) -> HourlyLoadSeries:
    """Zero-fill missing runs of at most ``max_gap_hours``; longer runs stay missing."""
    if max_gap_hours < 0:
        raise ValueError(f"max_gap_hours must be >= 0, got {max_gap_hours}")
    energy = np.array(series.energy_wh, dtype=float)
    for start, length in mask_runs(np.isnan(energy)):
        if length <= max_gap_hours:
            energy[start:start + length] = 0.0
            if report is not None:
                report.filled_gaps += 1
                report.filled_hours += length
        elif report is not None:
            report.long_gaps += 1
            report.missing_hours += length
            report.long_gap_spans.append((series.hours[start].astype(datetime), length))
    return series.with_energy(energy)


def _strip_offset(text: str) -> str:
    return TIMESTAMP_OFFSET.sub("", text.strip())


def parse_prices(path, unit: str = "per_MWh",
                 max_interpolation_hours: int = MAX_PRICE_INTERPOLATION_HOURS) -> PriceCurve:
    """Read a ``timestamp,price`` CSV into a strictly increasing hourly curve per MWh.

    Timestamps are read as naive wall-clock hours (any UTC offset is dropped),
    so a DST fall-back shows up as a duplicated hour and keeps its first value;
    a spring-forward hole is a gap, linearly interpolated when short enough.
    """
    path = Path(path)
    if unit not in PRICE_UNIT_FACTORS:
        raise IngestError(f"unknown price unit '{unit}'", str(path))
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError as e:
        raise EmptyFileError("file is empty", str(path)) from e
    raw.columns = [str(c).strip() for c in raw.columns]
    if "timestamp" not in raw.columns or "price" not in raw.columns:
        raise IngestError(f"expected columns timestamp,price, got {','.join(raw.columns)}", str(path), 1)
    if raw.empty:
        raise EmptyFileError("no data rows below the header", str(path))

    stamps = pd.to_datetime(raw["timestamp"].map(_strip_offset), errors="coerce")
    prices = pd.to_numeric(raw["price"].str.strip(), errors="coerce")
    for label, bad in (("unparseable timestamp", stamps.isna()), ("NaN price", prices.isna())):
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            raise InvalidPriceError(label, str(path), row + 2)
    off_hour = (stamps.dt.minute != 0) | (stamps.dt.second != 0)
    if off_hour.any():
        row = int(np.flatnonzero(off_hour.to_numpy())[0])
        raise InvalidPriceError("timestamp is not an hour start", str(path), row + 2)

    hours = stamps.to_numpy(dtype="datetime64[h]")
    hour_numbers = hours.astype(np.int64)
    running_max = np.maximum.accumulate(hour_numbers)
    backwards = hour_numbers[1:] < running_max[:-1]
    if backwards.any():
        row = int(np.flatnonzero(backwards)[0]) + 1
        raise NonMonotonicTimestampsError(f"timestamp {hours[row]} goes backwards", str(path), row + 2)
    keep = np.concatenate(([True], hour_numbers[1:] != running_max[:-1]))
    if not keep.all():
        logger.debug(f"{path}: collapsed {int((~keep).sum())} duplicated hours, keeping the first value")
    series = pd.Series(prices.to_numpy(dtype=float)[keep] * PRICE_UNIT_FACTORS[unit],
                       index=pd.DatetimeIndex(hours[keep]))

    full = series.reindex(pd.date_range(series.index[0], series.index[-1], freq="h"))
    gaps = []
    interpolated = full.interpolate(method="linear", limit_area="inside")
    values = full.to_numpy(dtype=float)
    for start, length in mask_runs(np.isnan(values)):
        gaps.append((full.index[start].to_pydatetime(), length))
        if length <= max_interpolation_hours:
            values[start:start + length] = interpolated.to_numpy()[start:start + length]
        else:
            logger.warning(f"{path}: {length}-hour price gap from {full.index[start]} left unfilled")
    present = ~np.isnan(values)
    curve = PriceCurve(full.index.to_numpy(dtype="datetime64[h]")[present], values[present],
                       source_unit=unit, gaps=tuple(gaps))
    logger.info(f"Parsed {len(curve)} hourly prices ({unit}) with {len(gaps)} gaps from {path.name}")
    return curve


def write_refit_csv(path, series_by_column: Mapping[str, HourlyLoadSeries]) -> None:
    """Write hourly series as a REFIT-layout CSV with one sample per hour start.

    Each sample's wattage equals the hour's energy, so re-parsing the file with
    ``parse_consumption`` reproduces the series. Hours missing in any channel
    are left without a sample.
    """
    columns = list(series_by_column)
    first = next(iter(series_by_column.values()))
    frame = pd.DataFrame({column: s.energy_wh for column, s in series_by_column.items()},
                         index=pd.DatetimeIndex(first.hours))
    frame = frame.dropna()
    unix = (frame.index - pd.Timestamp(0)) // pd.Timedelta(seconds=1)
    appliance_columns = [c for c in columns if c != "Aggregate"]
    if "Aggregate" in columns:
        aggregate = frame["Aggregate"].to_numpy()
    else:
        aggregate = frame[appliance_columns].sum(axis=1).to_numpy()
    out = pd.DataFrame({
        "Time": frame.index.strftime("%Y-%m-%d %H:%M:%S"),
        "Unix": np.asarray(unix, dtype=np.int64),
        "Aggregate": aggregate,
    })
    for column in appliance_columns:
        out[column] = frame[column].to_numpy()
    out.to_csv(path, index=False, lineterminator="\n")


def write_price_csv(path, curve: PriceCurve) -> None:
    factor = PRICE_UNIT_FACTORS[curve.source_unit]
    out = pd.DataFrame({
        "timestamp": pd.DatetimeIndex(curve.hours).strftime("%Y-%m-%dT%H:%M:%S"),
        "price": curve.prices / factor,
    })
    out.to_csv(path, index=False, lineterminator="\n")
