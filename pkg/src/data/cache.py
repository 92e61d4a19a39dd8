"""Prepared-dataset cache.

Each household is stored under ``<cache dir>/<content hash>/`` where the hash
covers the raw consumption and price bytes plus every setting that changes the
preparation result. The directory holds plain CSV tables and a JSON manifest;
nothing in it depends on wall-clock time, so re-ingesting unchanged inputs
rewrites identical bytes.
"""
import hashlib
import json
import logging
import os
from dataclasses import dataclass
from datetime import date, datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from packaging import version

from ..agents.preparation import PreparedHousehold, prepare_household
from ..core.errors import CacheMissingError, ConfigError
from ..core.types import (
    HOURS_PER_DAY, ActivityMatrix, DailyUsageTargets, DeviceSpec, HourlyLoadSeries,
    HourStamp, PriceCurve, UsageRun,
)
from ..utils.constants import (
    CACHE_DIR_ENV, CACHE_FORMAT_VERSION, CACHE_MANIFEST, DEFAULT_CACHE_DIR, MAX_GAP_HOURS,
    MAX_HOLD_SECONDS,
)
from .household import HouseholdConfig
from .ingest import GapReport, ParsedConsumption, parse_consumption, parse_prices

logger = logging.getLogger(__name__)

HASH_CHUNK = 1 << 20
LOAD_FILE = 'load.csv'
PRICES_FILE = 'prices.csv'
ACTIVITY_FILE = 'activity.csv'
USAGE_FILE = 'usage_targets.csv'
RUNS_FILE = 'runs.csv'
HOUR_COLUMNS = [f"h{hour:02d}" for hour in range(HOURS_PER_DAY)]


@dataclass
class IngestSummary:
    household: str
    key: str
    path: Path
    devices: List[DeviceSpec]
    first_day: Optional[date]
    last_day: Optional[date]
    usable_days: int
    excluded_days: int
    rows_read: int
    malformed_rows: int
    gaps: GapReport
    price_gaps: int
    runs: Dict[str, int]

    def lines(self) -> List[str]:
        lines = [
            f"household: {self.household}",
            f"cache: {self.key}",
            f"coverage: {self.first_day} .. {self.last_day} ({self.usable_days} usable days, "
            f"{self.excluded_days} excluded)",
            f"rows read: {self.rows_read} ({self.malformed_rows} malformed)",
            f"gaps: {self.gaps.filled_gaps} filled ({self.gaps.filled_hours} h), "
            f"{self.gaps.long_gaps} long ({self.gaps.missing_hours} h)",
            f"price gaps: {self.price_gaps}",
        ]
        for spec in self.devices:
            detail = f"k={spec.duration_k}, runs={self.runs[spec.id]}" if spec.role.is_shiftable else ""
            lines.append(f"device {spec.id}: {spec.role.value} {detail}".rstrip())
        return lines


def resolve_cache_dir(cache_dir=None) -> Path:
    if cache_dir is not None:
        return Path(cache_dir)
    return Path(os.environ.get(CACHE_DIR_ENV) or DEFAULT_CACHE_DIR)


def _hash_file(digest, path: Path) -> None:
    with open(path, 'rb') as handle:
        while chunk := handle.read(HASH_CHUNK):
            digest.update(chunk)


def content_key(config: HouseholdConfig, max_gap_hours: int = MAX_GAP_HOURS,
                max_hold_seconds: int = MAX_HOLD_SECONDS) -> str:
    """SHA-256 over the raw files and the preparation settings; file locations do not count."""
    settings = config.to_dict()
    settings.pop("consumption_file")
    settings.pop("price_file")
    settings.update(max_gap_hours=max_gap_hours, max_hold_seconds=max_hold_seconds,
                    format_version=CACHE_FORMAT_VERSION)
    digest = hashlib.sha256(json.dumps(settings, sort_keys=True).encode("utf-8"))
    for path in (config.consumption_file, config.price_file):
        _hash_file(digest, Path(path))
    return digest.hexdigest()[:24]


def _write_csv(frame: pd.DataFrame, path: Path) -> None:
    frame.to_csv(path, index=False, lineterminator="\n")


def _format_compatible(found: str) -> bool:
    try:
        return version.parse(found).major == version.parse(CACHE_FORMAT_VERSION).major
    except version.InvalidVersion:
        return False


class PreparedCache:
    def __init__(self, cache_dir=None):
        self.cache_dir = resolve_cache_dir(cache_dir)

    def entry_dir(self, key: str) -> Path:
        return self.cache_dir / key

    def ingest(self, config: HouseholdConfig, max_gap_hours: int = MAX_GAP_HOURS,
               max_hold_seconds: int = MAX_HOLD_SECONDS) -> Tuple[PreparedHousehold, IngestSummary]:
        """Parse and prepare a household, then (re)write its cache entry."""
        config.check_files()
        parsed = parse_consumption(config.consumption_file, config, max_hold_seconds)
        prices = parse_prices(config.price_file, config.price_unit)
        prepared = prepare_household(config.household, config.devices, parsed.series, prices, max_gap_hours)
        key = content_key(config, max_gap_hours, max_hold_seconds)
        path = self.store(key, prepared, parsed)
        return prepared, self._summary(key, path, prepared, parsed)

    def store(self, key: str, prepared: PreparedHousehold, parsed: ParsedConsumption) -> Path:
        entry = self.entry_dir(key)
        entry.mkdir(parents=True, exist_ok=True)

        devices = [spec.id for spec in prepared.devices]
        first = prepared.series[devices[0]]
        load = pd.DataFrame({"hour": [str(h) for h in first.hours]})
        for device in devices:
            load[device] = prepared.series[device].energy_wh
        _write_csv(load, entry / LOAD_FILE)

        _write_csv(pd.DataFrame({"hour": [str(h) for h in prepared.prices.hours],
                                 "price": prepared.prices.prices}), entry / PRICES_FILE)

        activity = pd.DataFrame(prepared.matrix.values, columns=HOUR_COLUMNS)
        activity.insert(0, "date", [d.isoformat() for d in prepared.matrix.dates])
        _write_csv(activity, entry / ACTIVITY_FILE)

        usage = pd.DataFrame({device: column for device, column in prepared.usage_targets.values.items()})
        usage.insert(0, "date", [d.isoformat() for d in prepared.usage_targets.dates])
        _write_csv(usage, entry / USAGE_FILE)

        runs = [
            {"device": run.device, "date": run.date.isoformat(), "hour": run.start.hour,
             "run_index": run.run_index_within_day, "load": json.dumps(list(run.load))}
            for device_runs in prepared.runs.values() for run in device_runs
        ]
        _write_csv(pd.DataFrame(runs, columns=["device", "date", "hour", "run_index", "load"]), entry / RUNS_FILE)

        manifest = {
            "format_version": CACHE_FORMAT_VERSION,
            "household": prepared.household,
            "devices": [spec.to_dict() for spec in prepared.devices],
            "series_start": first.start.isoformat(),
            "excluded_days": [d.isoformat() for d in prepared.excluded_days],
            "price_unit": prepared.prices.source_unit,
            "price_gaps": [[start.isoformat(), length] for start, length in prepared.prices.gaps],
            "gaps": {
                "filled_gaps": prepared.gaps.filled_gaps,
                "filled_hours": prepared.gaps.filled_hours,
                "long_gaps": prepared.gaps.long_gaps,
                "missing_hours": prepared.gaps.missing_hours,
            },
            "rows_read": parsed.rows_read,
            "malformed_rows": parsed.malformed_rows,
        }
        (entry / CACHE_MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                            encoding="utf-8")
        logger.info(f"Cached household {prepared.household} at {entry}")
        return entry

    def load(self, config: HouseholdConfig, max_gap_hours: int = MAX_GAP_HOURS,
             max_hold_seconds: int = MAX_HOLD_SECONDS) -> PreparedHousehold:
        config.check_files()
        key = content_key(config, max_gap_hours, max_hold_seconds)
        return self.load_entry(self.entry_dir(key), config.household)

    def load_entry(self, entry: Path, household: str = "") -> PreparedHousehold:
        manifest_path = entry / CACHE_MANIFEST
        if not manifest_path.is_file():
            raise CacheMissingError(f"No prepared data for household {household} in {entry.parent}; "
                                    f"run 'ingest' first")
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        found = manifest.get("format_version", "0")
        if not _format_compatible(found):
            raise CacheMissingError(f"Cache entry {entry} has format {found}, expected {CACHE_FORMAT_VERSION}; "
                                    f"run 'ingest' again")

        devices = [DeviceSpec.from_dict(d) for d in manifest["devices"]]
        start = datetime.fromisoformat(manifest["series_start"])
        load = pd.read_csv(entry / LOAD_FILE, float_precision="round_trip")
        series = {spec.id: HourlyLoadSeries(spec.id, start, load[spec.id].to_numpy(dtype=float))
                  for spec in devices}

        price_frame = pd.read_csv(entry / PRICES_FILE, float_precision="round_trip")
        prices = PriceCurve(
            price_frame["hour"].to_numpy(dtype="datetime64[h]"),
            price_frame["price"].to_numpy(dtype=float),
            manifest["price_unit"],
            tuple((datetime.fromisoformat(s), int(n)) for s, n in manifest["price_gaps"]),
        )

        activity = pd.read_csv(entry / ACTIVITY_FILE, float_precision="round_trip")
        dates = tuple(date.fromisoformat(d) for d in activity["date"])
        matrix = ActivityMatrix(dates, activity[HOUR_COLUMNS].to_numpy(dtype=np.uint8))

        usage = pd.read_csv(entry / USAGE_FILE, float_precision="round_trip")
        shiftable = [spec.id for spec in devices if spec.role.is_shiftable]
        usage_targets = DailyUsageTargets(tuple(date.fromisoformat(d) for d in usage["date"]),
                                          {device: usage[device].to_numpy(dtype=np.uint8) for device in shiftable})

        runs: Dict[str, List[UsageRun]] = {device: [] for device in shiftable}
        run_frame = pd.read_csv(entry / RUNS_FILE, dtype={"device": str, "date": str, "load": str})
        for row in run_frame.itertuples(index=False):
            runs[row.device].append(UsageRun(row.device, HourStamp(date.fromisoformat(row.date), int(row.hour)),
                                             tuple(json.loads(row.load)), int(row.run_index)))

        gaps = GapReport(**manifest["gaps"])
        excluded = tuple(date.fromisoformat(d) for d in manifest["excluded_days"])
        logger.debug(f"Loaded cached household {manifest['household']} from {entry}")
        return PreparedHousehold(manifest["household"], devices, series, matrix, usage_targets, runs,
                                 prices, excluded, gaps)

    def _summary(self, key: str, path: Path, prepared: PreparedHousehold,
                 parsed: ParsedConsumption) -> IngestSummary:
        dates = prepared.matrix.dates
        return IngestSummary(
            household=prepared.household,
            key=key,
            path=path,
            devices=prepared.devices,
            first_day=dates[0] if dates else None,
            last_day=dates[-1] if dates else None,
            usable_days=len(dates),
            excluded_days=len(prepared.excluded_days),
            rows_read=parsed.rows_read,
            malformed_rows=parsed.malformed_rows,
            gaps=prepared.gaps,
            price_gaps=len(prepared.prices.gaps),
            runs={device: len(r) for device, r in prepared.runs.items()},
        )


def ensure_prepared(config: HouseholdConfig, cache: Optional[PreparedCache] = None,
                    **settings: Any) -> PreparedHousehold:
    """Cached dataset when present; raises CacheMissingError otherwise."""
    cache = cache or PreparedCache()
    try:
        return cache.load(config, **settings)
    except (KeyError, ValueError) as e:
        raise ConfigError(f"Cache entry for {config.household} is unreadable: {e}") from e
