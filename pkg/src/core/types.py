"""Domain types shared by every shiftwise module.

All types are immutable once constructed. Types that wrap numpy arrays mark the
arrays read-only and compare them element-wise (NaN equal to NaN).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import date, datetime, timedelta
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np

from .errors import ConfigError

HOURS_PER_DAY = 24


def _frozen_array(values, dtype) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


def _nan_to_none(values: np.ndarray) -> List[Optional[float]]:
    return [None if np.isnan(v) else float(v) for v in values]


def _none_to_nan(values) -> np.ndarray:
    return np.array([np.nan if v is None else float(v) for v in values], dtype=float)


@dataclass(frozen=True, order=True)
class HourStamp:
    date: date
    hour: int

    def __post_init__(self) -> None:
        if not 0 <= self.hour < HOURS_PER_DAY:
            raise ValueError(f"hour must be within 0..23, got {self.hour}")

    @classmethod
    def from_datetime(cls, moment: datetime) -> "HourStamp":
        return cls(moment.date(), moment.hour)

    def to_datetime(self) -> datetime:
        return datetime(self.date.year, self.date.month, self.date.day, self.hour)

    def shifted(self, hours: int) -> "HourStamp":
        return HourStamp.from_datetime(self.to_datetime() + timedelta(hours=hours))

    def __str__(self) -> str:
        return f"{self.date.isoformat()} {self.hour:02d}:00"

    def to_dict(self) -> Dict[str, Any]:
        return {"date": self.date.isoformat(), "hour": self.hour}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "HourStamp":
        return cls(date.fromisoformat(data["date"]), int(data["hour"]))


class DeviceRole(str, Enum):
    SHIFTABLE = "shiftable"
    AVAILABILITY = "availability"
    BOTH = "both"

    @property
    def is_shiftable(self) -> bool:
        return self in (DeviceRole.SHIFTABLE, DeviceRole.BOTH)

    @property
    def signals_availability(self) -> bool:
        return self in (DeviceRole.AVAILABILITY, DeviceRole.BOTH)


@dataclass(frozen=True)
class DeviceSpec:
    """A monitored appliance and how its consumption is interpreted.

    ``duration_k`` may be left unset in the household configuration; the
    preparation pass resolves it from observed runs before any run is extracted.
    """
    id: str
    household: str
    role: DeviceRole
    on_threshold_watts: float
    duration_k: Optional[int] = None

    def __post_init__(self) -> None:
        if not isinstance(self.role, DeviceRole):
            object.__setattr__(self, "role", DeviceRole(self.role))
        if not self.on_threshold_watts > 0:
            raise ConfigError(f"Device {self.id}: on_threshold_watts must be > 0")
        if self.duration_k is not None and self.duration_k < 0:
            raise ConfigError(f"Device {self.id}: duration_k must be >= 0")

    @property
    def k(self) -> int:
        if self.duration_k is None:
            raise ConfigError(f"Device {self.id}: duration_k has not been resolved")
        return self.duration_k

    def with_duration(self, duration_k: int) -> "DeviceSpec":
        return replace(self, duration_k=duration_k)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "household": self.household,
            "role": self.role.value,
            "on_threshold_watts": self.on_threshold_watts,
            "duration_k": self.duration_k,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "DeviceSpec":
        return cls(
            id=data["id"],
            household=data["household"],
            role=DeviceRole(data["role"]),
            on_threshold_watts=float(data["on_threshold_watts"]),
            duration_k=data.get("duration_k"),
        )


@dataclass(frozen=True, eq=False)
class HourlyLoadSeries:
    """Hourly energy (Wh) of one device on a contiguous hour grid; NaN marks a missing hour."""
    device: str
    start: datetime
    energy_wh: np.ndarray

    def __post_init__(self) -> None:
        if self.start.minute or self.start.second or self.start.microsecond:
            raise ValueError(f"Series for {self.device} must start on an hour boundary")
        energy = _frozen_array(self.energy_wh, float)
        if energy.ndim != 1:
            raise ValueError("energy_wh must be one-dimensional")
        if np.any(energy[~np.isnan(energy)] < 0):
            raise ValueError(f"Series for {self.device} holds negative energy")
        object.__setattr__(self, "energy_wh", energy)

    def __len__(self) -> int:
        return len(self.energy_wh)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HourlyLoadSeries):
            return NotImplemented
        return (self.device == other.device and self.start == other.start
                and np.array_equal(self.energy_wh, other.energy_wh, equal_nan=True))

    @property
    def hours(self) -> np.ndarray:
        return np.datetime64(self.start, "h") + np.arange(len(self), dtype="timedelta64[h]")

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.energy_wh)

    def with_energy(self, energy_wh: np.ndarray) -> "HourlyLoadSeries":
        return HourlyLoadSeries(self.device, self.start, energy_wh)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "device": self.device,
            "start": self.start.isoformat(),
            "energy_wh": _nan_to_none(self.energy_wh),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "HourlyLoadSeries":
        return cls(data["device"], datetime.fromisoformat(data["start"]),
                   _none_to_nan(data["energy_wh"]))


@dataclass(frozen=True, eq=False)
class ActivityMatrix:
    """Binary hourly availability, one row of 24 hours per covered date.

    Covered dates need not be contiguous: days excluded during preparation are
    simply absent.
    """
    dates: Tuple[date, ...]
    values: np.ndarray
    _index: Dict[date, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        dates = tuple(self.dates)
        values = _frozen_array(self.values, np.uint8).reshape(len(dates), HOURS_PER_DAY)
        if any(b <= a for a, b in zip(dates, dates[1:])):
            raise ValueError("ActivityMatrix dates must be strictly increasing")
        if np.any(values > 1):
            raise ValueError("ActivityMatrix values must be binary")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_index", {d: i for i, d in enumerate(dates)})

    def __contains__(self, day: object) -> bool:
        return day in self._index

    def __len__(self) -> int:
        return len(self.dates)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ActivityMatrix):
            return NotImplemented
        return self.dates == other.dates and np.array_equal(self.values, other.values)

    def index_of(self, day: date) -> int:
        return self._index[day]

    def get(self, day: date, hour: int) -> int:
        return int(self.values[self._index[day], hour])

    def row(self, day: date) -> np.ndarray:
        return self.values[self._index[day]]

    def before(self, cutoff: date) -> "ActivityMatrix":
        keep = [i for i, d in enumerate(self.dates) if d < cutoff]
        return ActivityMatrix(tuple(self.dates[i] for i in keep), self.values[keep])

    def to_dict(self) -> Dict[str, Any]:
        return {"dates": [d.isoformat() for d in self.dates], "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ActivityMatrix":
        dates = tuple(date.fromisoformat(d) for d in data["dates"])
        return cls(dates, np.array(data["values"], dtype=np.uint8).reshape(len(dates), HOURS_PER_DAY))


@dataclass(frozen=True, eq=False)
class DailyUsageTargets:
    """Binary daily usage per shiftable device over a shared set of dates."""
    dates: Tuple[date, ...]
    values: Mapping[str, np.ndarray]
    _index: Dict[date, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        dates = tuple(self.dates)
        values = {}
        for device, column in self.values.items():
            column = _frozen_array(column, np.uint8)
            if column.shape != (len(dates),):
                raise ValueError(f"Usage targets for {device} do not match the date axis")
            values[device] = column
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_index", {d: i for i, d in enumerate(dates)})

    @property
    def devices(self) -> Tuple[str, ...]:
        return tuple(self.values)

    def __contains__(self, day: object) -> bool:
        return day in self._index

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DailyUsageTargets):
            return NotImplemented
        return (self.dates == other.dates and self.values.keys() == other.values.keys()
                and all(np.array_equal(v, other.values[k]) for k, v in self.values.items()))

    def index_of(self, day: date) -> int:
        return self._index[day]

    def get(self, device: str, day: date) -> int:
        return int(self.values[device][self._index[day]])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dates": [d.isoformat() for d in self.dates],
            "values": {device: column.tolist() for device, column in self.values.items()},
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "DailyUsageTargets":
        return cls(tuple(date.fromisoformat(d) for d in data["dates"]),
                   {device: np.array(v, dtype=np.uint8) for device, v in data["values"].items()})


@dataclass(frozen=True)
class UsageRun:
    device: str
    start: HourStamp
    load: Tuple[float, ...]
    run_index_within_day: int = 0

    def __post_init__(self) -> None:
        load = tuple(float(v) for v in self.load)
        if not load:
            raise ValueError("A usage run needs at least one hour of load")
        if any(v < 0 or v != v for v in load):
            raise ValueError(f"Run of {self.device} at {self.start} holds invalid load")
        object.__setattr__(self, "load", load)

    @property
    def date(self) -> date:
        return self.start.date

    def to_dict(self) -> Dict[str, Any]:
        return {
            "device": self.device,
            "start": self.start.to_dict(),
            "load": list(self.load),
            "run_index_within_day": self.run_index_within_day,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "UsageRun":
        return cls(data["device"], HourStamp.from_dict(data["start"]),
                   tuple(data["load"]), int(data["run_index_within_day"]))


@dataclass(frozen=True)
class TypicalLoadProfile:
    device: str
    values: Tuple[float, ...]
    run_count: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def to_dict(self) -> Dict[str, Any]:
        return {"device": self.device, "values": list(self.values), "run_count": self.run_count}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TypicalLoadProfile":
        return cls(data["device"], tuple(data["values"]), int(data["run_count"]))


@dataclass(frozen=True, eq=False)
class PriceCurve:
    """Hourly day-ahead prices per MWh on strictly increasing hour starts.

    Hours may be absent where the source had a gap too long to interpolate;
    ``gaps`` records every hole found at ingestion as (first missing hour, length).
    """
    hours: np.ndarray
    prices: np.ndarray
    source_unit: str = "per_MWh"
    gaps: Tuple[Tuple[datetime, int], ...] = ()

    def __post_init__(self) -> None:
        hours = _frozen_array(self.hours, "datetime64[h]")
        prices = _frozen_array(self.prices, float)
        if hours.shape != prices.shape:
            raise ValueError("PriceCurve hours and prices differ in length")
        if np.any(np.diff(hours).astype(int) <= 0):
            raise ValueError("PriceCurve hours must be strictly increasing")
        if np.any(np.isnan(prices)):
            raise ValueError("PriceCurve holds NaN prices")
        object.__setattr__(self, "hours", hours)
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "gaps", tuple(self.gaps))

    def __len__(self) -> int:
        return len(self.prices)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PriceCurve):
            return NotImplemented
        return (np.array_equal(self.hours, other.hours) and np.array_equal(self.prices, other.prices)
                and self.source_unit == other.source_unit and self.gaps == other.gaps)

    def lookup(self, hours: np.ndarray) -> np.ndarray:
        """Prices at the given hours, NaN where the curve has no entry."""
        hours = np.asarray(hours, dtype="datetime64[h]")
        result = np.full(hours.shape, np.nan)
        if not len(self):
            return result
        positions = np.clip(np.searchsorted(self.hours, hours), 0, len(self) - 1)
        found = self.hours[positions] == hours
        result[found] = self.prices[positions[found]]
        return result

    def to_dict(self) -> Dict[str, Any]:
        return {
            "hours": [str(h) for h in self.hours],
            "prices": self.prices.tolist(),
            "source_unit": self.source_unit,
            "gaps": [[start.isoformat(), length] for start, length in self.gaps],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PriceCurve":
        return cls(
            np.array(data["hours"], dtype="datetime64[h]"),
            np.array(data["prices"], dtype=float),
            data["source_unit"],
            tuple((datetime.fromisoformat(start), int(length)) for start, length in data["gaps"]),
        )


@dataclass(frozen=True)
class Thresholds:
    availability: float
    usage: float

    def __post_init__(self) -> None:
        for name, value in (("availability", self.availability), ("usage", self.usage)):
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} threshold must lie in [0, 1], got {value}")

    def to_dict(self) -> Dict[str, Any]:
        return {"availability": self.availability, "usage": self.usage}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Thresholds":
        return cls(float(data["availability"]), float(data["usage"]))


@dataclass(frozen=True)
class Recommendation:
    date: date
    device: str
    best_hour: Optional[int]
    availability_flag: int
    usage_flag: int
    final_hour: Optional[int] = None
    estimated_cost: Optional[float] = None

    def __post_init__(self) -> None:
        if self.availability_flag not in (0, 1) or self.usage_flag not in (0, 1):
            raise ValueError("Recommendation flags must be 0 or 1")
        if (self.availability_flag == 1) != (self.best_hour is None):
            raise ValueError("best_hour is absent exactly when the availability flag is set")
        should_recommend = self.availability_flag == 0 and self.usage_flag == 0
        if should_recommend and self.final_hour != self.best_hour:
            raise ValueError("final_hour must equal best_hour when both flags are 0")
        if not should_recommend and self.final_hour is not None:
            raise ValueError("final_hour is only set when both flags are 0")

    @property
    def is_final(self) -> bool:
        return self.final_hour is not None

    @property
    def final_label(self) -> str:
        return "no" if self.final_hour is None else str(self.final_hour)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "date": self.date.isoformat(),
            "device": self.device,
            "best_hour": self.best_hour,
            "availability_flag": self.availability_flag,
            "usage_flag": self.usage_flag,
            "final_hour": self.final_hour,
            "estimated_cost": self.estimated_cost,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Recommendation":
        return cls(
            date=date.fromisoformat(data["date"]),
            device=data["device"],
            best_hour=data["best_hour"],
            availability_flag=int(data["availability_flag"]),
            usage_flag=int(data["usage_flag"]),
            final_hour=data["final_hour"],
            estimated_cost=data["estimated_cost"],
        )
