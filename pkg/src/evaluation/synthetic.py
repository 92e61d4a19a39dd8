"""Synthetic households with planted behaviour and known outcomes.

A generated household has one availability device that draws power in every
hour the user is present, one shiftable device started at a fixed hour on its
usage days, and a day-ahead price shape repeated every day. When the user is
always present and the device runs every day, the recommended hour and the
relative savings follow in closed form from the price shape and the load.
"""
import json
import logging
from dataclasses import asdict, dataclass, field
from datetime import date, datetime, timedelta
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..agents.preparation import PreparedHousehold, prepare_household
from ..core.errors import ConfigError
from ..core.types import HOURS_PER_DAY, DeviceRole, DeviceSpec, HourlyLoadSeries, PriceCurve
from ..data.ingest import write_price_csv, write_refit_csv

logger = logging.getLogger(__name__)

PRESENCE_ENERGY_WH = 100.0
PRESENCE_THRESHOLD_W = 50.0
SHIFTABLE_THRESHOLD_W = 100.0
CONSUMPTION_FILE = "consumption.csv"
PRICE_FILE = "prices.csv"
HOUSEHOLD_FILE = "household.json"
EXPECTED_FILE = "expected.json"


@dataclass(frozen=True)
class SyntheticConfig:
    days: int = 365
    start: date = date(2015, 1, 1)
    seed: int = 0
    household: str = "synthetic"
    availability_hours: Tuple[int, ...] = tuple(range(HOURS_PER_DAY))
    availability_noise: float = 0.0
    usage_hour: int = 18
    usage_weekdays: Tuple[int, ...] = tuple(range(7))
    usage_probability: float = 1.0
    load: Tuple[float, ...] = (1000.0, 500.0)
    base_price: float = 50.0
    price_dips: Tuple[Tuple[int, float], ...] = ((3, 10.0),)

    def __post_init__(self) -> None:
        if self.days < 2:
            raise ConfigError("A synthetic household needs at least 2 days")
        if not self.load or min(self.load) <= SHIFTABLE_THRESHOLD_W:
            raise ConfigError(f"Every load hour must exceed {SHIFTABLE_THRESHOLD_W} Wh to be detected")
        if self.usage_hour + len(self.load) > HOURS_PER_DAY:
            raise ConfigError("The planted run must end before midnight")
        if not 0.0 <= self.usage_probability <= 1.0 or not 0.0 <= self.availability_noise <= 1.0:
            raise ConfigError("Probabilities must lie in [0, 1]")
        if any(not 0 <= h < HOURS_PER_DAY for h in self.availability_hours):
            raise ConfigError("availability_hours must lie within 0..23")
        for hour, _ in self.price_dips:
            if not 0 <= hour < HOURS_PER_DAY:
                raise ConfigError(f"Price dip hour {hour} outside 0..23")

    @property
    def k(self) -> int:
        return len(self.load) - 1

    def daily_prices(self) -> np.ndarray:
        shape = np.full(HOURS_PER_DAY, float(self.base_price))
        for hour, price in self.price_dips:
            shape[hour] = float(price)
        return shape

    @property
    def closed_form(self) -> bool:
        """True when forecasts are certain: user always present, device used every day."""
        return (len(set(self.availability_hours)) == HOURS_PER_DAY and self.availability_noise == 0.0
                and set(self.usage_weekdays) == set(range(7)) and self.usage_probability == 1.0)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["start"] = self.start.isoformat()
        return data


def _cost(shape: np.ndarray, start_hour: int, load: Tuple[float, ...]) -> float:
    # The shape repeats daily, so hours past midnight wrap onto the next day's identical prices
    total = 0.0
    for offset, energy in enumerate(load):
        total += float(shape[(start_hour + offset) % HOURS_PER_DAY]) * energy
    return total


def expected_outcome(config: SyntheticConfig) -> Dict[str, Any]:
    """Planted values; recommendation metrics only when they follow in closed form."""
    shape = config.daily_prices()
    costs = [_cost(shape, hour, config.load) for hour in range(HOURS_PER_DAY)]
    cheapest = min(range(HOURS_PER_DAY), key=lambda h: (costs[h], h))
    expected: Dict[str, Any] = {
        "closed_form": config.closed_form,
        "cheapest_hour": cheapest,
        "duration_k": config.k,
        "usage_hour": config.usage_hour,
    }
    if config.closed_form:
        baseline = costs[config.usage_hour]
        expected.update(
            best_hour=cheapest,
            # Day one has neither history nor a profile
            n_final_recommendations=config.days - 1,
            acceptable_rate=1.0,
            relative_savings=1.0 - costs[cheapest] / baseline,
            savings_per_recommendation=baseline - costs[cheapest],
        )
    return expected


@dataclass
class SyntheticDataset:
    config: SyntheticConfig
    devices: Tuple[DeviceSpec, ...]
    series: Dict[str, HourlyLoadSeries]
    prices: PriceCurve
    expected: Dict[str, Any] = field(default_factory=dict)

    def prepare(self) -> PreparedHousehold:
        return prepare_household(self.config.household, self.devices, self.series, self.prices)

    def household_document(self) -> Dict[str, Any]:
        return {
            "household": self.config.household,
            "consumption_file": CONSUMPTION_FILE,
            "price_file": PRICE_FILE,
            "price_unit": self.prices.source_unit,
            "devices": [
                {"channel": channel, "name": spec.id, "role": spec.role.value,
                 "on_threshold_watts": spec.on_threshold_watts, "duration_k": spec.duration_k}
                for channel, spec in enumerate(self.devices, start=1)
            ],
        }

    def write(self, directory) -> Path:
        """Write consumption, prices, household config and expected values; returns the config path."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        write_refit_csv(directory / CONSUMPTION_FILE,
                        {f"Appliance{i}": self.series[spec.id] for i, spec in enumerate(self.devices, start=1)})
        write_price_csv(directory / PRICE_FILE, self.prices)
        config_path = directory / HOUSEHOLD_FILE
        config_path.write_text(json.dumps(self.household_document(), indent=2, sort_keys=True) + "\n",
                               encoding="utf-8")
        expected = {"config": self.config.to_dict(), "expected": self.expected}
        (directory / EXPECTED_FILE).write_text(json.dumps(expected, indent=2, sort_keys=True) + "\n",
                                               encoding="utf-8")
        logger.info(f"Wrote synthetic household {self.config.household} to {directory}")
        return config_path


def generate_synthetic(config: Optional[SyntheticConfig] = None, seed: Optional[int] = None) -> SyntheticDataset:
    """Deterministic household for ``config``; ``seed`` overrides ``config.seed``."""
    config = config or SyntheticConfig()
    rng = np.random.default_rng(config.seed if seed is None else seed)
    n_hours = config.days * HOURS_PER_DAY
    start = datetime(config.start.year, config.start.month, config.start.day)

    present = np.zeros((config.days, HOURS_PER_DAY), dtype=bool)
    present[:, list(config.availability_hours)] = True
    if config.availability_noise:
        present ^= rng.random(present.shape) < config.availability_noise

    weekdays = np.array([(config.start + timedelta(days=i)).weekday() for i in range(config.days)])
    used = np.isin(weekdays, config.usage_weekdays)
    if config.usage_probability < 1.0:
        used &= rng.random(config.days) < config.usage_probability

    machine = np.zeros((config.days, HOURS_PER_DAY))
    for offset, energy in enumerate(config.load):
        machine[used, config.usage_hour + offset] = energy

    presence = DeviceSpec("presence", config.household, DeviceRole.AVAILABILITY, PRESENCE_THRESHOLD_W)
    shiftable = DeviceSpec("appliance", config.household, DeviceRole.SHIFTABLE, SHIFTABLE_THRESHOLD_W,
                           duration_k=config.k)
    series = {
        presence.id: HourlyLoadSeries(presence.id, start, (present * PRESENCE_ENERGY_WH).reshape(n_hours)),
        shiftable.id: HourlyLoadSeries(shiftable.id, start, machine.reshape(n_hours)),
    }

    # One trailing day so windows of late start hours are priced
    price_hours = np.datetime64(start, "h") + np.arange(n_hours + HOURS_PER_DAY, dtype="timedelta64[h]")
    prices = PriceCurve(price_hours, np.tile(config.daily_prices(), config.days + 1))
    return SyntheticDataset(config, (presence, shiftable), series, prices, expected_outcome(config))
