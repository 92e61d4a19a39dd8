"""Household configuration: which CSV channel is which device, plus the price file.

Example document::

    {
      "household": "house3",
      "consumption_file": "CLEAN_House3.csv",
      "price_file": "prices_gb.csv",
      "price_unit": "per_MWh",
      "devices": [
        {"channel": 1, "name": "toaster", "role": "availability", "on_threshold_watts": 50},
        {"channel": 4, "name": "washing_machine", "role": "shiftable",
         "on_threshold_watts": 100, "duration_k": 2}
      ]
    }

Relative paths resolve against the directory holding the JSON file.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

from ..core.errors import ConfigError
from ..core.types import DeviceRole, DeviceSpec
from ..utils.constants import PRICE_UNIT_FACTORS

logger = logging.getLogger(__name__)

REQUIRED_KEYS = ("household", "consumption_file", "price_file", "devices")
REQUIRED_DEVICE_KEYS = ("channel", "name", "role", "on_threshold_watts")


@dataclass(frozen=True)
class ChannelMapping:
    column: str
    device: DeviceSpec


@dataclass(frozen=True)
class HouseholdConfig:
    household: str
    consumption_file: Path
    price_file: Path
    channels: Tuple[ChannelMapping, ...]
    price_unit: str = "per_MWh"
    timezone: Optional[str] = None
    source: Optional[Path] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.price_unit not in PRICE_UNIT_FACTORS:
            raise ConfigError(f"Unknown price_unit '{self.price_unit}', "
                              f"expected one of {sorted(PRICE_UNIT_FACTORS)}")
        names = [m.device.id for m in self.channels]
        if len(set(names)) != len(names):
            raise ConfigError(f"Household {self.household}: device names must be unique")
        if not any(m.device.role.signals_availability for m in self.channels):
            raise ConfigError(f"Household {self.household}: needs at least one availability device")
        if not any(m.device.role.is_shiftable for m in self.channels):
            raise ConfigError(f"Household {self.household}: needs at least one shiftable device")

    @property
    def devices(self) -> List[DeviceSpec]:
        return [m.device for m in self.channels]

    @property
    def shiftable(self) -> List[DeviceSpec]:
        return [m.device for m in self.channels if m.device.role.is_shiftable]

    @property
    def availability_devices(self) -> List[DeviceSpec]:
        return [m.device for m in self.channels if m.device.role.signals_availability]

    def check_files(self) -> None:
        """Raise ConfigError naming the first referenced file that does not exist."""
        for label, path in (("consumption file", self.consumption_file), ("price file", self.price_file)):
            if not Path(path).is_file():
                raise ConfigError(f"Missing {label}: {path}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "household": self.household,
            "consumption_file": str(self.consumption_file),
            "price_file": str(self.price_file),
            "price_unit": self.price_unit,
            "timezone": self.timezone,
            "devices": [
                {
                    "channel": m.column,
                    "name": m.device.id,
                    "role": m.device.role.value,
                    "on_threshold_watts": m.device.on_threshold_watts,
                    "duration_k": m.device.duration_k,
                }
                for m in self.channels
            ],
        }


def channel_column(channel: Any) -> str:
    """Map a configured channel to its REFIT column name."""
    if isinstance(channel, bool):
        raise ConfigError(f"Invalid channel: {channel!r}")
    if isinstance(channel, int):
        return f"Appliance{channel}"
    text = str(channel).strip()
    if text.isdigit():
        return f"Appliance{int(text)}"
    if text == "Aggregate" or (text.startswith("Appliance") and text[len("Appliance"):].isdigit()):
        return text
    raise ConfigError(f"Invalid channel: {channel!r}")


def _resolve(base: Path, value: str) -> Path:
    path = Path(value)
    return path if path.is_absolute() else (base / path)


def parse_household_config(data: Mapping[str, Any], base_dir: Path = Path("."),
                           source: Optional[Path] = None) -> HouseholdConfig:
    missing = [key for key in REQUIRED_KEYS if key not in data]
    if missing:
        raise ConfigError(f"Household config is missing keys: {', '.join(missing)}")

    household = str(data["household"])
    channels = []
    for position, entry in enumerate(data["devices"]):
        absent = [key for key in REQUIRED_DEVICE_KEYS if key not in entry]
        if absent:
            raise ConfigError(f"Device #{position} is missing keys: {', '.join(absent)}")
        try:
            role = DeviceRole(entry["role"])
        except ValueError as e:
            raise ConfigError(f"Device {entry['name']}: unknown role '{entry['role']}'") from e
        duration_k = entry.get("duration_k")
        spec = DeviceSpec(
            id=str(entry["name"]),
            household=household,
            role=role,
            on_threshold_watts=float(entry["on_threshold_watts"]),
            duration_k=None if duration_k is None else int(duration_k),
        )
        channels.append(ChannelMapping(channel_column(entry["channel"]), spec))

    return HouseholdConfig(
        household=household,
        consumption_file=_resolve(base_dir, data["consumption_file"]),
        price_file=_resolve(base_dir, data["price_file"]),
        channels=tuple(channels),
        price_unit=data.get("price_unit", "per_MWh"),
        timezone=data.get("timezone"),
        source=source,
    )


def load_household_config(path) -> HouseholdConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Household config not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"Household config {path} is not valid JSON: {e}") from e
    config = parse_household_config(data, base_dir=path.resolve().parent, source=path)
    logger.debug(f"Loaded household {config.household} with {len(config.channels)} devices from {path}")
    return config
