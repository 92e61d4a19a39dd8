"""Run settings assembled from command-line flags and validated once."""
import logging
from dataclasses import asdict, dataclass
from datetime import date
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from ..core.errors import ConfigError
from ..core.types import Thresholds
from .constants import (
    COST_UNIT_SCALES, DEFAULT_AVAILABILITY_THRESHOLD, DEFAULT_THRESHOLD_GRID, DEFAULT_TOLERANCE,
    DEFAULT_USAGE_THRESHOLD, MSE_VARIANTS, SAVINGS_SCOPES, STABILITY_MODES,
)

logger = logging.getLogger(__name__)


@dataclass
class RunConfig:
    configs: Tuple[Path, ...] = ()
    start: Optional[date] = None
    end: Optional[date] = None
    availability_th: float = DEFAULT_AVAILABILITY_THRESHOLD
    usage_th: float = DEFAULT_USAGE_THRESHOLD
    availability_grid: Tuple[float, ...] = DEFAULT_THRESHOLD_GRID
    usage_grid: Tuple[float, ...] = DEFAULT_THRESHOLD_GRID
    tolerances: Tuple[float, ...] = (DEFAULT_TOLERANCE,)
    out: Path = Path("out")
    seed: int = 0
    jobs: int = 1
    cold_start_step: int = 1
    plots: bool = False
    cost_unit: str = "raw"
    mse_variant: str = "mean"
    savings_scope: str = "all"
    stability: str = "absolute"
    cache_dir: Optional[Path] = None
    progress: bool = True

    @property
    def thresholds(self) -> Thresholds:
        return Thresholds(self.availability_th, self.usage_th)

    @property
    def tolerance(self) -> float:
        """Tolerance of the primary cold-start scan; the others are rescans of the same curves."""
        return self.tolerances[0]

    @property
    def cost_scale(self) -> float:
        return COST_UNIT_SCALES[self.cost_unit]

    def validate(self) -> "RunConfig":
        """Raise ConfigError on the first invalid setting; returns self."""
        for path in self.configs:
            if not Path(path).is_file():
                raise ConfigError(f"Household config not found: {path}")
        if self.start and self.end and self.start > self.end:
            raise ConfigError(f"--from {self.start} is after --to {self.end}")
        for name, value in (("availability", self.availability_th), ("usage", self.usage_th)):
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} threshold must lie in [0, 1], got {value}")
        for name, grid in (("availability", self.availability_grid), ("usage", self.usage_grid)):
            if not grid:
                raise ConfigError(f"{name} grid is empty")
            if any(not 0.0 <= v <= 1.0 for v in grid):
                raise ConfigError(f"{name} grid values must lie in [0, 1]")
        if not self.tolerances:
            raise ConfigError("At least one tolerance is required")
        if any(t < 0 for t in self.tolerances):
            raise ConfigError(f"tolerances must be >= 0, got {list(self.tolerances)}")
        if self.jobs < 1:
            raise ConfigError(f"--jobs must be >= 1, got {self.jobs}")
        if self.cold_start_step < 1:
            raise ConfigError(f"--step must be >= 1, got {self.cold_start_step}")
        for name, value, allowed in (("cost unit", self.cost_unit, tuple(COST_UNIT_SCALES)),
                                     ("MSE variant", self.mse_variant, MSE_VARIANTS),
                                     ("savings scope", self.savings_scope, SAVINGS_SCOPES),
                                     ("stability", self.stability, STABILITY_MODES)):
            if value not in allowed:
                raise ConfigError(f"Unknown {name} '{value}', expected one of {', '.join(allowed)}")
        return self

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["configs"] = [str(p) for p in self.configs]
        data["out"] = str(self.out)
        data["cache_dir"] = None if self.cache_dir is None else str(self.cache_dir)
        data["start"] = None if self.start is None else self.start.isoformat()
        data["end"] = None if self.end is None else self.end.isoformat()
        data["availability_grid"] = list(self.availability_grid)
        data["usage_grid"] = list(self.usage_grid)
        data["tolerances"] = list(self.tolerances)
        return data
