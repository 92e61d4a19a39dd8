from datetime import date, timedelta
from typing import List

import numpy as np

from .types import HOURS_PER_DAY, HourStamp


def hour_range(day: date, extra_k: int) -> List[HourStamp]:
    """Hours 0..23 of ``day`` followed by the first ``extra_k`` hours of the next day."""
    if extra_k < 0:
        raise ValueError(f"extra_k must be >= 0, got {extra_k}")
    stamps = [HourStamp(day, hour) for hour in range(HOURS_PER_DAY)]
    following = day + timedelta(days=1)
    stamps.extend(HourStamp(following, hour) for hour in range(extra_k))
    return stamps


def hour_grid(day: date, extra_k: int) -> np.ndarray:
    """``hour_range`` as a numpy datetime64[h] vector, for array lookups."""
    if extra_k < 0:
        raise ValueError(f"extra_k must be >= 0, got {extra_k}")
    return np.datetime64(day, "h") + np.arange(HOURS_PER_DAY + extra_k, dtype="timedelta64[h]")


def day_span(first: date, last: date) -> List[date]:
    """Inclusive list of calendar days from ``first`` to ``last``."""
    return [first + timedelta(days=offset) for offset in range((last - first).days + 1)]
