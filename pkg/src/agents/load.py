"""Load Agent: typical load profiles as running means of past usage runs."""
import logging
from datetime import date
from typing import Dict, Iterable, Optional, Sequence

import numpy as np

from ..core.errors import DimensionMismatchError, NoHistoryError
from ..core.types import TypicalLoadProfile, UsageRun

logger = logging.getLogger(__name__)


class RunningProfile:
    """Element-wise running mean of run load vectors, updated one run at a time."""

    def __init__(self, device: str, k: int):
        self.device = device
        self.k = k
        self._mean = np.zeros(k + 1)
        self.count = 0

    def add(self, run: UsageRun) -> None:
        load = np.asarray(run.load, dtype=float)
        if len(load) != self.k + 1:
            raise DimensionMismatchError(f"Run of {len(load)} hours for a device with k={self.k}")
        self.count += 1
        self._mean += (load - self._mean) / self.count

    def extend(self, runs: Iterable[UsageRun]) -> None:
        for run in runs:
            self.add(run)

    def profile(self) -> TypicalLoadProfile:
        if not self.count:
            raise NoHistoryError(f"No usage runs recorded for {self.device}")
        return TypicalLoadProfile(self.device, tuple(self._mean.tolist()), self.count)


def typical_profile(runs: Sequence[UsageRun], k: int, cutoff: Optional[date] = None) -> TypicalLoadProfile:
    """Mean load vector of all runs, or only those starting strictly before ``cutoff``."""
    selected = [r for r in runs if cutoff is None or r.date < cutoff]
    if not selected:
        device = runs[0].device if runs else "device"
        raise NoHistoryError(f"No usage run of {device} before {cutoff}")
    loads = np.array([r.load for r in selected], dtype=float)
    if loads.shape[1] != k + 1:
        raise DimensionMismatchError(f"Runs hold {loads.shape[1]} hours, expected {k + 1}")
    return TypicalLoadProfile(selected[0].device, tuple(loads.mean(axis=0).tolist()), len(selected))


def profiles_by_date(runs: Sequence[UsageRun], dates: Sequence[date], device: str,
                     k: int) -> Dict[date, TypicalLoadProfile]:
    """Profile in force on each date (runs strictly before it); dates without history are absent."""
    ordered = sorted(runs, key=lambda r: r.start)
    running = RunningProfile(device, k)
    profiles = {}
    position = 0
    for day in sorted(dates):
        while position < len(ordered) and ordered[position].date < day:
            running.add(ordered[position])
            position += 1
        if running.count:
            profiles[day] = running.profile()
    return profiles
