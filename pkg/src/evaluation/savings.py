"""Acceptability of recommendations and the cost savings they would bring.

Savings compare the first actual run of a device on the recommendation day
with the same true load started at the recommended hour.
"""
import logging
from dataclasses import dataclass, field
from datetime import date
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..core.errors import IncompleteCoverageError, NoActualRunError
from ..core.types import (
    ActivityMatrix, DailyUsageTargets, HourStamp, PriceCurve, Recommendation, UsageRun,
)
from ..utils.constants import SAVINGS_SCOPES
from .scoring import AgentScores

logger = logging.getLogger(__name__)


def acceptability(rec: Recommendation, matrix: ActivityMatrix, targets: DailyUsageTargets) -> bool:
    """True when the user was available at the recommended hour and used the device that day."""
    if rec.final_hour is None:
        raise ValueError(f"Recommendation for {rec.device} on {rec.date} has no final hour")
    if rec.date not in matrix:
        return False
    return bool(matrix.get(rec.date, rec.final_hour) == 1 and targets.get(rec.device, rec.date) == 1)


def _window_cost(prices: PriceCurve, start: HourStamp, load: np.ndarray) -> float:
    hours = np.datetime64(start.to_datetime(), "h") + np.arange(len(load), dtype="timedelta64[h]")
    window = prices.lookup(hours)
    if np.isnan(window).any():
        raise IncompleteCoverageError(HourStamp.from_datetime(h) for h in hours[np.isnan(window)].astype(object))
    return float(window @ load)


def savings(rec: Recommendation, runs: Sequence[UsageRun], prices: PriceCurve,
            cost_scale: float = 1.0) -> Tuple[float, float]:
    """(baseline_cost, recommended_cost) for the first actual run of the recommendation day."""
    if rec.final_hour is None:
        raise ValueError(f"Recommendation for {rec.device} on {rec.date} has no final hour")
    same_day = sorted((r for r in runs if r.device == rec.device and r.date == rec.date), key=lambda r: r.start)
    if not same_day:
        raise NoActualRunError(f"{rec.device} did not run on {rec.date}")
    actual = same_day[0]
    load = np.asarray(actual.load, dtype=float)
    baseline = _window_cost(prices, actual.start, load)
    recommended = _window_cost(prices, HourStamp(rec.date, rec.final_hour), load)
    return baseline * cost_scale, recommended * cost_scale


@dataclass(frozen=True)
class SavingsRecord:
    date: date
    device: str
    final_hour: int
    actual_start_hour: Optional[int]
    acceptable: bool
    baseline_cost: Optional[float]
    recommended_cost: Optional[float]

    @property
    def eligible(self) -> bool:
        return self.baseline_cost is not None

    @property
    def savings(self) -> Optional[float]:
        if not self.eligible:
            return None
        return self.baseline_cost - self.recommended_cost


@dataclass
class RecommendationStats:
    """Counts and sums over one set of recommendations, filled one record at a time."""
    n_recommendations: int = 0
    n_acceptable: int = 0
    n_no_actual_run: int = 0
    n_unpriced: int = 0
    baseline_total: float = 0.0
    recommended_total: float = 0.0

    def add(self, record: SavingsRecord, scope: str = "all") -> None:
        self.n_recommendations += 1
        self.n_acceptable += record.acceptable
        if record.actual_start_hour is None:
            self.n_no_actual_run += 1
        elif not record.eligible:
            self.n_unpriced += 1
        elif scope == "all" or record.acceptable:
            self.baseline_total += record.baseline_cost
            self.recommended_total += record.recommended_cost

    @property
    def acceptable_rate(self) -> Optional[float]:
        return self.n_acceptable / self.n_recommendations if self.n_recommendations else None

    @property
    def total_savings(self) -> float:
        return self.baseline_total - self.recommended_total

    @property
    def relative_savings(self) -> Optional[float]:
        if self.baseline_total <= 0:
            return None
        return 1.0 - self.recommended_total / self.baseline_total


def acceptability_rate(records: Sequence[SavingsRecord]) -> Optional[float]:
    """Share of acceptable records, computed over the whole collection at once."""
    if not records:
        return None
    return sum(1 for r in records if r.acceptable) / len(records)


def savings_records(recommendations: Sequence[Recommendation], matrix: ActivityMatrix,
                    targets: DailyUsageTargets, runs: Mapping[str, Sequence[UsageRun]],
                    prices: PriceCurve, cost_scale: float = 1.0) -> List[SavingsRecord]:
    """One record per final recommendation; days without a run carry no costs."""
    by_day: Dict[tuple, List[UsageRun]] = {}
    for device, device_runs in runs.items():
        for run in device_runs:
            by_day.setdefault((device, run.date), []).append(run)

    records = []
    for rec in recommendations:
        if not rec.is_final:
            continue
        day_runs = by_day.get((rec.device, rec.date), [])
        actual_hour = min(r.start for r in day_runs).hour if day_runs else None
        baseline = recommended = None
        try:
            baseline, recommended = savings(rec, day_runs, prices, cost_scale)
        except NoActualRunError:
            pass
        except IncompleteCoverageError as e:
            logger.warning(f"No savings for {rec.device} on {rec.date}: {e}")
        records.append(SavingsRecord(rec.date, rec.device, rec.final_hour, actual_hour,
                                     acceptability(rec, matrix, targets), baseline, recommended))
    return records


@dataclass
class HouseholdReport:
    household: str
    availability_auc: Optional[float]
    usage_auc: Dict[str, Optional[float]]
    load_mse: Dict[str, Optional[float]]
    totals: RecommendationStats
    by_device: Dict[str, RecommendationStats] = field(default_factory=dict)
    savings_scope: str = "all"

    @property
    def n_recommendations(self) -> int:
        return self.totals.n_recommendations

    @property
    def acceptable_rate(self) -> Optional[float]:
        return self.totals.acceptable_rate

    @property
    def total_savings(self) -> float:
        return self.totals.total_savings

    @property
    def relative_savings(self) -> Optional[float]:
        return self.totals.relative_savings

    def rows(self) -> List[Dict[str, object]]:
        """One row per shiftable device plus an ``all`` row with the household totals."""
        rows = []
        for device, stats in list(self.by_device.items()) + [("all", self.totals)]:
            rows.append({
                "household": self.household,
                "availability_auc": self.availability_auc,
                "device": device,
                "usage_auc": self.usage_auc.get(device),
                "load_mse": self.load_mse.get(device),
                "n_recommendations": stats.n_recommendations,
                "acceptable_rate": stats.acceptable_rate,
                "total_savings": stats.total_savings,
                "relative_savings": stats.relative_savings,
            })
        return rows


def aggregate_report(household: str, scores: AgentScores, records: Sequence[SavingsRecord],
                     devices: Sequence[str] = (), scope: str = "all") -> HouseholdReport:
    if scope not in SAVINGS_SCOPES:
        raise ValueError(f"Unknown savings scope '{scope}'")
    totals = RecommendationStats()
    by_device = {device: RecommendationStats() for device in devices}
    for record in records:
        totals.add(record, scope)
        by_device.setdefault(record.device, RecommendationStats()).add(record, scope)
    if totals.acceptable_rate != (batch := acceptability_rate(records)):
        raise ArithmeticError(f"Household {household}: streaming acceptable rate {totals.acceptable_rate} "
                              f"differs from batch rate {batch}")
    if totals.n_recommendations and totals.relative_savings is None:
        logger.warning(f"Household {household}: zero baseline cost, relative savings undefined")
    return HouseholdReport(household, scores.availability_auc, dict(scores.usage_auc), dict(scores.load_mse),
                           totals, by_device, scope)
