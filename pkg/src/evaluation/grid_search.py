"""Threshold grid search, sensitivity table and recommendation timing.

Every cell reuses the forecasts of a single pipeline sweep; only the
recommendation step depends on the thresholds.
"""
import logging
from dataclasses import dataclass, field
from datetime import date
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..agents.preparation import PreparedHousehold
from ..agents.price import partial_price_vector
from ..core.types import HOURS_PER_DAY, Thresholds
from ..utils.constants import DEFAULT_THRESHOLD_GRID
from ..utils.parallel import ordered_map
from .pipeline import PipelineTrace, recommend_from_trace
from .savings import RecommendationStats, savings_records

logger = logging.getLogger(__name__)

_WORKER_STATE: Dict[str, object] = {}


@dataclass(frozen=True)
class SensitivityCell:
    availability_th: float
    usage_th: float
    n_recs: int
    acceptable_rate: Optional[float]
    total_savings: float
    relative_savings: Optional[float]

    @property
    def thresholds(self) -> Thresholds:
        return Thresholds(self.availability_th, self.usage_th)

    def to_row(self) -> Dict[str, object]:
        return {
            "availability_th": self.availability_th,
            "usage_th": self.usage_th,
            "n_recs": self.n_recs,
            "acceptable_rate": self.acceptable_rate,
            "total_savings": self.total_savings,
            "relative_savings": self.relative_savings,
        }


@dataclass
class GridSearchResult:
    best: Thresholds
    table: List[SensitivityCell]
    timing: List[Dict[str, object]] = field(default_factory=list)


def select_best(table: Sequence[SensitivityCell]) -> SensitivityCell:
    """Highest total savings; ties go to the larger availability, then usage threshold."""
    if not table:
        raise ValueError("Empty sensitivity table")
    return max(table, key=lambda c: (c.total_savings, c.availability_th, c.usage_th))


def evaluate_cell(trace: PipelineTrace, prepared: PreparedHousehold, thresholds: Thresholds,
                  cost_scale: float = 1.0, scope: str = "all") -> SensitivityCell:
    recommendations = recommend_from_trace(trace, thresholds, cost_scale)
    records = savings_records(recommendations, prepared.matrix, prepared.usage_targets,
                              prepared.runs, prepared.prices, cost_scale)
    stats = RecommendationStats()
    for record in records:
        stats.add(record, scope)
    return SensitivityCell(thresholds.availability, thresholds.usage, stats.n_recommendations,
                           stats.acceptable_rate, stats.total_savings, stats.relative_savings)


def _init_worker(state: Dict[str, object]) -> None:
    _WORKER_STATE.clear()
    _WORKER_STATE.update(state)


def _cell_task(cell: Tuple[float, float]) -> SensitivityCell:
    state = _WORKER_STATE
    return evaluate_cell(state["trace"], state["prepared"], Thresholds(*cell),
                         state["cost_scale"], state["scope"])


def grid_search(trace: PipelineTrace, prepared: PreparedHousehold,
                availability_grid: Sequence[float] = DEFAULT_THRESHOLD_GRID,
                usage_grid: Sequence[float] = DEFAULT_THRESHOLD_GRID, cost_scale: float = 1.0,
                scope: str = "all", jobs: int = 1, progress: bool = True) -> GridSearchResult:
    """Evaluate every (availability, usage) cell and pick the one with the largest total savings."""
    if not len(availability_grid) or not len(usage_grid):
        raise ValueError("Threshold grids must not be empty")
    cells = [(float(a), float(u)) for a in availability_grid for u in usage_grid]
    state = {"trace": trace, "prepared": prepared, "cost_scale": cost_scale, "scope": scope}
    table = ordered_map(_cell_task, cells, jobs, _init_worker, (state,),
                        desc=f"{prepared.household} grid", progress=progress)
    best = select_best(table)
    logger.info(f"Household {prepared.household}: best thresholds availability={best.availability_th} "
                f"usage={best.usage_th}, total savings {best.total_savings:.6g}")
    return GridSearchResult(best.thresholds, table)


def hourly_context(prepared: PreparedHousehold, dates: Sequence[date]) -> Dict[str, List[Optional[float]]]:
    """Mean day-ahead price and mean availability label per hour of day over ``dates``.

    Unpriced hours and days outside the activity matrix are left out; an hour
    with nothing to average is None.
    """
    price_sum, price_n = np.zeros(HOURS_PER_DAY), np.zeros(HOURS_PER_DAY)
    present_sum, present_n = np.zeros(HOURS_PER_DAY), 0
    for day in dates:
        prices = partial_price_vector(prepared.prices, day, 0)
        priced = ~np.isnan(prices)
        price_sum[priced] += prices[priced]
        price_n += priced
        if day in prepared.matrix:
            present_sum += prepared.matrix.row(day)
            present_n += 1
    return {
        "mean_price": [float(price_sum[h] / price_n[h]) if price_n[h] else None for h in range(HOURS_PER_DAY)],
        "mean_availability": [float(present_sum[h] / present_n) if present_n else None
                              for h in range(HOURS_PER_DAY)],
    }


def timing_analysis(trace: PipelineTrace, usage_threshold: float,
                    availability_grid: Sequence[float] = DEFAULT_THRESHOLD_GRID,
                    cost_scale: float = 1.0,
                    prepared: Optional[PreparedHousehold] = None) -> List[Dict[str, object]]:
    """Final recommendations per start hour for each availability threshold.

    With ``prepared`` every row also carries the hour's mean price and mean
    availability over the swept days.
    """
    context = hourly_context(prepared, trace.dates) if prepared is not None else None
    rows = []
    for availability in availability_grid:
        recommendations = recommend_from_trace(trace, Thresholds(float(availability), usage_threshold), cost_scale)
        hours = np.array([r.final_hour for r in recommendations if r.is_final], dtype=int)
        counts = np.bincount(hours, minlength=HOURS_PER_DAY)
        for hour in range(HOURS_PER_DAY):
            row = {"availability_th": float(availability), "hour": hour, "n_recs": int(counts[hour])}
            if context is not None:
                row.update({key: values[hour] for key, values in context.items()})
            rows.append(row)
    return rows
