"""Daily pipeline sweep: train, forecast and recommend for every date in a range.

Forecasts are stored without thresholds so recommendations for any threshold
pair can be derived from one sweep (see ``recommend_from_trace``).
"""
import logging
from dataclasses import dataclass, field
from datetime import date
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from ..agents.availability import AvailabilityForecast, forecast_availability
from ..agents.load import profiles_by_date
from ..agents.preparation import (
    FeatureMatrix, PreparedHousehold, availability_feature_matrix, usage_feature_matrix,
)
from ..agents.price import partial_price_vector
from ..agents.recommendation import recommend_device
from ..agents.usage import UsageForecast, forecast_usage
from ..core.errors import DateOutOfRangeError
from ..core.types import DeviceSpec, Recommendation, Thresholds, TypicalLoadProfile
from ..utils.constants import DEFAULT_L2, DEFAULT_MAX_ITERS, DEFAULT_TOL

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelAudit:
    family: str
    device: Optional[str]
    prediction_date: date
    trained_through: Optional[date]
    training_rows: int
    fallback: bool

    @property
    def leaks(self) -> bool:
        return self.trained_through is not None and self.trained_through >= self.prediction_date


@dataclass
class DayForecast:
    date: date
    availability: AvailabilityForecast
    usage: Dict[str, UsageForecast]
    profiles: Dict[str, TypicalLoadProfile]
    prices: Dict[int, np.ndarray]
    availability_targets: Optional[np.ndarray] = None
    usage_targets: Dict[str, int] = field(default_factory=dict)

    def audits(self) -> List[ModelAudit]:
        audits = [ModelAudit("availability", None, self.date, self.availability.trained_through,
                             self.availability.training_rows, self.availability.fallback)]
        for device, forecast in sorted(self.usage.items()):
            audits.append(ModelAudit("usage", device, self.date, forecast.trained_through,
                                     forecast.training_rows, forecast.fallback))
        return audits


@dataclass
class PipelineTrace:
    household: str
    devices: List[DeviceSpec]
    days: List[DayForecast] = field(default_factory=list)
    thresholds: Optional[Thresholds] = None
    recommendations: List[Recommendation] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.days)

    @property
    def dates(self) -> List[date]:
        return [day.date for day in self.days]

    def availability_pairs(self) -> Tuple[np.ndarray, np.ndarray]:
        """Pooled (probability, target) pairs over every day with targets."""
        scored = [d for d in self.days if d.availability_targets is not None]
        if not scored:
            return np.zeros(0), np.zeros(0, dtype=int)
        return (np.concatenate([d.availability.probabilities for d in scored]),
                np.concatenate([d.availability_targets for d in scored]).astype(int))

    def usage_pairs(self, device: str) -> Tuple[np.ndarray, np.ndarray]:
        scored = [d for d in self.days if device in d.usage_targets and device in d.usage]
        return (np.array([d.usage[device].probability for d in scored], dtype=float),
                np.array([d.usage_targets[device] for d in scored], dtype=int))

    def profiles_for(self, device: str) -> Dict[date, TypicalLoadProfile]:
        return {d.date: d.profiles[device] for d in self.days if device in d.profiles}

    def audits(self) -> List[ModelAudit]:
        return [audit for day in self.days for audit in day.audits()]


@dataclass
class PreparedFeatures:
    """Feature matrices built once per household and shared by every day of a sweep."""
    availability: FeatureMatrix
    usage: Dict[str, FeatureMatrix]

    @classmethod
    def build(cls, prepared: PreparedHousehold, extra_dates: Sequence[date] = ()) -> "PreparedFeatures":
        return cls(
            availability_feature_matrix(prepared.matrix, extra_dates=extra_dates),
            {spec.id: usage_feature_matrix(prepared.usage_targets, prepared.matrix, spec.id,
                                           extra_dates=extra_dates)
             for spec in prepared.shiftable},
        )


def forecast_day(prepared: PreparedHousehold, day: date, features: Optional[PreparedFeatures] = None,
                 profiles: Optional[Dict[str, Dict[date, TypicalLoadProfile]]] = None,
                 l2: float = DEFAULT_L2, max_iters: int = DEFAULT_MAX_ITERS,
                 tol: float = DEFAULT_TOL) -> DayForecast:
    """Every threshold-free input of the recommendation for ``day``, trained on days before it."""
    if features is None:
        features = PreparedFeatures.build(prepared, extra_dates=[day])
    availability = forecast_availability(prepared.matrix, day, features.availability, l2, max_iters, tol)

    usage, day_profiles = {}, {}
    for spec in prepared.shiftable:
        usage[spec.id] = forecast_usage(prepared.usage_targets, prepared.matrix, spec.id, day,
                                        features.usage[spec.id], l2, max_iters, tol)
        if profiles is None:
            known = profiles_by_date(prepared.runs[spec.id], [day], spec.id, spec.k)
        else:
            known = profiles[spec.id]
        if day in known:
            day_profiles[spec.id] = known[day]

    prices = {k: partial_price_vector(prepared.prices, day, k) for k in sorted({s.k for s in prepared.shiftable})}
    forecast = DayForecast(day, availability, usage, day_profiles, prices)
    if day in prepared.matrix:
        forecast.availability_targets = np.array(prepared.matrix.row(day), dtype=int)
        forecast.usage_targets = {spec.id: prepared.usage_targets.get(spec.id, day) for spec in prepared.shiftable}
    return forecast


def select_dates(prepared: PreparedHousehold, start: Optional[date] = None,
                 end: Optional[date] = None) -> List[date]:
    """Covered dates within [start, end]; either bound may be open."""
    dates = prepared.matrix.dates
    if not dates:
        return []
    for bound in (start, end):
        if bound is not None and not dates[0] <= bound <= dates[-1]:
            raise DateOutOfRangeError(f"{bound} is outside the covered range {dates[0]} .. {dates[-1]}")
    return [d for d in dates if (start is None or d >= start) and (end is None or d <= end)]


def recommend_day(forecast: DayForecast, devices: Sequence[DeviceSpec], thresholds: Thresholds,
                  cost_scale: float = 1.0) -> List[Recommendation]:
    recommendations = []
    for spec in devices:
        if not spec.role.is_shiftable:
            continue
        profile = forecast.profiles.get(spec.id)
        if profile is None:
            logger.debug(f"No profile for {spec.id} on {forecast.date}, no recommendation")
            continue
        recommendations.append(recommend_device(
            forecast.date, spec, thresholds, profile, forecast.prices[spec.k],
            forecast.availability.probabilities, forecast.usage[spec.id].probability, cost_scale))
    return recommendations


def recommend_from_trace(trace: PipelineTrace, thresholds: Thresholds,
                         cost_scale: float = 1.0) -> List[Recommendation]:
    """Recommendations for ``thresholds`` from stored forecasts, without retraining."""
    return [rec for day in trace.days for rec in recommend_day(day, trace.devices, thresholds, cost_scale)]


def run_pipeline(prepared: PreparedHousehold, thresholds: Thresholds, start: Optional[date] = None,
                 end: Optional[date] = None, l2: float = DEFAULT_L2, max_iters: int = DEFAULT_MAX_ITERS,
                 tol: float = DEFAULT_TOL, cost_scale: float = 1.0, progress: bool = True) -> PipelineTrace:
    """Sweep every covered date in range; agent fallbacks are recorded, never fatal."""
    trace = PipelineTrace(prepared.household, list(prepared.devices), thresholds=thresholds)
    dates = select_dates(prepared, start, end)
    if not dates:
        return trace

    features = PreparedFeatures.build(prepared)
    profiles = {spec.id: profiles_by_date(prepared.runs[spec.id], dates, spec.id, spec.k)
                for spec in prepared.shiftable}
    for day in tqdm(dates, desc=f"{prepared.household} pipeline", unit="day", leave=False, disable=not progress):
        forecast = forecast_day(prepared, day, features, profiles, l2, max_iters, tol)
        trace.days.append(forecast)
        trace.recommendations.extend(recommend_day(forecast, trace.devices, thresholds, cost_scale))

    fallbacks = sum(audit.fallback for audit in trace.audits())
    logger.info(f"Household {prepared.household}: {len(dates)} days, "
                f"{sum(r.is_final for r in trace.recommendations)} final recommendations, "
                f"{fallbacks} fallback forecasts")
    return trace
