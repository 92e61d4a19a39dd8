"""Recommendation Agent: cheapest start hour among hours the user is likely present."""
import logging
from datetime import date
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..core.errors import DimensionMismatchError
from ..core.types import HOURS_PER_DAY, DeviceSpec, Recommendation, Thresholds, TypicalLoadProfile

logger = logging.getLogger(__name__)


def window_costs(prices: np.ndarray, profile: np.ndarray) -> np.ndarray:
    """Cost of starting at each hour 0..23: prices[h:h+k+1] . profile; NaN if any price is absent."""
    prices = np.asarray(prices, dtype=float)
    profile = np.asarray(profile, dtype=float)
    if len(prices) != HOURS_PER_DAY + len(profile) - 1:
        raise DimensionMismatchError(f"{len(prices)} prices for a profile of {len(profile)} hours")
    windows = sliding_window_view(prices, len(profile))
    costs = windows @ profile
    costs[np.isnan(windows).any(axis=1)] = np.nan
    return costs


def candidate_hours(probabilities: np.ndarray, availability_threshold: float) -> np.ndarray:
    """Hours whose availability probability strictly exceeds the threshold."""
    return np.flatnonzero(np.asarray(probabilities) > availability_threshold)


def best_start(costs: np.ndarray, hours: np.ndarray) -> Optional[int]:
    """Cheapest priced hour among ``hours``; ties go to the earliest."""
    priced = [int(h) for h in hours if not np.isnan(costs[h])]
    if not priced:
        return None
    return min(priced, key=lambda h: (costs[h], h))


def recommend_device(day: date, device: DeviceSpec, thresholds: Thresholds, profile: TypicalLoadProfile,
                     prices: np.ndarray, availability: np.ndarray, usage_probability: float,
                     cost_scale: float = 1.0) -> Recommendation:
    costs = window_costs(prices, profile.as_array())
    hours = candidate_hours(availability, thresholds.availability)
    best_hour = best_start(costs, hours)
    if best_hour is None and len(hours):
        logger.warning(f"{device.id} on {day}: no candidate hour has complete prices")
    availability_flag = int(best_hour is None)
    usage_flag = int(usage_probability <= thresholds.usage)
    final_hour = best_hour if availability_flag == 0 and usage_flag == 0 else None
    estimated_cost = None if best_hour is None else float(costs[best_hour]) * cost_scale
    return Recommendation(day, device.id, best_hour, availability_flag, usage_flag, final_hour, estimated_cost)


def recommend(day: date, devices: Sequence[DeviceSpec], thresholds: Thresholds,
              profiles: Mapping[str, TypicalLoadProfile], prices: Mapping[int, np.ndarray],
              availability, usage: Mapping[str, object], cost_scale: float = 1.0) -> List[Recommendation]:
    """One recommendation per shiftable device that has a typical profile.

    ``prices`` maps each duration k to the day's 24+k price vector;
    ``availability`` is an AvailabilityForecast and ``usage`` maps device ids to
    UsageForecasts.
    """
    recommendations = []
    for device in devices:
        if not device.role.is_shiftable:
            continue
        profile = profiles.get(device.id)
        if profile is None or profile.run_count < 1:
            logger.warning(f"Skipping {device.id} on {day}: no typical load profile yet")
            continue
        recommendations.append(recommend_device(
            day, device, thresholds, profile, prices[device.k], availability.probabilities,
            usage[device.id].probability, cost_scale))
    return recommendations


def recommendation_rows(recommendations: Sequence[Recommendation]) -> List[Dict[str, object]]:
    """Table rows in the published output layout."""
    return [
        {
            "recommendation_date": rec.date.isoformat(),
            "device": rec.device,
            "best_hour": "" if rec.best_hour is None else rec.best_hour,
            "availability_flag": rec.availability_flag,
            "usage_flag": rec.usage_flag,
            "final_recommendation": rec.final_label,
            "estimated_cost": "" if rec.estimated_cost is None else rec.estimated_cost,
        }
        for rec in recommendations
    ]
