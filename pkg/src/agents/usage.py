"""Usage Agent: daily probability that a shiftable device is used."""
import logging
from dataclasses import dataclass
from datetime import date
from typing import Any, Dict, Optional

import numpy as np

from ..core.errors import InsufficientHistoryError
from ..core.types import ActivityMatrix, DailyUsageTargets
from ..learn.logistic import GlmModel, fit_logistic, predict_many
from ..utils.constants import DEFAULT_L2, DEFAULT_MAX_ITERS, DEFAULT_TOL
from .preparation import FeatureMatrix, usage_feature_matrix, usage_features

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class UsageForecast:
    date: date
    device: str
    probability: float
    fallback: bool = False
    model: Optional[GlmModel] = None
    trained_through: Optional[date] = None
    training_rows: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"Usage probability {self.probability} outside [0, 1]")
        object.__setattr__(self, "probability", float(self.probability))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "date": self.date.isoformat(),
            "device": self.device,
            "probability": self.probability,
            "fallback": self.fallback,
            "trained_through": None if self.trained_through is None else self.trained_through.isoformat(),
            "training_rows": self.training_rows,
        }


def base_rate(targets: DailyUsageTargets, device: str, cutoff: date) -> float:
    days = [i for i, d in enumerate(targets.dates) if d < cutoff]
    if not days:
        return 0.0
    return float(np.mean(targets.values[device][days]))


def forecast_usage(targets: DailyUsageTargets, matrix: ActivityMatrix, device: str, day: date,
                   features: Optional[FeatureMatrix] = None, l2: float = DEFAULT_L2,
                   max_iters: int = DEFAULT_MAX_ITERS, tol: float = DEFAULT_TOL) -> UsageForecast:
    """Train on the device's daily rows keyed before ``day`` and predict ``day``."""
    if features is None:
        features = usage_feature_matrix(targets, matrix, device)
    training = features.before(day)
    try:
        on_day = features.on(day)
        target = on_day.X if len(on_day) else usage_features(targets, matrix, device, day).features[np.newaxis, :]
        if not len(training):
            raise InsufficientHistoryError(f"No usage rows of {device} before {day}")
    except InsufficientHistoryError as e:
        logger.debug(f"Usage fallback for {device} on {day}: {e}")
        return UsageForecast(day, device, base_rate(targets, device, day), fallback=True)

    trained_through = training.dates.max().item()
    model = fit_logistic(training.X, training.y, l2, max_iters, tol, trained_through=trained_through)
    return UsageForecast(day, device, float(predict_many(model, target)[0]), model=model,
                         trained_through=trained_through, training_rows=len(training))
