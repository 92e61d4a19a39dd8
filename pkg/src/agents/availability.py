"""Availability Agent: hourly probabilities that the user can start a device."""
import logging
from dataclasses import dataclass
from datetime import date
from typing import Any, Dict, Optional

import numpy as np

from ..core.errors import InsufficientHistoryError
from ..core.types import HOURS_PER_DAY, ActivityMatrix
from ..learn.logistic import GlmModel, fit_logistic, predict_many
from ..utils.constants import DEFAULT_L2, DEFAULT_MAX_ITERS, DEFAULT_TOL
from .preparation import FeatureMatrix, availability_feature_matrix, availability_features

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class AvailabilityForecast:
    date: date
    probabilities: np.ndarray
    fallback: bool = False
    model: Optional[GlmModel] = None
    trained_through: Optional[date] = None
    training_rows: int = 0

    def __post_init__(self) -> None:
        probabilities = np.array(self.probabilities, dtype=float)
        if probabilities.shape != (HOURS_PER_DAY,):
            raise ValueError(f"Availability forecast needs 24 probabilities, got {probabilities.shape}")
        if np.any((probabilities < 0) | (probabilities > 1)):
            raise ValueError("Availability probabilities must lie in [0, 1]")
        probabilities.setflags(write=False)
        object.__setattr__(self, "probabilities", probabilities)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "date": self.date.isoformat(),
            "probabilities": self.probabilities.tolist(),
            "fallback": self.fallback,
            "trained_through": None if self.trained_through is None else self.trained_through.isoformat(),
            "training_rows": self.training_rows,
        }


def base_rate_by_hour(matrix: ActivityMatrix, cutoff: date) -> np.ndarray:
    """Share of days before ``cutoff`` on which each hour was available; zeros without history."""
    history = matrix.before(cutoff)
    if not len(history):
        return np.zeros(HOURS_PER_DAY)
    return history.values.mean(axis=0).astype(float)


def _target_rows(matrix: ActivityMatrix, day: date, features: FeatureMatrix) -> np.ndarray:
    on_day = features.on(day)
    if len(on_day) == HOURS_PER_DAY:
        return on_day.X[np.argsort(on_day.hours)]
    return np.vstack([availability_features(matrix, day, hour).features for hour in range(HOURS_PER_DAY)])


def forecast_availability(matrix: ActivityMatrix, day: date, features: Optional[FeatureMatrix] = None,
                          l2: float = DEFAULT_L2, max_iters: int = DEFAULT_MAX_ITERS,
                          tol: float = DEFAULT_TOL) -> AvailabilityForecast:
    """Train on every feature row keyed before ``day`` and predict its 24 hours.

    ``features`` may be precomputed once for the whole matrix; each row only
    looks at days before its own key, so selecting keys before ``day`` never
    reaches into ``day`` or later.
    """
    if features is None:
        features = availability_feature_matrix(matrix.before(day))
    training = features.before(day)
    try:
        target = _target_rows(matrix, day, features)
        if not len(training):
            raise InsufficientHistoryError(f"No availability rows before {day}")
    except InsufficientHistoryError as e:
        logger.debug(f"Availability fallback for {day}: {e}")
        return AvailabilityForecast(day, base_rate_by_hour(matrix, day), fallback=True)

    trained_through = training.dates.max().item()
    model = fit_logistic(training.X, training.y, l2, max_iters, tol, trained_through=trained_through)
    return AvailabilityForecast(day, predict_many(model, target), model=model,
                                trained_through=trained_through, training_rows=len(training))
