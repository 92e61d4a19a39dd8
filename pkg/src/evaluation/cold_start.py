"""Cold-start analysis: how many days of history each agent needs before it settles.

Models are trained on the first L covered days and scored on a fixed window of
the last T days. Availability and usage agents are scored by AUC, the load
agent by the normalized distance of its profile to the full-data profile.
"""
import logging
from dataclasses import dataclass, field
from datetime import date
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..agents.load import typical_profile
from ..agents.preparation import (
    FeatureMatrix, PreparedHousehold, availability_feature_matrix, usage_feature_matrix,
)
from ..core.errors import NoHistoryError, SingleClassError, UserInputError, ZeroReferenceError
from ..learn.logistic import fit_logistic, predict_many
from ..learn.metrics import auc, normalized_distance
from ..utils.constants import (
    COLD_START_MIN_TEST_DAYS, COLD_START_TEST_FRACTION, DEFAULT_L2, DEFAULT_MAX_ITERS,
    DEFAULT_TOL, DEFAULT_TOLERANCE, STABILITY_MODES,
)
from ..utils.parallel import ordered_map
from .pipeline import PreparedFeatures

logger = logging.getLogger(__name__)

CurveKey = Tuple[str, Optional[str]]

# Read-only state installed in each worker process
_WORKER_STATE: Dict[str, object] = {}


@dataclass(frozen=True)
class CurvePoint:
    train_days: int
    score: Optional[float]


@dataclass
class ColdStartResult:
    tolerance: float
    test_days: int
    curves: Dict[CurveKey, List[CurvePoint]] = field(default_factory=dict)
    days: Dict[CurveKey, Optional[int]] = field(default_factory=dict)
    stability: str = "absolute"

    @staticmethod
    def _framework(days: Dict[CurveKey, Optional[int]]) -> Optional[int]:
        if not days or any(v is None for v in days.values()):
            return None
        return max(days.values())

    @property
    def framework_days(self) -> Optional[int]:
        """Days until every agent is stable; None if any agent never is."""
        return self._framework(self.days)

    def framework_days_at(self, tolerance: float) -> Optional[int]:
        return self._framework(self.days_at(tolerance))

    def days_at(self, tolerance: float) -> Dict[CurveKey, Optional[int]]:
        """Cold-start days of every curve rescanned at another tolerance."""
        return {key: cold_start_days([p.score for p in points], tolerance,
                                     "load" if key[0] == "load" else "auc", self.stability,
                                     [p.train_days for p in points])
                for key, points in self.curves.items()}

    def curve_rows(self) -> List[Dict[str, object]]:
        return [{"agent": agent, "device": device or "", "train_days": p.train_days, "score": p.score}
                for (agent, device), points in self.curves.items() for p in points]

    def day_rows(self, tolerances: Optional[Sequence[float]] = None) -> List[Dict[str, object]]:
        """Per-agent and framework rows, one block per tolerance."""
        rows = []
        for tolerance in (self.tolerance,) if tolerances is None else tolerances:
            days = self.days if tolerance == self.tolerance else self.days_at(tolerance)
            rows.extend({"tolerance": tolerance, "agent": agent, "device": device or "", "cold_start_days": value}
                        for (agent, device), value in days.items())
            rows.append({"tolerance": tolerance, "agent": "framework", "device": "",
                         "cold_start_days": self._framework(days)})
        return rows


def holdout_size(n_days: int) -> int:
    return max(COLD_START_MIN_TEST_DAYS, int(np.floor(COLD_START_TEST_FRACTION * n_days + 0.5)))


def is_stable(score: float, best: float, tolerance: float, mode: str = "auc",
              stability: str = "absolute") -> bool:
    if mode == "load":
        return score <= tolerance
    band = tolerance * abs(best) if stability == "relative" else tolerance
    return abs(score - best) <= band


def cold_start_days(scores: Sequence[Optional[float]], tolerance: float = DEFAULT_TOLERANCE,
                    mode: str = "auc", stability: str = "absolute",
                    lengths: Optional[Sequence[int]] = None) -> Optional[int]:
    """Smallest training length from which every defined score meets the stability condition.

    AUC series must stay within ``tolerance`` of the series maximum, load
    series at or below ``tolerance``. Undefined (None) points are skipped.
    Returns None when the last defined point already fails, or nothing is defined.
    """
    if not len(scores):
        raise ValueError("Cold-start scan needs a non-empty series")
    if mode not in ("auc", "load"):
        raise ValueError(f"Unknown cold-start mode '{mode}'")
    if stability not in STABILITY_MODES:
        raise ValueError(f"Unknown stability mode '{stability}'")
    lengths = list(lengths) if lengths is not None else list(range(1, len(scores) + 1))
    points = [(length, s) for length, s in zip(lengths, scores) if s is not None]
    if not points:
        return None
    best = max(s for _, s in points)
    answer = None
    for length, score in reversed(points):
        if not is_stable(score, best, tolerance, mode, stability):
            break
        answer = length
    return answer


def _auc_score(features: FeatureMatrix, train_dates: Sequence[date], test: FeatureMatrix,
               l2: float, max_iters: int, tol: float) -> Optional[float]:
    train = features.within(train_dates)
    if not len(train) or train.y.min() == train.y.max():
        return None
    model = fit_logistic(train.X, train.y, l2, max_iters, tol)
    try:
        return auc(predict_many(model, test.X), test.y)
    except SingleClassError:
        return None


def _init_worker(state: Dict[str, object]) -> None:
    _WORKER_STATE.clear()
    _WORKER_STATE.update(state)


def _score_task(task: Tuple[CurveKey, int]) -> Optional[float]:
    key, length = task
    state = _WORKER_STATE
    features = state["features"][key]
    return _auc_score(features, state["dates"][:length], state["tests"][key],
                      state["l2"], state["max_iters"], state["tol"])


def training_lengths(n_train: int, step: int = 1) -> List[int]:
    """1, 1+step, ... up to and always including ``n_train``."""
    if step < 1:
        raise ValueError(f"step must be >= 1, got {step}")
    lengths = list(range(1, n_train + 1, step))
    if lengths[-1] != n_train:
        lengths.append(n_train)
    return lengths


def load_curve(prepared: PreparedHousehold, device: str, lengths: Sequence[int]) -> List[CurvePoint]:
    """Distance of the profile after L days to the profile over all runs."""
    spec = prepared.device(device)
    runs = prepared.runs[device]
    dates = prepared.matrix.dates
    try:
        reference = typical_profile(runs, spec.k)
    except NoHistoryError:
        return [CurvePoint(length, None) for length in lengths]
    points = []
    for length in lengths:
        cutoff = dates[length] if length < len(dates) else None
        try:
            score = normalized_distance(typical_profile(runs, spec.k, cutoff), reference)
        except (NoHistoryError, ZeroReferenceError):
            score = None
        points.append(CurvePoint(length, score))
    return points


def cold_start_curve(prepared: PreparedHousehold, agent: str, device: Optional[str] = None,
                     lengths: Optional[Sequence[int]] = None, l2: float = DEFAULT_L2,
                     max_iters: int = DEFAULT_MAX_ITERS, tol: float = DEFAULT_TOL) -> List[CurvePoint]:
    """Score series of one agent over training lengths, against the fixed window of the last T days."""
    dates = list(prepared.matrix.dates)
    n_train = len(dates) - holdout_size(len(dates))
    if n_train < 1:
        raise UserInputError(f"Household {prepared.household}: {len(dates)} usable days leave no training days")
    lengths = training_lengths(n_train) if lengths is None else list(lengths)
    if agent == "load":
        return load_curve(prepared, device, lengths)
    if agent == "availability":
        features = availability_feature_matrix(prepared.matrix)
    elif agent == "usage":
        features = usage_feature_matrix(prepared.usage_targets, prepared.matrix, device)
    else:
        raise ValueError(f"Unknown agent '{agent}'")
    test = features.within(dates[n_train:])
    return [CurvePoint(length, _auc_score(features, dates[:length], test, l2, max_iters, tol))
            for length in lengths]


def run_cold_start(prepared: PreparedHousehold, tolerance: float = DEFAULT_TOLERANCE, step: int = 1,
                   stability: str = "absolute", jobs: int = 1, l2: float = DEFAULT_L2,
                   max_iters: int = DEFAULT_MAX_ITERS, tol: float = DEFAULT_TOL,
                   progress: bool = True) -> ColdStartResult:
    dates = list(prepared.matrix.dates)
    n_test = holdout_size(len(dates))
    n_train = len(dates) - n_test
    if n_train < 1:
        raise UserInputError(f"Household {prepared.household}: {len(dates)} usable days leave no training "
                             f"days before a {n_test}-day test window")
    lengths = training_lengths(n_train, step)
    test_dates = dates[n_train:]

    built = PreparedFeatures.build(prepared)
    features: Dict[CurveKey, FeatureMatrix] = {("availability", None): built.availability}
    for spec in prepared.shiftable:
        features[("usage", spec.id)] = built.usage[spec.id]
    tests = {key: matrix.within(test_dates) for key, matrix in features.items()}

    state = {"features": features, "tests": tests, "dates": dates, "l2": l2, "max_iters": max_iters, "tol": tol}
    tasks = [(key, length) for key in features for length in lengths]
    scores = ordered_map(_score_task, tasks, jobs, _init_worker, (state,),
                         desc=f"{prepared.household} cold start", progress=progress)

    result = ColdStartResult(tolerance, n_test, stability=stability)
    for (key, length), score in zip(tasks, scores):
        result.curves.setdefault(key, []).append(CurvePoint(length, score))
    for spec in prepared.shiftable:
        result.curves[("load", spec.id)] = load_curve(prepared, spec.id, lengths)

    result.days = result.days_at(tolerance)
    for key, value in result.days.items():
        if value is None:
            logger.warning(f"Cold start of {key[0]} {key[1] or ''} unsolved at tolerance {tolerance}".rstrip())
    logger.info(f"Household {prepared.household}: framework cold start "
                f"{result.framework_days if result.framework_days is not None else 'unsolved'}")
    return result
