"""Scoring primitives: midrank AUC, load MSE and normalized profile distance."""
from datetime import date
from typing import Mapping, Sequence, Union

import numpy as np
from scipy.stats import rankdata

from ..core.errors import (
    DimensionMismatchError, MissingProfileError, NoRunsError, SingleClassError, ZeroReferenceError,
)
from ..core.types import TypicalLoadProfile, UsageRun
from ..utils.constants import MSE_VARIANTS

ProfileLike = Union[TypicalLoadProfile, Sequence[float], np.ndarray]


def auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Mann-Whitney AUC; tied scores count one half."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(bool)
    if scores.shape != labels.shape:
        raise DimensionMismatchError(f"{len(scores)} scores for {len(labels)} labels")
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError(f"AUC needs both classes, got {n_pos} positive and {n_neg} negative")
    ranks = rankdata(scores, method="average")
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def _as_vector(profile: ProfileLike) -> np.ndarray:
    if isinstance(profile, TypicalLoadProfile):
        return profile.as_array()
    return np.asarray(profile, dtype=float)


def load_mse(runs: Sequence[UsageRun], profiles_at_date: Mapping[date, ProfileLike],
             variant: str = "mean") -> float:
    """Mean over runs of the squared residual between a run and that day's profile.

    ``mean`` divides each run's squared norm by the vector length k+1;
    ``literal`` divides by k (k+1 when k is 0).
    """
    if variant not in MSE_VARIANTS:
        raise ValueError(f"Unknown MSE variant '{variant}'")
    if not runs:
        raise NoRunsError("Load MSE needs at least one run")
    total = 0.0
    for run in runs:
        if run.date not in profiles_at_date:
            raise MissingProfileError(f"No profile for {run.device} on {run.date}")
        load = np.asarray(run.load, dtype=float)
        profile = _as_vector(profiles_at_date[run.date])
        if profile.shape != load.shape:
            raise DimensionMismatchError(f"Run of {len(load)} hours against profile of {len(profile)}")
        k = len(load) - 1
        divisor = len(load) if variant == "mean" or k == 0 else k
        total += float(np.sum((load - profile) ** 2)) / divisor
    return total / len(runs)


def normalized_distance(profile_d: ProfileLike, profile_star: ProfileLike) -> float:
    """||profile_d - profile_star|| / ||profile_star||."""
    current = _as_vector(profile_d)
    reference = _as_vector(profile_star)
    if current.shape != reference.shape:
        raise DimensionMismatchError(f"Profiles of length {len(current)} and {len(reference)}")
    scale = np.linalg.norm(reference)
    if scale == 0:
        raise ZeroReferenceError("Reference profile is all zeros")
    return float(np.linalg.norm(current - reference) / scale)
