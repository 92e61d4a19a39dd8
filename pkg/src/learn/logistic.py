"""L2-regularised logistic regression fitted by full-batch gradient descent.

The objective is the mean negative log-likelihood plus ``l2 / (2n) * ||w||^2``;
the bias is not penalised. Descent starts from zero and uses an Armijo
backtracking line search, so a fit is a pure function of its inputs.
"""
import json
import logging
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from ..core.errors import DimensionMismatchError, InsufficientHistoryError
from ..utils.constants import DEFAULT_L2, DEFAULT_MAX_ITERS, DEFAULT_TOL

logger = logging.getLogger(__name__)

ARMIJO_C = 1e-4
MAX_BACKTRACKS = 60
MAX_STEP = 1e6


@dataclass(frozen=True, eq=False)
class GlmModel:
    weights: np.ndarray
    bias: float
    l2: float = DEFAULT_L2
    iterations: int = 0
    converged: bool = False
    degenerate: bool = False
    prior: Optional[float] = None
    n_rows: int = 0
    trained_through: Optional[date] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        weights = np.array(self.weights, dtype=float)
        if not np.all(np.isfinite(weights)) or not np.isfinite(self.bias):
            raise ValueError("Model weights must be finite")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "bias", float(self.bias))

    @property
    def dim(self) -> int:
        return len(self.weights)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "l2": self.l2,
            "iterations": self.iterations,
            "converged": self.converged,
            "degenerate": self.degenerate,
            "prior": self.prior,
            "n_rows": self.n_rows,
            "dim": self.dim,
            "trained_through": None if self.trained_through is None else self.trained_through.isoformat(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "GlmModel":
        trained = data.get("trained_through")
        model = cls(
            weights=np.array(data["weights"], dtype=float),
            bias=data["bias"],
            l2=data["l2"],
            iterations=data["iterations"],
            converged=data["converged"],
            degenerate=data["degenerate"],
            prior=data["prior"],
            n_rows=data["n_rows"],
            trained_through=None if trained is None else date.fromisoformat(trained),
        )
        if model.dim != data.get("dim", model.dim):
            raise DimensionMismatchError(f"Serialized model claims dim {data['dim']}, holds {model.dim}")
        return model

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "GlmModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def objective_and_gradient(theta: np.ndarray, X: np.ndarray, y: np.ndarray,
                           l2: float) -> Tuple[float, np.ndarray]:
    """Objective value and gradient at ``theta = [w..., b]``."""
    n = len(y)
    w, b = theta[:-1], theta[-1]
    z = X @ w + b
    # log(1 + e^z) - y*z, stable for large |z|
    loss = np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 / n * float(w @ w)
    residual = expit(z) - y
    gradient = np.empty_like(theta)
    gradient[:-1] = X.T @ residual / n + l2 / n * w
    gradient[-1] = residual.mean()
    return float(loss), gradient


def fit_logistic(X: np.ndarray, y: np.ndarray, l2: float = DEFAULT_L2,
                 max_iters: int = DEFAULT_MAX_ITERS, tol: float = DEFAULT_TOL,
                 trained_through: Optional[date] = None) -> GlmModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if l2 < 0:
        raise ValueError(f"l2 must be non-negative, got {l2}")
    if X.ndim != 2 or X.shape[0] != len(y):
        raise DimensionMismatchError(f"Feature matrix {X.shape} does not match {len(y)} labels")
    if not len(y):
        raise InsufficientHistoryError("No training rows")

    prior = float(y.mean())
    if prior in (0.0, 1.0):
        logger.debug(f"Single-class training set of {len(y)} rows, constant probability {prior}")
        return GlmModel(np.zeros(X.shape[1]), 0.0, l2=l2, degenerate=True, prior=prior,
                        n_rows=len(y), trained_through=trained_through)

    theta = np.zeros(X.shape[1] + 1)
    loss, gradient = objective_and_gradient(theta, X, y, l2)
    step = 1.0
    converged = False
    iteration = 0
    for iteration in range(1, max_iters + 1):
        grad_sq = float(gradient @ gradient)
        if np.sqrt(grad_sq) < tol:
            converged = True
            iteration -= 1
            break
        for _ in range(MAX_BACKTRACKS):
            candidate = theta - step * gradient
            candidate_loss, candidate_gradient = objective_and_gradient(candidate, X, y, l2)
            if candidate_loss <= loss - ARMIJO_C * step * grad_sq:
                break
            step *= 0.5
        else:
            logger.debug(f"Line search stalled at iteration {iteration}")
            break
        theta, loss, gradient = candidate, candidate_loss, candidate_gradient
        step = min(step * 2.0, MAX_STEP)
    else:
        converged = bool(np.linalg.norm(gradient) < tol)

    if not converged:
        logger.debug(f"Logistic fit stopped after {iteration} iterations, "
                     f"gradient norm {np.linalg.norm(gradient):.3g}")
    return GlmModel(theta[:-1], theta[-1], l2=l2, iterations=iteration, converged=converged,
                    prior=prior, n_rows=len(y), trained_through=trained_through)


def train_logistic(rows: Sequence, l2: float = DEFAULT_L2, max_iters: int = DEFAULT_MAX_ITERS,
                   tol: float = DEFAULT_TOL) -> GlmModel:
    """Fit a model on FeatureRows; all rows must share one dimension."""
    if not rows:
        raise InsufficientHistoryError("No training rows")
    dims = {len(r.features) for r in rows}
    if len(dims) != 1:
        raise DimensionMismatchError(f"Training rows have mixed dimensions {sorted(dims)}")
    X = np.vstack([r.features for r in rows])
    y = np.array([r.label for r in rows], dtype=float)
    return fit_logistic(X, y, l2, max_iters, tol, trained_through=max(r.date for r in rows))


def predict_many(model: GlmModel, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.dim:
        raise DimensionMismatchError(f"Model expects {model.dim} features, got {X.shape[1]}")
    if model.degenerate:
        return np.full(X.shape[0], model.prior, dtype=float)
    return expit(X @ model.weights + model.bias)


def predict_proba(model: GlmModel, features: np.ndarray) -> float:
    """sigmoid(w.x + b) for a single feature vector."""
    features = np.asarray(features, dtype=float)
    if features.ndim != 1:
        raise DimensionMismatchError("predict_proba takes a single feature vector")
    return float(predict_many(model, features[np.newaxis, :])[0])
