"""Pooled per-agent scores over a pipeline trace."""
import logging
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence

from ..core.errors import MissingProfileError, NoRunsError, SingleClassError
from ..core.types import UsageRun
from ..learn.metrics import auc, load_mse
from .pipeline import PipelineTrace

logger = logging.getLogger(__name__)


@dataclass
class AgentScores:
    availability_auc: Optional[float] = None
    usage_auc: Dict[str, Optional[float]] = field(default_factory=dict)
    load_mse: Dict[str, Optional[float]] = field(default_factory=dict)


def pooled_auc(scores, labels, what: str) -> Optional[float]:
    """AUC of the pooled predictions, or None when only one class occurs."""
    try:
        return auc(scores, labels)
    except SingleClassError as e:
        logger.warning(f"{what} AUC undefined: {e}")
        return None


def trace_load_mse(trace: PipelineTrace, device: str, runs: Sequence[UsageRun],
                   variant: str = "mean") -> Optional[float]:
    """Load MSE over the device's runs inside the trace that had a profile on their date."""
    profiles = trace.profiles_for(device)
    scored = [run for run in runs if run.date in profiles]
    try:
        return load_mse(scored, profiles, variant)
    except (NoRunsError, MissingProfileError) as e:
        logger.warning(f"Load MSE of {device} undefined: {e}")
        return None


def score_agents(trace: PipelineTrace, runs: Mapping[str, Sequence[UsageRun]],
                 mse_variant: str = "mean") -> AgentScores:
    scores = AgentScores(availability_auc=pooled_auc(*trace.availability_pairs(), "Availability"))
    for spec in trace.devices:
        if not spec.role.is_shiftable:
            continue
        scores.usage_auc[spec.id] = pooled_auc(*trace.usage_pairs(spec.id), f"Usage of {spec.id}")
        scores.load_mse[spec.id] = trace_load_mse(trace, spec.id, runs.get(spec.id, ()), mse_variant)
    return scores
