from .cold_start import ColdStartResult, cold_start_days, run_cold_start
from .grid_search import GridSearchResult, grid_search, select_best, timing_analysis
from .pipeline import PipelineTrace, recommend_from_trace, run_pipeline
from .savings import (
    HouseholdReport, acceptability, acceptability_rate, aggregate_report, savings, savings_records,
)
from .scoring import AgentScores, score_agents
from .synthetic import SyntheticConfig, generate_synthetic

__all__ = [
    'AgentScores', 'ColdStartResult', 'GridSearchResult', 'HouseholdReport', 'PipelineTrace',
    'SyntheticConfig', 'acceptability', 'acceptability_rate', 'aggregate_report', 'cold_start_days', 'generate_synthetic',
    'grid_search', 'recommend_from_trace', 'run_cold_start', 'run_pipeline', 'savings',
    'savings_records', 'score_agents', 'select_best', 'timing_analysis',
]
