"""Subcommand bodies. Each takes a validated RunConfig and returns an exit code.

Tables go to stdout and to CSV under ``RunConfig.out``; everything else is
logged to stderr so stdout stays identical across repeated runs.
"""
import logging
import sys
from dataclasses import replace
from datetime import date, timedelta
from pathlib import Path
from typing import Dict, List, Optional, TextIO

from ..agents.preparation import PreparedHousehold
from ..agents.price import price_coverage
from ..agents.recommendation import recommendation_rows
from ..core.errors import DateOutOfRangeError, UserInputError
from ..data.cache import PreparedCache, ensure_prepared
from ..data.household import HouseholdConfig, load_household_config
from ..evaluation.cold_start import run_cold_start
from ..evaluation.grid_search import grid_search, select_best, timing_analysis
from ..evaluation.pipeline import DayForecast, PreparedFeatures, forecast_day, recommend_day, run_pipeline
from ..evaluation.reports import format_table, write_json, write_table
from ..evaluation.savings import HouseholdReport, aggregate_report, savings_records
from ..evaluation.scoring import score_agents
from ..evaluation.synthetic import SyntheticConfig, generate_synthetic
from ..utils.constants import (
    COLD_START_CURVE_COLUMNS, COLD_START_DAY_COLUMNS, RECOMMENDATION_COLUMNS, REPORT_COLUMNS,
    SAVINGS_COLUMNS, SENSITIVITY_COLUMNS, TIMING_COLUMNS,
)
from ..utils.settings import RunConfig

logger = logging.getLogger(__name__)


def _households(run: RunConfig) -> List[HouseholdConfig]:
    if not run.configs:
        raise UserInputError("At least one --config is required")
    return [load_household_config(path) for path in run.configs]


def _prepared(run: RunConfig, config: HouseholdConfig) -> PreparedHousehold:
    return ensure_prepared(config, PreparedCache(run.cache_dir))


def _household_dir(run: RunConfig, household: str) -> Path:
    return Path(run.out) / household


def _emit(text: str, stream: Optional[TextIO]) -> None:
    (stream or sys.stdout).write(text + "\n")


def cmd_ingest(run: RunConfig, stream: Optional[TextIO] = None) -> int:
    cache = PreparedCache(run.cache_dir)
    for config in _households(run):
        _, summary = cache.ingest(config)
        _emit("\n".join(summary.lines()), stream)
    return 0


def _check_recommendation_day(prepared: PreparedHousehold, day: date) -> None:
    """Covered days plus the day after the last one may be recommended for."""
    dates = prepared.matrix.dates
    if not dates:
        raise DateOutOfRangeError(f"Household {prepared.household} has no usable days")
    last = dates[-1] + timedelta(days=1)
    if not dates[0] <= day <= last:
        raise DateOutOfRangeError(f"{day} is outside {dates[0]} .. {last} "
                                  f"for household {prepared.household}")
    first_price, last_price = price_coverage(prepared.prices)
    if first_price is None or not first_price <= day <= last_price:
        raise DateOutOfRangeError(f"No prices for {day}; price file covers {first_price} .. {last_price}")


def save_day_models(forecast: DayForecast, directory: Path) -> List[Path]:
    """Models behind one day's forecasts as JSON; fallback forecasts have none."""
    models = [("availability", forecast.availability.model)]
    models.extend((f"usage_{device}", usage.model) for device, usage in sorted(forecast.usage.items()))
    paths = []
    for name, model in models:
        if model is not None:
            model.save(path := directory / f"{name}.json")
            paths.append(path)
    return paths


def cmd_recommend(run: RunConfig, day: date, stream: Optional[TextIO] = None) -> int:
    for config in _households(run):
        prepared = _prepared(run, config)
        _check_recommendation_day(prepared, day)
        extra = () if day in prepared.matrix else (day,)
        features = PreparedFeatures.build(prepared, extra_dates=extra)
        forecast = forecast_day(prepared, day, features)
        for spec in prepared.shiftable:
            if spec.id not in forecast.profiles:
                logger.warning(f"{spec.id}: no run before {day}, no recommendation")
        recommendations = recommend_day(forecast, prepared.devices, run.thresholds, run.cost_scale)
        rows = recommendation_rows(recommendations)
        write_table(rows, RECOMMENDATION_COLUMNS,
                    _household_dir(run, prepared.household) / f"recommendations_{day.isoformat()}.csv")
        save_day_models(forecast, _household_dir(run, prepared.household) / "models" / day.isoformat())
        _emit(format_table(rows, RECOMMENDATION_COLUMNS), stream)
    return 0


def evaluate_household(run: RunConfig, prepared: PreparedHousehold) -> HouseholdReport:
    """Sweep, score and aggregate one household; writes its recommendation and savings tables."""
    trace = run_pipeline(prepared, run.thresholds, run.start, run.end, cost_scale=run.cost_scale,
                         progress=run.progress)
    scores = score_agents(trace, prepared.runs, run.mse_variant)
    records = savings_records(trace.recommendations, prepared.matrix, prepared.usage_targets,
                              prepared.runs, prepared.prices, run.cost_scale)
    report = aggregate_report(prepared.household, scores, records,
                              [spec.id for spec in prepared.shiftable], run.savings_scope)

    directory = _household_dir(run, prepared.household)
    write_table(recommendation_rows(trace.recommendations), RECOMMENDATION_COLUMNS,
                directory / "recommendations.csv")
    savings_rows = [{
        "date": r.date.isoformat(), "device": r.device, "final_hour": r.final_hour,
        "actual_start_hour": r.actual_start_hour, "acceptable": int(r.acceptable),
        "baseline_cost": r.baseline_cost, "recommended_cost": r.recommended_cost, "savings": r.savings,
    } for r in records]
    write_table(savings_rows, SAVINGS_COLUMNS, directory / "savings.csv")
    return report


def cmd_evaluate(run: RunConfig, stream: Optional[TextIO] = None) -> int:
    rows = []
    documents: Dict[str, object] = {}
    for config in _households(run):
        report = evaluate_household(run, _prepared(run, config))
        rows.extend(report.rows())
        documents[report.household] = {"rows": report.rows(), "savings_scope": report.savings_scope}
    write_table(rows, REPORT_COLUMNS, Path(run.out) / "report.csv")
    settings = {key: value for key, value in run.to_dict().items() if key not in ("configs", "out", "cache_dir")}
    write_json({"households": documents, "settings": settings}, Path(run.out) / "report.json")
    _emit(format_table(rows, REPORT_COLUMNS), stream)
    return 0


def cmd_gridsearch(run: RunConfig, stream: Optional[TextIO] = None) -> int:
    for config in _households(run):
        prepared = _prepared(run, config)
        trace = run_pipeline(prepared, run.thresholds, run.start, run.end, cost_scale=run.cost_scale,
                             progress=run.progress)
        result = grid_search(trace, prepared, run.availability_grid, run.usage_grid, run.cost_scale,
                             run.savings_scope, run.jobs, run.progress)
        result.timing = timing_analysis(trace, result.best.usage, run.availability_grid, run.cost_scale, prepared)

        directory = _household_dir(run, prepared.household)
        table = [cell.to_row() for cell in result.table]
        write_table(table, SENSITIVITY_COLUMNS, directory / "sensitivity.csv")
        write_table(result.timing, TIMING_COLUMNS, directory / "timing.csv")
        best = select_best(result.table).to_row()
        write_json({"household": prepared.household, "best": best}, directory / "best.json")
        if run.plots:
            from ..evaluation.figures import hourly_context_plot, sensitivity_heatmaps, timing_histogram
            sensitivity_heatmaps(table, directory, prepared.household)
            timing_histogram(result.timing, directory / "timing.png", prepared.household)
            hourly_context_plot(result.timing, directory / "timing_context.png", prepared.household)
        _emit(f"{prepared.household}: best availability_th={result.best.availability:g} "
              f"usage_th={result.best.usage:g}", stream)
        _emit(format_table([best], SENSITIVITY_COLUMNS), stream)
    return 0


def cmd_coldstart(run: RunConfig, stream: Optional[TextIO] = None) -> int:
    for config in _households(run):
        prepared = _prepared(run, config)
        result = run_cold_start(prepared, run.tolerance, run.cold_start_step, run.stability, run.jobs,
                                progress=run.progress)
        directory = _household_dir(run, prepared.household)
        write_table(result.curve_rows(), COLD_START_CURVE_COLUMNS, directory / "cold_start_curves.csv")
        day_rows = result.day_rows(run.tolerances)
        write_table(day_rows, COLD_START_DAY_COLUMNS, directory / "cold_start_days.csv")
        _emit(f"{prepared.household}: tolerances {', '.join(f'{t:g}' for t in run.tolerances)}, "
              f"{result.test_days} test days", stream)
        _emit(format_table(day_rows, COLD_START_DAY_COLUMNS), stream)
    return 0


def cmd_synth(run: RunConfig, synthetic: SyntheticConfig, evaluate: bool = False,
              stream: Optional[TextIO] = None) -> int:
    """Write a synthetic household; with ``evaluate`` also ingest and score it against its planted values."""
    dataset = generate_synthetic(synthetic)
    directory = Path(run.out) / synthetic.household
    config_path = dataset.write(directory)
    _emit(f"synthetic household written to {config_path}", stream)
    for key in sorted(dataset.expected):
        _emit(f"expected {key}: {dataset.expected[key]}", stream)
    if not evaluate:
        return 0

    config = load_household_config(config_path)
    prepared, _ = PreparedCache(run.cache_dir).ingest(config)
    report = evaluate_household(replace(run, out=directory / "evaluation"), prepared)
    totals = report.rows()[-1]
    measured = {key: totals[key] for key in ("n_recommendations", "acceptable_rate", "relative_savings")}
    write_json({"expected": dataset.expected, "measured": measured}, directory / "synth_check.json")
    for key in sorted(measured):
        _emit(f"measured {key}: {measured[key]}", stream)
    return 0
