"""CSV and JSON report writers.

Undefined metrics (None or NaN) are written as the literal ``undefined``.
Output is deterministic: fixed column order, sorted JSON keys, no timestamps.
"""
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Mapping, Sequence

import pandas as pd

from ..utils.constants import UNDEFINED

logger = logging.getLogger(__name__)


def _cell(value: Any) -> Any:
    if value is None:
        return UNDEFINED
    if isinstance(value, float) and math.isnan(value):
        return UNDEFINED
    return value


def table_frame(rows: Sequence[Mapping[str, Any]], columns: Sequence[str]) -> pd.DataFrame:
    frame = pd.DataFrame([{column: _cell(row.get(column)) for column in columns} for row in rows],
                         columns=list(columns))
    return frame


def write_table(rows: Sequence[Mapping[str, Any]], columns: Sequence[str], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table_frame(rows, columns).to_csv(path, index=False, lineterminator="\n")
    logger.debug(f"Wrote {len(rows)} rows to {path}")
    return path


def format_table(rows: Sequence[Mapping[str, Any]], columns: Sequence[str]) -> str:
    if not rows:
        return "(no rows)"
    return table_frame(rows, columns).to_string(index=False)


def _undefined_json(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _undefined_json(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_undefined_json(v) for v in value]
    return _cell(value)


def write_json(data: Dict[str, Any], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_undefined_json(data), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
