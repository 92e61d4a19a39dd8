from .errors import ShiftwiseError, UserInputError
from .hours import hour_range
from .types import (
    ActivityMatrix, DailyUsageTargets, DeviceRole, DeviceSpec, HourlyLoadSeries,
    HourStamp, PriceCurve, Recommendation, Thresholds, TypicalLoadProfile, UsageRun,
)

__all__ = [
    'ActivityMatrix', 'DailyUsageTargets', 'DeviceRole', 'DeviceSpec', 'HourlyLoadSeries',
    'HourStamp', 'PriceCurve', 'Recommendation', 'ShiftwiseError', 'Thresholds',
    'TypicalLoadProfile', 'UsageRun', 'UserInputError', 'hour_range',
]
