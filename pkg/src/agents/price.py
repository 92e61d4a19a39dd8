"""Price Agent: day-ahead price windows for a recommendation day."""
import logging
from datetime import date

import numpy as np

from ..core.errors import IncompleteCoverageError
from ..core.hours import hour_grid
from ..core.types import HourStamp, PriceCurve

logger = logging.getLogger(__name__)


def partial_price_vector(curve: PriceCurve, day: date, k: int) -> np.ndarray:
    """Prices for hours 0..23 of ``day`` and 0..k-1 of the next day; NaN where absent."""
    return curve.lookup(hour_grid(day, k))


def price_vector(curve: PriceCurve, day: date, k: int) -> np.ndarray:
    """Like ``partial_price_vector`` but every hour must be priced."""
    hours = hour_grid(day, k)
    prices = curve.lookup(hours)
    absent = np.isnan(prices)
    if absent.any():
        raise IncompleteCoverageError(HourStamp.from_datetime(h) for h in hours[absent].astype(object))
    return prices


def price_coverage(curve: PriceCurve) -> tuple:
    """First and last covered calendar day, or (None, None) for an empty curve."""
    if not len(curve):
        return None, None
    return curve.hours[0].astype("datetime64[D]").item(), curve.hours[-1].astype("datetime64[D]").item()
