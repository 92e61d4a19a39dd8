from .availability import AvailabilityForecast, forecast_availability
from .load import RunningProfile, typical_profile
from .preparation import PreparedHousehold, prepare_household
from .price import price_vector
from .recommendation import recommend
from .usage import UsageForecast, forecast_usage

__all__ = [
    'AvailabilityForecast', 'PreparedHousehold', 'RunningProfile', 'UsageForecast',
    'forecast_availability', 'forecast_usage', 'prepare_household', 'price_vector',
    'recommend', 'typical_profile',
]
