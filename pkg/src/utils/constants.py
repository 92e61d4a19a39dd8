import os

# Base paths
ROOT_DIR = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
DEFAULT_CACHE_DIR = os.path.join(ROOT_DIR, 'cache')
CACHE_DIR_ENV = 'SHIFTWISE_CACHE_DIR'

# Application settings
APP_TITLE = 'shiftwise'
APP_VERSION = "v1.0.0"

# Prepared-data cache layout; bump the major part when the on-disk format changes
CACHE_FORMAT_VERSION = "1.0.0"
CACHE_MANIFEST = 'manifest.json'

# Recommendation thresholds
DEFAULT_AVAILABILITY_THRESHOLD = 0.5
DEFAULT_USAGE_THRESHOLD = 0.125
DEFAULT_THRESHOLD_GRID = tuple(0.125 * i for i in range(1, 8))

# Cold start
DEFAULT_TOLERANCE = 0.15
COLD_START_TEST_FRACTION = 0.2
COLD_START_MIN_TEST_DAYS = 30

# Feature engineering
LAG_DAYS = 7
RECENT_HOURS = 3
AVAILABILITY_FEATURE_DIM = 24 + 7 + LAG_DAYS + RECENT_HOURS
USAGE_FEATURE_DIM = 7 + LAG_DAYS + LAG_DAYS

# Ingestion
MAX_GAP_HOURS = 3
MAX_HOLD_SECONDS = 3600
MAX_PRICE_INTERPOLATION_HOURS = 3
PRICE_UNIT_FACTORS = {
    'per_MWh': 1.0,
    'per_kWh': 1000.0,
    'per_Wh': 1_000_000.0,
}

# Logistic regression solver
DEFAULT_L2 = 1.0
DEFAULT_MAX_ITERS = 500
DEFAULT_TOL = 1e-6

# Costs are price per MWh times energy in Wh; "currency" rescales to price units
COST_UNIT_SCALES = {
    'raw': 1.0,
    'currency': 1e-6,
}

UNDEFINED = "undefined"

# Evaluation switches
MSE_VARIANTS = ("mean", "literal")
SAVINGS_SCOPES = ("all", "acceptable")
STABILITY_MODES = ("absolute", "relative")

# Output column layouts
RECOMMENDATION_COLUMNS = [
    "recommendation_date", "device", "best_hour", "availability_flag",
    "usage_flag", "final_recommendation", "estimated_cost"
]

SAVINGS_COLUMNS = [
    "date", "device", "final_hour", "actual_start_hour", "acceptable",
    "baseline_cost", "recommended_cost", "savings"
]

REPORT_COLUMNS = [
    "household", "availability_auc", "device", "usage_auc", "load_mse",
    "n_recommendations", "acceptable_rate", "total_savings", "relative_savings"
]

SENSITIVITY_COLUMNS = [
    "availability_th", "usage_th", "n_recs", "acceptable_rate",
    "total_savings", "relative_savings"
]

TIMING_COLUMNS = ["availability_th", "hour", "n_recs", "mean_price", "mean_availability"]

COLD_START_CURVE_COLUMNS = ["agent", "device", "train_days", "score"]

COLD_START_DAY_COLUMNS = ["tolerance", "agent", "device", "cold_start_days"]
