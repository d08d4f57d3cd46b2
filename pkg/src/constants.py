# Series
DEFAULT_DEPTH = 8
DEFAULT_ORDER = 40
TAIL_TOLERANCE = 1e-12

# Radius
RADIUS_MIN_COEFFS = 16
RADIUS_FLOOR = 1e-9
GROWTH_TREND = 1.25
DECAY_TREND = 0.8
RADIUS_METHOD_ROOT = "root"
RADIUS_METHOD_TAIL = "tail"

# Riccati
REPARAM_FIT_TOLERANCE = 1e-10
REPARAM_SAMPLE_XS = (0.2, 0.35, 0.5, 0.65)
CENTRAL_DIFFERENCE_STEP = 1e-6

# Linear hierarchy
DEFAULT_EPSILON = 1
L2F_STEP_DIVISOR = 64
TABLE1_ORDER = 200

# Uniqueness
DEFAULT_GAMMA = 1
DEFAULT_DELTA = 0.01
BISECTION_TOLERANCE = 1e-6
INTERVAL_SCAN_MIN = 1e-6
INTERVAL_SCAN_MAX = 50.0
INTERVAL_SCAN_POINTS = 2000

# Nonlinear hierarchy
DEFAULT_EXPANSION_POINT = 1
COVERAGE_ORDER = 60
COVERAGE_MARGIN = 0.05
LAMBDA_CHECK_TOLERANCE = 1e-10

# Moments
MOMENT_STEP_DIVISOR = 1024
DEFAULT_TMAX = 0.5
MOMENT_SERIES_ORDER = 80
QUADRATURE_BOUND = 15.0

# CLI
OUTPUT_ENV_VAR = "HIERARCHY_FORGE_OUT"
DEFAULT_OUTPUT_DIR = "out"
EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_VALIDATION = 2
EXIT_USAGE = 64
