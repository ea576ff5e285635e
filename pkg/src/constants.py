BUILTIN_MODELS = ("example25", "flat3")

# Tolerance defaults, one tier per differentiation level
TOL_COMPATIBILITY = 1e-9
TOL_FIRST_ORDER = 1e-7
TOL_CURVATURE = 1e-6
TOL_EXACT = 1e-9
TOL_KOSZUL = 1e-8
TOL_FD_CHRISTOFFEL = 1e-5
TOL_FD_RIEMANN = 1e-3
TOL_REFERENCE = 1e-7
TOL_STANDING_ASSUMPTION = 1e-6
TOL_EINSTEIN = 1e-6

# Frames worse than this are not used as sample points
MAX_FRAME_CONDITION = 1e6
# Hard limit for jet matrix inversion
MAX_INVERSE_CONDITION = 1e12

# Threshold used to read off the metric signature from eigenvalues
SIGNATURE_THRESHOLD = 1e-8

# Finite-difference oracle step and the number of points it runs on
FD_STEP = 1e-4
FD_ORACLE_POINTS = 20

DEFAULT_POINTS = 100
DEFAULT_SEED = 42
DEFAULT_BOX = (-1.0, 1.0)
DEFAULT_PP_PARAMS = (1.0, 1.0)

# Give up resampling after this many rejected candidates per point
MAX_RESAMPLE_ATTEMPTS = 1000

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2

SIGNIFICANT_DIGITS = 12
