"""Configuration settings for hullcert."""

import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Paths
BASE_DIR = Path(__file__).parent.parent
DATA_DIR = BASE_DIR / "data"
PROFILE_DIR = DATA_DIR / "profiles"
DEFAULT_PROFILE_PATH = Path(os.getenv("HULLCERT_PROFILE", str(PROFILE_DIR / "default.json")))
OUTPUT_DIR = Path(os.getenv("HULLCERT_OUTPUT_DIR", "results"))
LOG_FILE = os.getenv("HULLCERT_LOG_FILE", "hullcert.log")

# Run settings
DEFAULT_SEED = int(os.getenv("HULLCERT_SEED", "7"))
DEFAULT_THREADS = int(os.getenv("HULLCERT_THREADS", "1"))
DEFAULT_DRAWS = int(os.getenv("HULLCERT_DRAWS", "2000"))
DRAW_BLOCK = 512
DEBUG = bool(os.getenv("DEBUG"))
ACCEPTANCE = os.getenv("HULLCERT_ACCEPTANCE", "") == "1"

# Geometry
RANGE_TOL = 1e-12
GRAM_CLAMP = -1e-12
WEIGHT_SUM_TOL = 1e-9

# Hull solver
TOL_OPT = float(os.getenv("HULLCERT_TOL_OPT", "1e-6"))
MAX_ITER = int(os.getenv("HULLCERT_MAX_ITER", "10000"))
SOFT_FAIL_FACTOR = 100.0
MAX_BISECTIONS = 200
LP_GAP_TOL = 1e-8

# Fixed points
TOL_FP = 1e-8
TOL_FP_MC = 1e-4
FP_MAX_ITER = 100_000
FP_PROBE_MARGIN = 0.1
FP_PROBE_POINTS = 64
NESTING_DEPTH = 2

# Monte Carlo reporting
MC_BAND = 3.0
FIT_DROP = 2
