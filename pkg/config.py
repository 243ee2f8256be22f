"""
Configuration settings for the beta-plane spectral laboratory
"""

import os

from dotenv import load_dotenv

load_dotenv()

# Grid defaults
DEFAULT_GRID_N = 256
DEFAULT_BOX_LENGTH = 40.0
MIN_GRID_N = 8

# Round-trip and symmetry tolerances
HERMITIAN_TOLERANCE = 1e-10  # relative, checked by inverse_transform
ADMISSIBILITY_SLACK = 1e-12  # boundary slack for exponent inequalities

# Littlewood-Paley bump support (annulus edges in units of 2^k)
LP_INNER_EDGE = 3.0 / 4.0
LP_OUTER_EDGE = 8.0 / 3.0
LP_COVERAGE_THRESHOLD = 1e-10  # fraction of spectral mass allowed outside the bank

# Dealiasing: keep modes with max(|k1|, |k2|) <= n * DEALIAS_FRACTION
DEALIAS_FRACTION = 1.0 / 3.0

# phi-functions of the exponential integrator switch to Taylor series below this |z|.
# A 1e-3 switch is the common choice; just outside it the closed form of phi_3 keeps
# only about six digits, so the series covers the whole unit disc instead.
PHI_TAYLOR_RADIUS = 1.0
PHI_TAYLOR_TERMS = 24

# Picard solver
PICARD_DIVERGENCE_FACTOR = 10.0  # abort when d grows by more than this between iterates
PICARD_CONTRACTION_TARGET = 0.5

# Analysis
MIN_FIT_SAMPLES = 8
CROSSOVER_MARGIN = 5.0  # branch windows stay this factor away from |beta|^(-2/3)
BOUNDARY_FRAME_FRACTION = 0.1  # outer frame width as a fraction of the box side
STRICHARTZ_MIN_SPAN = 10.0  # t_grid must reach this multiple of |beta|^(-2/3)
DISPERSIVE_GUARD_FACTOR = 2.0

# Checkpoint format
CHECKPOINT_MAGIC = b"BPF1"
CHECKPOINT_VERSION = 1
CHECKPOINT_SUFFIX = ".bpf"

# Output file names
NORMS_CSV = "norms.csv"
ENERGY_JSON = "energy.json"
SUMMARY_JSON = "summary.json"
DECAY_JSON = "decay.json"
DECAY_CSV = "decay_series.csv"
DEFICIT_CSV = "deficits.csv"
STRICHARTZ_JSON = "strichartz.json"
DISPERSIVE_CSV = "dispersive.csv"
ADMISSIBLE_JSON = "admissible.json"
PICARD_JSON = "picard.json"
INDEX_JSON = "index.json"
RUN_LOG = "run.log"

# Exit codes
EXIT_SUCCESS = 0
EXIT_CONFIG_ERROR = 2
EXIT_BLOW_UP = 3
EXIT_ANALYSIS_ERROR = 4

# Initial-data families
INITIAL_FAMILIES = ["gaussian", "dipole", "random", "ring", "zero"]

# Time-stepping schemes
SCHEMES = ["etdrk4", "etd-euler"]

# Logging configuration
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
LOG_LEVEL = os.getenv("BETAPLANE_LOG_LEVEL", "INFO")

# Environment overrides
FFT_WORKERS = int(os.getenv("BETAPLANE_THREADS", "1"))
DEFAULT_OUT_DIR = os.getenv("BETAPLANE_OUT_DIR", "runs")
