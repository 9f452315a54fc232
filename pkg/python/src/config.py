import os
from enum import Enum, IntEnum

# Natural units unless a scenario overrides them
DEFAULT_HBAR = 1.0
DEFAULT_MASS = 1.0

# Worker cap for ensembles, carpets and scaling series.
# Unset means "let the executor decide" (min(32, cpu + 4)).
_threads = os.getenv("QFLOW_THREADS")
QFLOW_THREADS = int(_threads) if _threads and _threads.strip().isdigit() and int(_threads) > 0 else None

# Density floors
# Absolute floor below which hydrodynamic fields are undefined
DENSITY_FLOOR_ABSOLUTE = 1e-300
# Relative floor (fraction of the curve maximum) for sweeps and two-wave checks
DENSITY_FLOOR_RELATIVE = 1e-12
# Trajectories abort when rho drops below this fraction of the ensemble peak
TRAJECTORY_DENSITY_FLOOR = 1e-10

# Integrator defaults (Dormand-Prince 5(4))
INTEGRATOR_RTOL = 1e-8
INTEGRATOR_ATOL = 1e-10
INTEGRATOR_METHOD = "RK45"
INTEGRATOR_METHODS = ("RK45", "RK23", "DOP853", "Radau", "BDF", "LSODA")

# Paths integrated together as one vector ODE.
# Larger batches amortize interpreter overhead; a node event inside a batch
# sends that batch back through per-path integration.
ENSEMBLE_BATCH_SIZE = 256

# Runs fail when more than this fraction of paths hit a node
NODE_ABORT_LIMIT = 0.05

# Series truncation: drop terms whose Gaussian weight is below this
SERIES_TAIL = 1e-16

# Gaussian-in-well states assume the packet vanishes at the walls
BOX_SIGMA_LIMIT = 1.0 / 8.0

# Inverse-CDF sampling resolution
CDF_POINTS = 4096

# Far field: component packets have spread to this many grating periods
FAR_FIELD_SPREAD = 10.0
# ... and neighbouring diffraction orders sit this many grating widths apart
FAR_FIELD_ORDER_SEPARATION = 4.0

# Momentum ladder
PLATEAU_TOLERANCE = 0.05
# Points below this fraction of the peak density are skipped
LADDER_DENSITY_FLOOR = 1e-2
# Spikes are local extrema deviating from the linear trend by this much
LADDER_SPIKE_THRESHOLD = 0.5

# Fractal length measurements
FRACTAL_POINTS_PER_MODE = 32
FIT_DROP_FRACTION = 0.25
MIN_FIT_POINTS = 4
LENGTH_CONVERGENCE = 0.01
# A path started at the well center sits on an unstable fixed point;
# roundoff lets it drift this far (relative path length) over one revival
CENTER_PATH_TOLERANCE = 1e-3

# Toy model singular denominator
SINGULARITY_EPS = 1e-14

# Artifacts
CSV_FLOAT_FORMAT = "%.16e"
PRESETS_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)), "data", "presets")
DEFAULT_OUTPUT_DIR = "runs"


class Scenario(str, Enum):
    TWO_SLIT = "two_slit"
    COUNTER_PROPAGATING = "counter_propagating"
    HARMONIC_TWO_LEVEL = "harmonic_two_level"
    TALBOT = "talbot"
    NSLIT_LADDER = "nslit_ladder"
    BOX_DIFFRACTION = "box_diffraction"
    FRACTAL = "fractal"
    TOYMODEL = "toymodel"
    SINGLE_PACKET = "single_packet"


class Sampling(str, Enum):
    DENSITY_WEIGHTED = "density_weighted"
    UNIFORM_SUPPORT = "uniform_support"


class Normalization(str, Enum):
    RAW = "raw"
    PER_ROW_MAX = "per_row_max"


class BoxMode(str, Enum):
    GAUSSIAN_IN_WELL = "gaussian_in_well"
    EXPLICIT_COEFFICIENTS = "explicit_coefficients"


class CheckStatus(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    SKIP = "skip"


class ExitCode(IntEnum):
    OK = 0
    CHECK_FAILED = 1
    CONFIG_ERROR = 2


class PathStatus(str, Enum):
    COMPLETED = "completed"
    NODE_ABORT = "node_abort"
