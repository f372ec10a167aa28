# General settings (version, solver defaults, directories, logging)

import logging
import math
import sys

VERSION = "0.3.0"

# Algorithm defaults used for every variant unless a run overrides them.
DEFAULT_XI = 1.0
DEFAULT_THETA = 1.01
DEFAULT_P = 1.0 / 3.0
DEFAULT_BETA0 = 1.0
DEFAULT_MAX_ITER = 1000
CHI_MARGIN = 1e-5


def default_chi(xi=DEFAULT_XI):
    """Smallest admissible chi for a given xi, plus the usual margin."""
    return 2.0 * math.sqrt(1.0 + xi) + CHI_MARGIN


DEFAULT_CHI = default_chi()

# Iterates with d(x) below this are flagged in the trace.
DENOMINATOR_FLOOR = 1e-12
# Below this d(x) the square-root subgradient is undefined.
SQRT_GUARD = 1e-18

DATA_DIR = 'data'
OUTPUT_DIR = 'results'

LOG_FORMAT = "[LOG %(asctime)s.%(msecs)03d] %(message)s"
LOG_DATEFMT = "%H:%M:%S"


def configure_logging(level=logging.INFO):
    """Installs the console handler. Only entry points should call this."""
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=LOG_DATEFMT))
    root.addHandler(handler)
    root.setLevel(level)
