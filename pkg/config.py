# config.py

import logging
import os

_LOG_LEVELS = {
    "error": logging.ERROR,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}

# Logging setup
logging.basicConfig(
    level=_LOG_LEVELS.get(os.environ.get("VSEP_LOG", "error").lower(), logging.ERROR),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger("vsep")


class Config:
    """Global configuration constants."""

    # Coarsening stop rule
    MIN_COARSE_VERTICES = 75
    MIN_COARSE_EDGES = 10

    # Bounds
    DEFAULT_BALANCE = 0.6
    DEFAULT_LOWER_BOUND = 1.0

    # Mountain climbing
    ETA = 1e-5
    IMPROVE_TOL = 1e-10  # relative, scaled by (1 + |f|)
    MCA_MAX_ITER = 100_000

    # Perturbations
    EPSILON = 1e-6
    MU_THRESHOLD = 1e-5
    STRICT_IMPROVEMENT = 1e-9
    GAMMA_DECREMENTS = 10
    MAX_PERTURB_ROUNDS = 1_000
    MAX_GAMMA_RESTARTS = 1_000

    # Tolerances
    BINARY_TOL = 1e-9
    FEAS_TOL = 1e-9
    KKT_TOL = 1e-9

    # Diagnostics / oracles
    LOCAL_MAX_CAP = 64
    ORACLE_MAX_VERTICES = 14
    ORACLE_MAX_LP = 12

    # File
    METIS_EXTENSIONS = (".graph", ".metis", ".chaco")

    # Reporting
    CSV_COLUMNS = (
        "graph",
        "seed",
        "rule",
        "n",
        "m",
        "cost_S",
        "weight_A",
        "weight_B",
        "levels",
        "time_ms",
        "feasible",
    )
