"""Configuration settings for the netcore toolkit."""

import os


# Logging configuration
LOG_LEVEL = os.environ.get("NETCORE_LOG_LEVEL", "INFO")

# Series engine
SERIES_ORDER = int(os.environ.get("NETCORE_SERIES_ORDER", "400"))
SERIES_ITERATION_FACTOR = int(os.environ.get("NETCORE_SERIES_ITERATION_FACTOR", "10"))
SERIES_PILOT_ORDER = int(os.environ.get("NETCORE_SERIES_PILOT_ORDER", "40"))

# Scalar solver for the generating functions
GF_SEED_SWEEPS = int(os.environ.get("NETCORE_GF_SEED_SWEEPS", "25"))
GF_DAMPING = float(os.environ.get("NETCORE_GF_DAMPING", "0.5"))
GF_MAX_NEWTON = int(os.environ.get("NETCORE_GF_MAX_NEWTON", "200"))

# Singularity location
SCAN_DIVISIONS = int(os.environ.get("NETCORE_SCAN_DIVISIONS", "200"))
FD_STEP = float(os.environ.get("NETCORE_FD_STEP", "1e-4"))
K_MAX = int(os.environ.get("NETCORE_K_MAX", "2000"))
NEAR_CRITICAL_TOL = float(os.environ.get("NETCORE_NEAR_CRITICAL_TOL", "1e-8"))

# Sampler limits
MAX_ATTEMPTS = int(os.environ.get("NETCORE_MAX_ATTEMPTS", str(10 ** 7)))
RECURSION_BUDGET = int(os.environ.get("NETCORE_RECURSION_BUDGET", str(10 ** 8)))

# Experiment defaults
DEFAULT_WORKERS = int(os.environ.get("NETCORE_WORKERS", "1"))
