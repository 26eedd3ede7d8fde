"""
Configuration for the Reaction Network Ergodicity Toolkit
Search bounds, numerical tolerances and service settings.

Every value can be overridden through environment variables. For local
development, copy .env.example to .env; it is loaded automatically when
python-dotenv is installed.
"""

import os

try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    pass

# Logging
LOG_LEVEL = os.environ.get('CRN_LOG_LEVEL', 'INFO')

# Structural search bounds
# u grid is {0..U_MAX}^d, cycles up to MAX_CYCLE_LEN reactions
DEFAULT_U_MAX = int(os.environ.get('CRN_U_MAX', 4))
DEFAULT_MAX_CYCLE_LEN = int(os.environ.get('CRN_MAX_CYCLE_LEN', 6))

# Certificate scan
DEFAULT_N_MAX = int(os.environ.get('CRN_N_MAX', 200))
DEFAULT_N_CHECK = int(os.environ.get('CRN_N_CHECK', 5))
RATIO_CHECK_POINTS = (100, 1000, 10000)

# Simulation
SSA_MAX_JUMPS = int(os.environ.get('CRN_SSA_MAX_JUMPS', 10_000_000))
DEFAULT_SEED = int(os.environ.get('CRN_SEED', 0))
DEFAULT_T_MAX = float(os.environ.get('CRN_T_MAX', 10.0))
DEFAULT_GRID = int(os.environ.get('CRN_GRID', 50))

# Numerical tolerances
POISSON_TAIL_TOL = float(os.environ.get('CRN_POISSON_TAIL_TOL', 1e-12))
DETAILED_BALANCE_TOL = 1e-10
COMPLEX_BALANCE_TOL = 1e-8
LEAK_LIMIT = float(os.environ.get('CRN_LEAK_LIMIT', 0.1))

# Decay-curve fitting (tool defaults, recorded in every report)
DECAY_WINDOW = (1e-6, 0.5)
SLOPE_SEPARATION = 0.25
SLOPE_AGREEMENT = 0.10

# Thread pool size for search branches, ensembles and congestion blocks
WORKERS = int(os.environ.get('CRN_WORKERS', 1))

# REST service
SERVER_HOST = os.environ.get('CRN_HOST', '0.0.0.0')
SERVER_PORT = int(os.environ.get('CRN_PORT', 5000))
