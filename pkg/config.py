import os
from typing import Dict, Any

class Config:
    # Numerics
    TOLERANCE = 1e-9
    LP_TOLERANCE = 1e-9
    COVERAGE_TOLERANCE = 1e-7
    SIZE_DECIMALS = 9

    # Oracle limits (refuse rather than degrade)
    ORACLE_MAX_DEMANDS = 8
    ORACLE_MAX_MACHINES = 16
    ORACLE_NODE_BUDGET = 2_000_000
    ORACLE_SCALE = 10 ** 9

    # Configuration LP
    COLGEN_MAX_ITERATIONS = 500
    PRICING_EXACT_MAX_TYPES = 12
    PRICING_GRID = 1e-4
    PRICING_FPTAS_EPSILON = 0.1

    # Offline pipeline
    EPSILON_CLAMP = 0.9

    # Stochastic algorithm
    DEFAULT_CST1 = 1.0
    RESERVE_COEFFICIENT = 2.0
    RESERVE_EXPONENT = 5.0 / 6.0

    # Adversarial instance
    ADVERSARY_MACHINES = 4
    UNBOUNDED_FAILOVER = 1e6

    # Runs and benches
    SEED = int(os.getenv("FAILOVER_SEED", "0"))
    JOBS = int(os.getenv("FAILOVER_JOBS", "1"))
    LOG_LEVEL = os.getenv("FAILOVER_LOG_LEVEL", "INFO")
    BENCH_STREAM_FACTOR = 4

    BENCH_SUITES: Dict[str, Dict[str, Any]] = {
        "worstcase": {"alg": "worstcase", "machines": [125, 1000], "trials": 50},
        "stochastic": {"alg": "stochastic", "machines": [100, 400, 1600], "trials": 20},
        "empty": {"alg": "worstcase", "machines": [], "trials": 0},
    }
    BENCH_DISTRIBUTION = "uniform:0:0.5"

    # Exit codes
    EXIT_OK = 0
    EXIT_INPUT = 2
    EXIT_LIMITS = 3
    EXIT_INTERNAL = 4
