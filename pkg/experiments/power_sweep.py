"""
This module defines the test-power experiment: certification at the rate
n = C·d³/(ε²α²) for the qubit case, null and alternative trials per cell.

This file provides a default configuration for the experiment.
"""
from typing import Any, Dict


def get_default_config() -> Dict[str, Any]:
    """
    Returns a default configuration dictionary for the power sweep.
    Keys in a user-provided YAML file override these one by one.
    """
    config = {
        "name": "power_sweep",
        "dims": [2],
        "alphas": [0.1],
        "epsilons": [0.3],
        "sample_size": {
            "rule": "rate",
            "constant": 10.0  # n = C d^3 / (epsilon^2 alpha^2)
        },
        "trials": 300,
        "alternative": "random_admissible",
        "sampler": "counts",
        "seed": 20240611,
        "output": "results/power_sweep.ndjson",
        "workers": 1,
    }
    return config
