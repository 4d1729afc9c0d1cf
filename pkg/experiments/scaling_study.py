"""
This module defines the scaling study: minimal sample size reaching total
error 1/3 for several dimensions at fixed (ε, α), and the log-log slope.
"""
import logging
from typing import Any, Dict, Optional

from core import scaling

logger = logging.getLogger(__name__)


def get_default_config() -> Dict[str, Any]:
    return {
        "name": "scaling_study",
        "dims": [2, 3, 4, 5],
        "alpha": 0.2,
        "epsilon": 0.3,
        "trials": 200,
        "alternative": "random_admissible",
        "sampler": "counts",
        "seed": 7,
        "rel_tol": 0.05,
    }


def run_scaling_study(overrides: Optional[Dict[str, Any]] = None) -> scaling.ScalingFit:
    config = get_default_config()
    config.update(overrides or {})
    n_stars = {}
    for d in config["dims"]:
        n_stars[d] = scaling.minimal_sample_size(
            d, config["alpha"], config["epsilon"], trials=config["trials"], seed=config["seed"],
            alternative=config["alternative"], sampler=config["sampler"], rel_tol=config["rel_tol"])
    fit = scaling.scaling_fit(n_stars)
    logger.info("Scaling slope %.3f (residual %.3f) over dims %s.", fit.slope, fit.residual, list(n_stars))
    return fit
