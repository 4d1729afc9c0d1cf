"""
This module measures how the sample size needed for total error 1/3 grows
with d: bisection for the minimal n per dimension, calibration of the rate
constant C in n = C·d³/(ε²α²), and a log-log fit of n* against d.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import stats

from . import engine

logger = logging.getLogger(__name__)

TARGET_ERROR = 1.0 / 3.0


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    residual: float
    r_value: float
    dims: Tuple[int, ...]
    n_stars: Tuple[float, ...]


def estimate_errors(d: int, alpha: float, epsilon: float, n: int, trials: int, seed: int,
                    alternative: str = "random_admissible", sampler: str = "counts") -> Tuple[float, float]:
    """Empirical (type-I, type-II) rates at one (d, α, ε, n)."""
    cell = engine.Cell(d=d, alpha=alpha, epsilon=epsilon, n=int(n))
    null_rejects = sum(engine.run_trial("scaling", cell, t, "null", seed, alternative, sampler).reject
                       for t in range(trials))
    alt_accepts = sum(not engine.run_trial("scaling", cell, t, "alt", seed, alternative, sampler).reject
                      for t in range(trials))
    return null_rejects / trials, alt_accepts / trials


def minimal_sample_size(d: int, alpha: float, epsilon: float, trials: int = 200, seed: int = 0,
                        target: float = TARGET_ERROR, alternative: str = "random_admissible",
                        sampler: str = "counts", rel_tol: float = 0.05, n_start: Optional[int] = None,
                        max_doublings: int = 40) -> int:
    """
    Smallest n (within rel_tol) whose empirical total error is at most target.

    The bracket grows by doubling from n_start, then shrinks by geometric
    bisection.
    """
    def passes(n: int) -> bool:
        type1, type2 = estimate_errors(d, alpha, epsilon, n, trials, seed, alternative, sampler)
        logger.debug("d=%d n=%d type1=%.3f type2=%.3f", d, n, type1, type2)
        return type1 + type2 <= target

    high = max(2, n_start or int(math.ceil(d ** 3 / (epsilon ** 2 * alpha ** 2))))
    low = 1
    for _ in range(max_doublings):
        if passes(high):
            break
        low, high = high, high * 2
    else:
        raise RuntimeError(f"Total error stayed above {target} up to n={high} at d={d}.")
    while high > max(low + 1, low * (1 + rel_tol)):
        mid = int(math.sqrt(max(low, 1) * high))
        mid = min(max(mid, low + 1), high - 1)
        if passes(mid):
            high = mid
        else:
            low = mid
    logger.info("Minimal n at d=%d, alpha=%.3f, epsilon=%.3f: %d", d, alpha, epsilon, high)
    return high


def calibrate_constant(alpha: float, epsilon: float, d: int = 2, **kwargs) -> float:
    """C such that n = C·d³/(ε²α²) reaches the target error at the calibration dimension."""
    n_star = minimal_sample_size(d, alpha, epsilon, **kwargs)
    return float(n_star * epsilon ** 2 * alpha ** 2 / d ** 3)


def scaling_fit(data: Union[pd.DataFrame, Dict[int, float], Sequence[Tuple[int, float]]]) -> ScalingFit:
    """
    Least-squares slope of log n* against log d.

    Args:
        data: DataFrame with columns d and n_star, a {d: n*} mapping, or
            (d, n*) pairs; at least three distinct d.

    Returns:
        ScalingFit with the slope, intercept, RMS residual and r.
    """
    if isinstance(data, pd.DataFrame):
        pairs = list(zip(data["d"], data["n_star"]))
    elif isinstance(data, dict):
        pairs = list(data.items())
    else:
        pairs = list(data)
    dims = np.array([float(d) for d, _ in pairs])
    n_stars = np.array([float(n) for _, n in pairs])
    if len(np.unique(dims)) < 3:
        raise ValueError(f"scaling_fit needs at least 3 distinct dims, got {sorted(set(dims.tolist()))}.")
    x, y = np.log(dims), np.log(n_stars)
    fit = stats.linregress(x, y)
    residual = float(np.sqrt(np.mean((y - (fit.intercept + fit.slope * x)) ** 2)))
    return ScalingFit(slope=float(fit.slope), intercept=float(fit.intercept), residual=residual,
                      r_value=float(fit.rvalue), dims=tuple(int(d) for d in dims),
                      n_stars=tuple(float(n) for n in n_stars))


def n_star_from_summary(summary: pd.DataFrame, target: float = TARGET_ERROR) -> pd.DataFrame:
    """Per (d, α, ε): the smallest swept n whose total error is at most target."""
    passing = summary[summary["total"] <= target]
    if passing.empty:
        return pd.DataFrame(columns=["d", "alpha", "epsilon", "n_star"])
    grouped = passing.groupby(["d", "alpha", "epsilon"], as_index=False)["n"].min()
    return grouped.rename(columns={"n": "n_star"})
