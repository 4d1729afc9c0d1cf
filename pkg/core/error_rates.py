"""
This module turns trial records into per-cell error rates with Wilson
score intervals.
"""
import logging
from typing import Tuple, Union

import numpy as np
import pandas as pd
from scipy import stats

from .data_loader import SUMMARY_COLUMNS, records_to_frame

logger = logging.getLogger(__name__)

CELL_COLUMNS = ["d", "D", "alpha", "epsilon", "n"]


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("Wilson interval needs at least one trial.")
    z = stats.norm.ppf(0.5 + confidence / 2)
    p = successes / trials
    denom = 1 + z ** 2 / trials
    center = (p + z ** 2 / (2 * trials)) / denom
    half = z * np.sqrt(p * (1 - p) / trials + z ** 2 / (4 * trials ** 2)) / denom
    return float(max(0.0, center - half)), float(min(1.0, center + half))


def summarize(records: Union[pd.DataFrame, list], confidence: float = 0.95) -> pd.DataFrame:
    """
    Per-cell type-I rate (rejections under the null), type-II rate
    (acceptances under the alternative), their sum and a CI on the sum
    formed by adding the Wilson bounds of the two rates.
    """
    df = records if isinstance(records, pd.DataFrame) else records_to_frame(records)
    if df is None or df.empty:
        raise ValueError("summarize needs at least one record.")
    rows = []
    for key, group in df.groupby(CELL_COLUMNS, sort=True):
        null = group[group["label"] == "null"]
        alt = group[group["label"] == "alt"]
        row = dict(zip(CELL_COLUMNS, key))
        row["trials"] = int(max(len(null), len(alt)))
        type1 = float(null["reject"].mean()) if len(null) else float("nan")
        type2 = float(1.0 - alt["reject"].mean()) if len(alt) else float("nan")
        low1, high1 = wilson_interval(int(null["reject"].sum()), len(null), confidence) if len(null) else (0.0, 1.0)
        low2, high2 = wilson_interval(int((~alt["reject"]).sum()), len(alt), confidence) if len(alt) else (0.0, 1.0)
        row.update(type1=type1, type2=type2, total=type1 + type2, ci_low=low1 + low2, ci_high=high1 + high2)
        rows.append(row)
    summary = pd.DataFrame(rows, columns=SUMMARY_COLUMNS)
    logger.info("Summarized %d records into %d cells.", len(df), len(summary))
    return summary
