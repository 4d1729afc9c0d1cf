"""
This module handles loading of persisted trial records (newline-delimited
JSON) into pandas and writing of per-cell summaries as CSV.
"""
import json
import logging
import os
from typing import List, Optional

import pandas as pd

logger = logging.getLogger(__name__)

RECORD_COLUMNS = ["name", "d", "D", "alpha", "epsilon", "n", "trial", "label", "seed", "stream",
                  "truth_distance", "statistic", "threshold", "reject", "wall_time"]
SUMMARY_COLUMNS = ["d", "D", "alpha", "epsilon", "n", "trials", "type1", "type2", "total", "ci_low", "ci_high"]


def load_records(path: str) -> Optional[pd.DataFrame]:
    """
    Loads trial records from an NDJSON file.

    Args:
        path: Path to the records file.

    Returns:
        A DataFrame with one row per record, or None if the file is missing,
        empty or lacks expected columns. Unreadable lines are skipped.
    """
    if not os.path.isfile(path):
        logger.error("Records file %s not found.", path)
        return None
    rows: List[dict] = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as e:
                logger.warning("Skipping line %d of %s: %s", lineno, path, e)
    if not rows:
        logger.error("No records loaded from %s.", path)
        return None
    df = pd.DataFrame(rows)
    missing = [c for c in RECORD_COLUMNS if c not in df.columns]
    if missing:
        logger.error("Records in %s are missing columns %s.", path, missing)
        return None
    for col in ["alpha", "epsilon", "truth_distance", "statistic", "threshold", "wall_time"]:
        df[col] = pd.to_numeric(df[col], errors="coerce")
    df["reject"] = df["reject"].astype(bool)
    return df.sort_values(by=["d", "alpha", "epsilon", "n", "trial", "label"]).reset_index(drop=True)


def records_to_frame(records) -> pd.DataFrame:
    """DataFrame from TrialRecord objects (or plain dicts)."""
    rows = [r.to_dict() if hasattr(r, "to_dict") else dict(r) for r in records]
    return pd.DataFrame(rows, columns=RECORD_COLUMNS)


def write_summary_csv(summary: pd.DataFrame, path: str) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    summary[SUMMARY_COLUMNS].to_csv(path, index=False)
