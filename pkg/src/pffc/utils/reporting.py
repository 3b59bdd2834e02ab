"""Summaries and CSV output for solver trajectories.

The trajectory table is a :class:`pandas.DataFrame` with the columns in
:data:`TRAJECTORY_COLUMNS`; this module only formats and writes it, it does
not render plots.
"""

from __future__ import annotations

from pathlib import Path
from typing import Dict, Iterable

import numpy as np
import pandas as pd


TRAJECTORY_COLUMNS = (
    "t",
    "obj_avg",
    "violation_l2",
    "q_norm",
    "w_norm",
    "lmo_gap",
    "wall_ms",
)


def _to_ndarray(values: Iterable[float]) -> np.ndarray:
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        raise ValueError("Cannot summarise an empty sequence.")
    return arr


def gap_summary(gaps: Iterable[float], diameter: float | None = None) -> Dict[str, float]:
    """Count, mean, quartiles and max of measured LMO gaps.

    When *diameter* is given the mean and max are also reported as fractions
    of ``D**2``, the scale on which an inexact LMO is considered harmless.
    """

    arr = _to_ndarray(gaps)
    q25, q50, q75 = np.quantile(arr, [0.25, 0.5, 0.75])
    out = {
        "gap_count": float(arr.size),
        "gap_mean": float(arr.mean()),
        "gap_min": float(arr.min()),
        "gap_q25": float(q25),
        "gap_median": float(q50),
        "gap_q75": float(q75),
        "gap_max": float(arr.max()),
    }
    if diameter is not None and diameter > 0:
        d2 = diameter * diameter
        out["gap_mean_frac_d2"] = out["gap_mean"] / d2
        out["gap_max_frac_d2"] = out["gap_max"] / d2
    return out


def write_trajectory_csv(frame: pd.DataFrame, path: str | Path) -> Path:
    """Write a trajectory with the stable column order, UTF-8, LF endings."""

    missing = [c for c in TRAJECTORY_COLUMNS if c not in frame.columns]
    if missing:
        raise ValueError(f"trajectory is missing columns: {missing}")
    out_path = Path(path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    table = frame.loc[:, list(TRAJECTORY_COLUMNS)].copy()
    table["t"] = table["t"].astype(int)
    table.to_csv(out_path, index=False, encoding="utf-8", lineterminator="\n", float_format="%.12g")
    return out_path


__all__ = [
    "TRAJECTORY_COLUMNS",
    "gap_summary",
    "write_trajectory_csv",
]
