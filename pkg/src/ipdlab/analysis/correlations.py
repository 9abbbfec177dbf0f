"""Pearson correlations between features and performance targets.

Observations with a missing value in either column are dropped pairwise.
Coefficients are None when fewer than three pairs remain or either column
is constant.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
import pandas as pd

from .features import NUMERIC_FEATURES, TARGETS


def pearson(x, y) -> Optional[float]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = ~(np.isnan(x) | np.isnan(y))
    x, y = x[keep], y[keep]
    if len(x) < 3 or np.ptp(x) == 0 or np.ptp(y) == 0:
        return None
    dx = x - x.mean()
    dy = y - y.mean()
    return float(np.clip((dx @ dy) / np.sqrt((dx @ dx) * (dy @ dy)), -1.0, 1.0))


def correlations(df: pd.DataFrame, target: str, features: Sequence[str] = NUMERIC_FEATURES) -> pd.Series:
    """Coefficient of each feature against ``target`` (classifier flags are never included)."""
    if target not in TARGETS:
        raise ValueError(f"target must be one of {TARGETS}, got {target!r}")
    return pd.Series({f: pearson(df[f], df[target]) for f in features}, name=target, dtype=object)


def correlation_table(df: pd.DataFrame, features: Sequence[str] = NUMERIC_FEATURES) -> pd.DataFrame:
    """Features as rows, one column per target."""
    return pd.DataFrame({t: correlations(df, t, features) for t in TARGETS})


def correlation_matrix(df: pd.DataFrame, columns: Sequence[str] = tuple(NUMERIC_FEATURES) + tuple(TARGETS)
                       ) -> pd.DataFrame:
    """Symmetric matrix of pairwise coefficients; the diagonal is 1 for non-constant columns."""
    columns = list(columns)
    mat = pd.DataFrame(None, index=columns, columns=columns, dtype=object)
    for i, a in enumerate(columns):
        for b in columns[i:]:
            value = pearson(df[a], df[b])
            if a == b and value is not None:
                value = 1.0
            mat.loc[a, b] = value
            mat.loc[b, a] = value
    return mat
