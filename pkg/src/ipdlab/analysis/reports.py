"""Tables exported by the command line: correlations, importances, winner distributions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from .clustering import THRESHOLDS, cluster_threshold, kmeans_silhouette
from .correlations import correlation_table
from .features import NUMERIC_FEATURES, feature_table, impute, model_matrix
from .forest import forest_fit

MIN_ROWS = {"correlations": 3, "importance": 20, "winners": 1}


class InsufficientData(ValueError):
    def __init__(self, what: str, have: int, need: int):
        super().__init__(f"{what} needs at least {need} rows, got {have}")
        self.need = need
        self.have = have


def analysis_frame(records) -> pd.DataFrame:
    return impute(feature_table(records))


def _type_frame(df: pd.DataFrame, protocol: str, what: str) -> pd.DataFrame:
    sub = df[df["protocol"] == protocol]
    need = MIN_ROWS[what]
    if len(sub) < need:
        raise InsufficientData(f"{what} for {protocol}", len(sub), need)
    return sub


def correlation_report(df: pd.DataFrame, protocol: str) -> pd.DataFrame:
    """Feature rows against r and median_score. SSE uses observed values only."""
    sub = _type_frame(df, protocol, "correlations").copy()
    if "SSE_observed" in sub:
        sub["SSE"] = sub["SSE_observed"]
    table = correlation_table(sub, NUMERIC_FEATURES)
    table.index.name = "feature"
    return table


def approach_labels(sub: pd.DataFrame, approach: int, seed=0) -> tuple:
    """Labels for one clustering approach, plus the chosen k for approach 4 (else None)."""
    if approach in THRESHOLDS:
        return cluster_threshold(sub["r"].to_numpy(), THRESHOLDS[approach]), None
    if approach == 4:
        result = kmeans_silhouette(sub[["r", "median_score"]].to_numpy(), seed=seed)
        return result.labels, result.chosen_k
    raise ValueError(f"approach must be 1, 2, 3 or 4, got {approach}")


@dataclass
class ImportanceReport:
    table: pd.DataFrame
    score: Optional[float]
    oob_score: Optional[float]
    chosen_k: Optional[int]
    rows: int


def importance_report(df: pd.DataFrame, protocol: str, approach: int, seed=0, n_trees: int = 100
                      ) -> ImportanceReport:
    sub = _type_frame(df, protocol, "importance")
    labels, chosen_k = approach_labels(sub, approach, seed)
    X, cols, _ = model_matrix(sub, protocol)
    model = forest_fit(X, labels, seed=seed, n_trees=n_trees, feature_names=cols)
    ranked = model.ranked_importances()
    table = pd.DataFrame({"rank": range(1, len(ranked) + 1), "feature": [f for f, _ in ranked],
                          "importance": [v for _, v in ranked]})
    return ImportanceReport(table, model.holdout_score, model.oob_score, chosen_k, len(sub))


WINNER_QUANTITIES = ("C_r", "C_r/C_mean", "C_r/C_median")


def winners_report(df: pd.DataFrame, protocol: str, width: float = 0.05) -> pd.DataFrame:
    """Histogram counts of the winners' (r = 0) cooperation measures."""
    sub = _type_frame(df, protocol, "winners")
    winners = sub[sub["r"] == 0]
    if winners.empty:
        raise InsufficientData(f"winners for {protocol}", 0, 1)
    out = []
    for q in WINNER_QUANTITIES:
        values = winners[q].to_numpy(dtype=float)
        values = values[~np.isnan(values)]
        top = max(width, math.ceil(values.max() / width + 1e-9) * width) if len(values) else width
        edges = np.round(np.arange(0.0, top + width / 2, width), 10)
        counts, _ = np.histogram(values, bins=edges)
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            out.append({"quantity": q, "bin_left": float(lo), "bin_right": float(hi), "count": int(c)})
    return pd.DataFrame(out)


def winner_medians(df: pd.DataFrame, protocol: str) -> pd.Series:
    sub = df[(df["protocol"] == protocol) & (df["r"] == 0)]
    return sub[list(WINNER_QUANTITIES) + ["CC_to_C"]].median()
