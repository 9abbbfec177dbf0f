"""Per-performance feature vectors (one per strategy per tournament).

Column order of the exported feature matrix is ``ID_COLUMNS + FEATURES + TARGETS``.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd

from ..engine import DEFAULT_PAYOFFS
from ..strategies import registry
from ..strategies.base import StrategyMetadata
from ..tournament import PROTOCOLS, ResultRow
from .zd import sse_to_zd

ID_COLUMNS = ["seed", "protocol", "name"]
CLASSIFIERS = ["stochastic", "makes_use_of_game", "makes_use_of_length"]
COND_COOP = ["CC_to_C", "CD_to_C", "DC_to_C", "DD_to_C"]
RATIOS = ["C_r/C_max", "C_r/C_min", "C_r/C_median", "C_r/C_mean"]
FEATURES = (CLASSIFIERS + ["memory_usage", "SSE", "C_max", "C_min", "C_median", "C_mean"] + RATIOS
            + ["C_r"] + COND_COOP + ["p_n", "n", "p_e", "N", "k"])
TARGETS = ["r", "median_score"]
NUMERIC_FEATURES = [f for f in FEATURES if f not in CLASSIFIERS]
# Columns that may be missing and are filled per tournament type.
IMPUTED = COND_COOP + RATIOS + ["SSE"]


@dataclass(frozen=True)
class TournamentContext:
    protocol: str
    N: int
    k: int
    n: Optional[int]
    p_n: float
    p_e: float
    cooperation_ratings: tuple

    @classmethod
    def from_rows(cls, params: dict, rows: Sequence[ResultRow]) -> "TournamentContext":
        return cls(params["protocol"], params["N"], params["k"], params.get("n"), params.get("p_n", 0.0),
                   params.get("p_e", 0.0), tuple(r.cooperation_rating for r in rows))


@dataclass(frozen=True)
class FeatureVector:
    stochastic: bool
    makes_use_of_game: bool
    makes_use_of_length: bool
    memory_usage: Optional[float]
    SSE: Optional[float]
    C_max: float
    C_min: float
    C_median: float
    C_mean: float
    C_r_over_max: Optional[float]
    C_r_over_min: Optional[float]
    C_r_over_median: Optional[float]
    C_r_over_mean: Optional[float]
    C_r: float
    CC_to_C: Optional[float]
    CD_to_C: Optional[float]
    DC_to_C: Optional[float]
    DD_to_C: Optional[float]
    p_n: float
    n: Optional[int]
    p_e: float
    N: int
    k: int
    r: float
    median_score: float

    def as_columns(self) -> dict:
        d = asdict(self)
        for short, col in zip(("max", "min", "median", "mean"), RATIOS):
            d[col] = d.pop(f"C_r_over_{short}")
        return {c: d[c] for c in FEATURES + TARGETS}


def memory_usage(depth: float, n: Optional[int]) -> Optional[float]:
    """Memory depth as a share of the match length, capped at 1; None when n is unknown."""
    if n is None:
        return None
    if depth == math.inf:
        return 1.0
    return min(depth / n, 1.0)


def ratio(value: float, reference: float) -> Optional[float]:
    """value / reference, with 0/0 read as 1 and x/0 as missing."""
    if reference == 0:
        return 1.0 if value == 0 else None
    return value / reference


def compute_features(row: ResultRow, context: TournamentContext, metadata: StrategyMetadata,
                     payoffs=DEFAULT_PAYOFFS) -> FeatureVector:
    ratings = context.cooperation_ratings
    c_max, c_min = max(ratings), min(ratings)
    c_median = float(statistics.median(ratings))
    c_mean = math.fsum(ratings) / len(ratings)
    c_r = row.cooperation_rating
    return FeatureVector(
        stochastic=metadata.stochastic,
        makes_use_of_game=metadata.makes_use_of_game,
        makes_use_of_length=metadata.makes_use_of_length,
        memory_usage=memory_usage(metadata.memory_depth, context.n),
        SSE=sse_to_zd(row.cond_coop, payoffs),
        C_max=c_max, C_min=c_min, C_median=c_median, C_mean=c_mean,
        C_r_over_max=ratio(c_r, c_max), C_r_over_min=ratio(c_r, c_min),
        C_r_over_median=ratio(c_r, c_median), C_r_over_mean=ratio(c_r, c_mean),
        C_r=c_r,
        CC_to_C=row.CC_to_C, CD_to_C=row.CD_to_C, DC_to_C=row.DC_to_C, DD_to_C=row.DD_to_C,
        p_n=context.p_n, n=context.n, p_e=context.p_e, N=context.N, k=context.k,
        r=row.normalized_rank, median_score=row.median_score,
    )


def feature_table(records: Iterable, protocols: Sequence[str] = PROTOCOLS) -> pd.DataFrame:
    """One row per (trial, protocol, strategy); missing values are NaN."""
    out = []
    for rec in records:
        for protocol in protocols:
            params = rec.params(protocol)
            rows = rec.results[protocol]
            ctx = TournamentContext.from_rows(params, rows)
            for row in rows:
                fv = compute_features(row, ctx, registry.classify(row.name))
                out.append({"seed": rec.seed, "protocol": protocol, "name": row.name, **fv.as_columns()})
    df = pd.DataFrame(out, columns=ID_COLUMNS + FEATURES + TARGETS)
    for col in CLASSIFIERS:
        df[col] = df[col].astype(bool)
    for col in NUMERIC_FEATURES + TARGETS:
        df[col] = pd.to_numeric(df[col], errors="coerce").astype(float)
    return df


def impute(df: pd.DataFrame, payoffs=DEFAULT_PAYOFFS) -> pd.DataFrame:
    """Fill missing conditional rates and ratios with the tournament-type mean.

    A ``<column>_missing`` indicator is added for every filled column. SSE is
    recomputed from the filled conditional rates; the original (possibly
    missing) value is kept as ``SSE_observed`` for correlation work.
    """
    out = df.copy()
    out["SSE_observed"] = out["SSE"]
    for col in COND_COOP + RATIOS:
        missing = out[col].isna()
        out[f"{col}_missing"] = missing
        means = out.groupby("protocol")[col].transform("mean")
        out[col] = out[col].fillna(means).fillna(0.0)
    missing = out["SSE"].isna()
    out["SSE_missing"] = missing
    if missing.any():
        vectors = out.loc[missing, COND_COOP].to_numpy()
        out.loc[missing, "SSE"] = [sse_to_zd(tuple(v), payoffs) for v in vectors]
    return out


def model_matrix(df: pd.DataFrame, protocol: str) -> tuple:
    """Feature matrix for one tournament type: columns that are defined for it, as floats."""
    sub = df[df["protocol"] == protocol]
    probend = protocol in ("probend", "noisy_probend")
    drop = {"memory_usage", "n"} if probend else set()
    if protocol in ("standard", "probend"):
        drop.add("p_n")
    if protocol in ("standard", "noisy"):
        drop.add("p_e")
    cols = [c for c in FEATURES if c not in drop]
    X = sub[cols].astype(float).to_numpy()
    if np.isnan(X).any():
        raise ValueError("model matrix still has missing values; impute first")
    return X, cols, sub
