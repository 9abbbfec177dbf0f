"""Distance from a memory-one vector to the nearest extortionate ZD strategy.

Extortionate zero-determinant vectors have the form

    q = (1, 1, 0, 0) + phi * ((R-P, S-P, T-P, 0) - chi * (R-P, T-P, S-P, 0))

with extortion factor chi >= 1 and phi > 0 small enough for q to be a
probability vector. Substituting u = 1/chi and t = phi * chi gives
q = e + t * (u * a - b), which is linear in t for fixed u. The fit
therefore minimises over t in closed form and searches u in [0, 1] by a
dense grid followed by repeated local refinement. u = 0 is the chi -> inf
limit and t = 0 the phi -> 0 limit; both belong to the closure of the
family and are allowed so the minimum always exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..engine import DEFAULT_PAYOFFS, PayoffMatrix

_E = np.array([1.0, 1.0, 0.0, 0.0])


@dataclass(frozen=True)
class ZdFit:
    chi: float
    phi: float
    residual: float
    vector: tuple


def _directions(payoffs: PayoffMatrix):
    R, S, T, P = payoffs.R, payoffs.S, payoffs.T, payoffs.P
    a = np.array([R - P, S - P, T - P, 0.0])
    b = np.array([R - P, T - P, S - P, 0.0])
    return a, b


def extortionate_vector(chi: float, phi: float, payoffs: PayoffMatrix = DEFAULT_PAYOFFS) -> tuple:
    """The ZD vector for extortion factor ``chi`` and scale ``phi`` (no feasibility check)."""
    a, b = _directions(payoffs)
    return tuple(_E + phi * (a - chi * b))


def max_phi(chi: float, payoffs: PayoffMatrix = DEFAULT_PAYOFFS) -> float:
    """Largest phi for which the vector with extortion factor ``chi`` stays in [0, 1]^4."""
    if chi == math.inf:
        return 0.0
    return _t_max(np.array([1.0 / chi]), payoffs)[0] / chi


def _t_max(u: np.ndarray, payoffs: PayoffMatrix) -> np.ndarray:
    R, S, T, P = payoffs.R, payoffs.S, payoffs.T, payoffs.P
    with np.errstate(divide="ignore"):
        cc = np.where(u < 1.0, 1.0 / ((1.0 - u) * (R - P)), np.inf)
    cd = 1.0 / (u * (P - S) + (T - P))
    dc = 1.0 / (u * (T - P) + (P - S))
    return np.minimum(np.minimum(cc, cd), dc)


def _best_t(u: np.ndarray, target: np.ndarray, payoffs: PayoffMatrix):
    a, b = _directions(payoffs)
    w = u[:, None] * a[None, :] - b[None, :]
    d = target - _E
    t = np.clip((w @ d) / np.einsum("ij,ij->i", w, w), 0.0, _t_max(u, payoffs))
    resid = d[None, :] - t[:, None] * w
    return t, np.einsum("ij,ij->i", resid, resid)


def fit_extortionate(p: Sequence[float], payoffs: PayoffMatrix = DEFAULT_PAYOFFS,
                     grid: int = 2001, rounds: int = 30) -> ZdFit:
    """Least-squares fit of ``p`` by an extortionate ZD vector."""
    target = np.asarray(p, dtype=float)
    if target.shape != (4,):
        raise ValueError(f"expected a memory-one vector of length 4, got shape {target.shape}")
    if np.any(np.isnan(target)):
        raise ValueError("memory-one vector has missing components")
    u = np.linspace(0.0, 1.0, grid)
    t, err = _best_t(u, target, payoffs)
    i = int(np.argmin(err))
    best_u, best_t, best_err = u[i], t[i], err[i]
    step = 1.0 / (grid - 1)
    for _ in range(rounds):
        lo, hi = max(0.0, best_u - step), min(1.0, best_u + step)
        u = np.linspace(lo, hi, 41)
        t, err = _best_t(u, target, payoffs)
        i = int(np.argmin(err))
        if err[i] <= best_err:
            best_u, best_t, best_err = u[i], t[i], err[i]
        step = (hi - lo) / 40
    chi = math.inf if best_u == 0.0 else 1.0 / best_u
    phi = float(best_t * best_u)
    a, b = _directions(payoffs)
    vector = tuple(_E + best_t * (best_u * a - b))
    return ZdFit(chi, phi, float(best_err), vector)


def sse_to_zd(p: Sequence[Optional[float]], payoffs: PayoffMatrix = DEFAULT_PAYOFFS) -> Optional[float]:
    """Clamped squared distance to the nearest extortionate ZD vector; None if ``p`` is incomplete."""
    if any(v is None or (isinstance(v, float) and math.isnan(v)) for v in p):
        return None
    return min(fit_extortionate(p, payoffs).residual, 1.0)
