"""Pure-state conversion criteria: majorization and conversion probability."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .states import DensityOperator, PureState, eigendecompose, schmidt_decompose
from .tensor import DimensionError

WEIGHT_TOL = 1e-10
MAJORIZATION_SLACK = 1e-12
RANK_TOL = 1e-12


class WeightError(ValueError):
    pass


def schmidt_weights(values, tol: float = WEIGHT_TOL) -> np.ndarray:
    """Validate a descending probability vector."""
    w = np.asarray(values, dtype=float).reshape(-1)
    if w.size == 0:
        raise WeightError("weight vector is empty")
    if not np.all(np.isfinite(w)):
        raise WeightError("weights must be finite")
    if np.any(w < -tol) or np.any(w > 1 + tol):
        raise WeightError(f"weights must lie in [0, 1], got {w.tolist()}")
    if abs(w.sum() - 1.0) > tol:
        raise WeightError(f"weights sum to {w.sum()!r}, not 1")
    if np.any(np.diff(w) > tol):
        raise WeightError(f"weights must be descending, got {w.tolist()}")
    return np.clip(w, 0.0, 1.0)


def weights_of(psi: PureState) -> np.ndarray:
    """Descending Schmidt weights of a pure state, renormalized to sum 1."""
    w = np.clip(schmidt_decompose(psi).weights, 0.0, None)
    return w / w.sum()


def pad(a, b) -> tuple[np.ndarray, np.ndarray]:
    """Zero-pad two weight vectors to a common length."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = max(a.size, b.size)
    return np.pad(a, (0, n - a.size)), np.pad(b, (0, n - b.size))


def majorization_check(src, tgt) -> bool:
    """Nielsen's condition: ``src`` converts to ``tgt`` deterministically iff
    every prefix sum of ``src`` is at most the matching prefix sum of ``tgt``.
    """
    s, t = pad(schmidt_weights(src), schmidt_weights(tgt))
    return bool(np.all(np.cumsum(s) <= np.cumsum(t) + MAJORIZATION_SLACK))


def tail_sum(weights, l: int) -> float:
    """``sum_{i >= l} weights_i`` with 1-based ``l``."""
    w = np.asarray(weights, dtype=float)
    if not 1 <= l <= w.size:
        raise IndexError(f"tail index {l} outside 1..{w.size}")
    return float(w[l - 1 :].sum())


def vidal_pmax(src, tgt) -> float:
    """Best LOCC probability of turning a pure state with spectrum ``src``
    into one with spectrum ``tgt``: ``min_l E_l(src) / E_l(tgt)``.

    Tails where both states vanish count as ratio 1. A target of higher
    Schmidt rank than the source gives 0.
    """
    s, t = pad(schmidt_weights(src), schmidt_weights(tgt))
    if np.count_nonzero(t > RANK_TOL) > np.count_nonzero(s > RANK_TOL):
        return 0.0
    best = 1.0
    # suffix sums computed from the end so tiny tails are not swamped by rounding
    s_tail = np.cumsum(s[::-1])[::-1]
    t_tail = np.cumsum(t[::-1])[::-1]
    for es, et in zip(s_tail, t_tail):
        if et <= RANK_TOL:
            # 0/0 counts as 1; x/0 is ruled out by the rank test above
            continue
        best = min(best, es / et)
    return float(np.clip(best, 0.0, 1.0))


@dataclass(frozen=True, eq=False)
class Ensemble:
    members: tuple

    def __post_init__(self):
        if not self.members:
            raise ValueError("ensemble is empty")
        probs = np.array([p for p, _ in self.members], dtype=float)
        if np.any(probs <= 0):
            raise ValueError("ensemble probabilities must be positive")
        if abs(probs.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError(f"ensemble probabilities sum to {probs.sum()!r}")
        dims = {rho.dims for _, rho in self.members}
        if len(dims) != 1:
            raise DimensionError("ensemble members have different dimensions")
        object.__setattr__(self, "members", tuple(self.members))


def ensemble_average_pmax(ens: Ensemble, phi: PureState, purity_tol: float = 1e-8) -> float:
    """``sum_i p_i P(member_i -> phi)`` over pure ensemble members.

    Mixed members are rejected; only the pure-state restriction of the
    conversion-probability monotone is available.
    """
    target = weights_of(phi)
    total = 0.0
    for i, (p, rho) in enumerate(ens.members):
        rho: DensityOperator
        if rho.dims != phi.dims:
            raise DimensionError(f"member {i} lives on {rho.dims}, target on {phi.dims}")
        pairs = eigendecompose(rho, tol=0.0)
        if pairs[0][0] < 1 - purity_tol:
            raise ValueError(f"ensemble member {i} is not pure (largest eigenvalue {pairs[0][0]!r})")
        total += p * vidal_pmax(weights_of(pairs[0][1]), target)
    return float(total)
