"""Convergence diagnostics and posterior summaries across chains."""

from __future__ import annotations

import numpy as np
from scipy import special, stats

from ..errors import DegenerateChainError, InvalidArgumentError

MIN_SUMMARY_DRAWS = 20


def _as_arrays(chains, param) -> list[np.ndarray]:
    out = []
    for ch in chains:
        a = ch[param] if not isinstance(ch, np.ndarray) else ch
        out.append(np.asarray(a, dtype=float))
    return out


def _rank_normalize(x: np.ndarray) -> np.ndarray:
    """Blom-style normal scores of the pooled ranks (average ranks for ties)."""
    s = x.size
    r = stats.rankdata(x, method="average").reshape(x.shape)
    return special.ndtri((r - 0.375) / (s + 0.25))


def _rhat_core(x: np.ndarray) -> float:
    """Classic ``sqrt(var_plus / W)`` on an ``(m, n)`` array of split chains."""
    m, n = x.shape
    w = float(np.mean(np.var(x, axis=1, ddof=1)))
    if not w > 0:
        raise DegenerateChainError("zero within-chain variance")
    b = n * float(np.var(np.mean(x, axis=1), ddof=1))
    var_plus = (n - 1) / n * w + b / n
    return float(np.sqrt(var_plus / w))


def _split(arrays) -> np.ndarray:
    n = min(a.size for a in arrays)
    if n < 4:
        raise InvalidArgumentError("each chain needs at least 4 draws")
    half = n // 2
    parts = []
    for a in arrays:
        a = a[:n]
        parts += [a[:half], a[n - half :]]
    return np.vstack(parts)


def split_rhat(chains, param: str = "betaZ", folded: bool = False) -> float:
    """Rank-normalised split-R-hat (bulk).  With ``folded`` return the maximum
    of the bulk value and the value on folded draws ``|x - median|``."""
    arrays = _as_arrays(chains, param)
    if len(arrays) < 2:
        raise InvalidArgumentError("need at least two chains")
    x = _split(arrays)
    if np.all(np.var(x, axis=1) == 0):
        raise DegenerateChainError("constant chains")
    bulk = _rhat_core(_rank_normalize(x))
    if not folded:
        return bulk
    f = np.abs(x - np.median(x))
    return max(bulk, _rhat_core(_rank_normalize(f)))


def posterior_summary(chains, param: str = "betaZ", level: float = 0.95) -> tuple[float, float, float]:
    """Pooled mean and equal-tailed interval from type-7 (linear) quantiles."""
    arrays = _as_arrays(chains if isinstance(chains, (list, tuple)) else [chains], param)
    pooled = np.concatenate(arrays)
    if pooled.size < MIN_SUMMARY_DRAWS:
        raise InvalidArgumentError(f"need at least {MIN_SUMMARY_DRAWS} pooled draws, got {pooled.size}")
    a = (1 - level) / 2
    lo, hi = np.quantile(pooled, [a, 1 - a], method="linear")
    return float(pooled.mean()), float(lo), float(hi)
