import logging
import math
from functools import lru_cache
from typing import Sequence

import numpy as np
import pandas as pd

from src.models.queries import HotFractionQuery

logger = logging.getLogger(__name__)

EXACT_LIMIT = 10 ** 8
HEAD_TERMS = 10 ** 6
CHUNK = 1 << 20
ZIPF_COLUMNS = ["alpha", "n_items", "coverage", "hot_fraction"]


def _exact_sum(n: int, alpha: float) -> float:
    total = 0.0
    for start in range(1, n + 1, CHUNK):
        stop = min(start + CHUNK, n + 1)
        total += float(np.sum(np.arange(start, stop, dtype=np.float64) ** -alpha))
    return total


def _tail(m: int, n: int, alpha: float) -> float:
    """Euler-Maclaurin estimate of sum_{i=m+1}^{n} i^-alpha through the B2 term"""
    if n <= m:
        return 0.0
    log_ratio = math.log(n / m)
    one_minus = 1.0 - alpha
    if abs(one_minus) < 1e-12:
        integral = log_ratio
    else:
        integral = m ** one_minus * math.expm1(one_minus * log_ratio) / one_minus
    f_n, f_m = n ** -alpha, m ** -alpha
    df_n, df_m = -alpha * n ** (-alpha - 1), -alpha * m ** (-alpha - 1)
    return integral + 0.5 * (f_n - f_m) + (df_n - df_m) / 12.0


def generalized_harmonic(n: int, alpha: float) -> float:
    """H(n, alpha) = sum_{i=1}^{n} i^-alpha.

    Exact below EXACT_LIMIT terms; above it an exact 10^6-term head plus an
    Euler-Maclaurin tail, whose truncation error is far below 1e-6 relative.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n <= EXACT_LIMIT:
        return _exact_sum(n, alpha)
    return _exact_sum(HEAD_TERMS, alpha) + _tail(HEAD_TERMS, n, alpha)


class HarmonicEvaluator:
    """H(k, alpha) for many k: cumulative table for k <= head, Euler-Maclaurin above"""

    def __init__(self, alpha: float, head: int = HEAD_TERMS):
        self.alpha = alpha
        self.head = head
        self._table = np.cumsum(np.arange(1, head + 1, dtype=np.float64) ** -alpha)

    def __call__(self, k: int) -> float:
        if k < 1:
            return 0.0
        if k <= self.head:
            return float(self._table[k - 1])
        return float(self._table[-1]) + _tail(self.head, k, self.alpha)


@lru_cache(maxsize=16)
def _evaluator(alpha: float) -> HarmonicEvaluator:
    return HarmonicEvaluator(alpha)


def hot_fraction(q: HotFractionQuery) -> float:
    """Smallest share of items (by popularity) absorbing the target coverage of accesses"""
    h = _evaluator(q.alpha)
    target = q.coverage * h(q.n_items)
    lo, hi = 1, q.n_items
    while lo < hi:
        mid = (lo + hi) // 2
        if h(mid) >= target:
            hi = mid
        else:
            lo = mid + 1
    logger.debug(f"Hot set for alpha={q.alpha}, n={q.n_items}, coverage={q.coverage}: {lo} items")
    return lo / q.n_items


def hot_fraction_table(alphas: Sequence[float], n_items: Sequence[int], coverage: float) -> pd.DataFrame:
    rows = []
    for alpha in alphas:
        for n in n_items:
            q = HotFractionQuery(alpha=alpha, n_items=int(n), coverage=coverage)
            rows.append({"alpha": alpha, "n_items": int(n), "coverage": coverage,
                         "hot_fraction": hot_fraction(q)})
    return pd.DataFrame(rows, columns=ZIPF_COLUMNS)
