"""Order-statistics U-test for Dragon-King (DK) and negative Dragon-King (nDK)
outliers.

For the k-th smallest of m observations under a continuous CDF ``F``,
``F(x_k)`` follows Beta(k, m-k+1), so the probability of exceeding the
observed value is ``p_k = 1 - I(F(x_k); k, m-k+1)``.  Small ``p`` at the
tail end flags a DK (point too far out), large ``p`` an nDK (point falls
short of the fitted tail).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .empirical import SortedSample
from .errors import DomainError, FitError
from .specfun import reg_inc_beta

DEFAULT_THRESHOLDS = (0.05, 0.95)


class Flag(str, enum.Enum):
    NONE = "none"
    DK = "DK"
    NDK = "nDK"
    PDK = "pDK"


@dataclass(frozen=True)
class UTestReport:
    pvalues: np.ndarray
    classifications: tuple
    tail_region: tuple  # 1-based inclusive (first, last) ranks
    tail_end_window: int
    thresholds: tuple = DEFAULT_THRESHOLDS

    def ranks_with(self, flag: Flag) -> np.ndarray:
        return np.array([i + 1 for i, c in enumerate(self.classifications) if c == flag], dtype=int)

    def counts(self) -> dict:
        out = {f.value: 0 for f in Flag}
        for c in self.classifications:
            out[c.value] += 1
        return out


def default_tail_end_window(m: int) -> int:
    return max(5, math.ceil(0.005 * m))


def u_test_pvalues(sample: SortedSample, cdf: Callable, ccdf: Optional[Callable] = None):
    """Per-rank U-test p-values for an ascending sample.

    When ``ccdf`` is given it is used for the complement ``1 - F``, which
    keeps the top ranks accurate where ``F`` rounds to one; the p-value is
    then ``I(1 - F; m-k+1, k)``.
    """
    x = sample.values
    m = x.size
    k = np.arange(1, m + 1, dtype=float)
    if ccdf is not None:
        s = np.asarray(ccdf(x), dtype=float)
        if np.any((s < 0) | (s > 1)) or np.any(np.isnan(s)):
            raise DomainError("ccdf returned values outside [0, 1]")
        return reg_inc_beta(s, m - k + 1.0, k)
    f = np.asarray(cdf(x), dtype=float)
    if np.any((f < 0) | (f > 1)) or np.any(np.isnan(f)):
        raise DomainError("cdf returned values outside [0, 1]")
    return reg_inc_beta(1.0 - f, m - k + 1.0, k)


def classify(pvalues, tail_region=None, tail_end_window: Optional[int] = None,
             thresholds=DEFAULT_THRESHOLDS) -> UTestReport:
    """Label ranks as DK / nDK (inside the top ``tail_end_window`` ranks) or
    pDK (extreme p-value earlier in ``tail_region``).

    ``tail_region`` is a 1-based inclusive ``(first, last)`` rank pair and
    defaults to all ranks.
    """
    p = np.asarray(pvalues, dtype=float)
    m = p.size
    low, high = thresholds
    if not 0 < low < high < 1:
        raise DomainError("thresholds must satisfy 0 < low < high < 1")
    if tail_region is None:
        tail_region = (1, m)
    first, last = int(tail_region[0]), int(tail_region[1])
    first, last = max(first, 1), min(last, m)
    if last < first:
        raise FitError("empty tail region")
    if tail_end_window is None:
        tail_end_window = default_tail_end_window(m)
    if tail_end_window < 1:
        raise DomainError("tail_end_window must be >= 1")

    ranks = np.arange(1, m + 1)
    in_region = (ranks >= first) & (ranks <= last)
    in_window = in_region & (ranks > last - tail_end_window)
    lo = p <= low
    hi = p >= high
    code = np.zeros(m, dtype=np.int8)
    code[in_window & lo] = 1
    code[in_window & hi] = 2
    code[in_region & ~in_window & (lo | hi)] = 3
    table = (Flag.NONE, Flag.DK, Flag.NDK, Flag.PDK)
    return UTestReport(pvalues=p, classifications=tuple(table[c] for c in code), tail_region=(first, last),
                       tail_end_window=int(tail_end_window), thresholds=(low, high))


def u_test(sample: SortedSample, cdf: Callable, ccdf: Optional[Callable] = None,
           tail_region=None, tail_end_window: Optional[int] = None,
           thresholds=DEFAULT_THRESHOLDS) -> UTestReport:
    """p-values plus classification in one call."""
    pv = u_test_pvalues(sample, cdf, ccdf)
    return classify(pv, tail_region, tail_end_window, thresholds)
