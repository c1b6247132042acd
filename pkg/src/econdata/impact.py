"""District relative frequencies and after/before impact ratios.

Undefined ratios (a district absent in the before period) are carried as NaN
together with an explicit ``undefined`` mask; output writers render them as
the token ``undefined``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DistrictMismatch, EmptyPeriod, ZeroTotal
from .ingest import DistrictCounts

UNDEFINED = "undefined"


@dataclass(frozen=True)
class FrequencyVector:
    period: str
    districts: tuple
    p: np.ndarray = field(compare=False)


@dataclass(frozen=True)
class ImpactRatios:
    before: str
    after: str
    districts: tuple
    q: np.ndarray = field(compare=False)

    @property
    def undefined(self) -> np.ndarray:
        return np.isnan(self.q)


def relative_frequency(counts: DistrictCounts | np.ndarray, period: str = "",
                       districts: Sequence[str] | None = None) -> FrequencyVector:
    """``p[i] = sum_t x[i, t] / sum_i sum_t x[i, t]``.

    ``counts`` is a :class:`DistrictCounts` or a ``(K, T)`` / ``(K,)`` array.
    """
    if isinstance(counts, DistrictCounts):
        districts = counts.districts
        x = counts.counts
    else:
        x = np.asarray(counts)
        districts = tuple(districts) if districts is not None else tuple(str(k) for k in range(x.shape[0]))
    x = x.reshape(x.shape[0], -1)
    if np.any(x < 0):
        raise ValueError("counts must be non-negative")
    per = np.array([math.fsum(row) for row in x], dtype=float)
    total = math.fsum(per)
    if total <= 0:
        raise EmptyPeriod(f"period {period!r} has no records")
    return FrequencyVector(period, tuple(districts), per / total)


def impact_ratio(p_after: FrequencyVector, p_before: FrequencyVector) -> ImpactRatios:
    if tuple(p_after.districts) != tuple(p_before.districts):
        raise DistrictMismatch("before and after periods use different district lists")
    q = np.full(len(p_before.p), np.nan)
    ok = p_before.p > 0
    q[ok] = p_after.p[ok] / p_before.p[ok]
    return ImpactRatios(p_before.period, p_after.period, tuple(p_before.districts), q)


def impact_ratio_from_counts(n_after, n_before, total_after: float, total_before: float,
                             districts: Sequence[str] | None = None,
                             after: str = "", before: str = "") -> ImpactRatios:
    """``q[i] = (n_after[i] / n_before[i]) / (N_after / N_before)``."""
    n_after = np.asarray(n_after, dtype=float)
    n_before = np.asarray(n_before, dtype=float)
    if n_after.shape != n_before.shape:
        raise DistrictMismatch("before and after count vectors differ in length")
    if not (total_after > 0 and total_before > 0):
        raise ZeroTotal("period totals must be > 0")
    q = np.full(n_before.shape, np.nan)
    ok = n_before > 0
    q[ok] = (n_after[ok] / n_before[ok]) / (total_after / total_before)
    if districts is None:
        districts = tuple(str(k) for k in range(n_before.size))
    return ImpactRatios(before, after, tuple(districts), q)
