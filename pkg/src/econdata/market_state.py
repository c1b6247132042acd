"""Activity densities, occurrence rates and Jensen-Shannon market-state similarity."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import EmptyPeriod, NegativeInput, NotNormalized, ShapeMismatch
from .ingest import ActivityTensor

LN2 = math.log(2.0)
NORMALIZATION_TOL = 1e-9


def xlogx(v):
    """``v * ln(v)`` with the limit value 0 at ``v = 0``.

    Accepts a scalar or an array; raises :class:`NegativeInput` for ``v < 0``.
    """
    arr = np.asarray(v, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise NegativeInput(f"xlogx needs v >= 0, got {v!r}")
    pos = arr > 0
    out = np.zeros_like(arr)
    out[pos] = arr[pos] * np.log(arr[pos])
    if out.ndim == 0:
        return float(out)
    return out


def shannon_entropy(p) -> float:
    """Natural-log Shannon entropy of a normalised vector or matrix."""
    p = np.asarray(p, dtype=float)
    if p.size == 0:
        raise NotNormalized("empty distribution")
    if np.any(p < 0):
        raise NegativeInput("distribution has negative entries")
    flat = p.ravel()
    total = math.fsum(flat)
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise NotNormalized(f"entries sum to {total!r}, not 1")
    return -math.fsum(xlogx(flat))


def jsd(p, q) -> float:
    """Jensen-Shannon divergence ``H((p+q)/2) - (H(p) + H(q))/2`` in nats.

    Bounded by ``[0, ln 2]``; round-off just below zero is clipped to zero.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ShapeMismatch(f"shapes differ: {p.shape} vs {q.shape}")
    mid = 0.5 * (p + q)
    d = shannon_entropy(mid) - 0.5 * (shannon_entropy(p) + shannon_entropy(q))
    return max(d, 0.0)


@dataclass(frozen=True)
class ActivityMatrix:
    period: str
    currencies: tuple
    a: np.ndarray = field(compare=False)


@dataclass(frozen=True)
class OccurrenceVector:
    period: str
    currencies: tuple
    k: np.ndarray = field(compare=False)


def activity_density(tensor: ActivityTensor, period) -> ActivityMatrix:
    """Share of each ordered cell ``(i, j)`` in the period's full-matrix total."""
    s = tensor.period_index(period)
    totals = tensor.pair_totals(s)
    denom = int(totals.sum())
    if denom == 0:
        raise EmptyPeriod(f"period {tensor.periods[s]!r} has no activity")
    return ActivityMatrix(tensor.periods[s], tensor.currencies, totals / denom)


def occurrence_rates(a: ActivityMatrix) -> OccurrenceVector:
    k = np.array([math.fsum(row) for row in a.a])
    return OccurrenceVector(a.period, a.currencies, k)


class SimilarityKind(Enum):
    PAIRS = "pairs"
    CURRENCIES = "currencies"


@dataclass(frozen=True)
class SimilarityMatrix:
    periods: tuple
    d: np.ndarray = field(compare=False)
    kind: SimilarityKind
    dropped: tuple = ()


def similarity_from_distributions(periods: Sequence[str], dists: Sequence[np.ndarray],
                                  kind: SimilarityKind, threads: int = 1) -> SimilarityMatrix:
    """Pairwise divergences, each unordered pair evaluated once and mirrored."""
    n = len(periods)
    pairs = list(combinations(range(n), 2))
    if threads > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(lambda ab: jsd(dists[ab[0]], dists[ab[1]]), pairs))
    else:
        values = [jsd(dists[a], dists[b]) for a, b in pairs]
    d = np.zeros((n, n))
    for (a, b), v in zip(pairs, values):
        d[a, b] = d[b, a] = v
    return SimilarityMatrix(tuple(periods), d, kind)


def similarity_matrix(tensor: ActivityTensor, kind: SimilarityKind = SimilarityKind.PAIRS,
                      threads: int = 1) -> SimilarityMatrix:
    """Divergence between every two non-empty periods of ``tensor``.

    Empty periods are dropped (with a warning) and listed in ``dropped``.
    """
    kept, dists, dropped = [], [], []
    for period in tensor.periods:
        try:
            am = activity_density(tensor, period)
        except EmptyPeriod:
            dropped.append(period)
            warnings.warn(f"period {period} has no activity; dropped from similarity", stacklevel=2)
            continue
        kept.append(period)
        dists.append(am.a if kind is SimilarityKind.PAIRS else occurrence_rates(am).k)
    if len(kept) < 2:
        raise EmptyPeriod(f"need at least 2 non-empty periods, have {len(kept)}")
    sm = similarity_from_distributions(kept, dists, kind, threads)
    return SimilarityMatrix(sm.periods, sm.d, kind, tuple(dropped))
