"""Recursive maximum-likelihood Gaussian segmentation of return series.

A span is split at the index maximising the log-likelihood gain of a
two-Gaussian model over a single Gaussian, as long as that gain exceeds a
threshold; both halves are then treated the same way. Segments are labelled
by the quintile of their variance within one ticker, and daily regime counts
are aggregated across tickers.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import date
from typing import Iterable, Sequence

import numpy as np

from .errors import AllDegenerate, TooShort

DEFAULT_DELTA_C = 10.0
DEFAULT_T_MIN = 2
# a side whose std falls below this fraction of the whole span's std is excluded
DEGENERATE_RATIO = 1e-12
# side variances within this many double-double ulps of m * sum(c^2) are rounding noise
CANCELLATION_ULPS = 64

_EPS = np.finfo(float).eps
_SPLIT = 134217729.0  # 2**27 + 1


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _two_prod(a, b):
    """``a*b`` as an unevaluated sum ``p + err`` (Dekker splitting)."""
    p = a * b
    t = _SPLIT * a
    ah = t - (t - a)
    al = a - ah
    t = _SPLIT * b
    bh = t - (t - b)
    bl = b - bh
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _dd_cumsum(hi, lo=None):
    """Prefix sums of ``hi + lo`` as a (head, tail) pair.

    The head is the plain running sum; every step's rounding error is
    recovered with TwoSum and accumulated, with ``lo``, in the tail.
    """
    s = np.add.accumulate(hi)
    _, err = _two_sum(np.concatenate(([0.0], s[:-1])), hi)
    return s, np.add.accumulate(err if lo is None else err + lo)


def compensated_cumsum(x: np.ndarray) -> np.ndarray:
    """Running sum with the rounding error of every step added back."""
    s, tail = _dd_cumsum(np.asarray(x, dtype=float))
    return s + tail


def _side_variance(s1, s2, m):
    """``(m*S2 - S1^2) / m^2`` evaluated in double-double.

    ``s1`` and ``s2`` are (head, tail) sums of ``c`` and ``c^2``. Results
    below the residual rounding noise are set to exactly 0.
    """
    ah, al = _two_prod(m, s2[0])
    al = al + m * s2[1]
    bh, bl = _two_prod(s1[0], s1[0])
    bl = bl + 2.0 * s1[0] * s1[1]
    dh, dl = _two_sum(ah, -bh)
    num = dh + (dl + (al - bl))
    num[num <= CANCELLATION_ULPS * _EPS * _EPS * ah] = 0.0
    return num / (m * m)


@dataclass(frozen=True)
class DeltaProfile:
    """Gain of the best two-piece model for every admissible split.

    ``ts[k]`` is the number of points in the left piece; excluded (degenerate)
    candidates are absent.
    """

    ts: np.ndarray
    values: np.ndarray
    argmax: int
    max: float


def delta_profile(xs, t_min: int = DEFAULT_T_MIN) -> DeltaProfile:
    """Compute ``n ln s - t ln s_L - (n-t) ln s_R`` for every split ``t``.

    ``s``, ``s_L`` and ``s_R`` are maximum-likelihood standard deviations of
    the whole span, of ``xs[:t]`` and of ``xs[t:]``. The span is centred on
    its own mean first, then left and right moments come from double-double
    prefix and suffix sums, so the whole profile costs O(n) and stays accurate
    when a side's mean is far from the span mean relative to its spread.
    """
    xs = np.asarray(xs, dtype=float)
    n = xs.size
    if t_min < 1:
        raise ValueError("t_min must be >= 1")
    if n < 2 * t_min:
        raise TooShort(f"span of {n} points is shorter than 2*t_min = {2 * t_min}")

    # centred values carried as c + c_err so the shift itself loses nothing
    c, c_err = _two_sum(xs, np.full(n, -xs.mean()))
    c2, c2_err = _two_prod(c, c)
    c2_err += 2.0 * c * c_err
    var = max(float(np.mean(c2)) - float(np.mean(c)) ** 2, 0.0)
    sigma = np.sqrt(var)

    ts = np.arange(t_min, n - t_min + 1)
    li = ts - 1
    ri = n - ts - 1
    pre1, pre2 = _dd_cumsum(c, c_err), _dd_cumsum(c2, c2_err)
    suf1, suf2 = _dd_cumsum(c[::-1], c_err[::-1]), _dd_cumsum(c2[::-1], c2_err[::-1])
    nl = ts.astype(float)
    nr = (n - ts).astype(float)
    var_l = _side_variance((pre1[0][li], pre1[1][li]), (pre2[0][li], pre2[1][li]), nl)
    var_r = _side_variance((suf1[0][ri], suf1[1][ri]), (suf2[0][ri], suf2[1][ri]), nr)

    floor = DEGENERATE_RATIO * (sigma + 1e-300)
    keep = (np.sqrt(var_l) >= floor) & (np.sqrt(var_r) >= floor)
    if sigma == 0.0 or not keep.any():
        raise AllDegenerate(f"every split of the {n}-point span has a zero-variance side")

    ts, nl, nr, var_l, var_r = ts[keep], nl[keep], nr[keep], var_l[keep], var_r[keep]
    values = 0.5 * (n * np.log(var) - nl * np.log(var_l) - nr * np.log(var_r))
    k = int(np.argmax(values))  # first occurrence: ties go to the smallest t
    return DeltaProfile(ts, values, int(ts[k]), float(values[k]))


@dataclass(frozen=True)
class Segment:
    """Inclusive index span ``[start, end]`` with ML mean and variance."""

    start: int
    end: int
    mean: float
    variance: float
    label: int | None = None

    @property
    def length(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True)
class Segmentation:
    ticker: str
    segments: tuple
    delta_c: float
    t_min: int = DEFAULT_T_MIN

    @property
    def boundaries(self) -> list[int]:
        """Start indices of every segment after the first."""
        return [s.start for s in self.segments[1:]]


def _segment_stats(xs: np.ndarray, start: int, end: int) -> Segment:
    span = xs[start:end + 1]
    mu = float(np.mean(span))
    var = float(np.mean((span - mu) ** 2))
    return Segment(start, end, mu, var)


def segment_recursive(xs, delta_c: float = DEFAULT_DELTA_C, t_min: int = DEFAULT_T_MIN,
                      ticker: str = "") -> Segmentation:
    """Split recursively (left piece first) while the best gain exceeds ``delta_c``."""
    if not delta_c > 0:
        raise ValueError("delta_c must be > 0")
    xs = np.asarray(xs, dtype=float)
    if xs.size < 1:
        raise TooShort("empty series")
    if not np.all(np.isfinite(xs)):
        raise ValueError("series contains non-finite values")

    segments = []
    stack = [(0, xs.size - 1)]
    while stack:
        start, end = stack.pop()
        n = end - start + 1
        split = None
        if n >= 2 * t_min:
            try:
                prof = delta_profile(xs[start:end + 1], t_min)
            except AllDegenerate:
                prof = None
            if prof is not None and prof.max > delta_c:
                split = start + prof.argmax
        if split is None:
            segments.append(_segment_stats(xs, start, end))
        else:
            # right pushed first so the left piece is processed first
            stack.append((split, end))
            stack.append((start, split - 1))
    return Segmentation(ticker, tuple(segments), float(delta_c), t_min)


def quintile_labels(segments: Sequence[Segment]) -> list[Segment]:
    """Label segments 1..5 by variance rank ``r``: ``k = ceil(5 r / m)``.

    Ties in variance are ranked by start index. Input order is preserved.
    """
    m = len(segments)
    order = sorted(range(m), key=lambda k: (segments[k].variance, segments[k].start))
    labels = [0] * m
    for rank, k in enumerate(order, start=1):
        labels[k] = (5 * rank + m - 1) // m
    return [replace(s, label=lab) for s, lab in zip(segments, labels)]


def label_segmentation(seg: Segmentation) -> Segmentation:
    return replace(seg, segments=tuple(quintile_labels(seg.segments)))


@dataclass(frozen=True)
class RegimeCounts:
    """Daily segment-start counts and per-quintile active-segment counts.

    ``quintile_per_day[k - 1, d]`` counts label-``k`` segments on ``dates[d]``.
    """

    dates: tuple
    starts_per_day: np.ndarray = field(compare=False)
    quintile_per_day: np.ndarray = field(compare=False)


def regime_counts(items: Iterable[tuple[Segmentation, Sequence[date]]],
                  calendar: Sequence[date] | None = None,
                  mode: str = "span") -> RegimeCounts:
    """Aggregate labelled segmentations onto a shared calendar.

    ``items`` pairs each segmentation with the dates of its series. In
    ``"span"`` mode a segment counts on every calendar day between its start
    and end dates; in ``"start"`` mode only on its start date.
    """
    if mode not in ("span", "start"):
        raise ValueError("mode must be 'span' or 'start'")
    items = list(items)
    if calendar is None:
        calendar = sorted({d for _, dates in items for d in dates})
    cal = np.array([d.toordinal() for d in calendar], dtype=np.int64)
    n_days = cal.size
    starts = np.zeros(n_days, dtype=np.int64)
    diff = np.zeros((5, n_days + 1), dtype=np.int64)

    for seg, dates in items:
        for s in seg.segments:
            d0 = dates[s.start].toordinal()
            d1 = dates[s.end].toordinal()
            a = int(np.searchsorted(cal, d0, side="left"))
            if a < n_days and cal[a] == d0:
                starts[a] += 1
            if s.label is None:
                continue
            if mode == "start":
                if a < n_days and cal[a] == d0:
                    diff[s.label - 1, a] += 1
                    diff[s.label - 1, a + 1] -= 1
                continue
            b = int(np.searchsorted(cal, d1, side="right"))
            if b > a:
                diff[s.label - 1, a] += 1
                diff[s.label - 1, b] -= 1
    quint = np.cumsum(diff, axis=1)[:, :n_days]
    return RegimeCounts(tuple(calendar), starts, quint)
