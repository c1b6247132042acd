"""Parsers for the four CSV input formats and their sidecars.

Also builds the derived inputs the analyses consume: log-return series from
OHLC rows, binned activity tensors from tick events, and per-district daily
counts from booking records.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from enum import Enum
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .csvio import Source, dumps_csv, read_rows
from .errors import (
    DuplicateKey,
    EmptySeries,
    MalformedRow,
    UnknownCurrency,
)

OHLC_HEADER = ("date", "ticker", "open", "close")
TICK_HEADER = ("timestamp", "base", "quote", "kind")
BOOKING_HEADER = (
    "collect_date", "stay_date", "hotel_id", "hotel_name", "hotel_name_kana",
    "postal_code", "address", "url", "latitude", "longitude", "plan_name",
    "meal", "best_rate", "rate",
)
FLIGHT_HEADER = ("collect_date", "departure_date", "dep_iata", "arr_iata", "cabin", "carrier", "price")
DISTRICT_MAP_HEADER = ("postal_prefix", "district")
AIRPORT_HEADER = ("iata", "lat", "lon")

_SECONDS_RE = re.compile(r"^\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}:\d{2}")


# -- field parsing -----------------------------------------------------------

def _date(text, line, name, what):
    try:
        return date.fromisoformat(text.strip())
    except ValueError:
        raise MalformedRow(line, f"unparsable {what} {text!r}", name) from None


def _float(text, line, name, what):
    try:
        value = float(text)
    except ValueError:
        raise MalformedRow(line, f"unparsable {what} {text!r}", name) from None
    if not math.isfinite(value):
        raise MalformedRow(line, f"non-finite {what} {text!r}", name)
    return value


def _width(row, n, line, name):
    if len(row) != n:
        raise MalformedRow(line, f"expected {n} columns, got {len(row)}", name)


def _timestamp(text, line, name):
    text = text.strip()
    if not _SECONDS_RE.match(text):
        raise MalformedRow(line, f"timestamp {text!r} is not ISO 8601 with seconds", name)
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(text)
    except ValueError:
        raise MalformedRow(line, f"unparsable timestamp {text!r}", name) from None
    if ts.tzinfo is not None:
        ts = ts.astimezone(timezone.utc).replace(tzinfo=None)
    return ts


# -- OHLC --------------------------------------------------------------------

@dataclass(frozen=True)
class OhlcRecord:
    date: date
    ticker: str
    open: float
    close: float


@dataclass(frozen=True)
class ReturnSeries:
    ticker: str
    dates: tuple
    values: np.ndarray = field(compare=False)

    def __len__(self):
        return len(self.values)


def parse_ohlc(source: Source) -> list[OhlcRecord]:
    records = []
    seen = {}
    for line, row, name in read_rows(source, OHLC_HEADER):
        _width(row, 4, line, name)
        day = _date(row[0], line, name, "date")
        ticker = row[1].strip()
        if not ticker:
            raise MalformedRow(line, "empty ticker", name)
        o = _float(row[2], line, name, "open")
        c = _float(row[3], line, name, "close")
        if o <= 0 or c <= 0:
            raise MalformedRow(line, "prices must be > 0", name)
        key = (day, ticker)
        if key in seen:
            raise DuplicateKey(line, f"duplicate (date, ticker) {day.isoformat()},{ticker} (first seen on line {seen[key]})", name)
        seen[key] = line
        records.append(OhlcRecord(day, ticker, o, c))
    return records


def dumps_ohlc(records: Iterable[OhlcRecord]) -> str:
    return dumps_csv(OHLC_HEADER, ((r.date.isoformat(), r.ticker, repr(r.open), repr(r.close)) for r in records))


def log_returns(records: Iterable[OhlcRecord], ticker: str) -> ReturnSeries:
    """Open-to-close natural log-returns of one ticker, one value per trading day."""
    rows = sorted((r for r in records if r.ticker == ticker), key=lambda r: r.date)
    if not rows:
        raise EmptySeries(f"no records for ticker {ticker!r}")
    values = np.array([math.log(r.close) - math.log(r.open) for r in rows], dtype=float)
    return ReturnSeries(ticker, tuple(r.date for r in rows), values)


def tickers_of(records: Iterable[OhlcRecord]) -> list[str]:
    return sorted({r.ticker for r in records})


# -- ticks -------------------------------------------------------------------

class TickKind(Enum):
    QUOTATION = "Q"
    TRANSACTION = "T"


@dataclass(frozen=True)
class TickEvent:
    timestamp: datetime
    base: str
    quote: str
    kind: TickKind


def parse_ticks(source: Source) -> list[TickEvent]:
    events = []
    for line, row, name in read_rows(source, TICK_HEADER):
        _width(row, 4, line, name)
        ts = _timestamp(row[0], line, name)
        base, quote = row[1].strip(), row[2].strip()
        if not base or not quote:
            raise MalformedRow(line, "empty currency code", name)
        if base == quote:
            raise MalformedRow(line, f"base equals quote ({base})", name)
        try:
            kind = TickKind(row[3].strip())
        except ValueError:
            raise MalformedRow(line, f"kind must be Q or T, got {row[3]!r}", name) from None
        events.append(TickEvent(ts, base, quote, kind))
    return events


def _format_ts(ts: datetime) -> str:
    return ts.isoformat(timespec="microseconds" if ts.microsecond else "seconds")


def dumps_ticks(events: Iterable[TickEvent]) -> str:
    return dumps_csv(TICK_HEADER, ((_format_ts(e.timestamp), e.base, e.quote, e.kind.value) for e in events))


class Period(NamedTuple):
    id: str
    start: datetime
    length: timedelta


class WeekPartition:
    """Calendar weeks starting on ``week_start`` (0 = Monday, ISO 8601).

    Monday weeks are labelled ``YYYY-Www`` (ISO week-numbering year); other
    start days are labelled by the ISO date of the first day.
    """

    def __init__(self, week_start: int = 0):
        if not 0 <= week_start <= 6:
            raise ValueError("week_start must be in 0..6")
        self.week_start = week_start

    def __call__(self, ts: datetime) -> Period:
        day = ts.date()
        first = day - timedelta(days=(day.weekday() - self.week_start) % 7)
        if self.week_start == 0:
            year, week, _ = first.isocalendar()
            label = f"{year:04d}-W{week:02d}"
        else:
            label = first.isoformat()
        return Period(label, datetime.combine(first, datetime.min.time()), timedelta(days=7))


@dataclass(frozen=True)
class ActivityTensor:
    """Sparse ``f[i][j][t][S]``: event counts per currency pair, bin and period.

    ``entries`` rows are ``(period, bin, i, j, count)`` with ``i < j``; each
    unordered pair is stored once and read back symmetrically.
    """

    currencies: tuple
    periods: tuple
    bin_width: float
    n_bins: tuple
    entries: np.ndarray = field(compare=False)

    def period_index(self, period) -> int:
        if isinstance(period, (int, np.integer)):
            return int(period)
        return self.periods.index(period)

    def pair_totals(self, period) -> np.ndarray:
        """N x N matrix of counts summed over bins, symmetric with zero diagonal."""
        s = self.period_index(period)
        n = len(self.currencies)
        out = np.zeros((n, n), dtype=np.int64)
        rows = self.entries[self.entries[:, 0] == s]
        np.add.at(out, (rows[:, 2], rows[:, 3]), rows[:, 4])
        return out + out.T

    def count(self, i: int, j: int, t: int, period) -> int:
        if i == j:
            return 0
        i, j = min(i, j), max(i, j)
        s = self.period_index(period)
        e = self.entries
        hit = (e[:, 0] == s) & (e[:, 1] == t) & (e[:, 2] == i) & (e[:, 3] == j)
        return int(e[hit, 4].sum())

    def total(self, period) -> int:
        """Full-matrix total (each event counted twice, once per orientation)."""
        s = self.period_index(period)
        return 2 * int(self.entries[self.entries[:, 0] == s, 4].sum())

    def to_dense(self) -> np.ndarray:
        """Dense ``(N, N, T_max, P)`` array; only sensible for small tensors."""
        n = len(self.currencies)
        t_max = max(self.n_bins, default=0)
        out = np.zeros((n, n, t_max, len(self.periods)), dtype=np.int64)
        e = self.entries
        out[e[:, 2], e[:, 3], e[:, 1], e[:, 0]] = e[:, 4]
        out[e[:, 3], e[:, 2], e[:, 1], e[:, 0]] = e[:, 4]
        return out


def bin_activity(
    events: Sequence[TickEvent],
    currencies: Sequence[str],
    bin_width: float = 60.0,
    partition: Callable[[datetime], Period] | None = None,
    kind: TickKind | None = TickKind.QUOTATION,
) -> ActivityTensor:
    """Count events of ``kind`` per unordered currency pair and time bin.

    Bins are ``[start + t*bin_width, start + (t+1)*bin_width)`` inside each
    period. Every period touched by any event is listed, even if no event of
    the selected kind falls in it. ``kind=None`` counts both kinds.
    """
    if not bin_width > 0:
        raise ValueError("bin_width must be > 0")
    partition = partition or WeekPartition()
    index = {c: k for k, c in enumerate(currencies)}
    width = timedelta(seconds=bin_width)

    periods: dict[str, Period] = {}
    counts: Counter = Counter()
    for ev in events:
        for code in (ev.base, ev.quote):
            if code not in index:
                raise UnknownCurrency(f"currency {code!r} not in {list(currencies)}")
        p = partition(ev.timestamp)
        periods.setdefault(p.id, p)
        if kind is not None and ev.kind is not kind:
            continue
        t = (ev.timestamp - p.start) // width
        i, j = sorted((index[ev.base], index[ev.quote]))
        counts[(p.id, t, i, j)] += 1

    ordered = sorted(periods.values(), key=lambda p: (p.start, p.id))
    pos = {p.id: k for k, p in enumerate(ordered)}
    n_bins = tuple(-(-p.length // width) for p in ordered)
    rows = sorted((pos[pid], t, i, j, c) for (pid, t, i, j), c in counts.items())
    entries = np.array(rows, dtype=np.int64).reshape(-1, 5)
    return ActivityTensor(tuple(currencies), tuple(p.id for p in ordered), float(bin_width), n_bins, entries)


def currencies_of(events: Iterable[TickEvent]) -> list[str]:
    return sorted({c for e in events for c in (e.base, e.quote)})


# -- bookings ----------------------------------------------------------------

@dataclass(frozen=True)
class BookingRecord:
    collect_date: date
    stay_date: date
    hotel_id: str
    hotel_name: str
    hotel_name_kana: str
    postal_code: str
    address: str
    url: str
    latitude: float
    longitude: float
    plan_name: str
    meal: str
    best_rate: float
    rate: float
    line: int = field(default=0, compare=False)


def parse_bookings(source: Source) -> list[BookingRecord]:
    out = []
    for line, row, name in read_rows(source, BOOKING_HEADER):
        _width(row, 14, line, name)
        collect = _date(row[0], line, name, "collect_date")
        stay = _date(row[1], line, name, "stay_date")
        if stay < collect:
            raise MalformedRow(line, "stay_date precedes collect_date", name)
        lat = _float(row[8], line, name, "latitude")
        lon = _float(row[9], line, name, "longitude")
        if not -90 <= lat <= 90 or not -180 <= lon <= 180:
            raise MalformedRow(line, f"coordinates out of range ({lat}, {lon})", name)
        best = _float(row[12], line, name, "best_rate")
        rate = _float(row[13], line, name, "rate")
        if best < 0 or rate < 0:
            raise MalformedRow(line, "rates must be >= 0", name)
        out.append(BookingRecord(collect, stay, row[2], row[3], row[4], row[5], row[6], row[7],
                                 lat, lon, row[10], row[11], best, rate, line))
    return out


def dumps_bookings(records: Iterable[BookingRecord]) -> str:
    return dumps_csv(BOOKING_HEADER, (
        (r.collect_date.isoformat(), r.stay_date.isoformat(), r.hotel_id, r.hotel_name, r.hotel_name_kana,
         r.postal_code, r.address, r.url, repr(r.latitude), repr(r.longitude), r.plan_name, r.meal,
         repr(r.best_rate), repr(r.rate))
        for r in records
    ))


class DistrictMap:
    """Resolve a hotel to a district by explicit hotel id, else longest postal prefix."""

    def __init__(self, prefixes: Mapping[str, str], hotel_ids: Mapping[str, str] | None = None):
        self.prefixes = {_postal(k): v for k, v in prefixes.items()}
        self.hotel_ids = dict(hotel_ids or {})
        seen = dict.fromkeys(list(prefixes.values()) + list(self.hotel_ids.values()))
        self.districts = tuple(seen)
        self._lengths = sorted({len(k) for k in self.prefixes}, reverse=True)

    def lookup(self, record: BookingRecord) -> str | None:
        if record.hotel_id in self.hotel_ids:
            return self.hotel_ids[record.hotel_id]
        code = _postal(record.postal_code)
        for n in self._lengths:
            hit = self.prefixes.get(code[:n])
            if hit is not None and len(code) >= n:
                return hit
        return None


def _postal(code: str) -> str:
    return code.replace("-", "").replace(" ", "").strip()


def load_district_map(source: Source) -> DistrictMap:
    prefixes = {}
    for line, row, name in read_rows(source, DISTRICT_MAP_HEADER):
        _width(row, 2, line, name)
        prefix, district = _postal(row[0]), row[1].strip()
        if not prefix or not district:
            raise MalformedRow(line, "empty postal_prefix or district", name)
        if prefix in prefixes and prefixes[prefix] != district:
            raise DuplicateKey(line, f"postal prefix {prefix!r} mapped twice", name)
        prefixes[prefix] = district
    return DistrictMap(prefixes)


@dataclass(frozen=True)
class DistrictCounts:
    """``counts[i, t]``: records in district ``i`` staying on ``days[t]``."""

    districts: tuple
    days: tuple
    counts: np.ndarray = field(compare=False)
    unmapped: tuple = ()


def count_by_district(bookings: Iterable[BookingRecord], district_map: DistrictMap,
                      start: date, end: date) -> DistrictCounts:
    """Per-district per-day record counts for stay dates within ``[start, end]``.

    Records whose hotel maps to no district are excluded and returned in
    ``unmapped``.
    """
    if end < start:
        raise ValueError("period end precedes start")
    n_days = (end - start).days + 1
    days = tuple(start + timedelta(days=k) for k in range(n_days))
    pos = {d: k for k, d in enumerate(district_map.districts)}
    counts = np.zeros((len(pos), n_days), dtype=np.int64)
    unmapped = []
    for rec in bookings:
        if not start <= rec.stay_date <= end:
            continue
        district = district_map.lookup(rec)
        if district is None:
            unmapped.append(rec)
            continue
        counts[pos[district], (rec.stay_date - start).days] += 1
    return DistrictCounts(district_map.districts, days, counts, tuple(unmapped))


# -- flights & airports ------------------------------------------------------

class Cabin(Enum):
    ECONOMY = "Economy"
    BUSINESS = "Business"
    FIRST = "First"

    @classmethod
    def parse(cls, text: str) -> "Cabin":
        for c in cls:
            if c.value.lower() == text.strip().lower():
                return c
        raise ValueError(f"unknown cabin {text!r}")


@dataclass(frozen=True)
class FlightRecord:
    collect_date: date
    departure_date: date
    departure_airport: str
    arrival_airport: str
    cabin: Cabin
    carrier: str
    price: float
    line: int = field(default=0, compare=False)


def parse_flights(source: Source) -> list[FlightRecord]:
    out = []
    for line, row, name in read_rows(source, FLIGHT_HEADER):
        _width(row, 7, line, name)
        collect = _date(row[0], line, name, "collect_date")
        dep_day = _date(row[1], line, name, "departure_date")
        dep, arr = row[2].strip(), row[3].strip()
        if not dep or not arr:
            raise MalformedRow(line, "empty airport code", name)
        if dep == arr:
            raise MalformedRow(line, f"departure equals arrival airport ({dep})", name)
        try:
            cabin = Cabin.parse(row[4])
        except ValueError as exc:
            raise MalformedRow(line, str(exc), name) from None
        price = _float(row[6], line, name, "price")
        if price < 0:
            raise MalformedRow(line, "price must be >= 0", name)
        out.append(FlightRecord(collect, dep_day, dep, arr, cabin, row[5].strip(), price, line))
    return out


def dumps_flights(records: Iterable[FlightRecord]) -> str:
    return dumps_csv(FLIGHT_HEADER, (
        (r.collect_date.isoformat(), r.departure_date.isoformat(), r.departure_airport, r.arrival_airport,
         r.cabin.value, r.carrier, repr(r.price))
        for r in records
    ))


def load_airports(source: Source) -> dict[str, tuple[float, float]]:
    table = {}
    for line, row, name in read_rows(source, AIRPORT_HEADER):
        _width(row, 3, line, name)
        code = row[0].strip()
        lat = _float(row[1], line, name, "lat")
        lon = _float(row[2], line, name, "lon")
        if not -90 <= lat <= 90 or not -180 <= lon <= 180:
            raise MalformedRow(line, f"coordinates out of range ({lat}, {lon})", name)
        if code in table:
            raise DuplicateKey(line, f"airport {code!r} listed twice", name)
        table[code] = (lat, lon)
    return table
