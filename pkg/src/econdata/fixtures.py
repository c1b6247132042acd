"""Seeded synthetic input generator for the bundled fixtures.

All four input formats plus their sidecars are produced from one
``numpy.random.Generator``; the seed and shape parameters are written to
``manifest.json`` next to the CSV files.
"""

from __future__ import annotations

import json
import math
from datetime import date, datetime, timedelta
from pathlib import Path

import numpy as np

from .csvio import dumps_csv
from .ingest import (
    AIRPORT_HEADER,
    DISTRICT_MAP_HEADER,
    BookingRecord,
    Cabin,
    FlightRecord,
    OhlcRecord,
    TickEvent,
    TickKind,
    dumps_bookings,
    dumps_flights,
    dumps_ohlc,
    dumps_ticks,
)

DEFAULT_SEED = 20120130

AIRPORTS = {
    "NRT": (35.7647, 140.3864), "HND": (35.5494, 139.7798), "KIX": (34.4347, 135.2440),
    "NGO": (34.8584, 136.8054), "FUK": (33.5859, 130.4511), "ICN": (37.4602, 126.4407),
    "PEK": (40.0799, 116.6031), "HKG": (22.3080, 113.9185), "SIN": (1.3644, 103.9915),
    "BKK": (13.6900, 100.7501), "SYD": (-33.9399, 151.1753), "HNL": (21.3187, -157.9225),
    "LAX": (33.9416, -118.4085), "JFK": (40.6413, -73.7781), "LHR": (51.4700, -0.4543),
    "CDG": (49.0097, 2.5479), "FRA": (50.0379, 8.5622), "DXB": (25.2532, 55.3657),
    "GRU": (-23.4356, -46.4731), "EZE": (-34.8222, -58.5358),
}
JAPAN = ("NRT", "HND", "KIX", "NGO", "FUK")
CARRIERS = ("JL", "NH", "KE", "CX", "SQ", "UA", "BA", "AF", "LH", "EK")

CURRENCY_PAIRS = (
    ("EUR", "USD"), ("USD", "JPY"), ("EUR", "JPY"), ("GBP", "USD"), ("EUR", "GBP"),
    ("USD", "CHF"), ("EUR", "CHF"), ("AUD", "USD"), ("AUD", "JPY"),
)


def business_days(start: date, end: date) -> list[date]:
    out, d = [], start
    while d <= end:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return out


def synthetic_ohlc(rng: np.random.Generator, n_tickers: int = 6) -> list[OhlcRecord]:
    """Daily prices with three volatility regimes whose edges jitter per ticker."""
    days = business_days(date(2007, 1, 1), date(2009, 12, 31))
    n = len(days)
    records = []
    for k in range(n_tickers):
        ticker = f"{1001 + k}"
        base = rng.uniform(0.008, 0.02)
        b1 = int(0.40 * n) + int(rng.integers(-15, 16))
        b2 = int(0.65 * n) + int(rng.integers(-15, 16))
        sigma = np.where(np.arange(n) < b1, base, np.where(np.arange(n) < b2, 3.5 * base, 1.5 * base))
        returns = rng.normal(0.0, 1.0, n) * sigma
        gaps = rng.normal(0.0, 0.002, n)
        keep = rng.random(n) > 0.02  # sporadic missing days
        p0 = float(rng.uniform(500, 5000))
        level = 0.0
        for t in range(n):
            # mean-reverting log level keeps prices far above the 0.01 tick
            open_ = round(p0 * math.exp(level + gaps[t]), 2)
            close = round(open_ * math.exp(returns[t]), 2)
            level = 0.97 * (level + gaps[t] + returns[t])
            if keep[t]:
                records.append(OhlcRecord(days[t], ticker, open_, close))
    records.sort(key=lambda r: (r.date, r.ticker))
    return records


def synthetic_ticks(rng: np.random.Generator, n_weeks: int = 6, per_week: int = 2000) -> list[TickEvent]:
    """Weekly tick streams; weeks 4-5 shift activity towards JPY pairs."""
    calm = np.array([30, 20, 8, 12, 6, 5, 4, 6, 2], dtype=float)
    stress = np.array([18, 34, 16, 8, 4, 6, 3, 4, 9], dtype=float)
    first_monday = datetime(2011, 2, 7)
    events = []
    for w in range(n_weeks):
        weights = stress if w in (3, 4) else calm
        weights = weights / weights.sum()
        start = first_monday + timedelta(weeks=w)
        pair_idx = rng.choice(len(CURRENCY_PAIRS), size=per_week, p=weights)
        # trading runs Monday 00:00 to Friday 22:00
        offsets = np.sort(rng.integers(0, 4 * 86400 + 22 * 3600, size=per_week))
        kinds = rng.random(per_week) < 0.8
        for p, off, q in zip(pair_idx, offsets, kinds):
            base, quote = CURRENCY_PAIRS[p]
            events.append(TickEvent(start + timedelta(seconds=int(off)), base, quote,
                                    TickKind.QUOTATION if q else TickKind.TRANSACTION))
    return events


def synthetic_bookings(rng: np.random.Generator, n_districts: int = 21):
    """Bookings for May 2010 and May 2011 over ``n_districts`` postal districts.

    The last district has hotels only after, one district loses every hotel
    after, and a few hotels sit outside every mapped prefix.
    """
    districts = [f"District{k + 1:02d}" for k in range(n_districts)]
    prefixes = [f"{960 + k}" for k in range(n_districts)]
    after_factor = rng.uniform(0.2, 2.2, n_districts)
    after_factor[8] = 0.0
    hotels = []
    for k in range(n_districts):
        for h in range(int(rng.integers(3, 9))):
            hotels.append((k, f"H{k + 1:02d}{h + 1:02d}", f"{prefixes[k]}-{int(rng.integers(0, 10000)):04d}"))
    for h in range(3):
        hotels.append((None, f"HX{h + 1:02d}", f"100-{int(rng.integers(0, 10000)):04d}"))

    records = []
    for year in (2010, 2011):
        for day in range(1, 32):
            stay = date(year, 5, day)
            for k, hid, postal in hotels:
                if k == n_districts - 1 and year == 2010:
                    continue
                p = 0.45 if year == 2010 or k is None else min(0.95, 0.45 * after_factor[k])
                if rng.random() >= p:
                    continue
                for plan in range(int(rng.integers(1, 3))):
                    lat = round(37.0 + float(rng.uniform(-1.5, 2.5)), 6)
                    lon = round(140.5 + float(rng.uniform(-1.0, 1.5)), 6)
                    rate = float(int(rng.integers(40, 300)) * 50)
                    best = float(rate - int(rng.integers(0, 10)) * 50)
                    collect = stay - timedelta(days=int(rng.integers(1, 29)))
                    records.append(BookingRecord(
                        collect, stay, hid, f"Hotel {hid}", "ホテル", postal,
                        f"{postal} Street {hid}", f"https://example.invalid/{hid}",
                        lat, lon, f"Plan {plan + 1}", "breakfast" if plan else "none", best, rate,
                    ))
    district_map = list(zip(prefixes, districts))
    return records, district_map


def synthetic_flights(rng: np.random.Generator, n_flights: int = 1000) -> list[FlightRecord]:
    from .geodesy import GeoPoint, great_circle

    foreign = [c for c in AIRPORTS if c not in JAPAN]
    cabin_mult = {Cabin.ECONOMY: 1.0, Cabin.BUSINESS: 3.2, Cabin.FIRST: 6.0}
    days = [date(2010, 8, 4), date(2010, 10, 16), date(2010, 12, 1)]
    out = []
    for k in range(n_flights):
        dep = JAPAN[int(rng.integers(len(JAPAN)))]
        arr = foreign[int(rng.integers(len(foreign)))]
        if k % 250 == 7:
            arr = "MNL"  # deliberately absent from the airport table
        cabin = (Cabin.ECONOMY, Cabin.BUSINESS, Cabin.FIRST)[int(rng.choice(3, p=[0.75, 0.2, 0.05]))]
        dist = great_circle(GeoPoint(*AIRPORTS[dep]), GeoPoint(*AIRPORTS.get(arr, AIRPORTS["HKG"])))
        price = round(cabin_mult[cabin] * (15000 + 9.0 * dist) * float(rng.lognormal(0.0, 0.25)), -1)
        dep_day = days[int(rng.integers(len(days)))]
        out.append(FlightRecord(dep_day - timedelta(days=28), dep_day, dep, arr, cabin,
                                CARRIERS[int(rng.integers(len(CARRIERS)))], float(price)))
    return out


def write_fixtures(out_dir, seed: int = DEFAULT_SEED) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    bookings, district_map = synthetic_bookings(rng)
    files = {
        "ohlc_synthetic.csv": dumps_ohlc(synthetic_ohlc(rng)),
        "ticks_synthetic.csv": dumps_ticks(synthetic_ticks(rng)),
        "bookings_synthetic.csv": dumps_bookings(bookings),
        "district_map.csv": dumps_csv(DISTRICT_MAP_HEADER, district_map),
        "flights_synthetic.csv": dumps_flights(synthetic_flights(rng)),
        "airports.csv": dumps_csv(AIRPORT_HEADER, ((c, repr(lat), repr(lon)) for c, (lat, lon) in AIRPORTS.items())),
    }
    manifest = {"generator": "econdata.fixtures", "seed": seed, "files": sorted(files)}
    written = {}
    for name, text in files.items():
        path = out_dir / name
        path.write_bytes(text.encode("utf-8"))
        written[name] = path
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return written
