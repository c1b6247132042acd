"""Great-circle distances on a spherical Earth and price-vs-distance pairing."""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date
from typing import Iterable, Mapping, Union

import numpy as np

from .errors import UnknownAirport
from .ingest import Cabin, FlightRecord

EARTH_RADIUS_KM = 6371.2


@dataclass(frozen=True)
class GeoPoint:
    """Latitude/longitude in degrees; longitude -180 is folded onto 180."""

    lat: float
    lon: float

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} outside (-180, 180]")
        if self.lon == -180.0:
            object.__setattr__(self, "lon", 180.0)


def great_circle_array(lat1, lon1, lat2, lon2, radius: float = EARTH_RADIUS_KM):
    """Vectorised two-argument-arctangent great-circle distance (degrees in, km out)."""
    p1 = np.radians(lat1)
    p2 = np.radians(lat2)
    dl = np.radians(np.asarray(lon1, dtype=float) - np.asarray(lon2, dtype=float))
    cos1, sin1 = np.cos(p1), np.sin(p1)
    cos2, sin2 = np.cos(p2), np.sin(p2)
    cdl = np.cos(dl)
    num = np.hypot(cos2 * np.sin(dl), cos1 * sin2 - sin1 * cos2 * cdl)
    den = sin1 * sin2 + cos1 * cos2 * cdl
    return radius * np.arctan2(num, den)


def great_circle(p1: GeoPoint, p2: GeoPoint, radius: float = EARTH_RADIUS_KM) -> float:
    return float(great_circle_array(p1.lat, p1.lon, p2.lat, p2.lon, radius))


def haversine(p1: GeoPoint, p2: GeoPoint, radius: float = EARTH_RADIUS_KM) -> float:
    phi1, phi2 = math.radians(p1.lat), math.radians(p2.lat)
    dphi = phi2 - phi1
    dlam = math.radians(p2.lon - p1.lon)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    return 2 * radius * math.asin(min(1.0, math.sqrt(h)))


@dataclass(frozen=True)
class PriceDistancePoint:
    departure_date: date
    dep_iata: str
    arr_iata: str
    cabin: Cabin
    carrier: str
    distance: float
    price: float
    suspicious: bool = False


@dataclass(frozen=True)
class AirportError:
    line: int
    code: str
    error: UnknownAirport


Coords = Union[GeoPoint, tuple]


def price_distance_pairs(flights: Iterable[FlightRecord], airports: Mapping[str, Coords],
                         cabin: Cabin | None = None, departure_date: date | None = None,
                         ) -> tuple[list[PriceDistancePoint], list[AirportError]]:
    """Distance-annotate every flight passing the filters, in input order.

    Flights referencing an airport missing from ``airports`` are skipped and
    reported, one error per unresolved code. A zero distance between distinct
    airport codes marks the point ``suspicious``.
    """
    table = {k: v if isinstance(v, GeoPoint) else GeoPoint(*v) for k, v in airports.items()}
    points, errors = [], []
    for f in flights:
        if cabin is not None and f.cabin is not cabin:
            continue
        if departure_date is not None and f.departure_date != departure_date:
            continue
        missing = [c for c in (f.departure_airport, f.arrival_airport) if c not in table]
        if missing:
            for code in missing:
                errors.append(AirportError(f.line, code, UnknownAirport(f"unknown airport {code!r}")))
            continue
        d = great_circle(table[f.departure_airport], table[f.arrival_airport])
        points.append(PriceDistancePoint(f.departure_date, f.departure_airport, f.arrival_airport,
                                         f.cabin, f.carrier, d, f.price, suspicious=(d == 0.0)))
    return points, errors
