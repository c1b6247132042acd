import io
import math
from collections import Counter
from datetime import date, datetime, timedelta

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from econdata import ingest
from econdata.errors import BadHeader, DuplicateKey, EmptySeries, MalformedRow, UnknownCurrency
from econdata.ingest import (
    BookingRecord,
    Cabin,
    FlightRecord,
    OhlcRecord,
    TickEvent,
    TickKind,
    WeekPartition,
)

OHLC_HEAD = "date,ticker,open,close\n"


def test_parse_ohlc_maps_fields():
    recs = ingest.parse_ohlc(io.StringIO(OHLC_HEAD + "2000-01-04,6758,100.0,101.0\n"))
    assert recs == [OhlcRecord(date(2000, 1, 4), "6758", 100.0, 101.0)]


def test_parse_ohlc_accepts_bytes_and_paths(tmp_path):
    data = (OHLC_HEAD + "2000-01-04,6758,100.0,101.0\n").encode()
    p = tmp_path / "o.csv"
    p.write_bytes(data)
    assert ingest.parse_ohlc(data) == ingest.parse_ohlc(p) == ingest.parse_ohlc(io.BytesIO(data))


def test_nonpositive_price_reports_line_two():
    with pytest.raises(MalformedRow) as exc:
        ingest.parse_ohlc(io.StringIO(OHLC_HEAD + "2000-01-04,6758,0.0,101.0\n"))
    assert exc.value.line == 2


@pytest.mark.parametrize("row", [
    "2000-01-04,6758,100.0",
    "2000-01-04,6758,abc,101.0",
    "2000-13-04,6758,100.0,101.0",
    "2000-01-04,6758,100.0,nan",
])
def test_malformed_rows(row):
    with pytest.raises(MalformedRow) as exc:
        ingest.parse_ohlc(io.StringIO(OHLC_HEAD + "2000-01-03,6758,1,1\n" + row + "\n"))
    assert exc.value.line == 3


def test_duplicate_key():
    text = OHLC_HEAD + "2000-01-04,6758,100,101\n2000-01-04,6758,100,102\n"
    with pytest.raises(DuplicateKey):
        ingest.parse_ohlc(io.StringIO(text))


def test_wrong_header():
    with pytest.raises(BadHeader):
        ingest.parse_ohlc(io.StringIO("date,ticker,close,open\n"))


def test_empty_input_yields_no_records():
    assert ingest.parse_ohlc(io.StringIO("")) == []


def test_log_returns_identity_and_e():
    recs = [OhlcRecord(date(2000, 1, 4), "A", 100.0, 100.0), OhlcRecord(date(2000, 1, 5), "A", 100.0, 100.0 * math.e)]
    s = ingest.log_returns(recs, "A")
    assert s.values[0] == 0.0
    assert s.values[1] == pytest.approx(1.0, abs=1e-15)


def test_log_return_matches_high_precision_log():
    # mpmath at 40 digits: ln(101) - ln(100)
    expected = 0.0099503308531680828482
    s = ingest.log_returns([OhlcRecord(date(2000, 1, 4), "A", 100.0, 101.0)], "A")
    mpmath.mp.dps = 40
    assert float(mpmath.log(mpmath.mpf(101)) - mpmath.log(mpmath.mpf(100))) == pytest.approx(expected, rel=1e-16)
    assert s.values[0] == pytest.approx(expected, rel=1e-14)


def test_log_returns_missing_ticker():
    with pytest.raises(EmptySeries):
        ingest.log_returns([OhlcRecord(date(2000, 1, 4), "A", 1.0, 1.0)], "B")


def test_log_returns_order_independent(rng):
    days = [date(2001, 1, 1) + timedelta(days=k) for k in range(30)]
    recs = [OhlcRecord(d, "X", float(rng.uniform(1, 2)), float(rng.uniform(1, 2))) for d in days]
    a = ingest.log_returns(recs, "X")
    shuffled = [recs[k] for k in rng.permutation(len(recs))]
    b = ingest.log_returns(shuffled, "X")
    assert len(a) == 30
    assert a.dates == b.dates == tuple(days)
    assert np.array_equal(a.values, b.values)


# -- round-trips ---------------------------------------------------------------

_day = st.dates(min_value=date(1990, 1, 1), max_value=date(2030, 12, 31))
_text = st.text(alphabet=st.characters(blacklist_categories=("Cs", "Cc")), min_size=1, max_size=12).filter(str.strip)
_code = st.sampled_from(["EUR", "USD", "JPY", "GBP", "CHF"])
_price = st.floats(min_value=1e-6, max_value=1e7, allow_nan=False)


@settings(max_examples=50)
@given(st.lists(st.tuples(_day, st.sampled_from(["A", "B", "6758"]), _price, _price), max_size=20,
                unique_by=lambda r: (r[0], r[1])))
def test_ohlc_round_trip(rows):
    recs = [OhlcRecord(*r) for r in rows]
    assert ingest.parse_ohlc(ingest.dumps_ohlc(recs).encode()) == recs


@settings(max_examples=50)
@given(st.lists(st.tuples(st.datetimes(min_value=datetime(2000, 1, 1), max_value=datetime(2030, 1, 1)),
                          _code, _code, st.sampled_from(list(TickKind))).filter(lambda r: r[1] != r[2]),
                max_size=20))
def test_tick_round_trip(rows):
    events = [TickEvent(*r) for r in rows]
    assert ingest.parse_ticks(ingest.dumps_ticks(events).encode()) == events


@settings(max_examples=30)
@given(st.lists(st.builds(
    lambda c, gap, hid, name, lat, lon, best, rate: BookingRecord(
        c, c + timedelta(days=gap), hid, name, "ホテル", "960-0001", "addr, \"quoted\"", "https://x.invalid",
        lat, lon, "plan", "none", best, rate),
    _day, st.integers(0, 60), _text, _text,
    st.floats(-90, 90), st.floats(-180, 180), st.floats(0, 1e6), st.floats(0, 1e6)), max_size=10))
def test_booking_round_trip(recs):
    assert ingest.parse_bookings(ingest.dumps_bookings(recs).encode()) == recs


@settings(max_examples=30)
@given(st.lists(st.builds(
    lambda c, d, dep, arr, cabin, price: FlightRecord(c, d, dep, arr, cabin, "JL", price),
    _day, _day, st.sampled_from(["NRT", "HND"]), st.sampled_from(["LHR", "JFK"]),
    st.sampled_from(list(Cabin)), st.floats(0, 1e7)), max_size=10))
def test_flight_round_trip(recs):
    assert ingest.parse_flights(ingest.dumps_flights(recs).encode()) == recs


def test_tick_parse_validation():
    head = "timestamp,base,quote,kind\n"
    with pytest.raises(MalformedRow):
        ingest.parse_ticks(io.StringIO(head + "2011-03-14T10:00,EUR,USD,Q\n"))
    with pytest.raises(MalformedRow):
        ingest.parse_ticks(io.StringIO(head + "2011-03-14T10:00:00,EUR,EUR,Q\n"))
    with pytest.raises(MalformedRow):
        ingest.parse_ticks(io.StringIO(head + "2011-03-14T10:00:00,EUR,USD,X\n"))
    ev = ingest.parse_ticks(io.StringIO(head + "2011-03-14T10:00:00Z,EUR,USD,T\n"))
    assert ev[0].timestamp == datetime(2011, 3, 14, 10) and ev[0].kind is TickKind.TRANSACTION


def test_flight_parse_rejects_same_airport():
    head = ",".join(ingest.FLIGHT_HEADER) + "\n"
    with pytest.raises(MalformedRow):
        ingest.parse_flights(io.StringIO(head + "2010-07-01,2010-08-04,NRT,NRT,Economy,JL,1000\n"))


def test_booking_parse_rejects_bad_rows():
    head = ",".join(ingest.BOOKING_HEADER) + "\n"
    ok = "2010-04-01,2010-05-01,H1,n,k,960-0001,a,u,38.0,140.0,p,m,100,120"
    assert len(ingest.parse_bookings(io.StringIO(head + ok + "\n"))) == 1
    with pytest.raises(MalformedRow):
        ingest.parse_bookings(io.StringIO(head + ok.replace("38.0", "91.0") + "\n"))
    with pytest.raises(MalformedRow):
        ingest.parse_bookings(io.StringIO(head + ok.replace("2010-05-01", "2010-03-01") + "\n"))


# -- activity binning ------------------------------------------------------------

CCY = ["EUR", "JPY", "USD"]
MONDAY = datetime(2011, 3, 14)


def test_iso_week_partition():
    p = WeekPartition()(datetime(2011, 3, 16, 12, 0, 0))
    assert p.id == "2011-W11" and p.start == MONDAY and p.length == timedelta(days=7)
    assert WeekPartition()(datetime(2011, 1, 2)).id == "2010-W52"
    assert WeekPartition(6)(datetime(2011, 3, 16)).id == "2011-03-13"


def test_three_quotations_symmetric():
    ev = [TickEvent(MONDAY + timedelta(seconds=s), "EUR", "USD", TickKind.QUOTATION) for s in (1, 5, 59)]
    t = ingest.bin_activity(ev, CCY, 60)
    e, u = CCY.index("EUR"), CCY.index("USD")
    assert t.count(e, u, 0, "2011-W11") == 3
    assert t.count(u, e, 0, "2011-W11") == 3
    assert t.count(e, e, 0, "2011-W11") == 0
    assert t.n_bins == (7 * 86400 // 60,)


def test_empty_events_give_empty_tensor():
    t = ingest.bin_activity([], CCY, 60)
    assert t.periods == () and t.entries.shape == (0, 5)
    assert t.to_dense().sum() == 0


def test_kind_filter_and_unknown_currency():
    ev = [TickEvent(MONDAY, "EUR", "USD", TickKind.QUOTATION), TickEvent(MONDAY, "EUR", "USD", TickKind.TRANSACTION)]
    assert ingest.bin_activity(ev, CCY, 60, kind=TickKind.TRANSACTION).total(0) == 2
    assert ingest.bin_activity(ev, CCY, 60, kind=None).total(0) == 4
    with pytest.raises(UnknownCurrency):
        ingest.bin_activity([TickEvent(MONDAY, "EUR", "GBP", TickKind.QUOTATION)], CCY, 60)


def _naive_recount(events, currencies, width, partition):
    """Per bin, scan every event: O(events * bins)."""
    out = {}
    periods = sorted({partition(e.timestamp) for e in events}, key=lambda p: p.start)
    for p in periods:
        n_bins = int(p.length.total_seconds() // width) + (p.length.total_seconds() % width > 0)
        for t in range(n_bins):
            lo = p.start + timedelta(seconds=t * width)
            hi = lo + timedelta(seconds=width)
            for e in events:
                if lo <= e.timestamp < hi and e.kind is TickKind.QUOTATION:
                    i, j = currencies.index(e.base), currencies.index(e.quote)
                    out[(i, j, t, p.id)] = out.get((i, j, t, p.id), 0) + 1
                    out[(j, i, t, p.id)] = out.get((j, i, t, p.id), 0) + 1
    return out


def test_binning_matches_naive_recount(rng):
    ccy = ["AUD", "EUR", "JPY", "USD"]
    pairs = [(a, b) for a in ccy for b in ccy if a != b]
    width = 7200.0
    start = datetime(2011, 2, 7)
    events = []
    for _ in range(10_000):
        a, b = pairs[int(rng.integers(len(pairs)))]
        ts = start + timedelta(seconds=int(rng.integers(0, 14 * 86400)))
        kind = TickKind.QUOTATION if rng.random() < 0.7 else TickKind.TRANSACTION
        events.append(TickEvent(ts, a, b, kind))
    tensor = ingest.bin_activity(events, ccy, width, WeekPartition())
    dense = tensor.to_dense()
    naive = _naive_recount(events, ccy, width, WeekPartition())
    expected = np.zeros_like(dense)
    for (i, j, t, pid), c in naive.items():
        expected[i, j, t, tensor.periods.index(pid)] = c
    assert np.array_equal(dense, expected)
    n_quotes = sum(e.kind is TickKind.QUOTATION for e in events)
    assert dense.sum() == 2 * n_quotes


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 20 * 86400), st.sampled_from([("EUR", "USD"), ("USD", "JPY"), ("JPY", "EUR")])),
                max_size=60), st.sampled_from([1.0, 60.0, 3600.0]))
def test_binning_total_is_twice_events(rows, width):
    ev = [TickEvent(MONDAY + timedelta(seconds=s), a, b, TickKind.QUOTATION) for s, (a, b) in rows]
    t = ingest.bin_activity(ev, CCY, width)
    dense = t.to_dense()
    assert dense.sum() == 2 * len(ev)
    assert np.array_equal(dense, dense.transpose(1, 0, 2, 3))
    assert all(dense[i, i].sum() == 0 for i in range(3))


# -- district counts -------------------------------------------------------------

def _booking(stay, hotel, postal):
    return BookingRecord(stay - timedelta(days=3), stay, hotel, "n", "k", postal, "a", "u", 38.0, 140.0,
                         "p", "m", 100.0, 120.0)


DMAP = ingest.DistrictMap({"980": "Sendai", "020": "Morioka", "9812": "Matsushima"})


def test_count_two_bookings_one_day():
    day = date(2011, 5, 3)
    c = ingest.count_by_district([_booking(day, "H1", "980-0001"), _booking(day, "H2", "980-0002")],
                                 DMAP, date(2011, 5, 1), date(2011, 5, 31))
    assert c.counts[c.districts.index("Sendai"), 2] == 2
    assert c.counts.sum() == 2


def test_count_empty_and_prefix_rules():
    c = ingest.count_by_district([], DMAP, date(2011, 5, 1), date(2011, 5, 2))
    assert c.counts.shape == (3, 2) and c.counts.sum() == 0
    day = date(2011, 5, 1)
    assert DMAP.lookup(_booking(day, "H", "981-2345")) == "Matsushima"  # longest prefix wins
    assert DMAP.lookup(_booking(day, "H", "100-0001")) is None
    explicit = ingest.DistrictMap({"980": "Sendai"}, hotel_ids={"H9": "Morioka"})
    assert explicit.lookup(_booking(day, "H9", "980-0001")) == "Morioka"


def test_unmapped_reported_and_excluded():
    day = date(2011, 5, 1)
    c = ingest.count_by_district([_booking(day, "H1", "100-0001"), _booking(day, "H2", "980-0001")],
                                 DMAP, day, day)
    assert c.counts.sum() == 1
    assert [r.hotel_id for r in c.unmapped] == ["H1"]


def test_district_counts_match_recount(rng):
    codes = {"Sendai": "980", "Morioka": "020", "Aizu": "965"}
    dmap = ingest.DistrictMap({v: k for k, v in codes.items()})
    start = date(2010, 5, 1)
    recs = []
    for k in range(500):
        district = list(codes)[int(rng.integers(3))]
        stay = start + timedelta(days=int(rng.integers(0, 45)))
        recs.append(_booking(stay, f"H{k}", f"{codes[district]}-{int(rng.integers(0, 10000)):04d}"))
    end = date(2010, 5, 31)
    c = ingest.count_by_district(recs, dmap, start, end)
    naive = Counter((_district, r.stay_date) for r in recs
                    for _district in [next(d for d, p in codes.items() if r.postal_code.startswith(p))]
                    if start <= r.stay_date <= end)
    for i, d in enumerate(c.districts):
        for t, day in enumerate(c.days):
            assert c.counts[i, t] == naive.get((d, day), 0)


def test_district_map_loader():
    m = ingest.load_district_map(io.StringIO("postal_prefix,district\n020-0,Morioka\n980,Sendai\n"))
    assert m.districts == ("Morioka", "Sendai")
    assert m.lookup(_booking(date(2011, 5, 1), "H", "0200123")) == "Morioka"


def test_fixture_files_parse(fixtures_dir):
    assert ingest.parse_ohlc(fixtures_dir / "ohlc_synthetic.csv")
    assert ingest.parse_ticks(fixtures_dir / "ticks_synthetic.csv")
    assert ingest.parse_bookings(fixtures_dir / "bookings_synthetic.csv")
    assert len(ingest.parse_flights(fixtures_dir / "flights_synthetic.csv")) == 1000
    assert len(ingest.load_airports(fixtures_dir / "airports.csv")) == 20
