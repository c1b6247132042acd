"""Command-line front end: ``econdata {segment,market,impact,geodesic,gen-fixtures}``.

Exit codes: 0 success, 1 input/validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import date
from pathlib import Path

from . import fixtures, geodesy, impact, ingest, market_state, segmentation
from .csvio import format_float, write_csv
from .errors import EconDataError


WEEKDAYS = ("monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday")


class NoRecords(EconDataError):
    pass


@dataclass
class RunConfig:
    subcommand: str
    inputs: dict = field(default_factory=dict)
    out_dir: str = "."
    delta_c: float = segmentation.DEFAULT_DELTA_C
    t_min: int = segmentation.DEFAULT_T_MIN
    bin_width: float = 60.0
    week_start: str = "monday"
    periods: dict = field(default_factory=dict)
    kind: str = "Q"
    cabin: str | None = None
    departure_date: str | None = None
    count_mode: str = "span"
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)

    def validate(self) -> None:
        if not self.delta_c > 0:
            raise EconDataError("--delta-c must be > 0")
        if self.t_min < 2:
            raise EconDataError("--t-min must be >= 2")
        if not self.bin_width >= 1:
            raise EconDataError("--bin-width must be >= 1 second")
        if self.threads < 1:
            raise EconDataError("--threads must be >= 1")


def _fmt_q(value: float) -> str:
    return impact.UNDEFINED if value != value else format_float(value)


def _require(records, path) -> None:
    if not records:
        raise NoRecords(f"{path}: no records")


def _pool_map(fn, items, threads):
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# -- subcommands -------------------------------------------------------------

def cmd_segment(cfg: RunConfig) -> dict:
    path = cfg.inputs["input"]
    records = ingest.parse_ohlc(path)
    _require(records, path)
    series = [ingest.log_returns(records, t) for t in ingest.tickers_of(records)]

    def run(s):
        seg = segmentation.segment_recursive(s.values, cfg.delta_c, cfg.t_min, ticker=s.ticker)
        return segmentation.label_segmentation(seg)

    segs = _pool_map(run, series, cfg.threads)
    out = Path(cfg.out_dir)
    rows = []
    for s, seg in zip(series, segs):
        for g in seg.segments:
            rows.append((s.ticker, s.dates[g.start].isoformat(), s.dates[g.end].isoformat(),
                         format_float(g.mean), format_float(g.variance), g.label))
    write_csv(out / "segments.csv", ("ticker", "start_date", "end_date", "mean", "variance", "quintile"), rows)

    rc = segmentation.regime_counts([(seg, s.dates) for s, seg in zip(series, segs)], mode=cfg.count_mode)
    write_csv(out / "regime_counts.csv", ("date", "starts", "q1", "q2", "q3", "q4", "q5"), (
        (d.isoformat(), int(rc.starts_per_day[k]), *(int(v) for v in rc.quintile_per_day[:, k]))
        for k, d in enumerate(rc.dates)
    ))
    return {"records": len(records), "tickers": len(series), "segments": len(rows),
            "days": len(rc.dates), "dropped_rows": 0}


def cmd_market(cfg: RunConfig, currencies: list[str] | None = None) -> dict:
    path = cfg.inputs["input"]
    events = ingest.parse_ticks(path)
    _require(events, path)
    currencies = currencies or ingest.currencies_of(events)
    kind = ingest.TickKind(cfg.kind)
    part = ingest.WeekPartition(WEEKDAYS.index(cfg.week_start))
    tensor = ingest.bin_activity(events, currencies, cfg.bin_width, part, kind)

    out = Path(cfg.out_dir)
    act_rows, occ_rows, dropped = [], [], []
    for period in tensor.periods:
        try:
            am = market_state.activity_density(tensor, period)
        except EconDataError:
            dropped.append(period)
            continue
        ov = market_state.occurrence_rates(am)
        n = len(currencies)
        for i in range(n):
            for j in range(n):
                if am.a[i, j] > 0:
                    act_rows.append((period, currencies[i], currencies[j], format_float(am.a[i, j])))
        occ_rows.extend((period, currencies[i], format_float(ov.k[i])) for i in range(n))
    for period in dropped:
        print(f"warning: {path}: period {period} has no {kind.name.lower()} events; dropped", file=sys.stderr)

    write_csv(out / "activity.csv", ("period", "currency_i", "currency_j", "a_ij"), act_rows)
    write_csv(out / "occurrence.csv", ("period", "currency", "k_i"), occ_rows)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for sim_kind, name in ((market_state.SimilarityKind.PAIRS, "similarity.csv"),
                               (market_state.SimilarityKind.CURRENCIES, "similarity_currencies.csv")):
            sm = market_state.similarity_matrix(tensor, sim_kind, cfg.threads)
            write_csv(out / name, ("period", *sm.periods), (
                (p, *(format_float(v) for v in sm.d[k])) for k, p in enumerate(sm.periods)
            ))
    selected = sum(1 for e in events if e.kind is kind)
    return {"records": len(events), "selected_events": selected, "currencies": list(currencies),
            "periods": list(tensor.periods), "dropped_periods": dropped}


def _date_arg(cfg, key):
    value = cfg.periods.get(key)
    if value is None:
        raise EconDataError(f"--{key.replace('_', '-')} is required")
    try:
        return date.fromisoformat(value)
    except ValueError:
        raise EconDataError(f"--{key.replace('_', '-')}: not an ISO date: {value!r}") from None


def cmd_impact(cfg: RunConfig) -> dict:
    path = cfg.inputs["input"]
    bookings = ingest.parse_bookings(path)
    _require(bookings, path)
    dmap = ingest.load_district_map(cfg.inputs["district_map"])
    b0, b1 = _date_arg(cfg, "before_start"), _date_arg(cfg, "before_end")
    a0, a1 = _date_arg(cfg, "after_start"), _date_arg(cfg, "after_end")
    before = ingest.count_by_district(bookings, dmap, b0, b1)
    after = ingest.count_by_district(bookings, dmap, a0, a1)
    p_b = impact.relative_frequency(before, f"{b0.isoformat()}..{b1.isoformat()}")
    p_a = impact.relative_frequency(after, f"{a0.isoformat()}..{a1.isoformat()}")
    q = impact.impact_ratio(p_a, p_b)

    out = Path(cfg.out_dir)
    write_csv(out / "impact.csv", ("district", "p_before", "p_after", "q"), (
        (d, format_float(p_b.p[k]), format_float(p_a.p[k]), _fmt_q(q.q[k])) for k, d in enumerate(q.districts)
    ))
    unmapped = sorted({(r.line, r.hotel_id) for r in before.unmapped + after.unmapped})
    per_hotel: dict[str, list[int]] = {}
    for line, hid in unmapped:
        per_hotel.setdefault(hid, []).append(line)
    for hid, lines in sorted(per_hotel.items()):
        print(f"warning: {path}:{lines[0]}: hotel {hid} matches no district; "
              f"{len(lines)} record(s) excluded", file=sys.stderr)
    write_csv(out / "errors.csv", ("line", "code", "error"),
              ((line, hid, "UnmappedHotel") for line, hid in unmapped))
    return {"records": len(bookings), "before_records": int(before.counts.sum()),
            "after_records": int(after.counts.sum()), "dropped_rows": len(unmapped),
            "undefined_districts": [d for d, u in zip(q.districts, q.undefined) if u]}


def cmd_geodesic(cfg: RunConfig) -> dict:
    path = cfg.inputs["input"]
    flights = ingest.parse_flights(path)
    _require(flights, path)
    airports = ingest.load_airports(cfg.inputs["airports"])
    try:
        cabin = ingest.Cabin.parse(cfg.cabin) if cfg.cabin else None
        day = date.fromisoformat(cfg.departure_date) if cfg.departure_date else None
    except ValueError as exc:
        raise EconDataError(str(exc)) from None
    points, errors = geodesy.price_distance_pairs(flights, airports, cabin, day)

    out = Path(cfg.out_dir)
    write_csv(out / "price_distance.csv",
              ("departure_date", "dep_iata", "arr_iata", "cabin", "carrier", "distance_km", "price"), (
                  (p.departure_date.isoformat(), p.dep_iata, p.arr_iata, p.cabin.value, p.carrier,
                   format_float(p.distance), format_float(p.price)) for p in points
              ))
    write_csv(out / "errors.csv", ("line", "code", "error"),
              ((e.line, e.code, "UnknownAirport") for e in errors))
    for e in errors:
        print(f"warning: {path}:{e.line}: unknown airport {e.code}; record skipped", file=sys.stderr)
    for p in points:
        if p.suspicious:
            print(f"warning: {path}: {p.dep_iata}-{p.arr_iata} has zero distance", file=sys.stderr)
    if not points and errors:
        raise EconDataError(f"{path}: no flight could be resolved against the airport table")
    return {"records": len(flights), "points": len(points), "dropped_rows": len({e.line for e in errors}),
            "unknown_airports": sorted({e.code for e in errors}),
            "suspicious": sum(p.suspicious for p in points)}


def cmd_gen_fixtures(out_dir: str, seed: int) -> dict:
    written = fixtures.write_fixtures(out_dir, seed)
    return {"seed": seed, "files": sorted(written)}


# -- argument parsing --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="econdata", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, needs_input=True):
        if needs_input:
            p.add_argument("--input", "-i", required=True, help="input CSV file")
        p.add_argument("--out", "-o", default=".", help="output directory (default: current)")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
        p.add_argument("--summary", choices=["json"], help="print run metadata to stdout")

    p = sub.add_parser("segment", help="recursive variance segmentation of OHLC returns")
    common(p)
    p.add_argument("--delta-c", type=float, default=segmentation.DEFAULT_DELTA_C)
    p.add_argument("--t-min", type=int, default=segmentation.DEFAULT_T_MIN)
    p.add_argument("--count-mode", choices=["span", "start"], default="span",
                   help="count a segment on every day it spans, or only on its start day")

    p = sub.add_parser("market", help="activity densities and weekly similarity matrices")
    common(p)
    p.add_argument("--bin-width", type=float, default=60.0, help="bin width in seconds")
    p.add_argument("--week-start", choices=WEEKDAYS, default="monday")
    p.add_argument("--kind", choices=["Q", "T"], default="Q", help="quotations or transactions")
    p.add_argument("--currencies", help="comma-separated currency order (default: sorted codes in data)")

    p = sub.add_parser("impact", help="district relative frequencies and impact ratios")
    common(p)
    p.add_argument("--district-map", required=True)
    for key in ("before-start", "before-end", "after-start", "after-end"):
        p.add_argument(f"--{key}", required=True, help="ISO date, inclusive")

    p = sub.add_parser("geodesic", help="great-circle distance vs price for flights")
    common(p)
    p.add_argument("--airports", required=True)
    p.add_argument("--cabin", help="Economy, Business or First")
    p.add_argument("--departure-date", help="ISO date filter")

    p = sub.add_parser("gen-fixtures", help="write the seeded synthetic fixtures")
    common(p, needs_input=False)
    p.add_argument("--seed", type=int, default=fixtures.DEFAULT_SEED)
    return parser


def config_from_args(args) -> RunConfig:
    cfg = RunConfig(subcommand=args.subcommand, out_dir=args.out, threads=args.threads)
    cfg.inputs["input"] = getattr(args, "input", None)
    if args.subcommand == "segment":
        cfg.delta_c, cfg.t_min, cfg.count_mode = args.delta_c, args.t_min, args.count_mode
    elif args.subcommand == "market":
        cfg.bin_width, cfg.week_start, cfg.kind = args.bin_width, args.week_start, args.kind
    elif args.subcommand == "impact":
        cfg.inputs["district_map"] = args.district_map
        cfg.periods = {k: getattr(args, k) for k in ("before_start", "before_end", "after_start", "after_end")}
    elif args.subcommand == "geodesic":
        cfg.inputs["airports"] = args.airports
        cfg.cabin, cfg.departure_date = args.cabin, args.departure_date
    return cfg


_SUMMARY_KEYS = {
    "segment": ("inputs", "delta_c", "t_min", "count_mode"),
    "market": ("inputs", "bin_width", "week_start", "kind"),
    "impact": ("inputs", "periods"),
    "geodesic": ("inputs", "cabin", "departure_date"),
    "gen-fixtures": ("out_dir",),
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        cfg.validate()
        if args.subcommand == "segment":
            info = cmd_segment(cfg)
        elif args.subcommand == "market":
            order = [c.strip() for c in args.currencies.split(",")] if args.currencies else None
            info = cmd_market(cfg, order)
        elif args.subcommand == "impact":
            info = cmd_impact(cfg)
        elif args.subcommand == "geodesic":
            info = cmd_geodesic(cfg)
        else:
            info = cmd_gen_fixtures(args.out, args.seed)
    except EconDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.summary == "json":
        params = {k: v for k, v in asdict(cfg).items() if k in _SUMMARY_KEYS.get(args.subcommand, ())}
        print(json.dumps({"command": args.subcommand, "parameters": params, **info}, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
