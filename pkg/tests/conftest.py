import math
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"


def direct_loglik(xs) -> float:
    """Summed Gaussian log-density with ML mean and variance, one point at a time."""
    m = len(xs)
    mu = math.fsum(xs) / m
    var = math.fsum((x - mu) ** 2 for x in xs) / m
    return math.fsum(-0.5 * math.log(2 * math.pi * var) - (x - mu) ** 2 / (2 * var) for x in xs)


def direct_delta(xs, t) -> float:
    xs = [float(v) for v in xs]
    return direct_loglik(xs[:t]) + direct_loglik(xs[t:]) - direct_loglik(xs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


# argument lists replayed against the bundled fixtures to produce tests/golden/<command>/
GOLDEN_RUNS = {
    "segment": ["segment", "--input", str(FIXTURES / "ohlc_synthetic.csv")],
    "market": ["market", "--input", str(FIXTURES / "ticks_synthetic.csv")],
    "impact": ["impact", "--input", str(FIXTURES / "bookings_synthetic.csv"),
               "--district-map", str(FIXTURES / "district_map.csv"),
               "--before-start", "2010-05-01", "--before-end", "2010-05-31",
               "--after-start", "2011-05-01", "--after-end", "2011-05-31"],
    "geodesic": ["geodesic", "--input", str(FIXTURES / "flights_synthetic.csv"),
                 "--airports", str(FIXTURES / "airports.csv"), "--cabin", "Economy"],
}


def run_golden(command: str, out_dir: Path, threads: int = 1) -> int:
    from econdata.cli import main

    return main(GOLDEN_RUNS[command] + ["--out", str(out_dir), "--threads", str(threads)])


ACCEPTANCE_LINES: list[str] = []


def report(number: int, title: str, passed: bool, detail: str) -> bool:
    """Record one acceptance line; printed again in the terminal summary."""
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d} {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
