import csv
from pathlib import Path

import numpy as np
import pytest

from scbabreath import lpc, synth
from scbabreath.config import ToolConfig

DATA = Path(__file__).parent / "data"


def read_pairs(name):
    """(time, value) rows of a two-column fixture, kept as printed strings."""
    with open(DATA / name, newline="") as f:
        rows = list(csv.reader(f))[1:]
    return [(a, b) for a, b in rows]


def field_rate_rows():
    return read_pairs("field_rates.csv")


def field_duration_rows():
    return read_pairs("field_durations.csv")


def rows_with_predecessor(rows):
    """(predecessor time, time, printed rate) with the repeated timestamp row dropped."""
    out = []
    prev = None
    for t, r in rows:
        t = float(t)
        if prev is not None and t == prev:
            continue
        if prev is not None:
            out.append((prev, t, float(r)))
        prev = t
    return out


def unique_times(rows):
    seen = []
    for t, _ in rows:
        if not seen or float(t) != seen[-1]:
            seen.append(float(t))
    return np.array(seen)


@pytest.fixture(scope="session")
def cfg():
    return ToolConfig()


@pytest.fixture(scope="session")
def exemplars():
    return synth.exemplar_set()


@pytest.fixture(scope="session")
def lpc_model(exemplars, cfg):
    return lpc.fit_lpc(exemplars, cfg.lpc.order, cfg.frontend)


@pytest.fixture(scope="session")
def small_scene():
    # 10 inhales at 3 s spacing
    return synth.render_scene(synth.breathing_scene(duration_s=31.0, n_inhales=10, seed=3))


# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
