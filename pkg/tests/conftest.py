import os
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
FIXTURE_DIR = ROOT / "data" / "jhu"
FILES = {
    "confirmed": "time_series_covid19_confirmed_global.csv",
    "recovered": "time_series_covid19_recovered_global.csv",
    "death": "time_series_covid19_deaths_global.csv",
}


def real_jhu_dir():
    """Directory holding the upstream JHU snapshot, if one was provided."""
    d = os.environ.get("ADRIANA_REAL_JHU_DIR")
    if d and all((Path(d) / f).exists() for f in FILES.values()):
        return Path(d)
    return None


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fixture_paths():
    return {k: FIXTURE_DIR / f for k, f in FILES.items()}


def ar1(n, phi, seed, sigma=1.0, burn=200):
    g = np.random.default_rng(seed)
    e = g.normal(0, sigma, n + burn)
    x = np.zeros(n + burn)
    for t in range(1, n + burn):
        x[t] = phi * x[t - 1] + e[t]
    return x[burn:]


_ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """``record(n, ok, detail)`` stores the verdict line for acceptance criterion ``n``."""
    def record(n, ok, detail):
        _ACCEPTANCE[n] = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])
