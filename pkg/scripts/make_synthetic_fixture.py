"""Write a seeded, synthetic CRD snapshot in the JHU-CSSE global layout.

The sandbox this package was built in cannot reach the upstream repository,
so the committed fixture under data/jhu/ is produced by this script. It covers
1/22/20 to 4/23/21 (458 days) and mimics a two-wave epidemic with weekly
reporting artefacts; the numbers are NOT real surveillance data. Drop the real
``time_series_covid19_*_global.csv`` files into a directory and point
ADRIANA_REAL_JHU_DIR at it to run the real-data anchors.

    python scripts/make_synthetic_fixture.py [--out data/jhu] [--seed 2021]
"""

import argparse
import datetime as dt
from pathlib import Path

import numpy as np

from adriana.data_ingest import CumulativeSeries, format_jhu_csv

START = dt.date(2020, 1, 22)
END = dt.date(2021, 4, 23)


def wave(t, peak_day, height, width):
    return height * np.exp(-0.5 * ((t - peak_day) / width) ** 2)


def daily_confirmed(rng, n, onset, waves, weekly_dip=0.25, dispersion=30.0):
    t = np.arange(n, dtype=float)
    mean = sum(wave(t, *w) for w in waves)
    mean[: onset] = 0.0
    weekday = (t + START.weekday()) % 7
    mean *= np.where(weekday >= 5, 1.0 - weekly_dip, 1.0)
    # gamma-Poisson mixture -> overdispersed counts
    lam = rng.gamma(dispersion, np.maximum(mean, 1e-9) / dispersion)
    return rng.poisson(lam)


def lagged(rng, daily, lag, fraction, batch_every=1):
    shifted = np.concatenate([np.zeros(lag), daily[:-lag]]) * fraction
    out = rng.binomial(shifted.astype(np.int64), 1.0)
    if batch_every > 1:
        # reported in lumps every few days
        held = 0
        for i in range(len(out)):
            held += out[i]
            out[i] = 0
            if i % batch_every == batch_every - 1:
                out[i], held = held, 0
        out[-1] += held
    return out


def country_rows(rng, n, name, onset, waves, cfr, provinces=None):
    confirmed = daily_confirmed(rng, n, onset, waves)
    deaths = rng.binomial(np.concatenate([np.zeros(14, int), confirmed[:-14]]), cfr)
    recovered = lagged(rng, confirmed, 12, 0.96, batch_every=3)
    recovered = np.minimum(np.cumsum(recovered), np.cumsum(confirmed) - np.cumsum(deaths))
    recovered = np.maximum.accumulate(np.maximum(recovered, 0))
    series = {
        "confirmed": np.cumsum(confirmed),
        "deaths": np.cumsum(deaths),
        "recovered": recovered,
    }
    if not provinces:
        return {k: [CumulativeSeries(name, name, START, v)] for k, v in series.items()}
    shares = np.asarray(provinces[1], dtype=float)
    out = {}
    for k, v in series.items():
        parts = np.floor(np.outer(shares, v)).astype(np.int64)
        parts[-1] = v - parts[:-1].sum(axis=0)
        out[k] = [CumulativeSeries(f"{p}, {name}", name, START, part, p)
                  for p, part in zip(provinces[0], np.maximum.accumulate(parts, axis=1))]
    return out


def build(seed):
    rng = np.random.default_rng(seed)
    n = (END - START).days + 1
    countries = [
        ("Afghanistan", 33, [(150, 700, 30), (330, 300, 40)], 0.04, None),
        ("Australia", 40, [(70, 300, 15), (200, 500, 20)], 0.03,
         (["New South Wales", "Victoria"], [0.35, 0.65])),
        ("Botswana", 70, [(300, 500, 40), (420, 400, 30)], 0.015, None),
        # two large waves (mid-year and year-end), tail into the snapshot end
        ("South Africa", 43, [(180, 12000, 28), (354, 17500, 22), (470, 1500, 60)], 0.03, None),
        ("Zimbabwe", 60, [(190, 150, 25), (360, 800, 18)], 0.035, None),
    ]
    files = {"confirmed": [], "deaths": [], "recovered": []}
    for name, onset, waves, cfr, prov in countries:
        rows = country_rows(rng, n, name, onset, waves, cfr, prov)
        for k in files:
            files[k].extend(rows[k])
    return files


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="data/jhu")
    ap.add_argument("--seed", type=int, default=2021)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for kind, rows in build(args.seed).items():
        path = out / f"time_series_covid19_{kind}_global.csv"
        path.write_text(format_jhu_csv(rows), encoding="utf-8")
        print(f"wrote {path} ({len(rows)} rows)")


if __name__ == "__main__":
    main()
