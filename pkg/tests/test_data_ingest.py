import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adriana import data_ingest as di
from adriana.errors import (
    CountryNotFound,
    DateGap,
    EmptyDocument,
    MalformedHeader,
    NonNumericCount,
    RaggedRow,
)

HEAD = "Province/State,Country/Region,Lat,Long,1/22/20,1/23/20,1/24/20\n"


def test_minimal_document():
    (s,) = di.parse_jhu_csv(HEAD + ",Nowhere,0,0,0,1,3\n")
    assert s.values.tolist() == [0, 1, 3]
    assert s.start_date == dt.date(2020, 1, 22)
    assert s.region_name == "Nowhere"


def test_province_rows_keep_both_names():
    (s,) = di.parse_jhu_csv(HEAD + "Ontario,Canada,1,2,0,1,3\n")
    assert s.region_name == "Ontario, Canada"
    assert s.country == "Canada" and s.province == "Ontario"


def test_bom_and_quoted_cells():
    text = "\ufeff" + HEAD + ',"Korea, South",0,0,0,1,3\n'
    (s,) = di.parse_jhu_csv(text)
    assert s.country == "Korea, South"


@pytest.mark.parametrize("text,err", [
    ("", EmptyDocument),
    (HEAD, EmptyDocument),
    ("State,Country,Lat,Long,1/22/20\n,X,0,0,1\n", MalformedHeader),
    ("Province/State,Country/Region,Lat,Long,2020-01-22,2020-01-23\n,X,0,0,1,2\n", MalformedHeader),
    (HEAD + ",X,0,0,0,1\n", RaggedRow),
    (HEAD + ",X,0,0,0,a,3\n", NonNumericCount),
    (HEAD + ",X,0,0,0,1.5,3\n", NonNumericCount),
    ("Province/State,Country/Region,Lat,Long,1/22/20,1/24/20\n,X,0,0,1,2\n", DateGap),
])
def test_rejects(text, err):
    with pytest.raises(err):
        di.parse_jhu_csv(text)


def test_select_country_sums_provinces():
    rows = di.parse_jhu_csv(HEAD + "A,Land,0,0,1,2,3\nB,Land,0,0,0,1,1\n,Other,0,0,5,5,5\n")
    s = di.select_country(rows, "land")
    assert s.values.tolist() == [1, 3, 4]
    with pytest.raises(CountryNotFound):
        di.select_country(rows, "Atlantis")


def test_select_country_order_independent():
    rows = di.parse_jhu_csv(HEAD + "A,Land,0,0,1,2,3\nB,Land,0,0,0,1,1\nC,Land,0,0,4,4,9\n")
    a = di.select_country(rows, "Land").values
    b = di.select_country(rows[::-1], "Land").values
    assert np.array_equal(a, b)


@pytest.mark.parametrize("cum,daily", [([10, 13, 19], [10, 3, 6]), ([5, 5, 5], [5, 0, 0])])
def test_to_daily(cum, daily):
    c = di.CumulativeSeries("X", "X", dt.date(2020, 1, 22), np.array(cum))
    d = di.to_daily(c)
    assert d.values.tolist() == daily
    assert d.warnings == ()


def test_negative_correction_passes_through_with_warning():
    c = di.CumulativeSeries("X", "X", dt.date(2020, 1, 22), np.array([4, 9, 7, 8]))
    d = di.to_daily(c)
    assert d.values.tolist() == [4, 5, -2, 1]
    assert len(d.warnings) == 1 and "2020-01-24" in d.warnings[0]
    assert d.values.sum() == 8


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 10_000), min_size=2, max_size=60))
def test_daily_sums_to_last_cumulative(increments):
    cum = np.cumsum(increments)
    c = di.CumulativeSeries("X", "X", dt.date(2020, 3, 1), cum)
    assert di.to_daily(c).values.sum() == cum[-1]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(st.integers(0, 500), min_size=5, max_size=5), min_size=1, max_size=4))
def test_parse_format_roundtrip(rows):
    series = [di.CumulativeSeries(f"C{k}", f"C{k}", dt.date(2020, 12, 29), np.cumsum(r))
              for k, r in enumerate(rows)]
    again = di.parse_jhu_csv(di.format_jhu_csv(series))
    assert [s.values.tolist() for s in again] == [s.values.tolist() for s in series]
    assert all(s.dates == t.dates for s, t in zip(again, series))


def test_series_csv_roundtrip():
    dates = [dt.date(2021, 2, 27) + dt.timedelta(days=k) for k in range(4)]
    text = di.format_series_csv(dates, [1.0, 2.5, -3.0, 0.0])
    assert text.splitlines()[:2] == ["date,value", "2021-02-27,1"]
    d2, v2 = di.parse_series_csv(text)
    assert d2 == dates and v2.tolist() == [1.0, 2.5, -3.0, 0.0]


def test_committed_fixture_shape(fixture_paths):
    for path in fixture_paths.values():
        rows = di.read_jhu_csv(path)
        n_lines = len([ln for ln in path.read_text().splitlines()[1:] if ln.strip()])
        assert len(rows) == n_lines
        sa = di.select_country(rows, "South Africa")
        assert len(sa.values) == 458
        assert sa.dates[-1] == dt.date(2021, 4, 23)
        assert sa.is_monotone


def test_truncate():
    c = di.CumulativeSeries("X", "X", dt.date(2020, 1, 22), np.arange(10))
    t = c.truncate(dt.date(2020, 1, 25))
    assert t.values.tolist() == [0, 1, 2, 3]
