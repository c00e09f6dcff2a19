"""Parsing of JHU-CSSE style cumulative time-series CSVs."""

from __future__ import annotations

import csv
import datetime as dt
import enum
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CountryNotFound,
    DateGap,
    EmptyDocument,
    MalformedHeader,
    NonNumericCount,
    RaggedRow,
    ValidationError,
)

logger = logging.getLogger(__name__)

HEADER_PREFIX = ("Province/State", "Country/Region", "Lat", "Long")


class SeriesKind(str, enum.Enum):
    CONFIRMED = "Confirmed"
    RECOVERED = "Recovered"
    DEATH = "Death"


@dataclass(frozen=True)
class CumulativeSeries:
    region_name: str
    country: str
    start_date: dt.date
    values: np.ndarray
    province: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.int64)
        if v.ndim != 1 or len(v) < 2:
            raise ValidationError("cumulative series needs at least 2 values")
        if np.any(v < 0):
            raise ValidationError(f"{self.region_name}: negative cumulative count")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dates(self) -> list[dt.date]:
        return [self.start_date + dt.timedelta(days=i) for i in range(len(self.values))]

    @property
    def is_monotone(self) -> bool:
        return bool(np.all(np.diff(self.values) >= 0))

    def truncate(self, end: dt.date) -> "CumulativeSeries":
        """Drop every day after ``end`` (inclusive bound)."""
        n = (end - self.start_date).days + 1
        if n < 2 or n > len(self.values):
            raise ValidationError(f"cannot truncate {self.region_name} at {end}")
        return CumulativeSeries(self.region_name, self.country, self.start_date,
                                self.values[:n], self.province)


@dataclass(frozen=True)
class DailySeries:
    region_name: str
    kind: SeriesKind
    start_date: dt.date
    values: np.ndarray
    warnings: tuple[str, ...] = field(default=())

    @property
    def dates(self) -> list[dt.date]:
        return [self.start_date + dt.timedelta(days=i) for i in range(len(self.values))]


def _parse_date(text: str) -> dt.date:
    try:
        month, day, year = (int(p) for p in text.strip().split("/"))
    except ValueError as exc:
        raise MalformedHeader(f"date column {text!r} is not M/D/YY") from exc
    if year < 100:
        year += 2000
    try:
        return dt.date(year, month, day)
    except ValueError as exc:
        raise MalformedHeader(f"invalid date {text!r}") from exc


def _parse_count(cell: str, row: int, col: int) -> int:
    s = cell.strip()
    try:
        value = float(s)
    except ValueError:
        raise NonNumericCount(f"row {row}, column {col}: {cell!r}") from None
    if not np.isfinite(value) or value != int(value):
        raise NonNumericCount(f"row {row}, column {col}: {cell!r}")
    return int(value)


def parse_jhu_csv(text: str) -> list[CumulativeSeries]:
    """Parse a global time-series document into one series per data row."""
    if text.startswith("﻿"):
        text = text[1:]
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise EmptyDocument("document has no header")
    header = rows[0]
    if tuple(h.strip() for h in header[:4]) != HEADER_PREFIX:
        raise MalformedHeader(f"header must start with {','.join(HEADER_PREFIX)}")
    dates = [_parse_date(h) for h in header[4:]]
    if len(dates) < 2:
        raise MalformedHeader("need at least two date columns")
    for a, b in zip(dates, dates[1:]):
        if (b - a).days != 1:
            raise DateGap(f"dates {a} and {b} are not consecutive")
    if len(rows) == 1:
        raise EmptyDocument("header-only document")

    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise RaggedRow(f"row {lineno} has {len(row)} cells, header has {len(header)}")
        province, country = row[0].strip(), row[1].strip()
        counts = [_parse_count(c, lineno, j) for j, c in enumerate(row[4:], start=5)]
        name = f"{province}, {country}" if province else country
        out.append(CumulativeSeries(name, country, dates[0], np.array(counts), province))
    return out


def read_jhu_csv(path) -> list[CumulativeSeries]:
    with open(path, encoding="utf-8") as fh:
        return parse_jhu_csv(fh.read())


def select_country(series_list: list[CumulativeSeries], name: str) -> CumulativeSeries:
    """Sum all rows whose country matches ``name`` case-insensitively."""
    key = name.strip().casefold()
    matches = [s for s in series_list if s.country.casefold() == key]
    if not matches:
        raise CountryNotFound(name)
    first = matches[0]
    for s in matches[1:]:
        if s.start_date != first.start_date or len(s.values) != len(first.values):
            raise ValidationError(f"rows for {name} cover different date ranges")
    total = np.sum([s.values for s in matches], axis=0)
    return CumulativeSeries(name, first.country, first.start_date, total)


def to_daily(c: CumulativeSeries, kind: SeriesKind = SeriesKind.CONFIRMED) -> DailySeries:
    """Daily counts; the first day carries the first cumulative value."""
    values = np.diff(c.values, prepend=0).astype(float)
    warnings = tuple(
        f"{c.start_date + dt.timedelta(days=int(i))}: negative daily count {values[i]:g}"
        for i in np.flatnonzero(values < 0)
    )
    for w in warnings:
        logger.warning("%s: %s", c.region_name, w)
    return DailySeries(c.region_name, kind, c.start_date, values, warnings)


def format_series_csv(dates, values) -> str:
    """Canonical ``date,value`` output with ISO dates."""
    buf = io.StringIO()
    buf.write("date,value\n")
    for d, v in zip(dates, values):
        v = float(v)
        buf.write(f"{d.isoformat()},{int(v) if v.is_integer() else repr(v)}\n")
    return buf.getvalue()


def parse_series_csv(text: str) -> tuple[list[dt.date], np.ndarray]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [h.strip() for h in rows[0]] != ["date", "value"]:
        raise MalformedHeader("expected 'date,value' header")
    body = [r for r in rows[1:] if r]
    if not body:
        raise EmptyDocument("no data rows")
    dates = [dt.date.fromisoformat(r[0]) for r in body]
    for a, b in zip(dates, dates[1:]):
        if (b - a).days != 1:
            raise DateGap(f"dates {a} and {b} are not consecutive")
    try:
        values = np.array([float(r[1]) for r in body])
    except (ValueError, IndexError) as exc:
        raise NonNumericCount(str(exc)) from None
    return dates, values


def format_jhu_csv(series_list: list[CumulativeSeries]) -> str:
    """Inverse of :func:`parse_jhu_csv` (lat/long are written as 0)."""
    if not series_list:
        raise EmptyDocument("nothing to write")
    dates = series_list[0].dates
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(HEADER_PREFIX) + [f"{d.month}/{d.day}/{d.year % 100}" for d in dates])
    for s in series_list:
        w.writerow([s.province, s.country, 0, 0] + [int(v) for v in s.values])
    return buf.getvalue()
