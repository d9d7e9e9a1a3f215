"""Readers for house-price and house-price-index tables.

Column names are configuration (``PriceSchema`` / ``HpiSchema``); files are
comma- or tab-delimited UTF-8 text with a header row.  Bad rows are
collected with a reason instead of aborting, unless more than half fail.
"""
from __future__ import annotations

import csv
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .empirical import SortedSample
from .errors import DomainError, ParseError, SchemaError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PriceRecord:
    price: float
    year: int
    property_class: str = ""


@dataclass(frozen=True)
class HpiRecord:
    zip: str
    year: int
    hpi: float


@dataclass(frozen=True)
class PriceSchema:
    price: str = "price"
    year: str = "year"
    property_class: Optional[str] = None
    # keep only these property classes (None keeps all)
    keep_classes: Optional[frozenset] = None
    year_range: tuple = (1900, 2100)


@dataclass(frozen=True)
class HpiSchema:
    """Defaults follow the FHFA annual ZIP5 file (saved as CSV)."""

    zip: str = "Five-Digit ZIP Code"
    year: str = "Year"
    hpi: str = "HPI"
    year_range: tuple = (1900, 2100)


@dataclass
class IngestResult:
    records: list
    total_rows: int
    skipped: list = field(default_factory=list)  # (line number, reason)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def skip_reasons(self) -> Counter:
        return Counter(reason for _, reason in self.skipped)


@dataclass(frozen=True)
class DeflatorTable:
    factors: dict
    base_year: int

    def __post_init__(self):
        if self.base_year not in self.factors:
            raise DomainError(f"base year {self.base_year} missing from deflator table")
        if not all(f > 0 for f in self.factors.values()):
            raise DomainError("deflator factors must be positive")


def _open_table(path):
    text = Path(path).read_text(encoding="utf-8-sig")
    lines = text.splitlines()
    if not lines:
        raise ParseError(f"{path}: empty file")
    delim = "\t" if lines[0].count("\t") > lines[0].count(",") else ","
    reader = csv.reader(lines, delimiter=delim)
    header = [h.strip() for h in next(reader)]
    return header, reader


def _column_index(header, name, path):
    try:
        return header.index(name)
    except ValueError:
        raise SchemaError(f"{path}: column {name!r} not found in header {header}") from None


def _finish(path, records, total, skipped):
    for line, reason in skipped:
        log.info("%s:%d skipped (%s)", path, line, reason)
    if total and len(skipped) > total / 2:
        raise ParseError(f"{path}: {len(skipped)} of {total} rows failed to parse")
    if skipped:
        log.warning("%s: skipped %d of %d rows", path, len(skipped), total)
    return IngestResult(records, total, skipped)


def read_prices(path, schema: PriceSchema = PriceSchema()) -> IngestResult:
    """Parse sale records; rows with non-positive or unparseable prices are skipped."""
    header, reader = _open_table(path)
    ip = _column_index(header, schema.price, path)
    iy = _column_index(header, schema.year, path)
    ic = _column_index(header, schema.property_class, path) if schema.property_class else None
    records, skipped, total = [], [], 0
    lo, hi = schema.year_range
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        total += 1
        try:
            price = float(row[ip])
            year = int(float(row[iy]))
        except (ValueError, IndexError):
            skipped.append((lineno, "unparseable"))
            continue
        cls = row[ic].strip() if ic is not None and ic < len(row) else ""
        if not np.isfinite(price) or price <= 0:
            skipped.append((lineno, "non-positive price"))
        elif not lo <= year <= hi:
            skipped.append((lineno, "year out of range"))
        elif schema.keep_classes is not None and cls not in schema.keep_classes:
            skipped.append((lineno, "property class filtered"))
        else:
            records.append(PriceRecord(price, year, cls))
    return _finish(path, records, total, skipped)


def write_prices(path, records: Iterable[PriceRecord], schema: PriceSchema = PriceSchema()):
    cls_col = schema.property_class or "property_class"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([schema.price, schema.year, cls_col])
        for r in records:
            w.writerow([repr(float(r.price)), r.year, r.property_class])


def read_deflator(path) -> DeflatorTable:
    """Two-column ``year,factor`` file; a ``# base_year=YYYY`` comment or the
    first row sets the base year."""
    factors = {}
    base = None
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if "base_year=" in line:
                base = int(line.split("base_year=")[1].split()[0])
            continue
        parts = [p.strip() for p in line.replace("\t", ",").split(",")]
        try:
            year, factor = int(float(parts[0])), float(parts[1])
        except (ValueError, IndexError):
            if not factors:
                continue  # header row
            raise ParseError(f"{path}: bad deflator row {raw!r}") from None
        factors[year] = factor
        if base is None:
            base = year
    if base is None:
        raise ParseError(f"{path}: no deflator rows")
    return DeflatorTable(factors, base)


def deflate(records: Iterable[PriceRecord], table: DeflatorTable, label: str = "HP") -> SortedSample:
    """Convert nominal prices to base-year constant currency."""
    records = list(records)
    missing = sorted({r.year for r in records} - set(table.factors))
    if missing:
        raise DomainError(f"deflator table lacks years: {missing}")
    base = table.factors[table.base_year]
    vals = np.array([r.price * base / table.factors[r.year] for r in records], dtype=float)
    return SortedSample(vals, label=f"{label} constant {table.base_year}")


def _norm_zip(raw: str) -> Optional[str]:
    z = raw.strip()
    if z.endswith(".0"):
        z = z[:-2]
    if not z.isdigit() or len(z) > 5:
        return None
    # spreadsheet exports drop leading zeros (e.g. 1001 -> 01001)
    return z.zfill(5)


def read_hpi(path, schema: HpiSchema = HpiSchema()) -> IngestResult:
    """Parse (zip, year, hpi) rows.  Duplicate (zip, year) keys: last row wins."""
    header, reader = _open_table(path)
    iz = _column_index(header, schema.zip, path)
    iy = _column_index(header, schema.year, path)
    ih = _column_index(header, schema.hpi, path)
    by_key = {}
    skipped, total, dups = [], 0, 0
    lo, hi = schema.year_range
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        total += 1
        try:
            zp = _norm_zip(row[iz])
            year = int(float(row[iy]))
            hpi = float(row[ih])
        except (ValueError, IndexError):
            skipped.append((lineno, "unparseable"))
            continue
        if zp is None:
            skipped.append((lineno, "bad zip"))
        elif not np.isfinite(hpi) or hpi <= 0:
            skipped.append((lineno, "non-positive hpi"))
        elif not lo <= year <= hi:
            skipped.append((lineno, "year out of range"))
        else:
            if (zp, year) in by_key:
                dups += 1
            by_key[(zp, year)] = HpiRecord(zp, year, hpi)
    if dups:
        log.warning("%s: %d duplicate (zip, year) rows; kept the last of each", path, dups)
    return _finish(path, list(by_key.values()), total, skipped)


def select_hpi(records: Iterable[HpiRecord], years) -> SortedSample:
    """Pool the HPI values of every record whose year is in ``years``."""
    years = set(int(y) for y in years)
    if not years:
        raise DomainError("year selection is empty")
    vals = [r.hpi for r in records if r.year in years]
    if not vals:
        raise DomainError(f"no HPI records for years {sorted(years)}")
    span = f"{min(years)}-{max(years)}" if len(years) > 1 else str(min(years))
    return SortedSample(np.array(vals), label=f"HPI {span}")
