"""CSV loading, attribute classification, and scatterplot enumeration.

A loaded :class:`Table` is immutable; a column is either fully numeric
(float64 with NaN for missing cells) or text. The catalog splits columns
into measures (quantitative, scatterplot axes) and categories (breakdown
filters), and the enumerators produce the collection of
:class:`ScatterplotSpec` that downstream stages materialize.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from urllib.parse import quote

import numpy as np

from .errors import (
    CardinalityError,
    EmptyTableError,
    ParseError,
    PreconditionError,
    UnknownAttributeError,
)

# Numeric columns with at most this many distinct values are treated as
# encoded categories unless overridden.
DEFAULT_CATEGORY_THRESHOLD = 20

DEFAULT_MAX_CATEGORY_VALUES = 100


@dataclass(frozen=True)
class CsvFormat:
    """Dialect knobs for :func:`load_table` (RFC-4180 quoting assumed)."""

    delimiter: str = ","
    decimal: str = "."


@dataclass(frozen=True)
class Column:
    name: str
    # float64 array (NaN = missing) for numeric columns, tuple of
    # (str | None) for text columns.
    values: np.ndarray | tuple

    @property
    def is_numeric(self) -> bool:
        return isinstance(self.values, np.ndarray)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class Table:
    name: str
    columns: tuple[Column, ...]
    row_count: int

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise ParseError("duplicate column names: %r" % names)
        for c in self.columns:
            if len(c) != self.row_count:
                raise ParseError(
                    "column %r has %d entries, expected %d" % (c.name, len(c), self.row_count)
                )

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise UnknownAttributeError("no column named %r" % name)


@dataclass(frozen=True)
class MeasureStats:
    min: float
    max: float
    missing: int


@dataclass(frozen=True)
class AttributeCatalog:
    measures: tuple[str, ...]
    categories: tuple[str, ...]
    stats: dict[str, MeasureStats]
    # Distinct non-missing values per category attribute, sorted.
    category_values: dict[str, tuple]

    def __post_init__(self):
        overlap = set(self.measures) & set(self.categories)
        if overlap:
            raise PreconditionError("attributes classified twice: %r" % sorted(overlap))


@dataclass(frozen=True)
class Filter:
    attr: str
    value: str | float


@dataclass(frozen=True)
class ScatterplotSpec:
    x_attr: str
    y_attr: str
    filter: Filter | None = None

    def __post_init__(self):
        if self.x_attr == self.y_attr:
            raise PreconditionError("x and y attribute must differ: %r" % self.x_attr)

    @property
    def spec_id(self) -> str:
        """Stable, URL-safe key; ':' never survives percent-encoding, so the
        join is injective over the fields."""
        parts = [quote(self.x_attr, safe=""), quote(self.y_attr, safe="")]
        if self.filter is not None:
            value = self.filter.value
            text = repr(value) if isinstance(value, float) else str(value)
            parts.append(quote(self.filter.attr, safe="") + "=" + quote(text, safe=""))
        return ":".join(parts)


@dataclass(frozen=True)
class RawPointSet:
    spec: ScatterplotSpec
    points: np.ndarray  # shape (n, 2), float64, data units, all finite
    dropped_rows: int

    @property
    def is_empty(self) -> bool:
        return len(self.points) == 0


def _parse_cell(cell: str, decimal: str) -> float | None:
    cell = cell.strip()
    if not cell:
        return None
    if decimal != ".":
        cell = cell.replace(decimal, ".")
    try:
        return float(cell)
    except ValueError:
        return None


def load_table(source: bytes | str | io.IOBase, fmt: CsvFormat = CsvFormat(), name: str = "table") -> Table:
    """Parse a headered CSV into a Table.

    A column becomes numeric iff every non-empty cell parses as a number
    under the format's decimal convention; otherwise it stays text.
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")

    reader = csv.reader(io.StringIO(text), delimiter=fmt.delimiter, strict=True)
    try:
        rows = [(row, reader.line_num) for row in reader]
    except csv.Error as exc:
        raise ParseError("malformed CSV: %s" % exc, row=reader.line_num) from exc
    if not rows:
        raise EmptyTableError("input contains no CSV header")

    (header, _), tail = rows[0], rows[1:]
    if not any(h.strip() for h in header):
        raise EmptyTableError("CSV header is blank")
    tail = [(row, line) for row, line in tail if row]  # blank lines skipped, not ragged
    for row, line in tail:
        if len(row) != len(header):
            raise ParseError(
                "row %d has %d fields, expected %d" % (line, len(row), len(header)), row=line
            )
    data = [row for row, _ in tail]

    columns = []
    for j, col_name in enumerate(header):
        raw = [row[j] for row in data]
        parsed = [_parse_cell(c, fmt.decimal) for c in raw]
        numeric = all(p is not None for c, p in zip(raw, parsed) if c.strip())
        if numeric:
            values = np.array([math.nan if p is None else p for p in parsed], dtype=np.float64)
        else:
            values = tuple(c.strip() if c.strip() else None for c in raw)
        columns.append(Column(col_name.strip(), values))
    return Table(name=name, columns=tuple(columns), row_count=len(data))


def _distinct_values(col: Column):
    if col.is_numeric:
        vals = col.values[np.isfinite(col.values)]
        return tuple(sorted(set(float(v) for v in vals)))
    return tuple(sorted(set(v for v in col.values if v is not None)))


def classify_attributes(
    t: Table,
    overrides: dict[str, str] | None = None,
    category_threshold: int = DEFAULT_CATEGORY_THRESHOLD,
) -> AttributeCatalog:
    """Split columns into measures and categories.

    Numeric columns with more than ``category_threshold`` distinct values
    become measures; everything else is a category. Overrides
    (name -> "measure" | "category") win, but only numeric columns may be
    forced to measure.
    """
    if t.row_count == 0:
        raise EmptyTableError("cannot classify an empty table")
    overrides = overrides or {}
    known = set(t.column_names)
    for attr, kind in overrides.items():
        if attr not in known:
            raise UnknownAttributeError("override names unknown column %r" % attr)
        if kind not in ("measure", "category"):
            raise PreconditionError("override kind must be 'measure' or 'category', got %r" % kind)

    measures, categories = [], []
    stats: dict[str, MeasureStats] = {}
    category_values: dict[str, tuple] = {}
    for col in t.columns:
        distinct = _distinct_values(col)
        kind = overrides.get(col.name)
        if kind is None:
            if col.is_numeric and len(distinct) > category_threshold:
                kind = "measure"
            else:
                kind = "category"
        if kind == "measure":
            if not col.is_numeric:
                raise PreconditionError("text column %r cannot be a measure" % col.name)
            finite = col.values[np.isfinite(col.values)]
            measures.append(col.name)
            stats[col.name] = MeasureStats(
                min=float(finite.min()) if len(finite) else math.nan,
                max=float(finite.max()) if len(finite) else math.nan,
                missing=int(t.row_count - len(finite)),
            )
        else:
            categories.append(col.name)
            category_values[col.name] = distinct
    return AttributeCatalog(
        measures=tuple(measures),
        categories=tuple(categories),
        stats=stats,
        category_values=category_values,
    )


def enumerate_pairwise(catalog: AttributeCatalog) -> list[ScatterplotSpec]:
    """All C(m, 2) unordered measure pairs, lexicographic by (x, y)."""
    return [
        ScatterplotSpec(x, y)
        for x, y in itertools.combinations(sorted(catalog.measures), 2)
    ]


def enumerate_by_category(
    x_attr: str,
    y_attr: str,
    cat_attr: str,
    catalog: AttributeCatalog,
    max_values: int = DEFAULT_MAX_CATEGORY_VALUES,
) -> list[ScatterplotSpec]:
    """One spec per distinct value of ``cat_attr``, ordered by value."""
    for attr in (x_attr, y_attr):
        if attr not in catalog.measures:
            raise PreconditionError("%r is not a measure" % attr)
    if cat_attr not in catalog.categories:
        raise PreconditionError("%r is not a category" % cat_attr)
    values = catalog.category_values[cat_attr]
    if len(values) > max_values:
        raise CardinalityError(
            "category %r has %d distinct values (max %d)" % (cat_attr, len(values), max_values)
        )
    return [ScatterplotSpec(x_attr, y_attr, Filter(cat_attr, v)) for v in values]


def materialize(t: Table, spec: ScatterplotSpec) -> RawPointSet:
    """Extract the spec's (x, y) points from the table.

    Rows that match the filter (all rows when there is none) but have a
    missing or non-finite coordinate are counted in ``dropped_rows``; rows
    excluded by the filter are not. Row order is preserved. An empty result
    is a valid (flagged) point set, not an error.
    """
    x_col, y_col = t.column(spec.x_attr), t.column(spec.y_attr)
    for col in (x_col, y_col):
        if not col.is_numeric:
            raise PreconditionError("column %r is not numeric" % col.name)

    if spec.filter is None:
        candidates = np.ones(t.row_count, dtype=bool)
    else:
        f_col = t.column(spec.filter.attr)
        if f_col.is_numeric:
            candidates = f_col.values == float(spec.filter.value)
        else:
            candidates = np.array([v == spec.filter.value for v in f_col.values], dtype=bool)

    finite = np.isfinite(x_col.values) & np.isfinite(y_col.values)
    keep = candidates & finite
    points = np.column_stack([x_col.values[keep], y_col.values[keep]])
    dropped = int(candidates.sum() - keep.sum())
    return RawPointSet(spec=spec, points=points, dropped_rows=dropped)
