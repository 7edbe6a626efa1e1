"""Indicator/country data model, CSV+JSON ingestion and table diagnostics."""

from __future__ import annotations

import csv
import enum
import json
import math
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    ColumnTooSparse,
    DuplicateCountry,
    NonNumericCell,
    UnknownIndicatorColumn,
    ValidationError,
)

MISSING_TOKENS = frozenset({"", "NA", "n/a"})
INDEX_NAMES = ("F", "O", "I")


class Polarity(str, enum.Enum):
    HIGHER_IS_BETTER = "HigherIsBetter"
    LOWER_IS_BETTER = "LowerIsBetter"


def country_id(name: str) -> str:
    """Canonical country label: NFC-normalized, surrounding whitespace removed."""
    return unicodedata.normalize("NFC", name).strip()


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class IndicatorSpec:
    id: str
    label: str
    polarity: Polarity
    index: str | None = None
    component_group: int | None = None
    source_tag: str = ""

    def __post_init__(self):
        if not isinstance(self.polarity, Polarity):
            try:
                object.__setattr__(self, "polarity", Polarity(self.polarity))
            except ValueError:
                raise ValidationError(
                    f"indicator {self.id!r}: polarity must be one of "
                    f"{[p.value for p in Polarity]}, got {self.polarity!r}"
                ) from None
        if self.index not in (None, *INDEX_NAMES):
            raise ValidationError(f"indicator {self.id!r}: unknown index {self.index!r}")
        if self.index is not None and (self.component_group is None or self.component_group < 1):
            raise ValidationError(
                f"indicator {self.id!r} is assigned to index {self.index} "
                "but has no component_group >= 1"
            )

    @classmethod
    def from_dict(cls, d: Mapping) -> "IndicatorSpec":
        if "polarity" not in d or d["polarity"] is None:
            raise ValidationError(f"indicator {d.get('id')!r}: polarity is mandatory")
        index = d.get("index")
        if index in ("", "None"):
            index = None
        group = d.get("component_group")
        return cls(
            id=str(d["id"]),
            label=str(d.get("label", d["id"])),
            polarity=d["polarity"],
            index=index,
            component_group=None if group is None else int(group),
            source_tag=str(d.get("source_tag", "")),
        )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "label": self.label,
            "polarity": self.polarity.value,
            "index": self.index,
            "component_group": self.component_group,
            "source_tag": self.source_tag,
        }


@dataclass(frozen=True)
class IndicatorTable:
    """Countries x indicators matrix of raw values; NaN marks a missing cell."""

    countries: tuple[str, ...]
    indicators: tuple[IndicatorSpec, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        countries = tuple(country_id(c) for c in self.countries)
        object.__setattr__(self, "countries", countries)
        object.__setattr__(self, "indicators", tuple(self.indicators))
        values = _readonly(self.values)
        object.__setattr__(self, "values", values)

        if values.shape != (len(countries), len(self.indicators)):
            raise ValidationError(
                f"value matrix shape {values.shape} does not match "
                f"{len(countries)} countries x {len(self.indicators)} indicators"
            )
        seen = set()
        for c in countries:
            if c in seen:
                raise DuplicateCountry(f"duplicate country {c!r}")
            seen.add(c)
        ids = [s.id for s in self.indicators]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate indicator ids")
        if np.isinf(values).any():
            raise ValidationError("infinite values are not allowed")
        present = (~np.isnan(values)).sum(axis=0)
        for spec, n in zip(self.indicators, present):
            if n < 2:
                raise ColumnTooSparse(f"indicator {spec.id!r} has {n} non-missing value(s); need >= 2")

    @property
    def ids(self) -> list[str]:
        return [s.id for s in self.indicators]

    def column_index(self, indicator_id: str) -> int:
        for j, s in enumerate(self.indicators):
            if s.id == indicator_id:
                return j
        raise KeyError(indicator_id)

    def column(self, indicator_id: str) -> np.ndarray:
        return self.values[:, self.column_index(indicator_id)]

    def spec(self, indicator_id: str) -> IndicatorSpec:
        return self.indicators[self.column_index(indicator_id)]

    def for_index(self, index: str) -> list[int]:
        return [j for j, s in enumerate(self.indicators) if s.index == index]

    def subset(self, indicator_ids: Sequence[str]) -> "IndicatorTable":
        cols = [self.column_index(i) for i in indicator_ids]
        return IndicatorTable(self.countries, [self.indicators[j] for j in cols], self.values[:, cols])

    def write(self, path, spec_path) -> None:
        """Write values as CSV and metadata as the JSON sidecar; floats use repr so reloads are bit-exact."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["country", *self.ids])
            for c, row in zip(self.countries, self.values):
                w.writerow([c, *("" if math.isnan(v) else repr(float(v)) for v in row)])
        write_specs(self.indicators, spec_path)


def write_specs(specs: Iterable[IndicatorSpec], path) -> None:
    Path(path).write_text(
        json.dumps([s.to_dict() for s in specs], indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )


def load_specs(path) -> list[IndicatorSpec]:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, list):
        raise ValidationError(f"{path}: spec file must hold a JSON array")
    return [IndicatorSpec.from_dict(d) for d in raw]


def parse_cell(text: str, row: int, column: str) -> float:
    token = text.strip()
    if token in MISSING_TOKENS:
        return math.nan
    try:
        v = float(token)
    except ValueError:
        raise NonNumericCell(row, column, text) from None
    if not math.isfinite(v):
        raise NonNumericCell(row, column, text)
    return v


def load_indicator_table(path, spec_path) -> IndicatorTable:
    """Load a country x indicator CSV together with its JSON indicator metadata.

    Cells that are empty, ``NA`` or ``n/a`` become missing (NaN).  Indicator
    order follows the CSV header; spec entries without a CSV column are ignored.
    """
    specs = {s.id: s for s in load_specs(spec_path)}
    with open(path, newline="", encoding="utf-8-sig") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValidationError(f"{path}: empty CSV")
    header = [h.strip() for h in rows[0]]
    columns = header[1:]
    for col in columns:
        if col not in specs:
            raise UnknownIndicatorColumn(f"CSV column {col!r} is not described in {spec_path}")
    if len(set(columns)) != len(columns):
        raise ValidationError(f"{path}: duplicate indicator columns")

    countries, values = [], []
    for r, row in enumerate(rows[1:], start=2):
        if not any(cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise ValidationError(f"{path}: row {r} has {len(row)} cells, expected {len(header)}")
        countries.append(country_id(row[0]))
        values.append([parse_cell(cell, r, col) for cell, col in zip(row[1:], columns)])
    matrix = np.array(values, dtype=float).reshape(len(countries), len(columns))
    return IndicatorTable(tuple(countries), tuple(specs[c] for c in columns), matrix)


@dataclass(frozen=True)
class IndicatorStats:
    id: str
    missing: int
    min: float
    max: float
    constant: bool


@dataclass(frozen=True)
class ValidationReport:
    indicators: tuple[IndicatorStats, ...]
    country_missing: dict[str, int]
    missing_cells: tuple[tuple[str, str], ...]

    @property
    def constant_columns(self) -> list[str]:
        return [s.id for s in self.indicators if s.constant]

    def to_dict(self) -> dict:
        return {
            "indicators": [vars(s) for s in self.indicators],
            "country_missing": dict(self.country_missing),
            "missing_cells": [list(c) for c in self.missing_cells],
        }


def validate_table(table: IndicatorTable) -> ValidationReport:
    stats = []
    for j, spec in enumerate(table.indicators):
        col = table.values[:, j]
        present = col[~np.isnan(col)]
        lo, hi = float(present.min()), float(present.max())
        stats.append(IndicatorStats(spec.id, int(np.isnan(col).sum()), lo, hi, lo == hi))
    mask = np.isnan(table.values)
    per_country = {c: int(n) for c, n in zip(table.countries, mask.sum(axis=1))}
    cells = tuple((table.countries[i], table.indicators[j].id) for i, j in zip(*np.nonzero(mask)))
    return ValidationReport(tuple(stats), per_country, cells)


@dataclass(frozen=True)
class FoiIndices:
    """Per-country F, O, I values on the 1-7 scale; NaN where missing."""

    countries: tuple[str, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "countries", tuple(country_id(c) for c in self.countries))
        values = _readonly(self.values)
        if values.shape != (len(self.countries), 3):
            raise ValidationError(f"FOI matrix must be {len(self.countries)} x 3, got {values.shape}")
        if len(set(self.countries)) != len(self.countries):
            raise DuplicateCountry("duplicate country in FOI indices")
        present = values[~np.isnan(values)]
        if present.size and (present.min() < 1 - 1e-9 or present.max() > 7 + 1e-9):
            raise ValidationError("FOI index values must lie in [1, 7]")
        object.__setattr__(self, "values", values)

    def __getitem__(self, country: str) -> tuple[float, float, float]:
        i = self.countries.index(country_id(country))
        return tuple(float(v) for v in self.values[i])

    def __len__(self) -> int:
        return len(self.countries)

    def index(self, name: str) -> np.ndarray:
        return self.values[:, INDEX_NAMES.index(name)]

    def to_csv(self, path, decimals: int | None = None) -> None:
        def fmt(v):
            if math.isnan(v):
                return ""
            return repr(float(v)) if decimals is None else f"{v:.{decimals}f}"

        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["country", *INDEX_NAMES])
            for c, row in zip(self.countries, self.values):
                w.writerow([c, *(fmt(v) for v in row)])

    @classmethod
    def from_csv(cls, path) -> "FoiIndices":
        with open(path, newline="", encoding="utf-8-sig") as fh:
            rows = list(csv.reader(fh))
        header = [h.strip() for h in rows[0]]
        try:
            cols = [header.index(n) for n in INDEX_NAMES]
        except ValueError:
            raise ValidationError(f"{path}: header must contain columns F, O, I") from None
        countries, values = [], []
        for r, row in enumerate(rows[1:], start=2):
            if not any(cell.strip() for cell in row):
                continue
            countries.append(row[0])
            values.append([parse_cell(row[j], r, header[j]) for j in cols])
        if len(set(countries)) != len(countries):
            raise DuplicateCountry(f"{path}: duplicate country rows")
        return cls(tuple(countries), np.array(values, dtype=float).reshape(-1, 3))
