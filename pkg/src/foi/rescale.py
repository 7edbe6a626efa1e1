"""Min-max recoding onto the 1-7 scale and F/O/I index aggregation."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import DegenerateRange, NoIndicatorsForIndex, ValidationError
from .indicators import INDEX_NAMES, FoiIndices, IndicatorSpec, IndicatorTable, Polarity, _readonly

SCALE_MIN = 1.0
SCALE_MAX = 7.0


class ClampWarning(UserWarning):
    """A raw value fell outside externally supplied bounds and was clamped."""


@dataclass(frozen=True)
class RescaleParams:
    min: float
    max: float
    polarity: Polarity

    def __post_init__(self):
        object.__setattr__(self, "polarity", Polarity(self.polarity))
        if not self.max > self.min:
            raise DegenerateRange(f"max ({self.max}) must exceed min ({self.min})")


def minmax_recode(x, params: RescaleParams):
    """Map ``x`` onto [1, 7] with 7 the best value.

    Works on scalars and arrays; NaN passes through.  Values outside
    ``[params.min, params.max]`` are clamped with a :class:`ClampWarning`.
    """
    arr = np.asarray(x, dtype=float)
    outside = (arr < params.min) | (arr > params.max)
    if np.any(outside):
        warnings.warn(
            f"{int(np.sum(outside))} value(s) outside [{params.min}, {params.max}] clamped",
            ClampWarning,
            stacklevel=2,
        )
        arr = np.clip(arr, params.min, params.max)
    span = params.max - params.min
    # divide first: the ratio is exactly 0 or 1 at the bounds, so endpoints land on 1 and 7
    if params.polarity is Polarity.HIGHER_IS_BETTER:
        out = SCALE_MIN + (SCALE_MAX - SCALE_MIN) * ((arr - params.min) / span)
    else:
        out = SCALE_MIN + (SCALE_MAX - SCALE_MIN) * ((params.max - arr) / span)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class RescaledTable:
    """An :class:`IndicatorTable` after recoding; every present value is in [1, 7]."""

    countries: tuple[str, ...]
    indicators: tuple[IndicatorSpec, ...]
    values: np.ndarray = field(repr=False)
    params: tuple[RescaleParams, ...] = ()

    def __post_init__(self):
        values = _readonly(self.values)
        present = values[~np.isnan(values)]
        if present.size and (present.min() < SCALE_MIN or present.max() > SCALE_MAX):
            raise ValidationError("rescaled values must lie in [1, 7]")
        object.__setattr__(self, "values", values)


def observed_params(column: np.ndarray, spec: IndicatorSpec) -> RescaleParams:
    present = column[~np.isnan(column)]
    lo, hi = float(present.min()), float(present.max())
    if not hi > lo:
        raise DegenerateRange(f"indicator {spec.id!r} is constant ({lo}); cannot rescale")
    return RescaleParams(lo, hi, spec.polarity)


def recode_table(table: IndicatorTable, bounds: Mapping[str, RescaleParams] | None = None) -> RescaledTable:
    """Recode every column with its observed min/max unless ``bounds`` overrides it."""
    bounds = bounds or {}
    out = np.empty_like(table.values)
    used = []
    for j, spec in enumerate(table.indicators):
        col = table.values[:, j]
        params = bounds.get(spec.id) or observed_params(col, spec)
        used.append(params)
        out[:, j] = minmax_recode(col, params)
    return RescaledTable(table.countries, table.indicators, out, tuple(used))


def component_values(rescaled: RescaledTable, index: str) -> tuple[list[int], np.ndarray]:
    """Per-country mean of each component group of ``index`` (countries x groups)."""
    groups = sorted({s.component_group for s in rescaled.indicators if s.index == index})
    if not groups:
        raise NoIndicatorsForIndex(f"no indicators assigned to index {index!r}")
    comps = np.full((len(rescaled.countries), len(groups)), np.nan)
    for g_pos, g in enumerate(groups):
        cols = [j for j, s in enumerate(rescaled.indicators) if s.index == index and s.component_group == g]
        block = rescaled.values[:, cols]
        counts = (~np.isnan(block)).sum(axis=1)
        sums = np.nansum(block, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            comps[:, g_pos] = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return groups, comps


def aggregate_components(rescaled: RescaledTable, index: str) -> FoiIndices:
    """Two-stage unweighted mean: indicators within a component group, then groups.

    A country whose indicators in some group are all missing gets a missing
    index value.  Only the requested index column is filled.
    """
    if index not in INDEX_NAMES:
        raise ValidationError(f"index must be one of {INDEX_NAMES}, got {index!r}")
    _, comps = component_values(rescaled, index)
    # a NaN component poisons the mean, which is the intended rule
    index_values = comps.mean(axis=1)
    values = np.full((len(rescaled.countries), 3), np.nan)
    values[:, INDEX_NAMES.index(index)] = index_values
    return FoiIndices(rescaled.countries, values)


def compute_foi_indices(table: IndicatorTable, bounds: Mapping[str, RescaleParams] | None = None) -> FoiIndices:
    # variables outside the FOI model are only screened, never recoded
    rescaled = recode_table(table.subset([s.id for s in table.indicators if s.index]), bounds)
    values = np.column_stack([aggregate_components(rescaled, name).index(name) for name in INDEX_NAMES])
    return FoiIndices(table.countries, values)
