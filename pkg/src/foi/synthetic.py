"""Synthetic indicator tables with a known factor structure and cluster partition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cluster import ClusterAssignment
from .indicators import IndicatorSpec, IndicatorTable, Polarity

# (O, I) latent centres of the three planted groups
CENTRES = ((2.0, 2.0), (6.0, 2.0), (4.0, 6.0))
GREEN = ("CO2 productivity", "Renewable energy", "Carbon pricing coverage", "Population connected to sewerage")


@dataclass(frozen=True)
class PlantedDataset:
    table: IndicatorTable
    partition: ClusterAssignment
    green_variables: tuple[str, ...]


def _within_group_centred(x: np.ndarray, groups: np.ndarray) -> np.ndarray:
    # no between-group variance, so the F traits carry no information about the O/I groups
    out = x.copy()
    for g in np.unique(groups):
        out[groups == g] -= out[groups == g].mean()
    return out / out.std()


def planted_dataset(seed: int = 0, n: int = 38, noise: float = 0.3) -> PlantedDataset:
    """Countries split into three groups separated along O and I.

    The F-index is built from eight indicators driven by two independent
    latent traits: four "competitiveness" indicators and four "green"
    indicators, so the F-correlated block has exactly two principal factors.
    One green indicator is recorded with reversed polarity.
    """
    rng = np.random.default_rng(seed)
    groups = np.arange(n) % len(CENTRES)
    countries = tuple(f"Country {i + 1:02d}" for i in range(n))
    competitiveness = _within_group_centred(rng.standard_normal(n), groups)
    green = _within_group_centred(rng.standard_normal(n), groups)

    specs, columns = [], []

    def add(id_, label, index, group, values, polarity=Polarity.HIGHER_IS_BETTER):
        specs.append(IndicatorSpec(id_, label, polarity, index, group, "synthetic"))
        columns.append(values)

    for j in range(4):
        add(f"comp{j + 1}", f"Competitiveness {j + 1}", "F", j + 1,
            10.0 + 2.0 * competitiveness + noise * rng.standard_normal(n))
    for j, label in enumerate(GREEN):
        raw = 50.0 + 8.0 * green + 4.0 * noise * rng.standard_normal(n)
        if label == "CO2 productivity":
            # recorded as CO2 intensity: lower is better
            add("co2", "CO2 intensity", "F", 5 + j, 100.0 - raw, Polarity.LOWER_IS_BETTER)
        else:
            add(f"green{j + 1}", label, "F", 5 + j, raw)
    centres = np.array(CENTRES)[groups]
    for j in range(3):
        add(f"out{j + 1}", f"Outside {j + 1}", "O", j + 1, centres[:, 0] + noise * rng.standard_normal(n))
    for j in range(3):
        add(f"in{j + 1}", f"Inside {j + 1}", "I", j + 1, centres[:, 1] + noise * rng.standard_normal(n))

    table = IndicatorTable(countries, tuple(specs), np.column_stack(columns))
    partition = ClusterAssignment(len(CENTRES), {c: int(g) + 1 for c, g in zip(countries, groups)})
    green_vars = tuple(s.label for s in specs if s.label in GREEN) + ("CO2 intensity",)
    return PlantedDataset(table, partition, green_vars)
