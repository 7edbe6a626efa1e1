"""Bundled transcription of the published FOI tables for the 38 OECD countries."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .cluster import ClusterAssignment
from .errors import FixtureCorrupt
from .indicators import FoiIndices

FIXTURE_SHA256 = "2e943d01ed418d7f72380bb2537a5a828a3db8c5359a0db8f73c852b7b985258"


@dataclass(frozen=True)
class LoadingRow:
    factor: str
    variable: str
    loadings: tuple[float, float]
    printed: tuple[str, str]


@dataclass(frozen=True)
class FoiFixture:
    indices: FoiIndices
    reference_partition: ClusterAssignment
    reference_gg_means: dict[str, float | None]
    reference_loadings: tuple[LoadingRow, ...]
    loadings_notes: tuple[str, ...]
    raw: dict

    @property
    def cluster_names(self) -> dict[int, str]:
        return dict(self.reference_partition.names)


def fixture_bytes(path=None) -> bytes:
    if path is not None:
        return Path(path).read_bytes()
    return resources.files("foi").joinpath("data/foi_fixture.json").read_bytes()


def load_foi_fixture(path=None) -> FoiFixture:
    """Load the embedded fixture, refusing it when the SHA-256 does not match."""
    blob = fixture_bytes(path)
    digest = hashlib.sha256(blob).hexdigest()
    if digest != FIXTURE_SHA256:
        raise FixtureCorrupt(f"fixture checksum mismatch: {digest}")
    raw = json.loads(blob.decode("utf-8"))

    rows = raw["indices"]
    indices = FoiIndices(
        tuple(r["country"] for r in rows),
        np.array([[float(r[k]) for k in ("F", "O", "I")] for r in rows]),
    )
    clusters = sorted(raw["clusters"], key=lambda c: c["nr"])
    partition = ClusterAssignment.from_groups(
        [c["members"] for c in clusters], [c["name"] for c in clusters]
    )
    gg = {c["name"]: None if c["gg_score"] == "n/a" else float(c["gg_score"]) for c in clusters}
    loadings = tuple(
        LoadingRow(
            r["factor"],
            r["variable"],
            (float(r["component_1"]), float(r["component_2"])),
            (r["component_1"], r["component_2"]),
        )
        for r in raw["loadings"]
    )
    if len(indices) != 38 or set(partition.membership) != set(indices.countries):
        raise FixtureCorrupt("fixture countries and reference partition disagree")
    return FoiFixture(indices, partition, gg, loadings, tuple(raw["loadings_notes"]), raw)
