"""End-to-end FOI workflow and the published-table reproduction harness."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from . import __version__
from .cluster import (
    ClusterAssignment,
    ClusterMean,
    Dendrogram,
    Linkage,
    Metric,
    adjusted_rand_index,
    agglomerate,
    cluster_means,
    cut_k,
    distance_matrix,
)
from .errors import FoiError, StageError, ValidationError
from .fixture import FoiFixture
from .indicators import INDEX_NAMES, FoiIndices, IndicatorTable, load_indicator_table, validate_table
from .rescale import compute_foi_indices
from .stats import FactorModel, ScreenResult, fit_factor_model, screen_variables

log = logging.getLogger(__name__)

GREEN_VARIABLES = (
    "Production-based CO2 productivity",
    "Emissions priced above EUR 30 per ton of CO2",
    "Renewable energy",
    "Population connected to public sewerage",
)
GREEN_ANCHOR = "Renewable energy"
GREEN_FACTOR_NAME = "Green growth"


@dataclass
class PipelineConfig:
    data: str | None = None
    spec: str | None = None
    out_dir: str = "foi-out"
    alpha: float = 0.05
    m: int | None = 2
    k: int = 11
    linkage: str = "average"
    metric: str = "sqeuclidean"
    seed: int = 0
    factor_indices: tuple[str, ...] = INDEX_NAMES
    include: dict[str, list[str]] = field(default_factory=dict)
    exclude: dict[str, list[str]] = field(default_factory=dict)
    green_index: str = "F"
    green_variables: tuple[str, ...] = GREEN_VARIABLES
    green_anchor: str = GREEN_ANCHOR
    resume: bool = False

    def __post_init__(self):
        if isinstance(self.m, str):
            self.m = None if self.m.lower() == "kaiser" else int(self.m)
        self.factor_indices = tuple(self.factor_indices)
        self.green_variables = tuple(self.green_variables)
        self.validate()

    def validate(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.m is not None and self.m < 1:
            raise ValidationError(f"m must be >= 1 or 'kaiser', got {self.m}")
        if self.k < 1:
            raise ValidationError(f"k must be >= 1, got {self.k}")
        Linkage(self.linkage)
        Metric(self.metric)
        for idx in (*self.factor_indices, self.green_index, *self.include, *self.exclude):
            if idx not in INDEX_NAMES:
                raise ValidationError(f"unknown index {idx!r}")

    @classmethod
    def from_dict(cls, d: Mapping) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "PipelineConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def provenance_dict(self) -> dict:
        """Settings that shape the results; output location and resume mode excluded."""
        d = asdict(self)
        for key in ("out_dir", "resume"):
            d.pop(key)
        for key in ("data", "spec"):
            if d[key] is not None:
                d[key] = Path(d[key]).name
        d["m"] = "kaiser" if self.m is None else self.m
        d["factor_indices"] = list(self.factor_indices)
        d["green_variables"] = list(self.green_variables)
        return d


@dataclass
class RunReport:
    indices: FoiIndices
    screens: dict[str, list[ScreenResult]] = field(default_factory=dict)
    factors: dict[str, FactorModel] = field(default_factory=dict)
    factor_notes: dict[str, str] = field(default_factory=dict)
    green_factor: tuple[str, int] | None = None
    dendrogram: Dendrogram | None = None
    assignment: ClusterAssignment | None = None
    cluster_factor_means: dict[str, dict[int, ClusterMean]] = field(default_factory=dict)
    green_means: dict[int, ClusterMean] | None = None
    loadings_tables: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    stage_status: dict[str, str] = field(default_factory=dict)

    def factor_label(self, index: str, j: int) -> str:
        if self.green_factor == (index, j):
            return GREEN_FACTOR_NAME
        return f"{index}-factor {j + 1}"


# -- persistence helpers ----------------------------------------------------

def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, ensure_ascii=False, allow_nan=False) + "\n"


def _hash_obj(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode("utf-8")).hexdigest()


class StageRunner:
    """Runs named stages, persisting outputs and skipping those whose inputs and files are intact.

    A stage's key hashes the run settings together with the digests of all
    earlier stage outputs, so a recomputed upstream stage with different
    output invalidates everything after it.
    """

    def __init__(self, out_dir: Path, base_key: str, resume: bool):
        self.out_dir = out_dir
        self.manifest_path = out_dir / "manifest.json"
        self.resume = resume
        self.previous = {}
        if resume and self.manifest_path.exists():
            try:
                self.previous = json.loads(self.manifest_path.read_text(encoding="utf-8"))["stages"]
            except (ValueError, KeyError):
                self.previous = {}
        self.chain = [base_key]
        self.stages: dict[str, dict] = {}
        self.status: dict[str, str] = {}

    def run(self, name: str, compute: Callable[[], dict[str, str]], load: Callable[[], object], build: Callable[[], object]):
        """``compute`` produces {filename: text}; ``load`` reads them back; ``build`` returns the in-memory result.

        ``build`` is called after ``compute``; ``load`` only on a cache hit.
        """
        key = _hash_obj([name, *self.chain])
        prior = self.previous.get(name)
        result = None
        if prior and prior.get("key") == key and self._intact(prior["files"]):
            try:
                result = load()
                files = prior["files"]
                self.status[name] = "cached"
            except (FoiError, ValueError, KeyError, OSError):
                result = None
        if result is None:
            try:
                outputs = compute()
                result = build()
            except FoiError as exc:
                self._write_manifest()
                raise StageError(name, exc) from exc
            files = {}
            for fname, text in outputs.items():
                write_atomic(self.out_dir / fname, text)
                files[fname] = hashlib.sha256(text.encode("utf-8")).hexdigest()
            self.status[name] = "computed"
        self.stages[name] = {"key": key, "files": files}
        self.chain.append(_hash_obj(files))
        self._write_manifest()
        return result

    def _intact(self, files: Mapping[str, str]) -> bool:
        for fname, digest in files.items():
            path = self.out_dir / fname
            if not path.exists() or sha256_file(path) != digest:
                return False
        return True

    def _write_manifest(self) -> None:
        write_atomic(self.manifest_path, dump_json({"stages": self.stages}))


# -- stage logic --------------------------------------------------------------

def screen_all(table: IndicatorTable, indices: FoiIndices, alpha: float, targets: Sequence[str]) -> dict[str, list[ScreenResult]]:
    return {
        idx: screen_variables(table.values, indices.index(idx), table.ids, alpha)
        for idx in targets
    }


def _matches(spec, names: Sequence[str]) -> bool:
    wanted = {n.casefold() for n in names}
    return spec.id.casefold() in wanted or spec.label.casefold() in wanted


def factor_variables(table: IndicatorTable, screen: Sequence[ScreenResult], include=(), exclude=()) -> list[str]:
    selected = {r.variable for r in screen if r.selected}
    out = []
    for spec in table.indicators:
        if _matches(spec, exclude):
            continue
        if spec.id in selected or _matches(spec, include):
            out.append(spec.id)
    return out


def identify_green_factor(model: FactorModel, table: IndicatorTable, green_variables) -> int | None:
    """Index of the factor with the largest absolute loading mass on the green variables."""
    rows = [i for i, v in enumerate(model.variables) if _matches(table.spec(v), green_variables)]
    if not rows:
        return None
    mass = np.abs(model.loadings[rows]).sum(axis=0)
    return int(np.argmax(mass))


def orient_green_factor(model: FactorModel, j: int, table: IndicatorTable, green_variables, anchor: str) -> None:
    """Flip factor ``j`` so it loads positively on the anchor variable (or on the green block)."""
    anchor_rows = [i for i, v in enumerate(model.variables) if _matches(table.spec(v), [anchor])]
    rows = anchor_rows or [i for i, v in enumerate(model.variables) if _matches(table.spec(v), green_variables)]
    if rows and model.loadings[rows, j].sum() < 0:
        model.flip_factor(j)


def _scores_csv(model: FactorModel, labels: Sequence[str]) -> str:
    lines = ["country," + ",".join(labels)]
    for c, row in zip(model.countries, model.scores):
        lines.append(c + "," + ",".join("" if math.isnan(v) else repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def _means_to_json(means: Mapping[int, ClusterMean]) -> list:
    return [{"cluster": g, "mean": m.mean, "n_used": m.n_used} for g, m in means.items()]


def _means_from_json(items) -> dict[int, ClusterMean]:
    return {d["cluster"]: ClusterMean(d["mean"], d["n_used"]) for d in items}


def name_clusters(assignment: ClusterAssignment, reference: ClusterAssignment | None) -> ClusterAssignment:
    """Attach reference names to clusters whose membership matches a reference cluster exactly."""
    if reference is None:
        return assignment
    ref = {frozenset(m): reference.names.get(g) for g, m in reference.clusters().items()}
    names = {}
    for g, members in assignment.clusters().items():
        name = ref.get(frozenset(members))
        if name:
            names[g] = name
    return ClusterAssignment(assignment.k, dict(assignment.membership), names)


def run_full_pipeline(config: PipelineConfig, reference: FoiFixture | None = None) -> RunReport:
    """Load, recode, index, screen, factor, cluster and report, persisting each stage under ``config.out_dir``."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not config.data or not config.spec:
        raise ValidationError("config needs both 'data' and 'spec' paths")
    inputs = {
        Path(config.data).name: sha256_file(config.data),
        Path(config.spec).name: sha256_file(config.spec),
    }
    provenance = {
        "software": {"package": "foi", "version": __version__},
        "config": config.provenance_dict(),
        "inputs": inputs,
    }
    runner = StageRunner(out, _hash_obj(provenance), config.resume)

    try:
        table = load_indicator_table(config.data, config.spec)
    except FoiError as exc:
        raise StageError("load", exc) from exc
    runner.run(
        "load",
        lambda: {"validation.json": dump_json(validate_table(table).to_dict())},
        lambda: table,
        lambda: table,
    )

    state: dict = {}

    def compute_indices():
        state["indices"] = compute_foi_indices(table)
        path = out / "indices.csv"
        state["indices"].to_csv(path)
        return {"indices.csv": path.read_text(encoding="utf-8")}

    indices = runner.run(
        "indices", compute_indices, lambda: FoiIndices.from_csv(out / "indices.csv"), lambda: state["indices"]
    )

    targets = tuple(dict.fromkeys((*config.factor_indices, config.green_index)))

    def compute_screen():
        state["screens"] = screen_all(table, indices, config.alpha, targets)
        return {"screen.json": dump_json({k: [r.to_dict() for r in v] for k, v in state["screens"].items()})}

    def load_screen():
        raw = json.loads((out / "screen.json").read_text(encoding="utf-8"))
        return {k: [ScreenResult.from_dict(r) for r in v] for k, v in raw.items()}

    screens = runner.run("screen", compute_screen, load_screen, lambda: state["screens"])

    def compute_factor():
        factors, notes = {}, {}
        green = None
        for idx in config.factor_indices:
            variables = factor_variables(
                table, screens[idx], config.include.get(idx, ()), config.exclude.get(idx, ())
            )
            need = max(2, config.m or 2)
            if len(variables) < need:
                notes[idx] = f"{len(variables)} variable(s) passed screening; at least {need} needed"
                continue
            model = fit_factor_model(table.subset(variables).values, variables, table.countries, config.m)
            if idx == config.green_index:
                j = identify_green_factor(model, table, config.green_variables)
                if j is not None:
                    orient_green_factor(model, j, table, config.green_variables, config.green_anchor)
                    green = (idx, j)
            factors[idx] = model
        state["factor"] = (factors, notes, green)
        files = {
            "factors.json": dump_json({
                "models": {k: m.to_dict() for k, m in factors.items()},
                "notes": notes,
                "green_factor": list(green) if green else None,
            })
        }
        for idx, model in factors.items():
            labels = [f"{idx}{j + 1}" for j in range(model.m)]
            files[f"scores_{idx}.csv"] = _scores_csv(model, labels)
        return files

    def load_factor():
        raw = json.loads((out / "factors.json").read_text(encoding="utf-8"))
        factors = {k: FactorModel.from_dict(v) for k, v in raw["models"].items()}
        green = tuple(raw["green_factor"]) if raw["green_factor"] else None
        return factors, raw["notes"], green

    factors, notes, green = runner.run("factor", compute_factor, load_factor, lambda: state["factor"])

    def compute_cluster():
        complete = ~np.isnan(indices.values).any(axis=1)
        labels = [c for c, ok in zip(indices.countries, complete) if ok]
        d = distance_matrix(indices.values[complete], labels, config.metric)
        dendro = agglomerate(d, config.linkage)
        assignment = name_clusters(cut_k(dendro, min(config.k, len(labels))), reference and reference.reference_partition)
        state["cluster"] = (dendro, assignment)
        return {
            "dendrogram.json": dump_json(dendro.to_dict()),
            "dendrogram.nwk": dendro.to_newick() + "\n",
            "clusters.json": dump_json(assignment.to_dict()),
        }

    def load_cluster():
        dendro = Dendrogram.from_dict(json.loads((out / "dendrogram.json").read_text(encoding="utf-8")))
        assignment = ClusterAssignment.from_dict(json.loads((out / "clusters.json").read_text(encoding="utf-8")))
        return dendro, assignment

    dendro, assignment = runner.run("cluster", compute_cluster, load_cluster, lambda: state["cluster"])

    report = RunReport(
        indices=indices,
        screens=screens,
        factors=factors,
        factor_notes=notes,
        green_factor=green,
        dendrogram=dendro,
        assignment=assignment,
        provenance=provenance,
    )
    for idx, model in factors.items():
        for j in range(model.m):
            values = {c: float(v) for c, v in zip(model.countries, model.scores[:, j])}
            report.cluster_factor_means[report.factor_label(idx, j)] = cluster_means(assignment, values)
    if green:
        report.green_means = report.cluster_factor_means[GREEN_FACTOR_NAME]

    from .report import emit_report
    from .svg import plot_clusters_svg

    def compute_report():
        with tempfile.TemporaryDirectory() as tmp:
            paths = emit_report(report, ("json", "markdown", "csv"), tmp)
            svg = plot_clusters_svg(indices, assignment, Path(tmp) / "clusters.svg")
            return {p.name: p.read_text(encoding="utf-8") for p in (*paths, svg)}

    runner.run("report", compute_report, lambda: True, lambda: True)
    report.stage_status = dict(runner.status)
    return report


# -- reproduction harness -------------------------------------------------------

@dataclass(frozen=True)
class CountryDiff:
    country: str
    reference_cluster: str
    reference_members: tuple[str, ...]
    reproduced_members: tuple[str, ...]


@dataclass(frozen=True)
class ReproductionConfig:
    metric: Metric
    linkage: Linkage
    assignment: ClusterAssignment
    ari: float
    exact: bool
    singletons: frozenset[str]
    diff: tuple[CountryDiff, ...]

    def to_dict(self) -> dict:
        return {
            "metric": self.metric.value,
            "linkage": self.linkage.value,
            "ari": self.ari,
            "exact": self.exact,
            "singletons": sorted(self.singletons),
            "assignment": self.assignment.to_dict(),
            "diff": [asdict(d) for d in self.diff],
        }


@dataclass(frozen=True)
class ReproductionResult:
    configs: tuple[ReproductionConfig, ...]
    k: int

    @property
    def best(self) -> ReproductionConfig:
        return max(self.configs, key=lambda c: (c.ari, c.exact))

    def to_dict(self) -> dict:
        best = self.best
        return {
            "k": self.k,
            "best": {"metric": best.metric.value, "linkage": best.linkage.value, "ari": best.ari, "exact": best.exact},
            "configs": [c.to_dict() for c in self.configs],
        }


def reproduce_tables(
    fixture: FoiFixture,
    k: int = 11,
    configs: Sequence[tuple[str, str]] = (("sqeuclidean", "average"), ("euclidean", "average")),
) -> ReproductionResult:
    """Cluster the published F/O/I vectors and compare each configuration with the published partition."""
    ref = fixture.reference_partition
    results = []
    for metric, linkage in configs:
        d = distance_matrix(fixture.indices.values, fixture.indices.countries, metric)
        assignment = name_clusters(cut_k(agglomerate(d, linkage), k), ref)
        ari = adjusted_rand_index(assignment, ref)
        diffs = []
        for country in fixture.indices.countries:
            want = tuple(sorted(ref.cluster_of(country)))
            got = tuple(sorted(assignment.cluster_of(country)))
            if want != got:
                diffs.append(CountryDiff(country, ref.names[ref.membership[country]], want, got))
        results.append(
            ReproductionConfig(
                Metric(metric), Linkage(linkage), assignment, ari, not diffs, frozenset(assignment.singletons()), tuple(diffs)
            )
        )
    return ReproductionResult(tuple(results), k)


def fixture_report(fixture: FoiFixture, reproduction: ReproductionResult | None = None) -> RunReport:
    """Report built from the published tables: indices, best reproduced partition, published GG means."""
    from .report import LoadingsTable

    reproduction = reproduction or reproduce_tables(fixture)
    assignment = reproduction.best.assignment
    gg = {}
    for g in assignment.clusters():
        name = assignment.names.get(g)
        if name in fixture.reference_gg_means:
            mean = fixture.reference_gg_means[name]
            gg[g] = ClusterMean(mean, 0 if mean is None else len(assignment.members(g)))
    table = LoadingsTable(
        title="The two factors of the Future potential (rotated components matrix)",
        columns=("1", "2"),
        rows=tuple((r.factor, r.variable, r.loadings) for r in fixture.reference_loadings),
        notes=fixture.loadings_notes,
        printed=tuple(r.printed for r in fixture.reference_loadings),
    )
    return RunReport(
        indices=fixture.indices,
        assignment=assignment,
        green_means=gg or None,
        loadings_tables=[table],
        provenance={
            "software": {"package": "foi", "version": __version__},
            "source": "bundled fixture",
            "reproduction": {"metric": reproduction.best.metric.value, "linkage": reproduction.best.linkage.value,
                             "k": reproduction.k, "ari": reproduction.best.ari},
        },
    )
