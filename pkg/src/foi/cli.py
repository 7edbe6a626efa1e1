"""``foi`` command-line interface.

Exit codes: 0 success, 1 validation error (bad input), 2 internal error.
Every subcommand accepts ``--config <json>`` whose keys (argument names with
underscores) replace the built-in defaults; flags given explicitly on the
command line still win.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cluster import ClusterAssignment, agglomerate, cut_k, distance_matrix
from .errors import FoiError, StageError, ValidationError
from .fixture import fixture_bytes, load_foi_fixture
from .indicators import INDEX_NAMES, FoiIndices, IndicatorSpec, Polarity, load_indicator_table, write_specs
from .pipeline import (
    PipelineConfig,
    dump_json,
    fixture_report,
    name_clusters,
    reproduce_tables,
    run_full_pipeline,
    screen_all,
)
from .rescale import compute_foi_indices
from .stats import fit_factor_model

log = logging.getLogger("foi")


def _out_file(out: str | None, default_name: str, suffix: str) -> Path:
    """``--out`` may name a file (by suffix) or a directory."""
    path = Path(out or ".")
    if path.suffix == suffix:
        path.parent.mkdir(parents=True, exist_ok=True)
        return path
    path.mkdir(parents=True, exist_ok=True)
    return path / default_name


def _out_dir(out: str | None) -> Path:
    path = Path(out or ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _parse_m(text):
    if text is None or str(text).lower() == "kaiser":
        return None
    return int(text)


def _read_vars(text: str) -> list[str]:
    path = Path(text.lstrip("@"))
    if text.startswith("@") or (path.suffix in (".txt", ".json") and path.exists()):
        if path.suffix == ".json":
            return list(json.loads(path.read_text(encoding="utf-8")))
        return [line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    return [v.strip() for v in text.split(",") if v.strip()]


def _load_indices(args) -> FoiIndices:
    if getattr(args, "indices", None):
        return FoiIndices.from_csv(args.indices)
    if getattr(args, "data", None) and getattr(args, "spec", None):
        return compute_foi_indices(load_indicator_table(args.data, args.spec))
    return load_foi_fixture().indices


# -- subcommands ----------------------------------------------------------------

def cmd_indices(args) -> int:
    table = load_indicator_table(args.data, args.spec)
    indices = compute_foi_indices(table)
    path = _out_file(args.out, "indices.csv", ".csv")
    indices.to_csv(path)
    print(path)
    return 0


def cmd_screen(args) -> int:
    table = load_indicator_table(args.data, args.spec)
    indices = FoiIndices.from_csv(args.indices) if args.indices else compute_foi_indices(table)
    results = screen_all(table, indices, args.alpha, [args.target])[args.target]
    out = _out_dir(args.out)
    path = out / f"screen_{args.target}.json"
    path.write_text(dump_json({"target": args.target, "alpha": args.alpha,
                               "results": [r.to_dict() for r in results]}), encoding="utf-8")
    for r in results:
        mark = "*" if r.selected else " "
        stat = "undefined (" + r.reason + ")" if r.r is None else f"r={r.r:+.3f} p={r.p_value:.4f} n={r.n}"
        print(f"{mark} {r.variable}: {stat}")
    print(path)
    return 0


def cmd_factor(args) -> int:
    table = load_indicator_table(args.data, args.spec)
    variables = _read_vars(args.vars) if args.vars else table.ids
    sub = table.subset(variables)
    model = fit_factor_model(sub.values, variables, table.countries, _parse_m(args.m), rotate=args.rotate == "varimax")
    out = _out_dir(args.out)
    (out / "factor.json").write_text(dump_json(model.to_dict()), encoding="utf-8")
    lines = ["country," + ",".join(f"factor_{j + 1}" for j in range(model.m))]
    for c, row in zip(model.countries, model.scores):
        lines.append(c + "," + ",".join("" if np.isnan(v) else repr(float(v)) for v in row))
    (out / "scores.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    kmo = "undefined" if model.kmo is None else f"{model.kmo:.3f}"
    print(f"factors={model.m} explained={model.explained_variance_fraction:.3f} kmo={kmo} "
          f"sweeps={model.rotation_sweeps}")
    return 0


def cmd_cluster(args) -> int:
    indices = _load_indices(args)
    keep = ~np.isnan(indices.values).any(axis=1)
    labels = [c for c, ok in zip(indices.countries, keep) if ok]
    dendro = agglomerate(distance_matrix(indices.values[keep], labels, args.metric), args.linkage)
    assignment = name_clusters(cut_k(dendro, args.k), load_foi_fixture().reference_partition)
    path = _out_file(args.out, "clusters.json", ".json")
    path.write_text(dump_json(assignment.to_dict()), encoding="utf-8")
    stem = path.with_suffix("")
    Path(f"{stem}.dendrogram.json").write_text(dump_json(dendro.to_dict()), encoding="utf-8")
    Path(f"{stem}.nwk").write_text(dendro.to_newick() + "\n", encoding="utf-8")
    for g, members in assignment.clusters().items():
        print(f"{g:>3} {assignment.names.get(g, '')}: {', '.join(members)}")
    return 0


def _config_from_args(args) -> PipelineConfig:
    base = getattr(args, "extra_config", {})
    overrides = {
        "data": args.data, "spec": args.spec, "out_dir": args.out, "alpha": args.alpha,
        "m": _parse_m(args.m), "k": args.k, "linkage": args.linkage, "metric": args.metric,
        "seed": args.seed, "resume": args.resume,
    }
    if args.out is None:
        overrides.pop("out_dir")
    return PipelineConfig(**{**base, **overrides})


def cmd_run(args) -> int:
    config = _config_from_args(args)
    fixture = load_foi_fixture() if args.reference_names else None
    report = run_full_pipeline(config, fixture)
    for stage, status in report.stage_status.items():
        print(f"{stage}: {status}")
    print(Path(config.out_dir) / "report.md")
    return 0


def cmd_reproduce(args) -> int:
    fixture = load_foi_fixture()
    result = reproduce_tables(fixture, args.k)
    out = _out_dir(args.out)
    (out / "reproduction.json").write_text(dump_json(result.to_dict()), encoding="utf-8")
    report = fixture_report(fixture, result)
    from .report import emit_report
    from .svg import plot_clusters_svg

    emit_report(report, ("markdown", "json", "csv"), out)
    plot_clusters_svg(fixture.indices, report.assignment, out / "clusters.svg")
    for c in result.configs:
        print(f"{c.linkage.value}/{c.metric.value}: ARI={c.ari:.4f} exact={c.exact} "
              f"singletons={', '.join(sorted(c.singletons))}")
        for d in c.diff:
            print(f"    {d.country}: published with [{', '.join(d.reference_members)}], "
                  f"reproduced with [{', '.join(d.reproduced_members)}]")
    best = result.best
    print(f"best: {best.linkage.value}/{best.metric.value} ARI={best.ari:.4f}")
    return 0


def cmd_fetch(args) -> int:
    from .oecd import SeriesQuery, fetch_series, series_to_indicator_column

    start, end = SeriesQuery.parse_time(args.time)
    query = SeriesQuery(args.dataset, args.filter, start, end, args.country_dimension)
    series = fetch_series(query, args.endpoint, args.cache_dir)
    year = args.year or end
    column = series_to_indicator_column(series, year)
    out = _out_dir(args.out)
    ind = args.indicator_id or args.dataset.lower()
    with open(out / f"{ind}.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write(f"country,{ind}\n")
        for country, v in column.values.items():
            fh.write(f"{country},{'' if v is None else repr(v)}\n")
    spec = IndicatorSpec(ind, args.label or ind, Polarity(args.polarity), args.index,
                         args.component_group if args.index else None,
                         f"OECD {args.dataset} {args.filter} {args.time}")
    write_specs([spec], out / f"{ind}.spec.json")
    print(f"{len(series.observations)} observations ({'cache' if series.from_cache else 'network'}); "
          f"fallback to {year - 1}: {len(column.fallback)}; missing: {len(column.missing)}")
    return 0


def cmd_export_fixture(args) -> int:
    fixture = load_foi_fixture()
    out = _out_dir(args.out)
    (out / "foi_fixture.json").write_bytes(fixture_bytes())
    fixture.indices.to_csv(out / "fixture_indices.csv", decimals=2)
    (out / "fixture_clusters.json").write_text(dump_json(fixture.reference_partition.to_dict()), encoding="utf-8")
    print(out)
    return 0


def cmd_plot(args) -> int:
    from .svg import plot_clusters_svg

    indices = _load_indices(args)
    if args.clusters:
        assignment = ClusterAssignment.from_dict(json.loads(Path(args.clusters).read_text(encoding="utf-8")))
    else:
        keep = ~np.isnan(indices.values).any(axis=1)
        labels = [c for c, ok in zip(indices.countries, keep) if ok]
        dendro = agglomerate(distance_matrix(indices.values[keep], labels, args.metric), args.linkage)
        assignment = name_clusters(cut_k(dendro, args.k), load_foi_fixture().reference_partition)
    path = plot_clusters_svg(indices, assignment, _out_file(args.out, "clusters.svg", ".svg"))
    print(path)
    return 0


# -- parser ---------------------------------------------------------------------

def _cluster_opts(p):
    p.add_argument("--k", type=int, default=11)
    p.add_argument("--linkage", choices=["average", "single", "complete"], default="average")
    p.add_argument("--metric", choices=["sqeuclidean", "euclidean"], default="sqeuclidean")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="foi", description="FOI country-development analysis")
    parser.add_argument("--version", action="version", version=f"foi {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="JSON file whose keys replace default argument values")
        p.add_argument("--out", help="output directory (or file, where noted)")
        p.set_defaults(func=func)
        return p

    p = add("indices", cmd_indices, "recode indicators and compute F, O, I indices")
    p.add_argument("--data", required=True)
    p.add_argument("--spec", required=True)

    p = add("screen", cmd_screen, "correlate every variable with one index")
    p.add_argument("--data", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--target", choices=INDEX_NAMES, required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--indices", help="precomputed indices CSV (default: compute from --data)")

    p = add("factor", cmd_factor, "principal-component factor analysis of selected variables")
    p.add_argument("--data", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--vars", help="comma-separated ids, or a .txt/.json file (prefix @ to force)")
    p.add_argument("--m", default="2", help="factor count or 'kaiser'")
    p.add_argument("--rotate", choices=["varimax", "none"], default="varimax")

    p = add("cluster", cmd_cluster, "hierarchical clustering of F/O/I vectors")
    p.add_argument("--indices", help="indices CSV (default: bundled published indices)")
    _cluster_opts(p)

    p = add("run", cmd_run, "full pipeline")
    p.add_argument("--data")
    p.add_argument("--spec")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--m", default="2", help="factor count or 'kaiser'")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resume", action="store_true", help="reuse intact stage outputs in --out")
    p.add_argument("--reference-names", action="store_true", help="name clusters matching the published partition")
    _cluster_opts(p)

    p = add("reproduce", cmd_reproduce, "recluster the published indices and compare with the published partition")
    p.add_argument("--k", type=int, default=11)

    p = add("fetch", cmd_fetch, "download one OECD SDMX-JSON series into ingestion format")
    p.add_argument("--dataset", required=True)
    p.add_argument("--filter", default="all")
    p.add_argument("--time", default="2019:2020")
    p.add_argument("--year", type=int)
    p.add_argument("--country-dimension", default="LOCATION")
    p.add_argument("--endpoint")
    p.add_argument("--cache-dir", default=".foi-cache")
    p.add_argument("--indicator-id")
    p.add_argument("--label")
    p.add_argument("--polarity", choices=[p_.value for p_ in Polarity], default="HigherIsBetter")
    p.add_argument("--index", choices=INDEX_NAMES)
    p.add_argument("--component-group", type=int, default=1)

    add("export-fixture", cmd_export_fixture, "write the bundled published tables to --out")

    p = add("plot", cmd_plot, "SVG scatter of clusters along F/O and F/I")
    p.add_argument("--indices", help="indices CSV (default: bundled published indices)")
    p.add_argument("--clusters", help="clusters JSON (default: cluster the indices)")
    _cluster_opts(p)
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        overrides = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if not isinstance(overrides, dict):
            raise ValidationError("--config must hold a JSON object")
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in subparser._actions}
        if args.command == "run":
            known |= {"out_dir"}
            extra = {k: v for k, v in overrides.items() if k not in known and k in PipelineConfig.__dataclass_fields__}
        else:
            extra = {}
        unknown = set(overrides) - known - set(extra)
        if unknown:
            raise ValidationError(f"unknown config keys for {args.command}: {sorted(unknown)}")
        if "out_dir" in overrides:
            overrides["out"] = overrides.pop("out_dir")
        overrides = {k: v for k, v in overrides.items() if k not in extra}
        # config values become defaults, so flags typed on the command line override them
        subparser.set_defaults(**overrides, extra_config=extra)
        for action in subparser._actions:
            if action.dest in overrides:
                action.required = False
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; those are input errors here
        return 0 if exc.code in (0, None) else 1
    except ValidationError as exc:
        print(f"foi: error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"foi: error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except StageError as exc:
        print(f"foi: error: {exc}", file=sys.stderr)
        return 1 if isinstance(exc.cause, ValidationError) else 2
    except ValidationError as exc:
        print(f"foi: error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"foi: error: {exc}", file=sys.stderr)
        return 1
    except FoiError as exc:
        print(f"foi: internal error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.debug("unhandled", exc_info=True)
        print(f"foi: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
