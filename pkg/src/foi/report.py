"""Render a :class:`RunReport` as JSON, CSV tables and Markdown."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import FoiError
from .indicators import INDEX_NAMES

EXTRACTION_NOTE = "Extraction Method: Principal Component Analysis."
ROTATION_NOTE = "Rotation Method: Varimax with Kaiser Normalization."


class ReportIoError(FoiError):
    pass


@dataclass(frozen=True)
class LoadingsTable:
    title: str
    columns: tuple[str, ...]
    rows: tuple[tuple[str, str, tuple[float, ...]], ...]
    notes: tuple[str, ...] = ()
    printed: tuple[tuple[str, ...], ...] | None = None


def fmt2(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "n/a"
    return f"{v:.2f}"


def fmt_loading(v: float) -> str:
    return f"{v:.3f}"


def loadings_table(report, index: str) -> LoadingsTable:
    """Table-3-style layout: variables grouped under the factor they load on most."""
    model = report.factors[index]
    table_rows = []
    loadings = model.loadings
    assigned = np.argmax(np.abs(loadings), axis=1)
    for j in range(model.m):
        rows = [i for i in range(len(model.variables)) if assigned[i] == j]
        rows.sort(key=lambda i: -loadings[i, j])
        for i in rows:
            table_rows.append((report.factor_label(index, j), model.variables[i], tuple(float(x) for x in loadings[i])))
    notes = [EXTRACTION_NOTE]
    if model.loadings_rotated is not None:
        notes.append(ROTATION_NOTE)
        notes.append(f"Rotation converged in {model.rotation_sweeps} iterations.")
    if model.kmo is not None:
        notes.append(f"KMO: {model.kmo:.2f}.")
    notes.append(f"Explained variance: {100 * model.explained_variance_fraction:.1f}%.")
    title = f"Factors of the {index}-index ({'rotated' if model.loadings_rotated is not None else 'unrotated'} components matrix)"
    return LoadingsTable(title, tuple(str(j + 1) for j in range(model.m)), tuple(table_rows), tuple(notes))


def _tables(report) -> list[LoadingsTable]:
    return list(report.loadings_tables) + [loadings_table(report, idx) for idx in report.factors]


def _cluster_rows(report):
    out = []
    if report.assignment is None:
        return out
    for g, members in report.assignment.clusters().items():
        name = report.assignment.names.get(g, f"Cluster {g}")
        gg = None
        if report.green_means is not None and g in report.green_means:
            gg = report.green_means[g].mean
        out.append((g, name, gg, members))
    return out


def _markdown_table(header: Sequence[str], rows: Iterable[Sequence[str]]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(r) + " |" for r in rows]
    return lines


def render_markdown(report) -> str:
    lines = ["# FOI analysis report", ""]
    lines += ["## F-, O- and I-index", ""]
    lines += _markdown_table(
        ["Country", "F-index", "O-index", "I-index"],
        ([c, *(fmt2(v) for v in row)] for c, row in zip(report.indices.countries, report.indices.values)),
    )
    lines.append("")

    for table in _tables(report):
        lines += [f"## {table.title}", ""]
        body = []
        previous = None
        for r, (factor, variable, values) in enumerate(table.rows):
            shown = table.printed[r] if table.printed else tuple(fmt_loading(v) for v in values)
            body.append([factor if factor != previous else "", variable, *shown])
            previous = factor
        lines += _markdown_table(["Factor", "Variable", *table.columns], body)
        lines.append("")
        lines += [f"{note}" for note in table.notes]
        lines.append("")

    notes = getattr(report, "factor_notes", {})
    if notes:
        lines += ["## Skipped factor analyses", ""]
        lines += [f"- {idx}: {why}" for idx, why in notes.items()]
        lines.append("")

    clusters = _cluster_rows(report)
    if clusters:
        with_gg = report.green_means is not None
        header = ["Nr.", "Name", *(["GG fac. score"] if with_gg else []), "Members"]
        rows = [[str(g), name, *([fmt2(gg)] if with_gg else []), ", ".join(m)] for g, name, gg, m in clusters]
        lines += ["## Clusters according to their FOI-indices", ""]
        lines += _markdown_table(header, rows)
        lines.append("")

    other = {k: v for k, v in report.cluster_factor_means.items()}
    if other and clusters:
        labels = list(other)
        lines += ["## Mean factor scores by cluster", ""]
        rows = [[str(g), name, *(fmt2(other[l][g].mean) for l in labels)] for g, name, _, _ in clusters]
        lines += _markdown_table(["Nr.", "Name", *labels], rows)
        lines.append("")
    return "\n".join(lines).rstrip("\n") + "\n"


def _nan_to_none(v):
    return None if v is None or (isinstance(v, float) and math.isnan(v)) else float(v)


def report_to_dict(report) -> dict:
    d = {
        "indices": [
            {"country": c, **{k: _nan_to_none(v) for k, v in zip(INDEX_NAMES, row)}}
            for c, row in zip(report.indices.countries, report.indices.values)
        ],
    }
    if report.screens:
        d["screening"] = {k: [r.to_dict() for r in v] for k, v in report.screens.items()}
    if report.factors:
        d["factors"] = {k: m.to_dict() for k, m in report.factors.items()}
    if getattr(report, "factor_notes", None):
        d["factor_notes"] = dict(report.factor_notes)
    if report.green_factor:
        d["green_factor"] = {"index": report.green_factor[0], "factor": report.green_factor[1] + 1}
    if report.assignment is not None:
        d["clusters"] = [
            {"id": g, "name": name, "gg_mean": gg, "members": m} for g, name, gg, m in _cluster_rows(report)
        ]
    if report.cluster_factor_means:
        d["cluster_factor_means"] = {
            label: [{"cluster": g, "mean": cm.mean, "n_used": cm.n_used} for g, cm in means.items()]
            for label, means in report.cluster_factor_means.items()
        }
    if report.loadings_tables:
        d["loadings_tables"] = [
            {"title": t.title, "columns": list(t.columns),
             "rows": [{"factor": f, "variable": v, "loadings": list(x)} for f, v, x in t.rows],
             "notes": list(t.notes)}
            for t in report.loadings_tables
        ]
    d["provenance"] = report.provenance
    return d


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def render_csv(report) -> dict[str, str]:
    files = {
        "indices_table.csv": _csv_text(
            ["country", "F", "O", "I"],
            ([c, *(fmt2(v) for v in row)] for c, row in zip(report.indices.countries, report.indices.values)),
        )
    }
    for n, table in enumerate(_tables(report), start=1):
        files[f"loadings_table_{n}.csv"] = _csv_text(
            ["factor", "variable", *(f"component_{c}" for c in table.columns)],
            ([f, v, *(fmt_loading(x) for x in vals)] for f, v, vals in table.rows),
        )
    clusters = _cluster_rows(report)
    if clusters:
        files["clusters_table.csv"] = _csv_text(
            ["nr", "name", "gg_score", "members"],
            ([g, name, fmt2(gg), "; ".join(m)] for g, name, gg, m in clusters),
        )
    return files


def emit_report(report, formats: str | Sequence[str], out_dir) -> list[Path]:
    """Write the report in each requested format ('csv', 'json', 'markdown'); returns written paths."""
    if isinstance(formats, str):
        formats = [formats]
    out = Path(out_dir)
    files: dict[str, str] = {}
    for fmt in formats:
        if fmt == "json":
            files["report.json"] = json.dumps(report_to_dict(report), indent=2, ensure_ascii=False, allow_nan=False) + "\n"
        elif fmt in ("markdown", "md"):
            files["report.md"] = render_markdown(report)
        elif fmt == "csv":
            files.update(render_csv(report))
        else:
            raise ValueError(f"unknown report format {fmt!r}")
    paths = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            path = out / name
            path.write_text(text, encoding="utf-8", newline="")
            paths.append(path)
    except OSError as exc:
        raise ReportIoError(f"cannot write report to {out}: {exc}") from exc
    return paths
