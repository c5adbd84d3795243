"""CSV ingestion and report serialization.

CSV files are comma separated with one header row and plain numeric cells.
Reports are written as ``report.json`` (fixed key order, floats at 17
significant digits, so identical reports are byte-identical), ``report.md``
and one CSV of plot data.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .core import EvaluationReport, ExplanationSet, ObjectSet, PredictionVector, Task
from .errors import EmptyFile, ParseError, SchemaMismatch, ValidationError


def read_numeric_csv(path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    try:
        handle = path.open(newline="")
    except FileNotFoundError:
        raise ValidationError(f"{path}: file not found") from None
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or not any(cell.strip() for cell in header):
            raise EmptyFile(path)
        header = [cell.strip() for cell in header]
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise SchemaMismatch(f"{path}: line {line_no} has {len(row)} fields, header has {len(header)}")
            parsed = []
            for col, token in enumerate(row, start=1):
                try:
                    value = float(token)
                except ValueError:
                    raise ParseError(path, line_no, col, token) from None
                if not math.isfinite(value):
                    raise ParseError(path, line_no, col, token)
                parsed.append(value)
            rows.append(parsed)
    if not rows:
        raise EmptyFile(path)
    return header, np.array(rows, dtype=float)


def load_dataset(path) -> ObjectSet:
    header, matrix = read_numeric_csv(path)
    return ObjectSet(matrix, tuple(header))


def load_predictions(path, task: Task | str) -> PredictionVector:
    header, matrix = read_numeric_csv(path)
    if matrix.shape[1] != 1:
        raise SchemaMismatch(f"{path}: predictions file must have one column, found {matrix.shape[1]}")
    return PredictionVector(Task(task), matrix[:, 0])


def load_explanations(path, feature_names: Sequence[str] | None = None) -> ExplanationSet:
    header, matrix = read_numeric_csv(path)
    if feature_names is not None and tuple(header) != tuple(feature_names):
        raise SchemaMismatch(
            f"{path}: explanation header {header} does not match dataset header {list(feature_names)}"
        )
    return ExplanationSet(matrix)


def _cell(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_matrix_csv(path, header: Sequence[str], matrix) -> Path:
    path = Path(path)
    matrix = np.atleast_2d(np.asarray(matrix))
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in matrix:
            writer.writerow([_cell(v) for v in row])
    return path


def write_explanations(path, explanations: ExplanationSet, feature_names: Sequence[str]) -> Path:
    return write_matrix_csv(path, feature_names, explanations.importances)


def write_predictions(path, predictions: PredictionVector, name: str = "prediction") -> Path:
    return write_matrix_csv(path, [name], predictions.values[:, None])


def dumps_json(obj: Any, indent: int = 2) -> str:
    """JSON text with floats at 17 significant digits; NaN/inf become null."""

    def render(value, depth: int) -> str:
        pad = " " * (indent * (depth + 1))
        end = " " * (indent * depth)
        if value is None or value is True or value is False:
            return {None: "null", True: "true", False: "false"}[value]
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        if isinstance(value, (float, np.floating)):
            value = float(value)
            return format(value, ".17g") if math.isfinite(value) else "null"
        if isinstance(value, str):
            return json.dumps(value)
        if isinstance(value, dict):
            if not value:
                return "{}"
            items = [f"{pad}{render(str(k), 0)}: {render(v, depth + 1)}" for k, v in value.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(value, (list, tuple, np.ndarray)):
            if len(value) == 0:
                return "[]"
            items = [f"{pad}{render(v, depth + 1)}" for v in value]
            return "[\n" + ",\n".join(items) + "\n" + end + "]"
        raise TypeError(f"cannot serialize {type(value).__name__}")

    return render(obj, 0) + "\n"


def render_markdown(report: EvaluationReport) -> str:
    lines = [
        f"# Explanation consistency: {report.method_name} ({report.task.value})",
        "",
        "| Explanation Method | Axiom | #violated | #satisfied | % satisfied | method |",
        "|---|---|---:|---:|---:|---|",
    ]
    for i, v in enumerate(report.verdicts, start=1):
        name = f"{i}. {v.axiom.value.capitalize()}"
        if v.assessed:
            pct = f"{100 * v.satisfied_fraction:.4f}%" if v.satisfied_fraction is not None else "n/a"
            lines.append(f"| {report.method_name} | {name} | {v.violated:,} | {v.satisfied:,} | {pct} | {v.method} |")
        else:
            lines.append(f"| {report.method_name} | {name} | – | – | not assessed | {v.method} |")
    if report.rho_summary is not None:
        r = report.rho_summary
        lines += ["", "## Stability: rho analysis", "", "| Spearman's rho | value |", "|---|---:|"]
        for label, value in (("Minimum", r.min), ("Maximum", r.max), ("Mean", r.mean), ("Median", r.median)):
            lines.append(f"| {label} | {value:.4f} |")
        if r.degenerate_columns:
            lines.append(f"\nDegenerate columns (counted as violated): {len(r.degenerate_columns)}")
    if report.cluster_table is not None:
        t = report.cluster_table
        lines += ["", f"## Stability: cluster similarities ({t.algorithm.value})", "", "| Label | Jaccard |", "|---|---:|"]
        for label, value in t.per_label_jaccard.items():
            lines.append(f"| {label} | {value:.4f} |")
    notes = sorted({note for v in report.verdicts for note in v.notes})
    if report.cluster_table is not None:
        notes += [n for n in report.cluster_table.notes if n not in notes]
    if notes:
        lines += ["", "## Notes", ""] + [f"- {note}" for note in notes]
    return "\n".join(lines) + "\n"


def rho_histogram(rhos, bins: int = 20) -> list[tuple[float, float, int]]:
    rhos = np.asarray(rhos, dtype=float)
    counts, edges = np.histogram(rhos[~np.isnan(rhos)], bins=bins, range=(-1.0, 1.0))
    return [(float(edges[i]), float(edges[i + 1]), int(counts[i])) for i in range(bins)]


def write_report(report: EvaluationReport, directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    json_path = directory / "report.json"
    json_path.write_text(dumps_json(report.to_dict()))
    written.append(json_path)
    md_path = directory / "report.md"
    md_path.write_text(render_markdown(report))
    written.append(md_path)
    if report.rho_summary is not None:
        rows = rho_histogram(report.rho_summary.per_column_rho)
        written.append(_write_rows(directory / "rho_histogram.csv", ["bin_start", "bin_end", "count"], rows))
    if report.cluster_table is not None:
        rows = list(report.cluster_table.per_label_jaccard.items())
        written.append(_write_rows(directory / "cluster_jaccard.csv", ["label", "jaccard"], rows))
    return written


def _write_rows(path: Path, header, rows) -> Path:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def read_report(path) -> EvaluationReport:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ValidationError(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    return EvaluationReport.from_dict(data)
