"""Delimited-text writers for every on-disk artifact.

Machine tables carry full repr precision so values round-trip exactly
through the stage boundaries; diagnostic summaries use a fixed 4-decimal
layout. All output is deterministic byte for byte given the same inputs.
Missing values are written as NA.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .analysis import AssociationTable, ComparisonReport, GroupSummary, OLSResult
from .conformal import SixNumber
from .data import PROFILE_COLUMNS, Dataset
from .graph import InteractionGraph
from .indices import PCASummary


def _cell(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return "NA" if math.isnan(v) else repr(v)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_table(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def read_table(path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [row for row in reader]


def read_column(path, name) -> np.ndarray:
    header, rows = read_table(path)
    j = header.index(name)
    return np.array([float(row[j]) for row in rows])


# ---------------------------------------------------------------------------
# Field diagnostics (correlation matrix + PCA summary)

def write_field_diagnostics(path, corr: np.ndarray, summary: PCASummary) -> Path:
    names = summary.index_names
    k = len(names)
    width = max(8, max(len(n) for n in names) + 2)
    lines = ["Correlation matrix of the composite indices", ""]
    lines.append(" " * width + "".join(f"{n:>{width}}" for n in names))
    for i, name in enumerate(names):
        lines.append(
            f"{name:<{width}}" + "".join(f"{corr[i, j]:>{width}.4f}" for j in range(k))
        )
    lines += ["", "Principal components summary", ""]
    comp = [f"PC{j + 1}" for j in range(k)]
    label_w = 24
    lines.append(" " * label_w + "".join(f"{c:>{width}}" for c in comp))
    for label, values in (
        ("Standard deviation", summary.standard_deviations),
        ("Proportion of Variance", summary.proportions),
        ("Cumulative Proportion", summary.cumulative),
    ):
        lines.append(
            f"{label:<{label_w}}" + "".join(f"{v:>{width}.4f}" for v in values)
        )
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_composites(path, dataset: Dataset, values: np.ndarray, names) -> Path:
    header = ["unit_id", *names]
    rows = [[uid, *values[i]] for i, uid in enumerate(dataset.unit_ids)]
    return write_table(path, header, rows)


def write_external_field(path, dataset: Dataset, h: np.ndarray) -> Path:
    rows = [[uid, h[i]] for i, uid in enumerate(dataset.unit_ids)]
    return write_table(path, ["unit_id", "h"], rows)


# ---------------------------------------------------------------------------
# Graph exports

def write_group_table(path, dataset: Dataset, graph: InteractionGraph) -> Path:
    ids = dataset.unit_ids
    header = ["group_id", *PROFILE_COLUMNS, "size", "member_ids"]
    rows = []
    for g in range(graph.n_groups):
        members = ";".join(ids[i] for i in graph.members[g])
        rows.append([g, *graph.profile_keys[g], int(graph.group_sizes[g]), members])
    return write_table(path, header, rows)


def write_graph_summary(path, graph: InteractionGraph, lam_max: float, lam_min: float) -> Path:
    lines = [
        f"units: {graph.n}",
        f"groups: {graph.n_groups}",
        f"largest group: {int(graph.group_sizes.max())}",
        f"edges: {int((graph.group_sizes * (graph.group_sizes - 1)).sum()) // 2}",
        f"coupling spectrum extremes: lambda_max={lam_max!r} lambda_min={lam_min!r}",
    ]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# Sampler exports

def write_energy_trace(path, iterations, energies) -> Path:
    rows = zip(np.asarray(iterations), np.asarray(energies))
    return write_table(path, ["iteration", "energy"], rows)


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return path


# ---------------------------------------------------------------------------
# Conformal and analysis tables

def write_uncertainty_table(path, unit_ids, y_ref, y_est, lo, hi, covered) -> Path:
    header = ["unit_id", "y_ref", "y_est", "lo", "hi", "width", "covered"]
    rows = [
        [uid, y_ref[i], y_est[i], lo[i], hi[i], hi[i] - lo[i], bool(covered[i])]
        for i, uid in enumerate(unit_ids)
    ]
    return write_table(path, header, rows)


def write_unit_results(path, unit_ids, coverage, adaptivity) -> Path:
    rows = [[uid, coverage[i], adaptivity[i]] for i, uid in enumerate(unit_ids)]
    return write_table(path, ["unit_id", "coverage", "adaptivity"], rows)


def write_six_number_table(path, rows: dict[str, SixNumber]) -> Path:
    header = ["metric", "min", "q1", "median", "mean", "q3", "max"]
    data = [[name, *summary] for name, summary in rows.items()]
    return write_table(path, header, data)


def write_comparison(path, report: ComparisonReport) -> Path:
    rows = [
        ["n", report.n],
        ["initial_mean", report.mean_obs],
        ["estimated_mean", report.mean_est],
        ["mae", report.mae],
        ["rmse", report.rmse],
        ["correlation", report.pearson_r],
        ["mean_diff", report.mean_diff],
        ["t_stat", report.t_stat],
        ["t_df", report.t_df],
        ["t_pvalue", report.t_pvalue],
        ["ci95_lo", report.ci95_lo],
        ["ci95_hi", report.ci95_hi],
    ]
    return write_table(path, ["statistic", "value"], rows)


def read_comparison(path) -> dict[str, float]:
    _, rows = read_table(path)
    out = {}
    for name, value in rows:
        out[name] = math.nan if value == "NA" else float(value)
    return out


def write_associations(path, table: AssociationTable) -> Path:
    rows = [
        [name, table.pearson[j], table.spearman[j]]
        for j, name in enumerate(table.index_names)
    ]
    return write_table(path, ["index", "pearson", "spearman"], rows)


def write_ols(path, result: OLSResult) -> Path:
    rows = [
        [name, result.beta_std[j] if result.estimated[j] else None]
        for j, name in enumerate(result.index_names)
    ]
    return write_table(path, ["index", "beta_std"], rows)


def write_group_summaries(path, rows: list[GroupSummary]) -> Path:
    header = ["type", "class", "n", "coverage", "adaptivity", "y_ref", "y_est", "delta_pct"]
    data = [
        [r.type_label, r.attr_class, r.n, r.coverage, r.adaptivity, r.y_ref, r.y_est, r.delta]
        for r in rows
    ]
    return write_table(path, header, data)


def write_group_mpi(path, rows: list[GroupSummary], index_names) -> Path:
    header = ["type", "class", "y_ref", *index_names]
    data = [
        [r.type_label, r.attr_class, r.y_ref, *(r.mpi_means or ())]
        for r in rows
    ]
    return write_table(path, header, data)


def write_benchmark(path, rows: list[tuple[str, float, float]]) -> Path:
    return write_table(path, ["model", "rmse", "mae"], rows)
