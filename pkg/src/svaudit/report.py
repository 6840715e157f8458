"""Serialization of audit results: metric grids, nationality series, reports.

Human-readable formats (markdown, csv grids) round metrics to 3 decimal
places; machine formats (json) keep full precision and carry a
schema_version field. All renderers are deterministic: identical inputs
yield identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import EmptyGrid, EmptySweep
from .fairness import FairnessReport, SweepEntry

SCHEMA_VERSION = 1

METRIC_NAMES = ("statistical_parity", "equalized_odds", "equal_opportunity")

MARKDOWN = "markdown"
CSV = "csv"
JSON = "json"


@dataclass(frozen=True)
class ExperimentGrid:
    """Systems x losses grid of fairness metric triples."""

    rows: Sequence[str]
    columns: Sequence[str]
    cells: Mapping[tuple[str, str], tuple[float, float, float]]

    def __post_init__(self) -> None:
        for row in self.rows:
            for col in self.columns:
                cell = self.cells.get((row, col))
                if cell is None or len(cell) != 3:
                    raise ValueError(f"cell ({row}, {col}) must hold exactly 3 metrics")
                for v in cell:
                    if not 0.0 <= v <= 1.0:
                        raise ValueError(f"metric {v} in cell ({row}, {col}) outside [0, 1]")


def render_grid(grid: ExperimentGrid, format: str = MARKDOWN) -> str:
    """Render the grid with metric blocks as column groups, losses as sub-columns."""
    if not grid.rows or not grid.columns:
        raise EmptyGrid()
    headers = ["system"] + [
        f"{metric}/{col}" for metric in METRIC_NAMES for col in grid.columns
    ]

    if format == JSON:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "rows": list(grid.rows),
            "columns": list(grid.columns),
            "metrics": list(METRIC_NAMES),
            "cells": {
                row: {
                    col: dict(zip(METRIC_NAMES, grid.cells[(row, col)]))
                    for col in grid.columns
                }
                for row in grid.rows
            },
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    table = []
    for row in grid.rows:
        cells = [
            f"{grid.cells[(row, col)][m]:.3f}"
            for m in range(len(METRIC_NAMES))
            for col in grid.columns
        ]
        table.append([row] + cells)

    if format == CSV:
        lines = [",".join(headers)] + [",".join(r) for r in table]
        return "\n".join(lines) + "\n"
    if format == MARKDOWN:
        lines = [
            "| " + " | ".join(headers) + " |",
            "| " + " | ".join("---" for _ in headers) + " |",
        ]
        lines += ["| " + " | ".join(r) + " |" for r in table]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown grid format {format!r}")


def _metric_or_null(value: float | None, fmt: str = "{:.6f}") -> str:
    return "" if value is None else fmt.format(value)


def render_nationality_series(sweep: Sequence[SweepEntry], format: str = CSV) -> str:
    """One record per nationality, in the sweep's count-descending order.

    Inestimable metrics render as an empty csv field / json null, never 0.
    """
    if not sweep:
        raise EmptySweep()

    if format == JSON:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "series": [
                {
                    "nationality": e.nationality,
                    "speaker_count": e.speaker_count,
                    "statistical_parity": e.report.statistical_parity,
                    "equalized_odds": e.report.equalized_odds,
                    "equal_opportunity": e.report.equal_opportunity,
                }
                for e in sweep
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if format == CSV:
        lines = ["nationality,speaker_count,statistical_parity,equalized_odds,equal_opportunity"]
        for e in sweep:
            lines.append(
                ",".join(
                    [
                        e.nationality,
                        str(e.speaker_count),
                        _metric_or_null(e.report.statistical_parity),
                        _metric_or_null(e.report.equalized_odds),
                        _metric_or_null(e.report.equal_opportunity),
                    ]
                )
            )
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown series format {format!r}")


def fairness_report_dict(report: FairnessReport) -> dict:
    """JSON-ready view of a fairness report (schema documented in the README)."""
    return {
        "schema_version": SCHEMA_VERSION,
        "scheme": {
            "kind": report.scheme.kind.value,
            "attribute": report.scheme.attribute.value,
            "protected_value": report.scheme.protected_value,
            "assignment_policy": report.scheme.assignment_policy.value,
        },
        "threshold": report.threshold,
        "eo_aggregation": report.eo_aggregation,
        "metrics": {
            "statistical_parity": report.statistical_parity,
            "equalized_odds": report.equalized_odds,
            "equal_opportunity": report.equal_opportunity,
        },
        "signed": {
            "statistical_parity": report.statistical_parity_signed,
            "tpr_gap": report.tpr_gap_signed,
            "fpr_gap": report.fpr_gap_signed,
            "equal_opportunity": report.equal_opportunity_signed,
        },
        "confusion": {
            "protected": {
                "tp": report.confusion.protected.tp,
                "fp": report.confusion.protected.fp,
                "tn": report.confusion.protected.tn,
                "fn": report.confusion.protected.fn,
            },
            "unprotected": {
                "tp": report.confusion.unprotected.tp,
                "fp": report.confusion.unprotected.fp,
                "tn": report.confusion.unprotected.tn,
                "fn": report.confusion.unprotected.fn,
            },
        },
        "excluded_trials": report.excluded_trials,
    }


def render_fairness_report(report: FairnessReport, format: str = JSON) -> str:
    if format == JSON:
        return json.dumps(fairness_report_dict(report), indent=2, sort_keys=True) + "\n"
    if format == MARKDOWN:
        rows = [
            ("statistical_parity", report.statistical_parity, report.statistical_parity_signed),
            ("equalized_odds", report.equalized_odds, None),
            ("equal_opportunity", report.equal_opportunity, report.equal_opportunity_signed),
        ]
        lines = [
            f"scheme: {report.scheme.attribute.value}:{report.scheme.protected_value}"
            f" ({report.scheme.kind.value}, {report.scheme.assignment_policy.value})",
            f"threshold: {report.threshold:.6f}",
            f"excluded_trials: {report.excluded_trials}",
            "",
            "| metric | value | signed |",
            "| --- | --- | --- |",
        ]
        for name, value, signed in rows:
            lines.append(
                f"| {name} | {_metric_or_null(value, '{:.3f}')} | "
                f"{_metric_or_null(signed, '{:+.3f}')} |"
            )
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {format!r}")
