"""CSV and Markdown emitters for comparison, cross-validation and trace reports.

CSVs carry full precision (shortest round-trip float repr, ``,`` separator,
LF endings) and have matching readers. Markdown tables show 2 decimals.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional

from .dataset import format_float
from .evaluation import METRIC_NAMES, ComparisonReport, CvReport
from .neural import TrainTrace

METRICS_HEADER = ("model",) + METRIC_NAMES
TRACE_HEADER = ("epoch", "train_loss", "val_loss")
CV_HEADER = ("fold",) + METRIC_NAMES + tuple(f"{m}_std" for m in METRIC_NAMES)


def _fmt(x) -> str:
    return "" if x is None else format_float(x)


def _parse(cell: str):
    return None if cell == "" else float(cell)


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def write_metrics_csv(report: ComparisonReport, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(METRICS_HEADER)
        for row in report.rows:
            vals = row.bundle.as_row() if row.bundle else (None,) * 4
            w.writerow([row.name, *map(_fmt, vals)])


def read_metrics_csv(path) -> list[tuple[str, Optional[dict]]]:
    """Rows as ``(model, {metric: value})``; failed rows map to None."""
    out = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != METRICS_HEADER:
            raise ValueError(f"unexpected metrics header {header}")
        for row in reader:
            values = [_parse(c) for c in row[1:]]
            if all(v is None for v in values):
                out.append((row[0], None))
            else:
                out.append((row[0], dict(zip(METRIC_NAMES, values))))
    return out


def _md_num(x) -> str:
    return "n/a" if x is None else f"{x:.2f}"


def metrics_markdown(report: ComparisonReport, title: str, timestamp: Optional[str] = None) -> str:
    lines = [f"# {title}", ""]
    if timestamp:
        lines += [f"Generated: {timestamp}", ""]
    lines += ["| Model | MSE | RMSE | MAE | MAPE |", "|---|---|---|---|---|"]
    notes = []
    for row in report.rows:
        if row.bundle is None:
            lines.append(f"| {row.name} | failed | failed | failed | failed |")
            notes.append(f"- {row.name}: {row.error}")
        else:
            lines.append("| " + " | ".join([row.name, *map(_md_num, row.bundle.as_row())]) + " |")
    if notes:
        lines += ["", "Failures:", *notes]
    fp = report.fingerprint or {}
    parts = []
    if fp.get("rows") is not None:
        parts.append(f"{fp['rows']} rows")
    if fp.get("windows") is not None:
        parts.append(f"{fp['windows']} training windows")
    if fp.get("test_windows") is not None:
        parts.append(f"{fp['test_windows']} test windows")
    if fp.get("features"):
        parts.append(f"features {', '.join(fp['features'])}")
    if fp.get("seed") is not None:
        parts.append(f"seed {fp['seed']}")
    if parts:
        lines += ["", "Dataset: " + "; ".join(parts)]
    return "\n".join(lines) + "\n"


def write_text(text: str, path) -> None:
    with Path(path).open("w", newline="\n", encoding="utf-8") as fh:
        fh.write(text)


def write_trace_csv(trace: TrainTrace, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(TRACE_HEADER)
        for e, loss in enumerate(trace.train_loss, start=1):
            val = trace.val_loss[e - 1] if trace.val_loss else None
            w.writerow([e, _fmt(loss), _fmt(val)])


def read_trace_csv(path) -> TrainTrace:
    train, val = [], []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        if tuple(next(reader)) != TRACE_HEADER:
            raise ValueError("unexpected trace header")
        for row in reader:
            train.append(float(row[1]))
            if row[2] != "":
                val.append(float(row[2]))
    return TrainTrace(tuple(train), tuple(val))


def write_cv_csv(report: CvReport, path) -> None:
    """One row per fold, then a ``mean`` footer carrying the fold std too."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(CV_HEADER)
        for k, b in enumerate(report.bundles, start=1):
            w.writerow([k, *map(_fmt, b.as_row()), *([""] * len(METRIC_NAMES))])
        w.writerow(["mean", *(_fmt(report.mean[m]) for m in METRIC_NAMES),
                    *(_fmt(report.std[m]) for m in METRIC_NAMES)])


def read_cv_csv(path) -> dict:
    """``{"folds": [{metric: value}], "mean": {...}, "std": {...}}``."""
    folds, mean, std = [], None, None
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        if tuple(next(reader)) != CV_HEADER:
            raise ValueError("unexpected cv header")
        k = len(METRIC_NAMES)
        for row in reader:
            vals = [_parse(c) for c in row[1 : 1 + k]]
            if row[0] == "mean":
                mean = dict(zip(METRIC_NAMES, vals))
                std = dict(zip(METRIC_NAMES, (_parse(c) for c in row[1 + k :])))
            else:
                folds.append(dict(zip(METRIC_NAMES, vals)))
    return {"folds": folds, "mean": mean, "std": std}


def cv_markdown(report: CvReport, title: str, timestamp: Optional[str] = None) -> str:
    lines = [f"# {title}", ""]
    if timestamp:
        lines += [f"Generated: {timestamp}", ""]
    lines += ["| Fold | MSE | RMSE | MAE | MAPE |", "|---|---|---|---|---|"]
    for k, b in enumerate(report.bundles, start=1):
        lines.append("| " + " | ".join([str(k), *map(_md_num, b.as_row())]) + " |")
    lines.append("| mean | " + " | ".join(_md_num(report.mean[m]) for m in METRIC_NAMES) + " |")
    lines.append("| std | " + " | ".join(_md_num(report.std[m]) for m in METRIC_NAMES) + " |")
    return "\n".join(lines) + "\n"
