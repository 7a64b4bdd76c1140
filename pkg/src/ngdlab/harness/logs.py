"""Plot-ready CSV output for training, benchmark and verification runs."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence

TRAIN_HEADER = (
    "run_id", "method", "epoch", "step", "lr", "batch_size",
    "loss", "log_loss", "step_time_ns", "optimizer_bytes", "status",
)
BENCH_HEADER = ("method", "depth", "width", "params", "batch_size", "median_step_ns", "optimizer_bytes", "status")
VERIFY_HEADER = ("check_name", "metric", "value", "tolerance", "status")


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def _write(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    path = Path(path)
    try:
        fh = path.open("w", newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write log file {path}: {exc}") from exc
    with fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def emit_logs(records, path, format: str = "csv") -> None:
    if format != "csv":
        raise ValueError(f"unsupported log format {format!r}")
    _write(
        path,
        TRAIN_HEADER,
        (
            (r.run_id, r.method, r.epoch, r.step, r.lr, r.batch_size, r.loss, r.log_loss,
             r.step_time_ns, r.optimizer_bytes, r.status)
            for r in records
        ),
    )


def emit_bench(rows, path) -> None:
    _write(
        path,
        BENCH_HEADER,
        ((r.method, r.depth, r.width, r.params, r.batch_size, r.median_step_ns, r.optimizer_bytes, r.status) for r in rows),
    )


def emit_verify(reports, path) -> None:
    _write(path, VERIFY_HEADER, (rep.row() for rep in reports))
