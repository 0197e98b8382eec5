"""Metrics CSV reading/writing and per-run summaries."""

from __future__ import annotations

import csv
import io
from pathlib import Path

from ..errors import IngestionError
from ..protocol import MetricsRecord

COLUMNS = ("round", "train_mean", "test_mean", "test_lo", "test_hi", "agg_test", "messages")
SUMMARY_COLUMNS = (
    "source",
    "rounds",
    "final_train_mean",
    "final_test_mean",
    "final_test_lo",
    "final_test_hi",
    "last_agg_test",
    "best_test_mean",
    "messages",
)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_rows(columns, rows):
    """CSV text for dict rows; missing or ``None`` cells are left empty."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def render_metrics(records):
    return render_rows(COLUMNS, [vars(r) for r in records])


def write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def write_metrics(records, path):
    return write_text(path, render_metrics(records))


def read_metrics(path):
    path = Path(path)
    if not path.is_file():
        raise IngestionError(f"no such file: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        head = next(reader, None)
        if head is None or tuple(head) != COLUMNS:
            raise IngestionError(f"{path}: header must be {','.join(COLUMNS)}", 1)
        out = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(COLUMNS):
                raise IngestionError(f"{path}: expected {len(COLUMNS)} columns, found {len(row)}", lineno)
            try:
                out.append(
                    MetricsRecord(
                        round=int(row[0]),
                        train_mean=float(row[1]),
                        test_mean=float(row[2]),
                        test_lo=float(row[3]),
                        test_hi=float(row[4]),
                        agg_test=float(row[5]) if row[5] else None,
                        messages=int(row[6]),
                    )
                )
            except ValueError as exc:
                raise IngestionError(f"{path}: {exc}", lineno) from None
    return out


def summarize(records, source=""):
    if not records:
        return {"source": source}
    last = records[-1]
    aggs = [r.agg_test for r in records if r.agg_test is not None]
    return {
        "source": source,
        "rounds": last.round,
        "final_train_mean": last.train_mean,
        "final_test_mean": last.test_mean,
        "final_test_lo": last.test_lo,
        "final_test_hi": last.test_hi,
        "last_agg_test": aggs[-1] if aggs else None,
        "best_test_mean": max(r.test_mean for r in records),
        "messages": last.messages,
    }
