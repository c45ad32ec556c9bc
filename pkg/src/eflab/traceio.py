"""Trace and summary CSV serialization.

The trace schema is fixed: header `t,f_val,grad_norm_sq,err_norm_sq,phi_p,
span_dist,bits_cum,test_loss`, one row per recorded step, absent optional
metrics as empty fields. Floats are written with repr (shortest round-trip),
so identical runs produce byte-identical files. Files are written atomically
via a temp file and rename.
"""

from __future__ import annotations

import os
import tempfile

from .analysis import RunSummary, TraceRow

TRACE_HEADER = "t,f_val,grad_norm_sq,err_norm_sq,phi_p,span_dist,bits_cum,test_loss"
SUMMARY_HEADER = "seed,min_grad_norm_sq,avg_iterate_loss,final_err_norm_sq,empirical_delta"


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def _atomic_write(path: str, content: str):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_trace_csv(path: str, rows: list[TraceRow]):
    lines = [TRACE_HEADER]
    for r in rows:
        lines.append(
            f"{r.t},{_cell(r.f_val)},{_cell(r.grad_norm_sq)},{_cell(r.err_norm_sq)},"
            f"{_cell(r.phi_p)},{_cell(r.span_dist)},{r.bits_cum},{_cell(r.test_loss)}"
        )
    _atomic_write(path, "\n".join(lines) + "\n")


def read_trace_csv(path: str) -> list[TraceRow]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != TRACE_HEADER:
            raise ValueError(f"unexpected trace header in {path}: {header!r}")
        rows = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            toks = line.split(",")
            rows.append(
                TraceRow(
                    t=int(toks[0]),
                    f_val=float(toks[1]),
                    grad_norm_sq=float(toks[2]),
                    err_norm_sq=float(toks[3]),
                    phi_p=float(toks[4]) if toks[4] else None,
                    span_dist=float(toks[5]) if toks[5] else None,
                    bits_cum=int(toks[6]),
                    test_loss=float(toks[7]) if toks[7] else None,
                )
            )
    return rows


def write_summary_csv(path: str, summaries: list[RunSummary]):
    lines = [SUMMARY_HEADER]
    for s in summaries:
        lines.append(
            f"{s.seed},{_cell(s.min_grad_norm_sq)},{_cell(s.avg_iterate_loss)},"
            f"{_cell(s.final_err_norm_sq)},{_cell(s.empirical_delta)}"
        )
    _atomic_write(path, "\n".join(lines) + "\n")


def read_summary_csv(path: str) -> list[RunSummary]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != SUMMARY_HEADER:
            raise ValueError(f"unexpected summary header in {path}: {header!r}")
        out = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            toks = line.split(",")
            out.append(
                RunSummary(
                    seed=int(toks[0]),
                    min_grad_norm_sq=float(toks[1]),
                    avg_iterate_loss=float(toks[2]) if toks[2] else None,
                    final_err_norm_sq=float(toks[3]),
                    empirical_delta=float(toks[4]) if toks[4] else None,
                )
            )
    return out


def write_matrix_csv(path: str, matrix, labels=None):
    """Dense matrix to CSV, optionally with a trailing label column."""
    lines = []
    for i in range(matrix.shape[0]):
        cells = [repr(float(v)) for v in matrix[i]]
        if labels is not None:
            cells.append(repr(float(labels[i])))
        lines.append(",".join(cells))
    _atomic_write(path, "\n".join(lines) + "\n")
