"""Deterministic CSV/JSON artifact writers with atomic replacement.

All floats are rendered with 17 significant digits so reruns with identical
configs and seeds produce byte-identical files.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile

import numpy as np

from .errors import IoFailure
from .sa import IterateTrace


def fmt(value):
    return format(float(value), ".17g")


def atomic_write_text(path, text):
    """Write via a temp file in the same directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(directory, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
        try:
            with os.fdopen(fd, "w", newline="") as handle:
                handle.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoFailure(f"could not write {path}: {exc}") from exc


def _csv_text(header, rows):
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def write_trace_csv(path, trace):
    d = trace.dimension
    header = (
        ["n", "t"]
        + [f"x_{i + 1}" for i in range(d)]
        + [f"z_{i + 1}" for i in range(d)]
        + [f"M_{i + 1}" for i in range(d)]
        + ["a"]
    )
    rows = []
    n_steps = trace.n_steps
    for n in range(n_steps + 1):
        row = [str(n), fmt(trace.times[n])] + [fmt(v) for v in trace.states[n]]
        if n < n_steps:
            row += [fmt(v) for v in trace.drifts[n]]
            row += [fmt(v) for v in trace.noises[n]]
            row.append(fmt(trace.steps[n]))
        else:
            row += [""] * (2 * d + 1)
        rows.append(row)
    atomic_write_text(path, _csv_text(header, rows))


def read_trace_csv(path, seed=0, field_name=""):
    try:
        with open(path, newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader)
            rows = list(reader)
    except OSError as exc:
        raise IoFailure(f"could not read {path}: {exc}") from exc
    d = sum(1 for name in header if name.startswith("x_"))
    times = np.array([float(r[1]) for r in rows])
    states = np.array([[float(v) for v in r[2 : 2 + d]] for r in rows])
    body = rows[:-1]
    drifts = np.array([[float(v) for v in r[2 + d : 2 + 2 * d]] for r in body])
    noises = np.array([[float(v) for v in r[2 + 2 * d : 2 + 3 * d]] for r in body])
    steps = np.array([float(r[2 + 3 * d]) for r in body])
    return IterateTrace(
        states=states,
        drifts=drifts.reshape(len(body), d),
        noises=noises.reshape(len(body), d),
        steps=steps,
        times=times,
        seed=seed,
        field_name=field_name,
    )


def write_trajectory_csv(path, trajectory):
    d = trajectory.dimension
    header = ["t"] + [f"x_{i + 1}" for i in range(d)] + ["mode"]
    labels = list(trajectory.mode_labels)
    rows = []
    for i in range(trajectory.times.size):
        mode = labels[min(i, len(labels) - 1)] if labels else ""
        rows.append([fmt(trajectory.times[i])] + [fmt(v) for v in trajectory.points[i]] + [mode])
    atomic_write_text(path, _csv_text(header, rows))


def write_tracking_csv(path, report):
    header = ["window_index", "n_start", "t_start", "T", "error", "noise_flag"]
    rows = [
        [
            str(r["window_index"]),
            str(r["n_start"]),
            fmt(r["t_start"]),
            fmt(r["T"]),
            fmt(r["error"]),
            str(r["noise_flag"]).lower(),
        ]
        for r in (report.to_rows() if hasattr(report, "to_rows") else report)
    ]
    atomic_write_text(path, _csv_text(header, rows))


def write_residuals_csv(path, checkpoint_rows):
    """Rows: dicts with checkpoint_n, t_n, member_index, residual, envelope."""
    header = ["checkpoint_n", "t_n", "member_index", "residual", "envelope"]
    rows = [
        [
            str(r["checkpoint_n"]),
            fmt(r["t_n"]),
            str(r["member_index"]),
            fmt(r["residual"]),
            fmt(r["envelope"]),
        ]
        for r in checkpoint_rows
    ]
    atomic_write_text(path, _csv_text(header, rows))


def write_support_csv(path, support_rows):
    """Rows: dicts with eps, filippov_fraction, krasovskii_fraction."""
    header = ["eps", "filippov_fraction", "krasovskii_fraction"]
    rows = [
        [fmt(r["eps"]), fmt(r["filippov_fraction"]), fmt(r["krasovskii_fraction"])]
        for r in support_rows
    ]
    atomic_write_text(path, _csv_text(header, rows))


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def write_json(path, obj):
    atomic_write_text(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")
