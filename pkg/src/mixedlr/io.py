"""CSV/JSON serialization. Every float is written with 17 significant
digits so values round-trip exactly."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

__all__ = ["fmt", "write_csv", "read_csv", "write_trace_csv", "read_trace_csv", "write_json"]


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path) -> list:
    """Rows as dicts of strings."""
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_json(path, payload) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def write_trace_csv(trace, path, meta=None) -> Path:
    """``iter,dist,loss,wall_clock_s`` plus a ``.json`` metadata sidecar.

    ``dist`` is empty when the run had no truth to compare against; the
    wall-clock of iteration 0 (the init) is 0.
    """
    dists = trace.dist_to_truth or [None] * len(trace.iterates)
    clocks = [0.0] + list(trace.wall_clock_per_iter)
    rows = [(t, dists[t], trace.loss_seq[t], clocks[t]) for t in range(len(trace.iterates))]
    path = write_csv(path, ["iter", "dist", "loss", "wall_clock_s"], rows)
    sidecar = dict(meta or {})
    sidecar.update(converged_at=trace.converged_at, reached_target_at=trace.reached_target_at,
                   diagnostics=[list(d) for d in trace.diagnostics])
    write_json(path.with_suffix(".json"), sidecar)
    return path


def read_trace_csv(path) -> dict:
    rows = read_csv(path)

    def col(name):
        return [float(r[name]) if r[name] != "" else float("nan") for r in rows]

    return {"iter": [int(r["iter"]) for r in rows], "dist": col("dist"),
            "loss": col("loss"), "wall_clock_s": col("wall_clock_s")}
