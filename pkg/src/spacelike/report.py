"""Canonical JSON reports and CSV field dumps.

Reports must be byte-identical for identical configurations regardless of
thread count, so everything funnels through one canonicalizer: sorted keys,
fixed separators, floats via repr (shortest round-trip), no timestamps.
"""

from __future__ import annotations

import csv
import enum
import json
from pathlib import Path

import numpy as np

SCHEMA = "v1"


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        return obj
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def canonical_json(payload: dict) -> str:
    body = {"schema": SCHEMA}
    body.update(jsonable(payload))
    return json.dumps(body, sort_keys=True, indent=2, separators=(",", ": ")) + "\n"


def write_report(path, payload: dict) -> str:
    text = canonical_json(payload)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return text


def write_fields_csv(path, mesh, columns: dict):
    """Node table: index, parameter coordinates, then named value columns."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    grids = mesh.grids
    names = list(columns)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_index", *mesh.names, *names])
        flat = {k: np.asarray(v).reshape(-1) for k, v in columns.items()}
        coords = [g.reshape(-1) for g in grids]
        for k in range(int(np.prod(mesh.shape))):
            row = [k] + [repr(float(c[k])) for c in coords]
            for name in names:
                val = flat[name][k]
                row.append(val if isinstance(val, str) else repr(float(val)))
            writer.writerow(row)
