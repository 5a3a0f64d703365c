"""Field file I/O.

Binary format: raw little-endian IEEE-754 doubles, row-major with axis 1 as
the slow index, plus a JSON sidecar ``<name>.meta.json`` holding the grid.
CSV format (for small grids): header ``x1,x2,value``, one row per sample in
row-major order.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .grid import TorusField, TorusGrid


def _meta_path(path: str) -> str:
    return str(path) + ".meta.json"


def save_field(path: str, f: TorusField) -> None:
    data = np.ascontiguousarray(f.values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(data.tobytes())
    meta = {"n1": f.grid.n1, "n2": f.grid.n2, "period1": 1.0, "period2": 1.0}
    with open(_meta_path(path), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, sort_keys=True)
        fh.write("\n")


def load_field(path: str) -> TorusField:
    with open(_meta_path(path), "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    grid = TorusGrid(int(meta["n1"]), int(meta["n2"]))
    if meta.get("period1", 1.0) != 1.0 or meta.get("period2", 1.0) != 1.0:
        raise ValueError("only unit periods are supported; rescale before import")
    expected = grid.n1 * grid.n2 * 8
    size = os.path.getsize(path)
    if size != expected:
        raise ValueError(f"field file has {size} bytes, expected {expected}")
    values = np.fromfile(path, dtype="<f8").reshape(grid.shape)
    return TorusField(grid, values)


def save_csv(path: str, f: TorusField) -> None:
    x1, x2 = f.grid.coords()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x1,x2,value\n")
        for a, b, v in zip(x1.ravel(), x2.ravel(), f.values.ravel()):
            fh.write(f"{a:.17g},{b:.17g},{v:.17g}\n")


def load_csv(path: str) -> TorusField:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "x1,x2,value":
            raise ValueError(f"unexpected CSV header {header!r}")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    x1 = sorted({float(r[0]) for r in rows})
    x2 = sorted({float(r[1]) for r in rows})
    grid = TorusGrid(len(x1), len(x2))
    values = np.array([float(r[2]) for r in rows]).reshape(grid.shape)
    return TorusField(grid, values)
