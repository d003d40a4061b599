"""CSV and manifest writers shared by the command-line tools.

Numbers are written with 12 significant digits, '.' decimal separator and LF
line endings.  Matrix files list grid rows from the top of the world (largest
y) to the bottom; removed nodes appear as 0 and are flagged in the mask file.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .environment import GridEnvironment

__all__ = [
    "config_digest",
    "fmt",
    "read_matrix_csv",
    "write_long_csv",
    "write_manifest",
    "write_mask_csv",
    "write_matrix_csv",
    "write_node_map",
]


def fmt(value) -> str:
    value = float(value)
    if value == 0.0:
        return "0"
    if not np.isfinite(value):
        return "nan" if np.isnan(value) else ("inf" if value > 0 else "-inf")
    return f"{value:.12g}"


def _writer(path):
    fh = open(path, "w", newline="", encoding="utf-8")
    return fh, csv.writer(fh, lineterminator="\n")


def write_matrix_csv(path, env: GridEnvironment, values) -> Path:
    grid = env.to_grid(values)
    fh, w = _writer(path)
    with fh:
        for row in grid[::-1]:
            w.writerow([fmt(v) for v in row])
    return Path(path)


def write_mask_csv(path, env: GridEnvironment) -> Path:
    fh, w = _writer(path)
    with fh:
        for row in env.free_mask[::-1]:
            w.writerow(["1" if v else "0" for v in row])
    return Path(path)


def write_long_csv(path, env: GridEnvironment, values, column: str) -> Path:
    grid = env.to_grid(values)
    a = env.cell
    fh, w = _writer(path)
    with fh:
        w.writerow(["x_m", "y_m", column])
        for j in range(env.rows):
            for i in range(env.cols):
                w.writerow([fmt(i * a), fmt(j * a), fmt(grid[j, i])])
    return Path(path)


def write_node_map(out_dir, stem: str, env: GridEnvironment, values, column: str) -> list[Path]:
    """Matrix, long-format and mask CSVs for one per-node quantity."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return [
        write_matrix_csv(out_dir / f"{stem}_matrix.csv", env, values),
        write_long_csv(out_dir / f"{stem}_long.csv", env, values, column),
        write_mask_csv(out_dir / f"{stem}_mask.csv", env),
    ]


def read_matrix_csv(path) -> np.ndarray:
    """Read a matrix CSV back as a (rows, cols) array with row 0 at the bottom."""
    rows = list(csv.reader(open(path, encoding="utf-8")))
    return np.array([[float(v) for v in row] for row in rows])[::-1]


def config_digest(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def write_manifest(path, *, digest: str, version: str, subcommand: str,
                   parameters: dict, timing: dict, outputs) -> Path:
    manifest = {
        "config_digest": digest,
        "tool_version": version,
        "subcommand": subcommand,
        "parameters": parameters,
        "timing_s": timing,
        "outputs": sorted(Path(p).name for p in outputs),
    }
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return Path(path)
