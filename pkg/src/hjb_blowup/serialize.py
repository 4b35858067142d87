"""Bit-stable CSV and JSON writers.

Floats are rendered with 17 significant digits so every value
round-trips exactly; JSON objects are written with sorted keys.  Two
runs with the same inputs produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .mesh import Grid1D, Grid2D

__all__ = [
    "fmt",
    "write_csv",
    "write_field_1d",
    "write_field_2d",
    "read_field_1d",
    "write_json",
]


def fmt(x) -> str:
    """17-significant-digit decimal form; round-trips float64 exactly."""
    return f"{float(x):.17g}"


def write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    """Columns of floats (or ints for 0/1 masks) under a comma header."""
    rows = len(columns[0])
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(rows):
            cells = []
            for col in columns:
                val = col[i]
                if isinstance(val, (bool, np.bool_)):
                    cells.append(str(int(val)))
                elif isinstance(val, (int, np.integer)):
                    cells.append(str(int(val)))
                else:
                    cells.append(fmt(val))
            fh.write(",".join(cells) + "\n")


def write_field_1d(path: Path, grid: Grid1D, values: np.ndarray) -> None:
    write_csv(path, ["x", "u"], [grid.x, values])


def write_field_2d(path: Path, grid: Grid2D, values: np.ndarray) -> None:
    write_csv(
        path,
        ["x1", "x2", "u", "interior"],
        [grid.x1.ravel(), grid.x2.ravel(), values.ravel(), grid.interior_mask.ravel()],
    )


def read_field_1d(path: Path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    data = np.atleast_2d(data)
    return data[:, 0], data[:, 1]


def write_json(path: Path, payload: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
