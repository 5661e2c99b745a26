"""Readers and writers for gridded topography and snapshot files.

Array convention: ``values[i, j]`` is the cell at x-index ``i`` and y-index
``j``.  ESRI ASCII grids list rows from north to south, so row ``r`` of the
file is ``values[:, nrows - 1 - r]``.  Plain CSV files are row-major in the
array's own index order (one line per first index).
"""
from __future__ import annotations

import io
import os

import numpy as np

from .core import Grid
from .errors import ParseError

__all__ = ["read_esri_ascii", "write_esri_ascii", "read_csv_grid", "write_csv_grid"]

_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")


def _open(src):
    if isinstance(src, (str, os.PathLike)):
        return open(src, "r")
    return src


def read_esri_ascii(src):
    """Parse an Arc/Info ASCII grid; returns ``(grid, values)``.

    Cells equal to ``NODATA_value`` are rejected with :class:`ParseError`.
    """
    fh = _open(src)
    try:
        lines = fh.read().splitlines()
    finally:
        if fh is not src:
            fh.close()
    header = {}
    pos = 0
    while pos < len(lines) and len(header) < 6:
        line = lines[pos].strip()
        pos += 1
        if not line:
            continue
        parts = line.split()
        key = parts[0].lower()
        if key not in _HEADER_KEYS or len(parts) != 2:
            raise ParseError(f"line {pos}: expected header key, got {line!r}")
        header[key] = parts[1]
    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise ParseError(f"ESRI header missing {missing}")
    try:
        ncols, nrows = int(header["ncols"]), int(header["nrows"])
        x0, y0 = float(header["xllcorner"]), float(header["yllcorner"])
        cell = float(header["cellsize"])
        nodata = float(header["nodata_value"])
    except ValueError as exc:
        raise ParseError(f"bad ESRI header value: {exc}") from None
    rows = []
    for lineno, line in enumerate(lines[pos:], start=pos + 1):
        if not line.strip():
            continue
        try:
            row = [float(tok) for tok in line.split()]
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric value") from None
        if len(row) != ncols:
            raise ParseError(f"line {lineno}: expected {ncols} values, got {len(row)}")
        rows.append(row)
    if len(rows) != nrows:
        raise ParseError(f"expected {nrows} data rows, got {len(rows)}")
    data = np.array(rows)
    bad = np.argwhere(data == nodata)
    if len(bad):
        r, c = bad[0]
        raise ParseError(f"NODATA cell at row {r}, column {c} ({len(bad)} in total)")
    values = data[::-1, :].T.copy()
    grid = Grid((ncols, nrows), (ncols * cell, nrows * cell), (x0, y0))
    return grid, values


def write_esri_ascii(dst, grid: Grid, values: np.ndarray, nodata: float = -9999.0) -> None:
    if grid.n != 2 or not np.isclose(grid.h[0], grid.h[1]):
        raise ValueError("ESRI ASCII needs a 2D grid with square cells")
    nx, ny = grid.cells
    buf = io.StringIO()
    buf.write(f"ncols {nx}\nnrows {ny}\n")
    buf.write(f"xllcorner {grid.origin[0]!r}\nyllcorner {grid.origin[1]!r}\n")
    buf.write(f"cellsize {grid.h[0]!r}\nNODATA_value {nodata!r}\n")
    for j in range(ny - 1, -1, -1):
        buf.write(" ".join(f"{x:.17g}" for x in values[:, j]) + "\n")
    _write_text(dst, buf.getvalue())


def _write_text(dst, text: str) -> None:
    if isinstance(dst, (str, os.PathLike)):
        with open(dst, "w") as fh:
            fh.write(text)
    else:
        dst.write(text)


def read_csv_grid(src, shape=None) -> np.ndarray:
    """Row-major comma-separated values; reshaped to ``shape`` when given."""
    fh = _open(src)
    try:
        text = fh.read()
    finally:
        if fh is not src:
            fh.close()
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rows.append([float(tok) for tok in line.split(",")])
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric CSV entry") from None
    if not rows:
        raise ParseError("empty CSV grid")
    if len({len(r) for r in rows}) != 1:
        raise ParseError("ragged CSV grid")
    data = np.array(rows)
    if shape is not None:
        shape = tuple(shape)
        if data.size != int(np.prod(shape)):
            raise ParseError(f"CSV has {data.size} values, expected {int(np.prod(shape))}")
        data = data.reshape(shape)
    elif data.shape[0] == 1:
        data = data[0]
    if not np.all(np.isfinite(data)):
        raise ParseError("CSV grid contains non-finite values")
    return data


def write_csv_grid(dst, values: np.ndarray) -> None:
    """Write with 17 significant digits so that reading back is bit-exact."""
    a = np.atleast_2d(np.asarray(values, dtype=float))
    text = "\n".join(",".join(f"{x:.17g}" for x in row) for row in a) + "\n"
    _write_text(dst, text)
