"""Snapshot sets on disk: a JSON manifest plus one CSV per stored field."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .core import Problem, SpaceTimeSolution
from .errors import ParseError
from .raster import read_csv_grid, write_csv_grid

__all__ = ["write_snapshots", "read_snapshots", "load_solution", "write_diagnostics", "DIAGNOSTIC_COLUMNS"]

MANIFEST = "manifest.json"
DIAGNOSTIC_COLUMNS = ("t", "dt", "mass", "clipped_mass", "max_v")


def write_snapshots(sol: SpaceTimeSolution, directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    z = np.asarray(sol.problem.z.values)
    entries = []
    for i, (t, v) in enumerate(zip(sol.times, sol.values)):
        v_name = f"snap_{i:05d}_v.csv"
        u_name = f"snap_{i:05d}_u.csv"
        write_csv_grid(directory / v_name, v)
        write_csv_grid(directory / u_name, v + z)
        entries.append({"index": i, "t": float(t), "v": v_name, "u": u_name})
    manifest = {
        "grid": sol.grid.as_dict(),
        "params": sol.params.as_dict(),
        "boundary": sol.problem.boundary.value,
        "times": [float(t) for t in sol.times],
        "snapshots": entries,
    }
    path = directory / MANIFEST
    path.write_text(json.dumps(manifest, indent=2))
    return path


def read_snapshots(directory):
    """Return ``(manifest, times, values)``; raises ``ParseError`` on corrupt sets."""
    directory = Path(directory)
    try:
        manifest = json.loads((directory / MANIFEST).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read manifest in {directory}: {exc}") from None
    shape = tuple(manifest["grid"]["cells"])
    times = np.array(manifest["times"], dtype=float)
    entries = manifest["snapshots"]
    if len(entries) != len(times) or any(abs(e["t"] - t) > 0 for e, t in zip(entries, times)):
        raise ParseError("manifest times do not match snapshot entries")
    values = []
    for e in entries:
        try:
            values.append(read_csv_grid(directory / e["v"], shape))
        except OSError as exc:
            raise ParseError(f"missing snapshot {e['v']}: {exc}") from None
    return manifest, times, np.stack(values)


def load_solution(directory, problem: Problem) -> SpaceTimeSolution:
    """Rebuild a solution from disk; sources are re-sampled from ``problem``."""
    manifest, times, values = read_snapshots(directory)
    if tuple(manifest["grid"]["cells"]) != problem.grid.cells:
        raise ParseError("snapshot grid does not match the scenario grid")
    if np.any(values < 0):
        raise ParseError("snapshot contains negative depths")
    sources = np.zeros_like(values)
    for i in range(1, len(times)):
        sources[i] = problem.f(times[i - 1])
    return SpaceTimeSolution(problem=problem, times=times, values=values, sources=sources)


def write_diagnostics(sol: SpaceTimeSolution, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    vol = sol.grid.cell_volume
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(DIAGNOSTIC_COLUMNS)
        v0 = sol.values[0]
        w.writerow(["0", "0", f"{float(v0.sum()) * vol:.17g}", "0", f"{float(v0.max()):.17g}"])
        for row in zip(sol.step_times, sol.step_dt, sol.step_mass, sol.step_clipped, sol.step_max):
            w.writerow([f"{x:.17g}" for x in row])
    return path
