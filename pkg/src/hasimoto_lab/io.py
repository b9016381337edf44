"""Plain-text persistence: CSV tables with a commented header and JSON reports.

Floats are written with 17 significant digits, which round-trips every
finite IEEE double exactly.  Every CSV starts with ``# key: value`` comment
lines echoing the configuration that produced it, then a ``# units:`` line,
then the column-name row.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .experiments import ExperimentReport
from .grid import Grid
from .trajectory import Trajectory

FORMAT_VERSION = 1
FLOAT_FMT = "{:.17g}"

UNITS = {
    "t": "time", "delta": "perturbation size", "delta3": "H3 norm",
    "N": "cells", "order": "dimensionless", "theta_star": "rad", "s": "arclength",
    "direct_H1": "H1 norm", "orbital_H1": "H1 norm", "orbital_H2": "H2 norm",
    "H3_distance": "H3 norm", "vfe_H3": "H3 norm", "nls_orbital_H2": "H2 norm",
    "sup_distance": "norm", "fitted_bound": "norm", "phi_H2": "H2 norm", "dv_H3": "H3 norm",
}


class ArtifactIOError(OSError):
    """Reading or writing an artifact failed; the message names the path."""


def _fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return FLOAT_FMT.format(x)


def write_table(path: str | Path, columns: dict[str, list[float]],
                echo: dict | None = None, units: dict[str, str] | None = None) -> Path:
    """Write equal-length float columns as CSV with a commented header."""
    path = Path(path)
    names = list(columns)
    lengths = {len(columns[k]) for k in names}
    if len(lengths) > 1:
        raise ValueError(f"columns of unequal length in {path}: {lengths}")
    units = {**UNITS, **(units or {})}
    lines = [f"# {k}: {json.dumps(v, sort_keys=True)}" for k, v in (echo or {}).items()]
    lines.append("# units: " + ",".join(units.get(k, "-") for k in names))
    lines.append(",".join(names))
    for row in zip(*(columns[k] for k in names)):
        lines.append(",".join(_fmt(x) for x in row))
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise ArtifactIOError(f"cannot write {path}: {exc}") from exc
    return path


def read_table(path: str | Path) -> tuple[dict, dict[str, list[float]]]:
    """Inverse of :func:`write_table`; returns (echo, columns)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ArtifactIOError(f"cannot read {path}: {exc}") from exc
    echo, body = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, val = line[2:].partition(": ")
            if key != "units":
                echo[key] = json.loads(val)
        elif line:
            body.append(line)
    if not body:
        raise ArtifactIOError(f"{path} has no column header")
    names = body[0].split(",")
    columns = {k: [] for k in names}
    for line in body[1:]:
        for k, x in zip(names, line.split(",")):
            columns[k].append(float(x))
    return echo, columns


# -- trajectories ------------------------------------------------------------

def _field_columns(traj: Trajectory) -> dict[str, list[float]]:
    cols = {"t": list(traj.times)}
    F = np.asarray(traj.fields)
    n = traj.grid.size
    if traj.kind == "vfe":
        for j in range(n):
            for c, name in enumerate("xyz"):
                cols[f"v{name}_{j}"] = F[:, j, c].tolist()
    else:
        for j in range(n):
            cols[f"re_{j}"] = F[:, j].real.tolist()
            cols[f"im_{j}"] = F[:, j].imag.tolist()
    return cols


def save_trajectory(traj: Trajectory, path: str | Path, echo: dict | None = None) -> Path:
    """One row per time sample: t followed by every field component."""
    head = {"version": FORMAT_VERSION, "kind": traj.kind, "L": traj.grid.L,
            "N": traj.grid.N, "config": traj.config}
    if echo:
        head["run"] = echo
    return write_table(path, _field_columns(traj), head)


def load_trajectory(path: str | Path) -> Trajectory:
    echo, cols = read_table(path)
    if echo.get("version") != FORMAT_VERSION:
        raise ArtifactIOError(f"{path}: unsupported trajectory version {echo.get('version')}")
    grid = Grid(echo["L"], echo["N"])
    traj = Trajectory(grid, echo["kind"], config=echo.get("config", {}))
    n = grid.size
    for i, t in enumerate(cols["t"]):
        if traj.kind == "vfe":
            f = np.array([[cols[f"v{c}_{j}"][i] for c in "xyz"] for j in range(n)])
        else:
            f = (np.array([cols[f"re_{j}"][i] for j in range(n)])
                 + 1j * np.array([cols[f"im_{j}"][i] for j in range(n)]))
        traj.append(t, f)
    return traj


# -- reports -----------------------------------------------------------------

def save_report(report: ExperimentReport, path: str | Path) -> Path:
    """Write ``<path>`` (JSON) plus one ``<stem>.<series>.csv`` per series.

    The JSON holds name, parameters, thresholds, fitted constants,
    convergence orders, verdicts and the file names of the series.
    """
    path = Path(path)
    refs = {}
    echo = {"version": FORMAT_VERSION, "experiment": report.name,
            "parameters": report.parameters}
    for name, cols in report.series.items():
        fname = f"{path.stem}.{name}.csv"
        write_table(path.parent / fname, cols, echo)
        refs[name] = fname
    doc = {"version": FORMAT_VERSION, "name": report.name, "parameters": report.parameters,
           "thresholds": report.thresholds, "fitted_constants": report.fitted_constants,
           "convergence_orders": report.convergence_orders, "verdicts": report.verdicts,
           "series": refs}
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise ArtifactIOError(f"cannot write {path}: {exc}") from exc
    return path


def load_report(path: str | Path) -> ExperimentReport:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ArtifactIOError(f"cannot read {path}: {exc}") from exc
    series = {name: read_table(path.parent / fname)[1] for name, fname in doc["series"].items()}
    return ExperimentReport(
        name=doc["name"], parameters=doc["parameters"], series=series,
        fitted_constants=doc["fitted_constants"],
        convergence_orders=doc["convergence_orders"], verdicts=doc["verdicts"],
        thresholds=doc["thresholds"])
