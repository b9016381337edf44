"""Plot-ready CSV bundles and the matplotlib figures rendered from them."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from .experiments import ExperimentReport, convergence_order
from .io import write_table

log = logging.getLogger(__name__)

FUNCTIONAL_NAMES = ("E", "E1", "E2", "tangent_norm", "mass", "energy")


def _figures(report: ExperimentReport) -> dict[str, dict]:
    """Figure name -> {columns, xlabel, ylabel, x, y, loglog, doc}."""
    s = report.series
    figs: dict[str, dict] = {}
    if report.name == "conserved":
        cols = s["functionals"]
        for k in FUNCTIONAL_NAMES:
            if k not in cols:
                continue
            v = np.asarray(cols[k])
            scale = abs(v[0]) if v[0] != 0 else 1.0
            figs[f"drift_{k}"] = {
                "columns": {"t": cols["t"], "value": cols[k],
                            "relative_drift": (np.abs(v - v[0]) / scale).tolist()},
                "x": "t", "y": ["relative_drift"], "loglog": False,
                "doc": f"{k} along the trajectory and |{k}(t) - {k}(0)| / |{k}(0)|"}
    if "sweep" in s:
        sw = s["sweep"]
        cols = {"delta": sw["delta"], "sup_distance": sw["sup_distance"]}
        if "fitted_bound" in sw:
            cols["fitted_bound"] = sw["fitted_bound"]
        if "delta3" in sw:
            cols["delta3"] = sw["delta3"]
        figs["sup_distance_vs_delta"] = {
            "columns": cols, "x": "delta", "y": [k for k in ("sup_distance", "fitted_bound") if k in cols],
            "loglog": True,
            "doc": "sup over sampled t of the distance to the reference solution, per delta; "
                   "fitted_bound is slack * K * delta (plane wave) or slack * K * (d3 + d3^3) (arc)"}
    if "convergence" in s:
        conv = s["convergence"]
        N = conv["N"]
        for k in conv:
            if k == "N":
                continue
            orders = [float("nan")] + convergence_order(conv[k], N[1] / N[0]) if len(N) > 1 else [float("nan")]
            figs[f"convergence_{k}"] = {
                "columns": {"N": N, "error": conv[k], "order": orders},
                "x": "N", "y": ["error"], "loglog": True,
                "doc": f"sup-in-time {k} distance per resolution and observed order against the previous row"}
    if "distance" in s:
        figs["equivalence_distance"] = {
            "columns": s["distance"], "x": "t", "y": ["direct_H1", "orbital_H1"], "loglog": False,
            "doc": "H1 distance between the two paths at the finest resolution, direct and "
                   "minimized over the global phase, with the minimizing phase theta_star"}
    if "samples" in s:
        figs["transfer_ratios"] = {
            "columns": s["samples"], "x": "phi_H2", "y": ["ratio"], "loglog": False,
            "doc": "per-sample H2 norm of the wave-function perturbation, H3 norm of the induced "
                   "tangent perturbation, and their ratio"}
    return figs


def emit_plot_data(report: ExperimentReport, directory: str | Path,
                   render: bool = True) -> list[Path]:
    """Write one CSV per figure (plus PNGs if ``render``) and a README stub.

    Returns:
        Paths written; empty (with a logged notice) if the report has no series.
    """
    figs = _figures(report) if report.series else {}
    if not figs:
        log.warning("report %r has no plottable series; no plot data written", report.name)
        return []
    directory = Path(directory)
    echo = {"experiment": report.name, "parameters": report.parameters}
    written = []
    readme = [f"# Plot data for `{report.name}`", ""]
    for name, fig in figs.items():
        written.append(write_table(directory / f"{name}.csv", fig["columns"], echo))
        readme.append(f"- `{name}.csv`: columns {', '.join(fig['columns'])}. {fig['doc']}.")
        if render:
            written.append(_render(directory / f"{name}.png", name, fig))
    readme_path = directory / "README.md"
    readme_path.write_text("\n".join(readme) + "\n")
    written.append(readme_path)
    return written


def _render(path: Path, title: str, fig: dict) -> Path:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    cols = fig["columns"]
    x = np.asarray(cols[fig["x"]], dtype=float)
    f, ax = plt.subplots(figsize=(5, 3.5))
    for k in fig["y"]:
        y = np.asarray(cols[k], dtype=float)
        if fig["loglog"]:
            keep = (x > 0) & (y > 0)
            ax.loglog(x[keep], y[keep], "o-", label=k)
        else:
            ax.plot(x, y, ".-", label=k)
    ax.set_xlabel(fig["x"])
    ax.set_title(title)
    ax.legend()
    f.tight_layout()
    f.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(f)
    return path
