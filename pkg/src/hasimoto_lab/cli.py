"""Command-line entry point.

Usage::

    hasimoto-lab COMMAND [--config FILE] [key=value ...]

Exit status: 0 pass, 2 configuration error, 3 stability gate refused,
4 solver failure, 5 an experiment verdict failed, 6 artifact I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import COMMANDS, PARAMETERS, ConfigError, RunConfig, parse_config
from .experiments import (ExperimentReport, GateRejected, SweepSpec, arc_stability_experiment,
                          conserved_suite, equivalence_check, perturbation_transfer_check,
                          plane_wave_stability_sweep, random_compatible_perturbations)
from .frames import GaugeAccumulator, hasimoto_forward, hasimoto_inverse, reconstruct_position
from .grid import Grid
from .io import ArtifactIOError, load_trajectory, save_report, save_trajectory, write_table
from .nls import NlsConfig, NlsState, evolve_nls, neumann_perturbation, plane_wave
from .plots import emit_plot_data
from .trajectory import Trajectory
from .vfe import StepFailure, VfeConfig, VfeState, evolve_vfe

EXIT_OK, EXIT_CONFIG, EXIT_GATE, EXIT_SOLVER, EXIT_VERDICT, EXIT_IO = 0, 2, 3, 4, 5, 6

log = logging.getLogger("hasimoto_lab")


def _grid(p) -> Grid:
    return Grid(p["L"], p["N"])


def _q0(p, grid: Grid) -> np.ndarray:
    return plane_wave(p["R"], 0.0, grid) + p["delta"] * neumann_perturbation(p["modes"], grid)


def _vfe_cfg(p, grid: Grid) -> VfeConfig:
    if p["dt"]:
        return VfeConfig(p["dt"], fp_tol=p["fp_tol"])
    return VfeConfig.for_grid(grid, p["cfl"], fp_tol=p["fp_tol"])


def _nls_cfg(p, grid: Grid) -> NlsConfig:
    return NlsConfig(p["dt"]) if p["dt"] else NlsConfig.for_grid(grid)


def _spec(p) -> SweepSpec:
    return SweepSpec(L=p["L"], R=p["R"], deltas=tuple(p["deltas"]), modes=tuple(p["modes"]),
                     T=p["T"], N=p["N"], nls_dt=p["dt"] or None, vfe_cfl=p["cfl"],
                     vfe_N=p["vfe_N"] or None, vfe_fp_tol=p["fp_tol"],
                     sample_dt=p["sample_dt"], workers=p["workers"])


def _publish(cfg: RunConfig, report: ExperimentReport) -> int:
    out = cfg.output_dir()
    report.parameters = {**report.parameters, "run": cfg.echo()}
    path = save_report(report, out / f"{report.name}.json")
    emit_plot_data(report, out / "plots", render=cfg.parameters["plots"] == "yes")
    print(f"report: {path}")
    for k, v in report.verdicts.items():
        print(f"  {k}: {'pass' if v else 'FAIL'}")
    return EXIT_OK if report.passed else EXIT_VERDICT


def _save_traj(cfg: RunConfig, traj: Trajectory, name: str) -> int:
    path = save_trajectory(traj, cfg.output_dir() / name, cfg.echo())
    print(f"trajectory: {path}")
    return EXIT_OK


def run(cfg: RunConfig) -> int:
    p = cfg.parameters
    c = cfg.command
    if c == "inverse-transform":
        grid = _grid(p)
        q0 = _q0(p, grid)
        v = hasimoto_inverse(grid, q0)
        x = reconstruct_position(grid, v)
        cols = {"s": grid.s.tolist(), "re_q": q0.real.tolist(), "im_q": q0.imag.tolist()}
        for i, a in enumerate("xyz"):
            cols[f"v{a}"] = v[:, i].tolist()
        for i, a in enumerate("xyz"):
            cols[a] = x[:, i].tolist()
        path = write_table(cfg.output_dir() / "filament.csv", cols, cfg.echo(),
                           {"s": "arclength"})
        print(f"filament: {path}")
        return EXIT_OK
    if c == "transform":
        if p["input"]:
            src = load_trajectory(p["input"])
            if src.kind != "vfe":
                raise ConfigError("input", "transform expects a VFE trajectory")
        else:
            grid = _grid(p)
            src = Trajectory(grid, "vfe")
            src.append(0.0, hasimoto_inverse(grid, _q0(p, grid)))
        out = Trajectory(src.grid, "nls", config={"source": p["input"] or "built-in"})
        acc = GaugeAccumulator(last_time=src.times[0])
        for t, v in zip(src.times, src.fields):
            res, acc = hasimoto_forward(src.grid, v, acc, t)
            out.append(t, res.q)
        return _save_traj(cfg, out, "transform.csv")
    if c == "evolve-vfe":
        grid = _grid(p)
        v0 = hasimoto_inverse(grid, _q0(p, grid))
        traj = evolve_vfe(grid, VfeState(v0), p["T"], _vfe_cfg(p, grid), p["sample_dt"])
        return _save_traj(cfg, traj, "vfe.csv")
    if c == "evolve-nls":
        grid = _grid(p)
        traj = evolve_nls(grid, NlsState(_q0(p, grid)), p["T"], _nls_cfg(p, grid), p["sample_dt"])
        return _save_traj(cfg, traj, "nls.csv")
    if c == "equivalence":
        R, delta, modes = p["R"], p["delta"], p["modes"]
        report = equivalence_check(
            lambda g: plane_wave(R, 0.0, g) + delta * neumann_perturbation(modes, g),
            p["L"], p["T"], p["resolutions"], vfe_cfl=p["cfl"], thresholds=cfg.thresholds(),
            **({"nls_dt": p["dt"]} if p["dt"] else {}))
        return _publish(cfg, report)
    if c == "arc-stability":
        return _publish(cfg, arc_stability_experiment(_spec(p), cfg.thresholds()))
    if c == "plane-stability":
        report = plane_wave_stability_sweep(_spec(p), cfg.thresholds())
        grid = _grid(p)
        phis = random_compatible_perturbations(grid, p["samples"], p["seed"])
        transfer = perturbation_transfer_check(
            grid, [(plane_wave(p["R"], 0.0, grid), f) for f in phis], cfg.thresholds(), p["seed"])
        code = _publish(cfg, transfer)
        return max(code, _publish(cfg, report))
    if c == "conserved":
        if p["input"]:
            traj = load_trajectory(p["input"])
            return _publish(cfg, conserved_suite(traj, p["R"], thresholds=cfg.thresholds()))
        grid = _grid(p)
        q0 = _q0(p, grid)
        if p["flow"] == "vfe":
            v0 = hasimoto_inverse(grid, q0)
            cfg1 = _vfe_cfg(p, grid)
            cfg2 = VfeConfig(cfg1.dt / 2, cfg1.fp_tol)
            a = evolve_vfe(grid, VfeState(v0), p["T"], cfg1, p["sample_dt"])
            b = evolve_vfe(grid, VfeState(v0), p["T"], cfg2, p["sample_dt"])
            report = conserved_suite(a, p["R"], b, cfg.thresholds())
        else:
            cfg1 = _nls_cfg(p, grid)
            a = evolve_nls(grid, NlsState(q0), p["T"], cfg1, p["sample_dt"])
            b = evolve_nls(grid, NlsState(q0), p["T"], NlsConfig(cfg1.dt / 2), p["sample_dt"])
            report = conserved_suite(a, None, b, cfg.thresholds())
        return _publish(cfg, report)
    raise ConfigError("command", f"unhandled command {c!r}")


def build_parser() -> argparse.ArgumentParser:
    keys = "\n".join(f"  {k:<24} {d} (default {v!r})" for k, (_, v, d) in PARAMETERS.items())
    ap = argparse.ArgumentParser(
        prog="hasimoto-lab", formatter_class=argparse.RawDescriptionHelpFormatter,
        description="Filament / NLS transform experiments.",
        epilog="configuration keys:\n" + keys)
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", type=Path, help="flat key=value configuration file")
    ap.add_argument("overrides", nargs="*", metavar="key=value",
                    help="overrides, taking precedence over the file")
    ap.add_argument("--echo", action="store_true", help="print the resolved configuration")
    return ap


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_intermixed_args(argv)
    try:
        text = args.config.read_text() if args.config else ""
        flags = {}
        for item in args.overrides:
            key, sep, val = item.partition("=")
            if not sep:
                raise ConfigError(item, "override must be key=value")
            flags[key.strip()] = val.strip()
        cfg = parse_config(args.command, text, flags)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GateRejected as exc:
        print(f"gate refused ({exc.key}): {exc}", file=sys.stderr)
        return EXIT_GATE
    except OSError as exc:
        print(f"cannot read configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.echo:
        print(json.dumps(cfg.echo(), indent=2, sort_keys=True))
    try:
        return run(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GateRejected as exc:
        print(f"gate refused ({exc.key}): {exc}", file=sys.stderr)
        return EXIT_GATE
    except (StepFailure, FloatingPointError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ArtifactIOError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
