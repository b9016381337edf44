import json

import numpy as np
import pytest

from hasimoto_lab.cli import EXIT_CONFIG, EXIT_GATE, EXIT_OK, EXIT_SOLVER, EXIT_VERDICT, main
from hasimoto_lab.config import OUTPUT_ENV, ConfigError, parse_config
from hasimoto_lab.experiments import (ExperimentReport, GateRejected, SweepSpec,
                                      equivalence_check, plane_wave_stability_sweep)
from hasimoto_lab.grid import Grid
from hasimoto_lab.io import (ArtifactIOError, load_report, load_trajectory, read_table,
                             save_report, save_trajectory, write_table)
from hasimoto_lab.nls import NlsConfig, NlsState, evolve_nls, neumann_perturbation, plane_wave
from hasimoto_lab.plots import emit_plot_data
from hasimoto_lab.trajectory import Trajectory
from hasimoto_lab.vfe import VfeConfig, VfeState, arc_solution, evolve_vfe


class TestConfig:
    def test_defaults_echoed(self, monkeypatch):
        monkeypatch.delenv(OUTPUT_ENV, raising=False)
        cfg = parse_config("evolve-nls")
        assert cfg.parameters["L"] == np.pi
        assert cfg.parameters["R"] == 2.0
        assert cfg.parameters["N"] == 256
        assert cfg.echo()["N"] == 256
        assert cfg.parameters["output"] == "hasimoto_out"

    def test_deltas_sorted(self):
        cfg = parse_config("arc-stability", flags={"deltas": "0.1,0.001,0.01"})
        assert cfg.parameters["deltas"] == [0.001, 0.01, 0.1]

    def test_gate(self):
        with pytest.raises(GateRejected, match="c0") as err:
            parse_config("plane-stability", "R=1\n")
        assert err.value.key == "R"
        # gate only applies to stability commands
        parse_config("evolve-nls", "R=1\n")

    def test_precedence(self):
        cfg = parse_config("evolve-vfe", "N=64\nR=3  # comment\n", {"N": "32"})
        assert cfg.parameters["N"] == 32
        assert cfg.parameters["R"] == 3.0

    @pytest.mark.parametrize("text,key", [("Nx=3", "Nx"), ("R=abc", "R"), ("L=-1", "L"),
                                          ("N=4", "N"), ("modes=1:zz", "modes"),
                                          ("flow=pde", "flow"), ("R=nan", "R")])
    def test_errors_name_key(self, text, key):
        with pytest.raises(ConfigError) as err:
            parse_config("evolve-nls", text)
        assert err.value.key == key

    def test_bad_line_and_command(self):
        with pytest.raises(ConfigError):
            parse_config("evolve-nls", "just words")
        with pytest.raises(ConfigError):
            parse_config("fly")

    def test_modes_and_env(self, monkeypatch):
        monkeypatch.setenv(OUTPUT_ENV, "/tmp/somewhere")
        cfg = parse_config("evolve-nls", "modes=1:1.0,3:0.5j")
        assert cfg.parameters["modes"] == [(1, 1.0), (3, 0.5j)]
        assert cfg.parameters["output"] == "/tmp/somewhere"

    def test_stability_horizon_default(self):
        assert parse_config("plane-stability").parameters["T"] == 10.0
        assert parse_config("equivalence").parameters["T"] == 0.5


class TestTables:
    def test_roundtrip_bit_exact(self, tmp_path, rng):
        cols = {"t": list(np.sort(rng.uniform(size=20))), "x": list(rng.normal(size=20) * 1e-300),
                "y": list(rng.normal(size=20) * 1e300)}
        echo, back = read_table(write_table(tmp_path / "a.csv", cols, {"k": [1, "two"]}))
        assert back == cols
        assert echo == {"k": [1, "two"]}

    def test_nonfinite(self, tmp_path):
        _, back = read_table(write_table(tmp_path / "a.csv", {"x": [np.inf, -np.inf, np.nan]}))
        assert back["x"][0] == np.inf and back["x"][1] == -np.inf and np.isnan(back["x"][2])

    def test_unequal_columns(self, tmp_path):
        with pytest.raises(ValueError):
            write_table(tmp_path / "a.csv", {"a": [1.0], "b": [1.0, 2.0]})

    def test_missing_file(self, tmp_path):
        with pytest.raises(ArtifactIOError, match="nope.csv"):
            read_table(tmp_path / "nope.csv")


class TestTrajectories:
    def test_vfe_roundtrip(self, tmp_path):
        g = Grid(np.pi, 16)
        v0 = arc_solution(2.0, g) + 0.0
        v0[3:6] += 1e-3
        v0 /= np.linalg.norm(v0, axis=1)[:, None]
        tr = evolve_vfe(g, VfeState(v0), 0.01, VfeConfig.for_grid(g), 0.005)
        back = load_trajectory(save_trajectory(tr, tmp_path / "v.csv"))
        assert back.times == tr.times and back.kind == "vfe" and back.grid == g
        for a, b in zip(tr.fields, back.fields):
            np.testing.assert_array_equal(a, b)

    def test_nls_roundtrip_and_ordering(self, tmp_path):
        g = Grid(np.pi, 16)
        q0 = plane_wave(2.0, 0.0, g) + 0.1j * neumann_perturbation([(1, 1.0)], g)
        tr = evolve_nls(g, NlsState(q0), 0.1, NlsConfig(1e-3), 0.02)
        path = save_trajectory(tr, tmp_path / "q.csv", {"seed": 1})
        back = load_trajectory(path)
        for a, b in zip(tr.fields, back.fields):
            np.testing.assert_array_equal(a, b)
        _, cols = read_table(path)
        assert np.all(np.diff(cols["t"]) > 0)
        assert list(cols)[0] == "t"


class TestReports:
    def test_roundtrip(self, tmp_path):
        rep = plane_wave_stability_sweep(SweepSpec(N=16, T=0.2, sample_dt=0.1), vfe_route=False)
        back = load_report(save_report(rep, tmp_path / "r.json"))
        assert back == rep

    def test_equivalence_golden_schema(self, tmp_path):
        rep = equivalence_check(lambda g: plane_wave(2.0, 0.0, g) + 0.01 * np.cos(g.s),
                                np.pi, 0.1, (16, 32), n_samples=2)
        path = save_report(rep, tmp_path / "eq.json")
        lines = (tmp_path / "eq.distance.csv").read_text().splitlines()
        header = [l for l in lines if not l.startswith("#")][0]
        assert header == "t,direct_H1,orbital_H1,theta_star"
        doc = json.loads(path.read_text())
        assert {"name", "parameters", "fitted_constants", "convergence_orders", "verdicts",
                "series"} <= set(doc)
        assert doc["series"]["distance"] == "eq.distance.csv"


class TestPlotData:
    def test_sweep_loglog_schema(self, tmp_path):
        rep = plane_wave_stability_sweep(SweepSpec(N=16, T=0.2, sample_dt=0.1), vfe_route=False)
        paths = emit_plot_data(rep, tmp_path, render=True)
        _, cols = read_table(tmp_path / "sup_distance_vs_delta.csv")
        assert list(cols) == ["delta", "sup_distance", "fitted_bound"]
        assert cols["delta"] == [1e-3, 1e-2, 1e-1]
        assert (tmp_path / "sup_distance_vs_delta.png").stat().st_size > 0
        assert (tmp_path / "README.md") in paths

    def test_conserved_one_file_per_functional(self, tmp_path):
        from hasimoto_lab.experiments import conserved_suite
        g = Grid(np.pi, 16)
        tr = evolve_vfe(g, VfeState(arc_solution(2.0, g)), 0.01, VfeConfig.for_grid(g), 0.005)
        emit_plot_data(conserved_suite(tr, 2.0), tmp_path, render=False)
        names = sorted(p.name for p in tmp_path.glob("drift_*.csv"))
        assert names == ["drift_E.csv", "drift_E1.csv", "drift_E2.csv", "drift_tangent_norm.csv"]
        _, cols = read_table(tmp_path / "drift_E1.csv")
        assert list(cols) == ["t", "value", "relative_drift"]
        readme = (tmp_path / "README.md").read_text()
        assert "drift_E1.csv" in readme

    def test_nls_conserved_files(self, tmp_path):
        from hasimoto_lab.experiments import conserved_suite
        g = Grid(np.pi, 16)
        tr = evolve_nls(g, NlsState(plane_wave(2.0, 0.0, g)), 0.01, NlsConfig(1e-3), 0.005)
        emit_plot_data(conserved_suite(tr), tmp_path, render=False)
        assert sorted(p.name for p in tmp_path.glob("drift_*.csv")) == ["drift_energy.csv",
                                                                        "drift_mass.csv"]

    def test_empty_report(self, tmp_path, caplog):
        assert emit_plot_data(ExperimentReport("nothing"), tmp_path) == []
        assert list(tmp_path.iterdir()) == []
        assert "no plottable series" in caplog.text


class TestCli:
    def test_evolve_nls(self, tmp_path, capsys):
        code = main(["evolve-nls", f"output={tmp_path}", "N=16", "T=0.05", "sample_dt=0.01"])
        assert code == EXIT_OK
        tr = load_trajectory(tmp_path / "nls.csv")
        assert len(tr) == 6

    def test_config_error(self, capsys):
        assert main(["evolve-nls", "Nx=3"]) == EXIT_CONFIG
        assert "Nx" in capsys.readouterr().err

    def test_config_file(self, tmp_path):
        f = tmp_path / "run.cfg"
        f.write_text(f"N=16\nT=0.02\noutput={tmp_path}\n")
        assert main(["evolve-vfe", "--config", str(f)]) == EXIT_OK
        assert load_trajectory(tmp_path / "vfe.csv").grid.N == 16

    def test_gate(self, capsys):
        assert main(["plane-stability", "R=0.9"]) == EXIT_GATE
        assert "c0" in capsys.readouterr().err

    def test_solver_failure(self, tmp_path, capsys):
        assert main(["evolve-vfe", f"output={tmp_path}", "N=16", "T=0.1", "cfl=20",
                     "delta=0.3"]) == EXIT_SOLVER

    def test_verdict_failure(self, tmp_path):
        code = main(["equivalence", f"output={tmp_path}", "resolutions=16,32", "T=0.05",
                     "equivalence_max_distance=1e-14", "plots=no"])
        assert code == EXIT_VERDICT
        assert (tmp_path / "equivalence.json").exists()
        assert (tmp_path / "plots" / "equivalence_distance.csv").exists()

    def test_transform_and_inverse(self, tmp_path):
        assert main(["evolve-vfe", f"output={tmp_path}", "N=16", "T=0.02", "sample_dt=0.01"]) == 0
        assert main(["transform", f"output={tmp_path}", f"input={tmp_path / 'vfe.csv'}"]) == 0
        q = load_trajectory(tmp_path / "transform.csv")
        assert q.kind == "nls" and len(q) == 3
        assert main(["inverse-transform", f"output={tmp_path}", "N=16"]) == 0
        _, cols = read_table(tmp_path / "filament.csv")
        assert {"s", "vx", "vy", "vz", "x", "y", "z"} <= set(cols)
        assert main(["transform", f"output={tmp_path}", f"input={tmp_path / 'transform.csv'}"]) \
            == EXIT_CONFIG
