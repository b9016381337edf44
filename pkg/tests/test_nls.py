import numpy as np
import pytest

from hasimoto_lab.grid import Grid
from hasimoto_lab.nls import (NlsConfig, NlsState, StrangStepper, evolve_nls, mass,
                              neumann_perturbation, nls_energy, plane_wave, step_strang)


class TestStep:
    def test_plane_wave_one_step(self):
        g = Grid(np.pi, 32)
        dt = 0.01
        out = step_strang(g, NlsState(plane_wave(2.0, 0.0, g)), NlsConfig(dt))
        np.testing.assert_allclose(out.q, plane_wave(2.0, dt, g), atol=1e-15)

    def test_linear_mode_factor(self):
        # tiny amplitude: nonlinearity negligible, mode k picks up exp(i (k pi/L)^2 dt)
        g = Grid(2.0, 32)
        k, dt = 3, 0.01
        q = 1e-8 * np.cos(k * np.pi * g.s / g.L)
        c = g.cosine_transform(StrangStepper(g, dt)(q))
        assert c[k] == pytest.approx(1e-8 * np.exp(1j * (k * np.pi / g.L) ** 2 * dt), rel=1e-12)
        assert abs(abs(c[k]) - 1e-8) < 1e-20

    def test_mass_preserved(self, grid, rng):
        q = neumann_perturbation([(1, 0.5), (3, 0.2j)], grid) + 0.3
        m0 = mass(grid, q)
        st = NlsState(q)
        for _ in range(20):
            st = step_strang(grid, st, NlsConfig(1e-3))
        assert abs(mass(grid, st.q) - m0) / m0 < 1e-10


class TestEvolve:
    def test_plane_wave(self):
        g = Grid(np.pi, 64)
        tr = evolve_nls(g, NlsState(plane_wave(2.0, 0.0, g)), 2.0, NlsConfig(1e-3), sample_dt=0.5)
        for t, q in zip(tr.times, tr.fields):
            np.testing.assert_allclose(q, plane_wave(2.0, t, g), atol=1e-12)

    def test_second_order(self):
        g = Grid(np.pi, 64)
        q0 = plane_wave(2.0, 0.0, g) + 0.3 * neumann_perturbation([(1, 1.0), (2, 0.5j)], g)
        ref = evolve_nls(g, NlsState(q0), 1.0, NlsConfig(1e-4)).final
        errs = [np.abs(evolve_nls(g, NlsState(q0), 1.0, NlsConfig(dt)).final - ref).max()
                for dt in (0.02, 0.01)]
        assert 3.6 < errs[0] / errs[1] < 4.4

    def test_energy_conserved(self):
        g = Grid(np.pi, 128)
        q0 = plane_wave(2.0, 0.0, g) + 0.1 * neumann_perturbation([(1, 1.0)], g)
        tr = evolve_nls(g, NlsState(q0), 1.0, NlsConfig(1e-3), sample_dt=0.25)
        e = np.array([nls_energy(g, q) for q in tr.fields])
        assert np.abs(e - e[0]).max() / abs(e[0]) < 1e-3

    def test_neumann_preserved(self):
        g = Grid(np.pi, 128)
        q0 = 0.5 * neumann_perturbation([(1, 1.0), (2, 1j)], g)
        q = evolve_nls(g, NlsState(q0), 0.5, NlsConfig(1e-3)).final
        qs = g.derivative(q, 1, 4)
        assert abs(qs[0]) < 1e-4 and abs(qs[-1]) < 1e-4

    def test_default_step(self):
        assert NlsConfig.for_grid(Grid(np.pi, 16)).dt == pytest.approx(1e-3)


class TestData:
    def test_plane_wave_at_zero(self, grid):
        np.testing.assert_array_equal(plane_wave(2.0, 0.0, grid), -0.5)
        with pytest.raises(ValueError):
            plane_wave(0.0, 0.0, grid)

    @pytest.mark.parametrize("k", [0, -1, 1.5, True])
    def test_bad_modes(self, grid, k):
        with pytest.raises(ValueError):
            neumann_perturbation([(k, 1.0)], grid)

    def test_modes_compatible(self, grid):
        phi = neumann_perturbation([(2, 1.0), (5, 0.2j)], grid)
        d = grid.derivative(phi, 1, 4)
        assert abs(d[0]) < 1e-3 and abs(d[-1]) < 1e-3
