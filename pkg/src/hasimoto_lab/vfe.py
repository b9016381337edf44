"""Vortex filament equation v_t = v x v_ss with pinned end tangents."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from numpy.typing import NDArray

from .grid import Grid
from .trajectory import Trajectory, sample_stride, step_count

GATE_EPS = 1e-12


class StepFailure(RuntimeError):
    """Fixed-point iteration of the midpoint step did not converge."""


@dataclass(frozen=True)
class VfeConfig:
    dt: float
    fp_tol: float = 1e-12
    fp_max_iter: int = 100

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.fp_tol > 0:
            raise ValueError(f"fp_tol must be positive, got {self.fp_tol}")
        if self.fp_max_iter < 1:
            raise ValueError(f"fp_max_iter must be >= 1, got {self.fp_max_iter}")

    @classmethod
    def for_grid(cls, grid: Grid, cfl: float = 0.25, **kw) -> "VfeConfig":
        """Dispersive scaling dt = cfl * ds^2."""
        return cls(dt=cfl * grid.ds**2, **kw)


@dataclass(frozen=True)
class VfeState:
    v: NDArray[np.floating]
    t: float = 0.0


def vfe_rhs(grid: Grid, v: NDArray) -> NDArray:
    """v x v_ss at interior nodes, zero at both (pinned) boundary nodes."""
    out = np.zeros_like(v)
    vss = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / grid.ds**2
    out[1:-1] = np.cross(v[1:-1], vss)
    return out


def step_implicit_midpoint(grid: Grid, state: VfeState, cfg: VfeConfig) -> VfeState:
    """One implicit-midpoint step solved by fixed-point iteration.

    The rhs is orthogonal to its argument node by node, so the converged
    step preserves |v| at every node up to the iteration tolerance.

    Raises:
        StepFailure: if the iteration has not converged after
            ``cfg.fp_max_iter`` sweeps (dt too large for contraction).
    """
    v = state.v
    dt = cfg.dt
    x = v + dt * vfe_rhs(grid, v)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(cfg.fp_max_iter):
            x_new = v + dt * vfe_rhs(grid, 0.5 * (v + x))
            delta = np.abs(x_new - x).max()
            x = x_new
            if delta <= cfg.fp_tol or not np.isfinite(delta):
                break
    if not delta <= cfg.fp_tol:
        raise StepFailure(
            f"midpoint iteration stalled at t={state.t:.6g} (increment {delta:.3e} "
            f"after {cfg.fp_max_iter} sweeps); reduce dt")
    # boundary rows of the rhs are zero, so this is a no-op up to rounding
    x[0], x[-1] = v[0], v[-1]
    return VfeState(x, state.t + dt)


def evolve_vfe(grid: Grid, state: VfeState, T: float, cfg: VfeConfig,
               sample_dt: float | None = None,
               observers: Iterable[Callable[[VfeState], None]] = ()) -> Trajectory:
    """Step to time T, recording samples every ``sample_dt`` (and at both ends).

    The step is shortened slightly so that T is hit exactly.
    """
    n, dt = step_count(state.t, T, cfg.dt)
    cfg = VfeConfig(dt, cfg.fp_tol, cfg.fp_max_iter)
    stride = sample_stride(dt, sample_dt, n)
    observers = list(observers)
    traj = Trajectory(grid, "vfe", config={"dt": dt, "fp_tol": cfg.fp_tol})

    def record(st):
        traj.append(st.t, st.v)
        for obs in observers:
            obs(st)

    record(state)
    t0 = state.t
    for k in range(1, n + 1):
        state = step_implicit_midpoint(grid, state, cfg)
        state = VfeState(state.v, t0 + k * dt)
        if k % stride == 0 or k == n:
            record(state)
    return traj


# -- conserved functionals -------------------------------------------------

def _dot(a, b):
    return np.einsum("ij,ij->i", a, b)


def invariant_E1(grid: Grid, v: NDArray) -> float:
    """||v_ss||^2 - (5/4) || |v_s|^2 ||^2."""
    vs, vss = grid.derivative(v, 1), grid.derivative(v, 2)
    return float(grid.integrate(_dot(vss, vss)) - 1.25 * grid.integrate(_dot(vs, vs) ** 2))


def invariant_E2(grid: Grid, v: NDArray) -> float:
    """Third-order VFE invariant built from v_s, v_ss and v_sss."""
    vs, vss, vsss = (grid.derivative(v, k) for k in (1, 2, 3))
    a2, b2, ab = _dot(vs, vs), _dot(vss, vss), _dot(vs, vss)
    return float(grid.integrate(_dot(vsss, vsss))
                 - 3.5 * grid.integrate(a2 * b2)
                 - 14.0 * grid.integrate(ab**2)
                 + 21.0 / 8.0 * grid.integrate(a2**3))


def invariant_tangent_norm(grid: Grid, v: NDArray) -> float:
    """||v_s||, the L^2 norm of the curvature vector."""
    return grid.norm(grid.derivative(v, 1))


def perturbation_energy(grid: Grid, phi: NDArray, R: float) -> float:
    """E(phi) = ||phi_s||^2 - ||phi||^2 / R^2."""
    return grid.norm(grid.derivative(phi, 1)) ** 2 - grid.norm(phi) ** 2 / R**2


# -- arc-shaped solutions ----------------------------------------------------

def arc_solution(R: float, grid: Grid) -> NDArray:
    """Stationary circular-arc tangent field of radius R with v(0) = e1.

    This is the image of the constant wave function -1/R under
    :func:`~hasimoto_lab.frames.hasimoto_inverse`: (cos(s/R), sin(s/R), 0).
    """
    if not R > 0:
        raise ValueError(f"arc radius must be positive, got {R}")
    th = grid.s / R
    return np.stack([np.cos(th), np.sin(th), np.zeros_like(th)], axis=1)


def poincare_constant(L: float, R: float) -> float:
    return 1.0 - L**2 / (R**2 * np.pi**2)


def poincare_gate(L: float, R: float) -> float | None:
    """c0 = 1 - L^2/(R^2 pi^2) if R > L/pi, else None (theory inapplicable)."""
    if not (L > 0 and R > 0):
        raise ValueError("L and R must be positive")
    c0 = poincare_constant(L, R)
    return c0 if c0 > GATE_EPS else None
