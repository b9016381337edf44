"""Vortex filament / cubic NLS correspondence via the generalized Hasimoto transform."""

from .frames import (FrameField, GaugeAccumulator, HasimotoResult, build_frame_from_q,
                     classical_hasimoto, extract_psi, gauge_apply, hasimoto_forward,
                     hasimoto_inverse, orbital_distance, parallel_frame_from_v,
                     reconstruct_position)
from .grid import Grid
from .nls import NlsConfig, NlsState, evolve_nls, neumann_perturbation, plane_wave, step_strang
from .trajectory import Trajectory
from .vfe import (StepFailure, VfeConfig, VfeState, arc_solution, evolve_vfe, invariant_E1,
                  invariant_E2, invariant_tangent_norm, perturbation_energy, poincare_constant,
                  poincare_gate, step_implicit_midpoint, vfe_rhs)

__version__ = "0.1.0"
