from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .grid import Grid


@dataclass
class Trajectory:
    """Time samples of a field produced by one of the evolution drivers.

    ``kind`` is ``"vfe"`` (real (N+1, 3) tangent fields) or ``"nls"``
    (complex (N+1,) wave functions).
    """

    grid: Grid
    kind: str
    times: list[float] = field(default_factory=list)
    fields: list[NDArray] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def append(self, t: float, f: NDArray) -> None:
        self.times.append(float(t))
        self.fields.append(np.array(f, copy=True))

    def __len__(self) -> int:
        return len(self.times)

    @property
    def final(self) -> NDArray:
        return self.fields[-1]


def step_count(t0: float, T: float, dt: float) -> tuple[int, float]:
    """Number of steps to reach T from t0 and the step that lands exactly on T."""
    if T < t0:
        raise ValueError(f"final time {T} precedes current time {t0}")
    if T == t0:
        return 0, dt
    n = int(np.ceil((T - t0) / dt - 1e-9))
    return n, (T - t0) / n


def sample_stride(dt: float, sample_dt: float | None, n: int) -> int:
    if sample_dt is None:
        return max(n, 1)
    return max(int(round(sample_dt / dt)), 1)
