"""Uniform arclength grid on [0, L] with finite-difference calculus.

Fields are plain numpy arrays sampled at the N+1 nodes ``s_j = j*ds``:
complex or real arrays of shape ``(N+1,)`` for scalar fields and real arrays
of shape ``(N+1, 3)`` for vector fields.  All operators act along axis 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft
import scipy.sparse as sp
from numpy.typing import NDArray

MIN_CELLS = 8
MAX_ORDER = 3


def fd_weights(offsets: NDArray[np.floating], order: int) -> NDArray[np.floating]:
    """Finite-difference weights for the ``order``-th derivative at offset 0.

    Solves the moment (Vandermonde) system for the given integer stencil
    offsets, in units of the grid spacing.
    """
    offsets = np.asarray(offsets, dtype=float)
    n = offsets.size
    A = np.vander(offsets, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[order] = float(np.prod(np.arange(1, order + 1)))
    return np.linalg.solve(A, rhs)


def _stencil(i: int, N: int, order: int, accuracy: int) -> NDArray[np.int_]:
    # centered where it fits; near the ends a one-sided window of the same
    # formal accuracy slides inward
    half = (2 * ((order + 1) // 2) - 1 + accuracy) // 2
    if half <= i <= N - half:
        return np.arange(i - half, i + half + 1)
    width = order + accuracy
    start = 0 if i < N / 2 else N - width + 1
    return np.arange(start, start + width)


@dataclass(frozen=True)
class Grid:
    """Uniform node grid on the closed interval [0, L].

    Attributes:
        L: Interval length.
        N: Number of cells; there are N+1 nodes including both endpoints.
    """

    L: float
    N: int
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")
        if int(self.N) != self.N or self.N < MIN_CELLS:
            raise ValueError(f"N must be an integer >= {MIN_CELLS}, got {self.N}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def ds(self) -> float:
        return self.L / self.N

    @cached_property
    def s(self) -> NDArray[np.floating]:
        return np.linspace(0.0, self.L, self.N + 1)

    @property
    def size(self) -> int:
        return self.N + 1

    def refine(self, factor: int = 2) -> "Grid":
        return Grid(self.L, self.N * factor)

    # -- differentiation ---------------------------------------------------

    def diff_matrix(self, order: int, accuracy: int = 2) -> sp.csr_matrix:
        """Sparse (N+1) x (N+1) matrix of the ``order``-th derivative."""
        if order not in (1, 2, 3):
            raise ValueError(f"derivative order must be 1, 2 or 3, got {order}")
        if accuracy not in (2, 4):
            raise ValueError(f"accuracy must be 2 or 4, got {accuracy}")
        key = ("D", order, accuracy)
        if key not in self._cache:
            rows, cols, vals = [], [], []
            for i in range(self.N + 1):
                idx = _stencil(i, self.N, order, accuracy)
                w = fd_weights(idx - i, order) / self.ds**order
                rows.extend([i] * idx.size)
                cols.extend(idx)
                vals.extend(w)
            n = self.N + 1
            self._cache[key] = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        return self._cache[key]

    def derivative(self, f: NDArray, order: int = 1, accuracy: int = 2) -> NDArray:
        """``order``-th derivative of a sampled field.

        Second-order accurate by default (3/3/5-point centered interior
        stencils, 3/4/5-point one-sided end stencils).  ``accuracy=4`` widens
        every stencil by two points.
        """
        f = self._check(f)
        D = self.diff_matrix(order, accuracy)
        if np.iscomplexobj(f):
            return D @ f.real + 1j * (D @ f.imag)
        return D @ f

    # -- quadrature and norms ----------------------------------------------

    def integrate(self, f: NDArray) -> complex | float:
        """Trapezoidal rule over [0, L]; sums the components of vector fields."""
        f = self._check(f)
        total = self.ds * (f.sum(axis=0) - 0.5 * (f[0] + f[-1]))
        return total.sum() if np.ndim(total) else total

    def _derivatives(self, f: NDArray, m: int) -> list[NDArray]:
        if not 0 <= m <= MAX_ORDER:
            raise ValueError(f"Sobolev index must be in 0..{MAX_ORDER}, got {m}")
        return [f] + [self.derivative(f, k) for k in range(1, m + 1)]

    def inner(self, f: NDArray, g: NDArray, m: int = 0) -> complex:
        """H^m inner product, linear in ``f`` and conjugate-linear in ``g``."""
        f, g = self._check(f), self._check(g)
        if f.shape != g.shape:
            raise ValueError(f"field shapes differ: {f.shape} vs {g.shape}")
        total = 0j
        for df, dg in zip(self._derivatives(f, m), self._derivatives(g, m)):
            total += self.integrate(df * np.conj(dg))
        return complex(total)

    def norm(self, f: NDArray, m: int = 0) -> float:
        """H^m norm: sqrt of the summed squared L^2 norms of derivatives 0..m."""
        f = self._check(f)
        return float(np.sqrt(sum(self.integrate(np.abs(d) ** 2).real
                                 for d in self._derivatives(f, m))))

    def sup(self, f: NDArray) -> float:
        """Max over nodes of the pointwise modulus (Euclidean for vectors)."""
        f = self._check(f)
        mag = np.abs(f) if f.ndim == 1 else np.linalg.norm(f, axis=1)
        return float(mag.max())

    # -- cosine basis ----------------------------------------------------

    def cosine_transform(self, f: NDArray) -> NDArray:
        """Coefficients c_k with f(s_j) = sum_k c_k cos(k pi s_j / L), k = 0..N."""
        f = self._check(f)
        c = scipy.fft.dct(f, type=1, axis=0) / self.N
        c[0] /= 2
        c[-1] /= 2
        return c

    def inverse_cosine_transform(self, c: NDArray) -> NDArray:
        c = self._check(c).copy()
        c[0] *= 2
        c[-1] *= 2
        return scipy.fft.idct(c, type=1, axis=0) * self.N

    @cached_property
    def wavenumbers(self) -> NDArray[np.floating]:
        """Cosine-mode wavenumbers k*pi/L."""
        return np.arange(self.N + 1) * np.pi / self.L

    def _check(self, f: NDArray) -> NDArray:
        f = np.asarray(f)
        if f.shape[0] != self.N + 1:
            raise ValueError(
                f"field has {f.shape[0]} samples, grid has {self.N + 1} nodes")
        return f
