"""Uniform 1D spatial grid and normalized complex wave functions.

The grid follows the periodic convention: ``x_max`` itself is excluded, so
the sample points are ``x_k = x_min + k*dx`` for ``k = 0..n-1`` with
``dx = (x_max - x_min)/n``.  This makes the discrete Fourier pairing exact,
which the spectral momentum and energy routines rely on.

All types here are immutable after construction and every operation is a
pure function, so values can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

from .errors import (
    EmptyIntervalError,
    GridMismatchError,
    NonPowerOfTwoError,
    ZeroNormError,
)

# Relative tolerance for the normalization invariant of a WaveFunction.
NORM_TOL = 1e-10

# A state counts as decayed when its edge amplitudes are below this
# fraction of its peak amplitude.  Chosen so spectral wraparound error
# stays below every tolerance used in the test suite.
BOUNDARY_DECAY_TOL = 1e-10


@dataclass(frozen=True)
class UnitSystem:
    """Single source of truth for the action constant.

    Everything internal uses ``hbar``; ``h = 2*pi*hbar`` is derived, and the
    variance-product lower bound ``(h/4pi)^2 = (hbar/2)^2`` comes with it.
    """

    hbar: float = 1.0

    def __post_init__(self):
        if not self.hbar > 0:
            raise ValueError(f"hbar must be positive, got {self.hbar}")

    @property
    def h(self) -> float:
        return 2.0 * np.pi * self.hbar

    @property
    def uncertainty_bound(self) -> float:
        """Lower bound for var_x * var_p: (hbar/2)**2."""
        return (0.5 * self.hbar) ** 2


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [x_min, x_max) with a power-of-two size."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise EmptyIntervalError(
                f"need x_max > x_min, got [{self.x_min}, {self.x_max})"
            )
        n = self.n_points
        if n < 8 or (n & (n - 1)) != 0:
            raise NonPowerOfTwoError(
                f"n_points must be a power of two >= 8, got {n}"
            )

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_points

    @cached_property
    def x(self) -> np.ndarray:
        """Sample points x_k = x_min + k*dx (read-only array)."""
        pts = self.x_min + self.dx * np.arange(self.n_points)
        pts.flags.writeable = False
        return pts


def make_grid(x_min: float, x_max: float, n_points: int) -> Grid:
    """Build a validated grid on [x_min, x_max) with n_points samples.

    Raises
    ------
    EmptyIntervalError
        If the interval has zero or negative length.
    NonPowerOfTwoError
        If n_points is not a power of two or is below 8.
    """
    return Grid(float(x_min), float(x_max), int(n_points))


@dataclass(frozen=True)
class WaveFunction:
    """Normalized complex amplitudes on a grid.

    The constructor enforces the normalization invariant
    ``sum |psi_k|^2 dx = 1`` within ``NORM_TOL``; use :func:`normalize` to
    build instances from raw amplitudes.  ``label`` optionally carries the
    (i, j) bookkeeping indices of an ensemble component.
    """

    grid: Grid
    amplitudes: np.ndarray
    label: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.grid.n_points,):
            raise ValueError(
                f"amplitudes must have shape ({self.grid.n_points},), "
                f"got {amps.shape}"
            )
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)
        norm_sq = float(np.sum(np.abs(amps) ** 2)) * self.grid.dx
        if abs(norm_sq - 1.0) > NORM_TOL:
            raise ValueError(
                f"amplitudes are not normalized: sum |psi|^2 dx = {norm_sq!r}"
            )

    @property
    def probability_density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def normalize(raw, grid: Grid, label: Optional[Tuple[int, int]] = None) -> WaveFunction:
    """Rescale raw complex amplitudes to unit norm on the grid.

    Parameters
    ----------
    raw : array_like of complex, length grid.n_points
    grid : Grid

    Raises
    ------
    ZeroNormError
        If the amplitudes carry no probability at all.
    """
    amps = np.asarray(raw, dtype=complex)
    if amps.shape != (grid.n_points,):
        raise ValueError(
            f"raw amplitudes must have shape ({grid.n_points},), got {amps.shape}"
        )
    norm_sq = float(np.sum(np.abs(amps) ** 2)) * grid.dx
    if norm_sq == 0.0:
        raise ZeroNormError("cannot normalize amplitudes with zero norm")
    return WaveFunction(grid, amps / np.sqrt(norm_sq), label=label)


def inner_product(a: WaveFunction, b: WaveFunction) -> complex:
    """Dirac bracket <a|b> = sum conj(a_k) b_k dx.

    Raises GridMismatchError when the states live on different grids.
    """
    if a.grid != b.grid:
        raise GridMismatchError(f"grids differ: {a.grid} vs {b.grid}")
    return complex(np.vdot(a.amplitudes, b.amplitudes) * a.grid.dx)


def boundary_decayed(psi: WaveFunction) -> bool:
    """True when the state has decayed below tolerance at both grid edges."""
    amps = psi.amplitudes
    edge = max(abs(amps[0]), abs(amps[-1]))
    return edge <= BOUNDARY_DECAY_TOL * float(np.max(np.abs(amps)))
