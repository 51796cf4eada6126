"""Energy moments under a Hamiltonian and the time-symmetry window.

The window formula is ``delta_t = h / (4 pi delta_E)``, equivalently
``hbar / (2 delta_E)``: the interval over which an equilibrium state shows
inversion symmetry of time, controlled entirely by the energy spread.  A
vanishing spread (a stationary state) maps to an explicitly unbounded
window rather than an error.

The Hamiltonian is ``p^2/(2m) + V(x)`` applied spectrally for the kinetic
part and pointwise for the potential.  ``<H^2>`` is taken as the squared
norm of ``H psi`` (exact for Hermitian H, and it halves the spectral
round-trips).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .errors import BoundaryLeakageError, GridMismatchError, NegativeSpreadError
from .grid import Grid, UnitSystem, WaveFunction, boundary_decayed
from .observables import momentum_grid

# Energy variances this close to zero collapse to exactly zero: eigenstate
# residuals are pure roundoff and must not produce a huge finite window.
VAR_E_CLAMP = 1e-12


@dataclass(frozen=True)
class HarmonicPotential:
    """V(x) = m omega^2 x^2 / 2."""

    mass: float
    omega: float

    def __post_init__(self):
        if not (self.mass > 0 and self.omega > 0):
            raise ValueError(
                f"mass and omega must be positive, got {self.mass}, {self.omega}"
            )

    def values(self, grid: Grid) -> np.ndarray:
        return 0.5 * self.mass * self.omega**2 * grid.x**2


@dataclass(frozen=True)
class FreeParticle:
    """V(x) = 0; carries the mass for the kinetic term."""

    mass: float = 1.0

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError(f"mass must be positive, got {self.mass}")

    def values(self, grid: Grid) -> np.ndarray:
        return np.zeros(grid.n_points)


@dataclass(frozen=True)
class TabulatedPotential:
    """V given pointwise on the grid; carries the mass for the kinetic term."""

    table: np.ndarray
    mass: float = 1.0

    def __post_init__(self):
        tab = np.asarray(self.table, dtype=float)
        if not np.all(np.isfinite(tab)):
            raise ValueError("tabulated potential must be finite everywhere")
        if not self.mass > 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        tab.flags.writeable = False
        object.__setattr__(self, "table", tab)

    def values(self, grid: Grid) -> np.ndarray:
        if self.table.shape != (grid.n_points,):
            raise GridMismatchError(
                f"potential table has shape {self.table.shape}, "
                f"grid has {grid.n_points} points"
            )
        return self.table


Potential = Union[HarmonicPotential, FreeParticle, TabulatedPotential]


@dataclass(frozen=True)
class TimeWindow:
    """Energy spread and the time-symmetry interval it admits."""

    mean_E: float
    delta_E: float
    delta_t: float  # math.inf when the spread vanishes

    @property
    def is_unbounded(self) -> bool:
        return math.isinf(self.delta_t)


def apply_hamiltonian(
    psi: WaveFunction, v: Potential, units: UnitSystem
) -> np.ndarray:
    """H psi as raw (unnormalized) amplitudes on the grid of psi."""
    if not boundary_decayed(psi):
        raise BoundaryLeakageError(
            "state has not decayed at the grid edges; the spectral kinetic "
            "term would wrap"
        )
    p = momentum_grid(psi, units)
    kinetic = np.fft.ifft(p**2 / (2.0 * v.mass) * np.fft.fft(psi.amplitudes))
    return kinetic + v.values(psi.grid) * psi.amplitudes


def energy_moments(
    psi: WaveFunction, v: Potential, units: UnitSystem
) -> Tuple[float, float]:
    """Mean and variance of the energy: <H> and <H^2> - <H>^2.

    The variance is clamped to exactly zero when it lands within
    ``VAR_E_CLAMP`` of zero, so eigenstates report a vanishing spread.

    Raises
    ------
    BoundaryLeakageError
        If the state has not decayed at the grid edges.
    GridMismatchError
        If a tabulated potential does not match the grid.
    """
    hpsi = apply_hamiltonian(psi, v, units)
    dx = psi.grid.dx
    mean = float(np.vdot(psi.amplitudes, hpsi).real * dx)
    mean_sq = float(np.vdot(hpsi, hpsi).real * dx)
    var = mean_sq - mean**2
    if abs(var) <= VAR_E_CLAMP:
        var = 0.0
    return mean, var


def time_window(delta_E: float, units: UnitSystem) -> float:
    """The interval h / (4 pi delta_E) = hbar / (2 delta_E).

    Returns ``math.inf`` for a vanishing spread (the stationary-state
    limit); raises NegativeSpreadError below zero.
    """
    if delta_E < 0:
        raise NegativeSpreadError(f"energy spread must be >= 0, got {delta_E}")
    if delta_E == 0:
        return math.inf
    return 0.5 * units.hbar / delta_E


def window_from_state(
    psi: WaveFunction, v: Potential, units: UnitSystem
) -> TimeWindow:
    """Energy moments of one state and the window they admit."""
    mean, var = energy_moments(psi, v, units)
    delta_E = math.sqrt(var)
    return TimeWindow(mean_E=mean, delta_E=delta_E, delta_t=time_window(delta_E, units))


def ensemble_energy_moments(e, v: Potential) -> Tuple[float, float]:
    """Flat-weighted total energy moments of an ensemble.

    The variance is the law-of-total-variance combination of component
    energy variances and the spread of component mean energies.  This is
    one of two defensible readings of "the system's energy spread" for a
    mixture; the per-state path is :func:`energy_moments`.
    """
    pairs = [
        (w, *energy_moments(c.state, v, e.units)) for w, c in e.iter_flat()
    ]
    mean = math.fsum(w * m for w, m, _ in pairs)
    var = math.fsum(w * s for w, _, s in pairs) + math.fsum(
        w * (m - mean) ** 2 for w, m, _ in pairs
    )
    if abs(var) <= VAR_E_CLAMP:
        var = 0.0
    return mean, var


def window_from_ensemble(e, v: Potential) -> TimeWindow:
    """Window from the flat-weighted total energy spread of an ensemble."""
    mean, var = ensemble_energy_moments(e, v)
    delta_E = math.sqrt(var)
    return TimeWindow(
        mean_E=mean, delta_E=delta_E, delta_t=time_window(delta_E, e.units)
    )
