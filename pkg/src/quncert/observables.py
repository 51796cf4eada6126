"""Position/momentum moments, the uncertainty product, and the
equality-saturation classifier.

Momentum moments are taken in the spectral representation: the discrete
Fourier transform of the amplitudes, scaled so Parseval holds exactly,
gives the momentum distribution on the signed frequency grid
``p_m = 2 pi hbar m / (n dx)``.  A central-finite-difference evaluation of
the same moments exists in the test suite as an independent oracle; the
library ships only the spectral path.

Classification implements the rule that exact saturation of the variance
product marks thermodynamic equilibrium and strict excess marks
non-equilibrium, with a configurable relative tolerance standing in for
exact equality in finite precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import BoundaryLeakageError, BoundViolationError
from .grid import UnitSystem, WaveFunction, boundary_decayed

EQUILIBRIUM = "equilibrium"
NON_EQUILIBRIUM = "non-equilibrium"

# Guard band below the bound for declaring numerical failure.
BOUND_GUARD = 1e-9

DEFAULT_CLASSIFY_RTOL = 1e-6


@dataclass(frozen=True)
class StateStats:
    """First and second moments of position and momentum for one state."""

    mean_x: float
    var_x: float
    mean_p: float
    var_p: float

    @property
    def product(self) -> float:
        """Variance product var_x * var_p (units of action squared)."""
        return self.var_x * self.var_p


@dataclass(frozen=True)
class EquilibriumVerdict:
    """Outcome of comparing a variance product against the quantum bound."""

    classification: str
    product: float
    bound: float

    @property
    def slack(self) -> float:
        return self.product - self.bound

    @property
    def is_equilibrium(self) -> bool:
        return self.classification == EQUILIBRIUM


def position_moments(psi: WaveFunction) -> Tuple[float, float]:
    """Mean and variance of position under |psi(x)|^2."""
    density = psi.probability_density * psi.grid.dx
    x = psi.grid.x
    mean = float(np.sum(x * density))
    var = float(np.sum((x - mean) ** 2 * density))
    return mean, var


def momentum_grid(psi: WaveFunction, units: UnitSystem) -> np.ndarray:
    """Signed momentum samples p_m = 2 pi hbar m / (n dx), DFT ordering."""
    return 2.0 * np.pi * units.hbar * np.fft.fftfreq(psi.grid.n_points, d=psi.grid.dx)


def momentum_distribution(
    psi: WaveFunction, units: UnitSystem
) -> Tuple[np.ndarray, np.ndarray]:
    """Momentum samples and density, normalized so sum(density) * dp = 1.

    The scaling follows from Parseval: with
    ``psi_tilde_m = F_m * dx / sqrt(2 pi hbar)`` (F the raw DFT) and
    ``dp = 2 pi hbar / (n dx)``, the momentum-space norm equals the
    position-space norm identically.
    """
    grid = psi.grid
    f = np.fft.fft(psi.amplitudes)
    density = np.abs(f) ** 2 * grid.dx**2 / (2.0 * np.pi * units.hbar)
    return momentum_grid(psi, units), density


def momentum_moments(psi: WaveFunction, units: UnitSystem) -> Tuple[float, float]:
    """Mean and variance of momentum from the spectral distribution.

    Raises
    ------
    BoundaryLeakageError
        If the state has not decayed at the grid edges; wraparound would
        corrupt the spectrum.
    """
    if not boundary_decayed(psi):
        raise BoundaryLeakageError(
            "state has not decayed at the grid edges; momentum spectrum "
            "would alias"
        )
    p, density = momentum_distribution(psi, units)
    dp = 2.0 * np.pi * units.hbar / (psi.grid.n_points * psi.grid.dx)
    mean = float(np.sum(p * density) * dp)
    var = float(np.sum((p - mean) ** 2 * density) * dp)
    return mean, var


def uncertainty_product(psi: WaveFunction, units: UnitSystem) -> StateStats:
    """All four moments plus the variance product for a single state.

    Raises
    ------
    BoundViolationError
        If the product falls below ``(hbar/2)^2 * (1 - 1e-9)``.  The bound
        is a theorem, so this signals a misconfigured grid, never physics.
    """
    mean_x, var_x = position_moments(psi)
    mean_p, var_p = momentum_moments(psi, units)
    stats = StateStats(mean_x, var_x, mean_p, var_p)
    bound = units.uncertainty_bound
    if stats.product < bound * (1.0 - BOUND_GUARD):
        raise BoundViolationError(
            f"variance product {stats.product!r} fell below the bound "
            f"{bound!r}; the grid is too coarse or too narrow"
        )
    return stats


def classify(
    product: float,
    units: UnitSystem,
    rel_tol: float = DEFAULT_CLASSIFY_RTOL,
) -> EquilibriumVerdict:
    """Classify a variance product as equilibrium or non-equilibrium.

    Saturation of the bound within ``rel_tol`` (relative) is equilibrium;
    strict excess is non-equilibrium.

    Raises
    ------
    BoundViolationError
        If the product lies below ``(1 - rel_tol)`` times the bound.
    """
    if not rel_tol > 0:
        raise ValueError(f"rel_tol must be positive, got {rel_tol}")
    bound = units.uncertainty_bound
    if product < (1.0 - rel_tol) * bound:
        raise BoundViolationError(
            f"product {product!r} below the quantum bound {bound!r}"
        )
    if abs(product - bound) <= rel_tol * bound:
        return EquilibriumVerdict(EQUILIBRIUM, product, bound)
    return EquilibriumVerdict(NON_EQUILIBRIUM, product, bound)
