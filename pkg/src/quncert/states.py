"""Analytic state factories: the concrete pure states that populate ensembles.

Three families are provided: minimum-uncertainty Gaussian packets,
harmonic-oscillator eigenstates, and normalized superpositions.  Each
factory output satisfies the WaveFunction invariants (unit norm, decay at
the grid edges) or raises.

Recipes mirror the factories as plain data so scenario files can declare
states by value; see :mod:`quncert.scenario` for their textual form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    BoundaryLeakageError,
    EmptyTermListError,
    GridMismatchError,
    NegativeQuantumNumberError,
    NonPositiveSigmaError,
)
from .grid import Grid, UnitSystem, WaveFunction, boundary_decayed, normalize


def _require_decay(psi: WaveFunction, what: str) -> WaveFunction:
    if not boundary_decayed(psi):
        raise BoundaryLeakageError(
            f"{what} does not decay at the grid edges; widen the grid"
        )
    return psi


def gaussian_packet(
    x0: float,
    p0: float,
    sigma: float,
    grid: Grid,
    units: UnitSystem,
    label: Optional[Tuple[int, int]] = None,
) -> WaveFunction:
    """Minimum-uncertainty Gaussian packet centered at (x0, p0).

    psi(x) ~ exp(-(x - x0)^2 / (4 sigma^2)) * exp(i p0 x / hbar)

    The result has <x> = x0, <p> = p0, var_x = sigma^2 and
    var_p = hbar^2 / (4 sigma^2), so it saturates the uncertainty bound.

    Raises
    ------
    NonPositiveSigmaError
        If sigma <= 0.
    BoundaryLeakageError
        If the packet has not decayed at the grid edges.
    """
    if not sigma > 0:
        raise NonPositiveSigmaError(f"sigma must be positive, got {sigma}")
    x = grid.x
    envelope = np.exp(-((x - x0) ** 2) / (4.0 * sigma**2))
    phase = np.exp(1j * p0 * x / units.hbar)
    return _require_decay(
        normalize(envelope * phase, grid, label=label), "Gaussian packet"
    )


def _hermite_function(n: int, xi: np.ndarray) -> np.ndarray:
    # Normalized Hermite functions h_n(xi) = H_n(xi) exp(-xi^2/2) / sqrt(2^n n! sqrt(pi))
    # via the stable recurrence; folding the weight into h_0 avoids overflow
    # for n up to ~100.
    h_prev = np.pi**-0.25 * np.exp(-0.5 * xi**2)
    if n == 0:
        return h_prev
    h_cur = np.sqrt(2.0) * xi * h_prev
    for k in range(1, n):
        h_prev, h_cur = h_cur, (
            np.sqrt(2.0 / (k + 1)) * xi * h_cur - np.sqrt(k / (k + 1.0)) * h_prev
        )
    return h_cur


def ho_eigenstate(
    n: int,
    mass: float,
    omega: float,
    grid: Grid,
    units: UnitSystem,
    label: Optional[Tuple[int, int]] = None,
) -> WaveFunction:
    """n-th harmonic-oscillator eigenstate for the given mass and frequency.

    With hbar = m = omega = 1 the state has var_x = var_p = n + 1/2, so
    every n >= 1 exceeds the uncertainty bound strictly.

    Raises
    ------
    NegativeQuantumNumberError
        If n < 0.
    BoundaryLeakageError
        If the state has not decayed at the grid edges.
    """
    if n < 0:
        raise NegativeQuantumNumberError(f"quantum number must be >= 0, got {n}")
    if not (mass > 0 and omega > 0):
        raise ValueError(f"mass and omega must be positive, got {mass}, {omega}")
    xi = np.sqrt(mass * omega / units.hbar) * grid.x
    raw = _hermite_function(int(n), xi)
    return _require_decay(
        normalize(raw, grid, label=label), f"oscillator eigenstate n={n}"
    )


def superpose(
    terms: Sequence[Tuple[complex, WaveFunction]],
    label: Optional[Tuple[int, int]] = None,
) -> WaveFunction:
    """Normalized linear combination of states on one shared grid.

    Raises
    ------
    EmptyTermListError
        If no terms are given.
    GridMismatchError
        If the states live on different grids.
    ZeroNormError
        If the combination cancels to zero.
    """
    if len(terms) == 0:
        raise EmptyTermListError("superposition needs at least one term")
    ref_grid = terms[0][1].grid
    acc = np.zeros(ref_grid.n_points, dtype=complex)
    for coeff, psi in terms:
        if psi.grid != ref_grid:
            raise GridMismatchError("superposition terms live on different grids")
        acc += complex(coeff) * psi.amplitudes
    return normalize(acc, ref_grid, label=label)


# --- recipes: factory parameters as serializable data -----------------------


@dataclass(frozen=True)
class GaussianRecipe:
    x0: float
    p0: float
    sigma: float


@dataclass(frozen=True)
class HarmonicRecipe:
    n: int
    mass: float = 1.0
    omega: float = 1.0


@dataclass(frozen=True)
class SuperpositionRecipe:
    terms: Tuple[Tuple[complex, "StateRecipe"], ...]


StateRecipe = Union[GaussianRecipe, HarmonicRecipe, SuperpositionRecipe]


def build_state(
    recipe: StateRecipe,
    grid: Grid,
    units: UnitSystem,
    label: Optional[Tuple[int, int]] = None,
) -> WaveFunction:
    """Realize a recipe as a wave function on the grid."""
    if isinstance(recipe, GaussianRecipe):
        return gaussian_packet(recipe.x0, recipe.p0, recipe.sigma, grid, units, label)
    if isinstance(recipe, HarmonicRecipe):
        return ho_eigenstate(recipe.n, recipe.mass, recipe.omega, grid, units, label)
    if isinstance(recipe, SuperpositionRecipe):
        built = [(c, build_state(r, grid, units)) for c, r in recipe.terms]
        return superpose(built, label=label)
    raise TypeError(f"not a state recipe: {recipe!r}")
