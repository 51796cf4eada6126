"""Hierarchically weighted mixed ensembles.

An ensemble is a two-level mixture: groups indexed by i with weights w_i,
each holding components indexed by j with conditional weights w_ij, so the
flat weight of component (i, j) is ``w_i * w_ij``.  When subsystem counts
are supplied the weights are the exact ratios ``N_i / N`` and
``N_ij / N_i``, kept as rationals internally so flat weights come out
exact.

Two different "ensemble uncertainty products" live here on purpose:

* :func:`ensemble_product` averages the per-component variance products
  with the hierarchical weights.  This is the quantity whose lower bound
  is inherited from the single-state relation by convexity.
* :func:`mixed_state_moments` instead takes the variances of the flat
  mixture distributions themselves (law of total variance).  The two
  disagree as soon as component means differ; the library exposes both
  rather than silently picking one.

The density operator is never materialized as a matrix: traces and
expectations are reduced over the weighted state list, using ``math.fsum``
so reduction order cannot shift results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

from .errors import (
    CountInconsistencyError,
    GridMismatchError,
    IndexOutOfRangeError,
    WeightSumError,
)
from .grid import UnitSystem, WaveFunction, inner_product
from .observables import (
    DEFAULT_CLASSIFY_RTOL,
    EquilibriumVerdict,
    StateStats,
    classify,
    momentum_moments,
    position_moments,
    uncertainty_product,
)

WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class EnsembleComponent:
    """One pure state with its (i, j) bookkeeping indices.

    ``weight`` is the conditional weight w_ij inside its group; it may be
    left None when counts are supplied, in which case build_ensemble fills
    it in from ``count / N_i``.  ``count`` optionally records N_ij.
    """

    i_index: int
    j_index: int
    state: WaveFunction
    weight: Optional[float] = None
    count: Optional[int] = None


@dataclass(frozen=True)
class EnsembleGroup:
    """Group i: its weight w_i, resolved components, and optional count N_i."""

    weight: float
    components: Tuple[EnsembleComponent, ...]
    count: Optional[int] = None


@dataclass(frozen=True)
class Ensemble:
    """Validated two-level mixture over a shared grid."""

    groups: Tuple[EnsembleGroup, ...]
    units: UnitSystem
    total_count: Optional[int] = None
    flat_weights: Tuple[float, ...] = ()

    def iter_flat(self):
        """Yield (flat_weight, component) in group-major order."""
        k = 0
        for group in self.groups:
            for comp in group.components:
                yield self.flat_weights[k], comp
                k += 1

    @property
    def n_components(self) -> int:
        return len(self.flat_weights)


def _check_weight(value: float, what: str) -> float:
    if not (0.0 < value <= 1.0):
        raise WeightSumError(f"{what} must lie in (0, 1], got {value}")
    return float(value)


def _check_sum(values: Sequence[float], what: str) -> None:
    total = math.fsum(values)
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise WeightSumError(f"{what} must sum to 1, got {total!r}")


def build_ensemble(
    groups: Sequence[Tuple[Optional[float], Sequence[EnsembleComponent]]],
    units: UnitSystem,
    counts: Optional[Tuple[int, Sequence[int]]] = None,
) -> Ensemble:
    """Validate and assemble an ensemble.

    Parameters
    ----------
    groups : sequence of (weight_i, components)
        ``weight_i`` may be None when counts are given (it is then derived
        as N_i / N).  Component weights may likewise be None with counts.
    units : UnitSystem
    counts : optional (N, [N_1, N_2, ...])
        Total subsystem count and per-group counts.  When present, every
        component must carry its own count, the counts must tile exactly,
        and any explicitly supplied weights must equal the count ratios.

    Raises
    ------
    WeightSumError
        Nonpositive weights or level sums away from one.
    GridMismatchError
        Component states on different grids.
    CountInconsistencyError
        Counts that do not add up or disagree with explicit weights.
    """
    if len(groups) == 0:
        raise WeightSumError("ensemble needs at least one group")

    group_fracs: Optional[list] = None
    comp_fracs: Optional[list] = None
    total = None
    if counts is not None:
        total, per_group = counts
        per_group = list(per_group)
        if total <= 0 or any(n <= 0 for n in per_group):
            raise CountInconsistencyError("counts must be positive")
        if len(per_group) != len(groups):
            raise CountInconsistencyError(
                f"{len(per_group)} group counts for {len(groups)} groups"
            )
        if sum(per_group) != total:
            raise CountInconsistencyError(
                f"group counts sum to {sum(per_group)}, expected N = {total}"
            )
        group_fracs = [Fraction(n, total) for n in per_group]
        comp_fracs = []

    grid = None
    resolved_groups = []
    flat: list = []
    for gi, (weight_i, comps) in enumerate(groups):
        if len(comps) == 0:
            raise WeightSumError(f"group {gi} has no components")

        if counts is not None:
            n_i = counts[1][gi]
            derived = float(group_fracs[gi])
            if weight_i is not None and abs(weight_i - derived) > WEIGHT_SUM_TOL:
                raise CountInconsistencyError(
                    f"group {gi}: weight {weight_i!r} disagrees with "
                    f"count ratio {derived!r}"
                )
            weight_i = derived
            comp_counts = [c.count for c in comps]
            if any(c is None for c in comp_counts):
                raise CountInconsistencyError(
                    f"group {gi}: counts mode needs a count on every component"
                )
            if any(c <= 0 for c in comp_counts):
                raise CountInconsistencyError("component counts must be positive")
            if sum(comp_counts) != n_i:
                raise CountInconsistencyError(
                    f"group {gi}: component counts sum to {sum(comp_counts)}, "
                    f"expected N_i = {n_i}"
                )
        elif weight_i is None:
            raise WeightSumError(
                f"group {gi}: weight required when no counts are given"
            )
        weight_i = _check_weight(weight_i, f"group {gi} weight")

        resolved_comps = []
        for cj, comp in enumerate(comps):
            if grid is None:
                grid = comp.state.grid
            elif comp.state.grid != grid:
                raise GridMismatchError(
                    "all ensemble components must share one grid"
                )
            if counts is not None:
                frac = Fraction(comp.count, counts[1][gi])
                derived = float(frac)
                if comp.weight is not None and abs(comp.weight - derived) > WEIGHT_SUM_TOL:
                    raise CountInconsistencyError(
                        f"component ({gi},{cj}): weight {comp.weight!r} "
                        f"disagrees with count ratio {derived!r}"
                    )
                w_ij = _check_weight(derived, f"component ({gi},{cj}) weight")
                comp_fracs.append(group_fracs[gi] * frac)
                flat.append(float(comp_fracs[-1]))
            else:
                if comp.weight is None:
                    raise WeightSumError(
                        f"component ({gi},{cj}): weight required when no "
                        "counts are given"
                    )
                w_ij = _check_weight(comp.weight, f"component ({gi},{cj}) weight")
                flat.append(weight_i * w_ij)
            resolved_comps.append(
                EnsembleComponent(comp.i_index, comp.j_index, comp.state, w_ij, comp.count)
            )

        _check_sum([c.weight for c in resolved_comps], f"group {gi} component weights")
        resolved_groups.append(
            EnsembleGroup(
                weight_i,
                tuple(resolved_comps),
                counts[1][gi] if counts is not None else None,
            )
        )

    _check_sum([g.weight for g in resolved_groups], "group weights")
    return Ensemble(
        groups=tuple(resolved_groups),
        units=units,
        total_count=total,
        flat_weights=tuple(flat),
    )


def trace_density(e: Ensemble) -> float:
    """Trace of the density operator: weighted sum of state norms.

    Equals one up to roundoff for any valid ensemble; exposed as a
    sanity check rather than a computation.
    """
    return math.fsum(
        w * inner_product(c.state, c.state).real for w, c in e.iter_flat()
    )


def group_product(e: Ensemble, i: int) -> float:
    """Weighted average of component variance products inside group i.

    This is the subsystem-level uncertainty product: the conditional
    weights average the per-component products, so the single-state bound
    carries over by convexity.
    """
    if not 0 <= i < len(e.groups):
        raise IndexOutOfRangeError(
            f"group index {i} outside 0..{len(e.groups) - 1}"
        )
    group = e.groups[i]
    return math.fsum(
        c.weight * uncertainty_product(c.state, e.units).product
        for c in group.components
    )


def ensemble_means(e: Ensemble) -> Tuple[float, float]:
    """Ensemble expectations of position and momentum, reduced group-first.

    <x> = sum_i w_i <x_i> with <x_i> = sum_j w_ij <x_ij>, and likewise
    for momentum.
    """
    group_means_x = []
    group_means_p = []
    for group in e.groups:
        per_comp = [
            (c.weight, position_moments(c.state)[0], momentum_moments(c.state, e.units)[0])
            for c in group.components
        ]
        group_means_x.append(math.fsum(w * mx for w, mx, _ in per_comp))
        group_means_p.append(math.fsum(w * mp for w, _, mp in per_comp))
    mean_x = math.fsum(g.weight * m for g, m in zip(e.groups, group_means_x))
    mean_p = math.fsum(g.weight * m for g, m in zip(e.groups, group_means_p))
    return mean_x, mean_p


def ensemble_product(
    e: Ensemble, rel_tol: float = DEFAULT_CLASSIFY_RTOL
) -> EquilibriumVerdict:
    """Full-ensemble uncertainty product with its equilibrium verdict.

    The product is the group-weighted average of the group products; it
    saturates the bound exactly when every component does.
    """
    value = math.fsum(
        g.weight * group_product(e, i) for i, g in enumerate(e.groups)
    )
    return classify(value, e.units, rel_tol)


def mixed_state_moments(e: Ensemble) -> StateStats:
    """Statistical moments of the flat mixture distributions.

    Uses the law of total variance: the mixture variance is the weighted
    mean of component variances plus the weighted spread of component
    means.  Contrast with :func:`ensemble_product`, which averages the
    per-component variance *products* instead and therefore reports a
    smaller value whenever component means disagree.
    """
    pairs = []
    for w, c in e.iter_flat():
        mx, vx = position_moments(c.state)
        mp, vp = momentum_moments(c.state, e.units)
        pairs.append((w, StateStats(mx, vx, mp, vp)))
    mean_x = math.fsum(w * s.mean_x for w, s in pairs)
    mean_p = math.fsum(w * s.mean_p for w, s in pairs)
    var_x = math.fsum(w * s.var_x for w, s in pairs) + math.fsum(
        w * (s.mean_x - mean_x) ** 2 for w, s in pairs
    )
    var_p = math.fsum(w * s.var_p for w, s in pairs) + math.fsum(
        w * (s.mean_p - mean_p) ** 2 for w, s in pairs
    )
    return StateStats(mean_x, var_x, mean_p, var_p)
