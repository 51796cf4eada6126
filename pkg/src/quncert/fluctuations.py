"""Bivariate Gaussian phase-space fluctuation density: evaluation,
deterministic sampling, and central-limit-theorem convergence checks.

The density is diagonal by construction, with no x-p cross term:

    f(x, p) = exp(-[(x-mx)^2/sx^2 + (p-mp)^2/sp^2] / 2) / (2 pi sx sp)

Random number contract: batches are drawn from ``numpy.random.Generator``
seeded with PCG64 (normal deviates via numpy's ziggurat).  Fixed-seed
results in the test suite are frozen against this generator; swapping it
out invalidates them.  Each batch owns its own generator, so independently
seeded batches can be produced concurrently.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import (
    DegenerateVarianceError,
    InsufficientSamplesError,
    NonPositiveSigmaError,
)
from .observables import StateStats

# Draws handled per chunk when aggregating micro-fluctuations; keeps peak
# memory flat without changing the stream (rows fill in C order).
_CHUNK_DRAWS = 1 << 22


@dataclass(frozen=True)
class PhaseSpaceGaussian:
    """Parameters of the diagonal bivariate fluctuation density."""

    mean_x: float
    mean_p: float
    sigma_x: float
    sigma_p: float

    def __post_init__(self):
        if not (self.sigma_x > 0 and self.sigma_p > 0):
            raise NonPositiveSigmaError(
                f"sigmas must be positive, got ({self.sigma_x}, {self.sigma_p})"
            )


def density_eval(g: PhaseSpaceGaussian, x, p):
    """Evaluate the fluctuation density at (x, p); accepts arrays."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    zx = (x - g.mean_x) / g.sigma_x
    zp = (p - g.mean_p) / g.sigma_p
    value = np.exp(-0.5 * (zx**2 + zp**2)) / (2.0 * np.pi * g.sigma_x * g.sigma_p)
    return float(value) if value.ndim == 0 else value


def from_stats(s: StateStats) -> PhaseSpaceGaussian:
    """Fluctuation density whose spreads match a state's moments.

    Raises DegenerateVarianceError when either variance vanishes.
    """
    if not (s.var_x > 0 and s.var_p > 0):
        raise DegenerateVarianceError(
            f"need positive variances, got ({s.var_x}, {s.var_p})"
        )
    return PhaseSpaceGaussian(
        s.mean_x, s.mean_p, float(np.sqrt(s.var_x)), float(np.sqrt(s.var_p))
    )


@dataclass(frozen=True)
class SampleBatch:
    """Deterministic batch of (x, p) draws from one fluctuation density."""

    seed: int
    points: np.ndarray  # shape (n, 2)
    source: PhaseSpaceGaussian

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"points must have shape (n, 2), got {pts.shape}")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def count(self) -> int:
        return self.points.shape[0]


def sample(g: PhaseSpaceGaussian, n: int, seed: int) -> SampleBatch:
    """Draw n independent (x, p) pairs; x and p are uncorrelated.

    Regenerating with the same seed and count yields a bitwise-identical
    stream.
    """
    if n < 0:
        raise ValueError(f"sample count must be >= 0, got {n}")
    rng = np.random.Generator(np.random.PCG64(seed))
    xs = rng.normal(g.mean_x, g.sigma_x, size=n)
    ps = rng.normal(g.mean_p, g.sigma_p, size=n)
    return SampleBatch(seed=seed, points=np.column_stack([xs, ps]), source=g)


def batch_to_csv(batch: SampleBatch, path) -> None:
    """Write the batch as CSV: header ``x,p``, 17 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "p"])
        for x, p in batch.points:
            writer.writerow([format(x, ".17g"), format(p, ".17g")])


@dataclass(frozen=True)
class MomentReport:
    """Empirical moments of a sample; higher moments may be absent.

    Variances are unbiased (divisor n-1).  Skewness and excess kurtosis
    use the standard moment-ratio estimators and are None below counts of
    3 and 4 respectively, or whenever a variance degenerates to zero (the
    ``degenerate`` flag is set instead of raising).
    """

    count: int
    mean_x: float
    var_x: float
    mean_p: Optional[float] = None
    var_p: Optional[float] = None
    corr_xp: Optional[float] = None
    skew_x: Optional[float] = None
    skew_p: Optional[float] = None
    excess_kurt_x: Optional[float] = None
    excess_kurt_p: Optional[float] = None
    degenerate: bool = False


def _axis_moments(values: np.ndarray):
    n = values.size
    mean = float(np.mean(values))
    centered = values - mean
    m2 = float(np.mean(centered**2))
    var = float(np.sum(centered**2) / (n - 1))
    if m2 == 0.0:
        return mean, var, None, None, True
    skew = float(np.mean(centered**3) / m2**1.5) if n >= 3 else None
    kurt = float(np.mean(centered**4) / m2**2 - 3.0) if n >= 4 else None
    return mean, var, skew, kurt, False


def estimate_moments(batch: SampleBatch) -> MomentReport:
    """Empirical moment report for a phase-space batch.

    Raises InsufficientSamplesError below two points (no variance exists).
    Zero-variance batches are reported with the degenerate flag rather
    than rejected.
    """
    n = batch.count
    if n < 2:
        raise InsufficientSamplesError(f"need at least 2 samples, got {n}")
    xs = batch.points[:, 0]
    ps = batch.points[:, 1]
    mean_x, var_x, skew_x, kurt_x, degen_x = _axis_moments(xs)
    mean_p, var_p, skew_p, kurt_p, degen_p = _axis_moments(ps)
    degenerate = degen_x or degen_p
    if degenerate:
        corr = None
    else:
        cov = float(np.sum((xs - mean_x) * (ps - mean_p)) / (n - 1))
        corr = cov / float(np.sqrt(var_x * var_p))
    return MomentReport(
        count=n,
        mean_x=mean_x,
        var_x=var_x,
        mean_p=mean_p,
        var_p=var_p,
        corr_xp=corr,
        skew_x=skew_x,
        skew_p=skew_p,
        excess_kurt_x=kurt_x,
        excess_kurt_p=kurt_p,
        degenerate=degenerate,
    )


# --- micro-fluctuation models for the CLT study ------------------------------


@dataclass(frozen=True)
class Uniform:
    """Uniform law on [a, b]; excess kurtosis -6/5."""

    a: float
    b: float

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError(f"need b > a, got [{self.a}, {self.b}]")

    @property
    def mean(self) -> float:
        return 0.5 * (self.a + self.b)

    @property
    def std(self) -> float:
        return (self.b - self.a) / np.sqrt(12.0)

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        return rng.uniform(self.a, self.b, size=size)


@dataclass(frozen=True)
class TwoPoint:
    """Equal-probability two-point law {v1, v2}; excess kurtosis -2."""

    v1: float
    v2: float

    def __post_init__(self):
        if self.v1 == self.v2:
            raise ValueError("two-point law needs distinct values")

    @property
    def mean(self) -> float:
        return 0.5 * (self.v1 + self.v2)

    @property
    def std(self) -> float:
        return 0.5 * abs(self.v2 - self.v1)

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        picks = rng.integers(0, 2, size=size)
        return np.where(picks == 0, self.v1, self.v2)


@dataclass(frozen=True)
class Exponential:
    """Exponential law with the given rate; skewness 2, excess kurtosis 6."""

    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"rate must be positive, got {self.rate}")

    @property
    def mean(self) -> float:
        return 1.0 / self.rate

    @property
    def std(self) -> float:
        return 1.0 / self.rate

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        return rng.standard_exponential(size=size) / self.rate


MicroDistribution = Union[Uniform, TwoPoint, Exponential]


def clt_aggregate(
    micro: MicroDistribution, m_terms: int, n_samples: int, seed: int
) -> MomentReport:
    """Moments of standardized sums of i.i.d. micro-fluctuations.

    Each of the ``n_samples`` values is ``(sum of m draws - m*mu) /
    (sigma*sqrt(m))``, so the report converges to standard-normal moments
    as ``m_terms`` grows; its skewness and excess kurtosis quantify how
    far the aggregate still is from the Gaussian fluctuation law.

    The report is one-dimensional: only the x-side fields are populated.
    """
    if m_terms < 1:
        raise ValueError(f"m_terms must be >= 1, got {m_terms}")
    if n_samples < 4:
        raise InsufficientSamplesError(
            f"need at least 4 samples for the report, got {n_samples}"
        )
    rng = np.random.Generator(np.random.PCG64(seed))
    chunk = max(1, _CHUNK_DRAWS // m_terms)
    sums = np.empty(n_samples)
    done = 0
    while done < n_samples:
        take = min(chunk, n_samples - done)
        sums[done : done + take] = micro.draw(rng, (take, m_terms)).sum(axis=1)
        done += take
    z = (sums - m_terms * micro.mean) / (micro.std * np.sqrt(m_terms))
    mean, var, skew, kurt, degen = _axis_moments(z)
    return MomentReport(
        count=n_samples,
        mean_x=mean,
        var_x=var,
        skew_x=skew,
        excess_kurt_x=kurt,
        degenerate=degen,
    )
