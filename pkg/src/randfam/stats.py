"""Statistic kernels and a mergeable streaming summary.

Variances and covariances use the population (``1/n``) convention: the
derangement family is a complete population rather than a sample.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from randfam.errors import DegenerateInputError, DomainError


@dataclass(frozen=True)
class PairedSample:
    """Original data: explanatory ``x`` paired index-by-index with objective ``y``."""

    x: np.ndarray
    y: np.ndarray

    def __init__(self, x: Sequence[float], y: Sequence[float]) -> None:
        xa = np.array(x, dtype=float)
        ya = np.array(y, dtype=float)
        if xa.ndim != 1 or ya.ndim != 1:
            raise DomainError("x and y must be one-dimensional")
        if len(xa) != len(ya):
            raise DomainError(f"x has {len(xa)} values but y has {len(ya)}")
        if len(xa) < 3:
            raise DomainError(f"need n >= 3 paired values, got n={len(xa)}")
        for name, arr in (("x", xa), ("y", ya)):
            if not np.isfinite(arr).all():
                bad = int(np.flatnonzero(~np.isfinite(arr))[0])
                raise DomainError(f"{name}[{bad}] is not finite")
        xa.flags.writeable = False
        ya.flags.writeable = False
        object.__setattr__(self, "x", xa)
        object.__setattr__(self, "y", ya)

    @property
    def n(self) -> int:
        return len(self.x)

    def permuted(self, perm: Sequence[int]) -> PairedSample:
        """Pair ``x`` re-indexed by the 0-based ``perm`` with the unchanged ``y``."""
        return PairedSample(self.x[np.asarray(perm)], self.y)


def _require_spread(values: np.ndarray, name: str) -> float:
    ss = float(((values - values.mean()) ** 2).sum())
    if not ss > 0.0:
        raise DegenerateInputError(f"{name} has zero variance")
    return ss


def covariance(s: PairedSample) -> float:
    """Population covariance ``(1/n) * sum((x - mean x) * (y - mean y))``."""
    return float(((s.x - s.x.mean()) * (s.y - s.y.mean())).sum() / s.n)


def pearson_r(s: PairedSample) -> float:
    """Pearson correlation coefficient, clipped to ``[-1, 1]``."""
    sxx = _require_spread(s.x, "x")
    syy = _require_spread(s.y, "y")
    sxy = float(((s.x - s.x.mean()) * (s.y - s.y.mean())).sum())
    return max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))


def ols_slope(s: PairedSample) -> float:
    """Least-squares slope ``sum(y_i * (x_i - mean x)) / sum((x_i - mean x)**2)``."""
    xc = s.x - s.x.mean()
    sxx = _require_spread(s.x, "x")
    return float((s.y * xc).sum() / sxx)


def t_statistic(r: float, n: int) -> float:
    """Test statistic ``r * sqrt(n - 2) / sqrt(1 - r**2)`` for zero correlation."""
    if n <= 2:
        raise DomainError(f"t statistic needs n > 2, got n={n}")
    if not -1.0 <= r <= 1.0:
        raise DomainError(f"correlation must lie in [-1, 1], got {r}")
    if abs(r) == 1.0:
        raise DomainError("t statistic is unbounded for |r| = 1")
    return r * math.sqrt(n - 2) / math.sqrt((1.0 - r) * (1.0 + r))


def t_cdf(t: float, df: int) -> float:
    """``P(T <= t)`` for Student's t with ``df`` degrees of freedom.

    Evaluated through the regularized incomplete beta function
    ``I_x(df/2, 1/2)`` with ``x = df / (df + t**2)``.
    """
    if df < 1:
        raise DomainError(f"degrees of freedom must be >= 1, got {df}")
    if math.isnan(t):
        return math.nan
    if math.isinf(t):
        return 1.0 if t > 0 else 0.0
    tail = 0.5 * float(special.betainc(df / 2.0, 0.5, df / (df + t * t)))
    return 1.0 - tail if t > 0 else tail


@dataclass
class DistributionSummary:
    """Streaming summary of statistic values over a family.

    Tracks count, mean and sum of squared deviations (merged with the
    pairwise update of Chan et al.), extremes, a fixed-edge histogram, exact
    tail counters relative to ``reference`` and, while ``count`` stays within
    ``retention_cap``, the values themselves.

    Tail comparisons treat values within ``tolerance`` of the threshold as
    ties, so round-off in the statistic cannot flip a tie.  ``abs_ge_observed``
    counts values with ``|v - center| >= |reference - center|``.
    """

    reference: float = 0.0
    center: float = 0.0
    tolerance: float = 0.0
    hist_range: tuple[float, float] = (0.0, 1.0)
    bins: int = 256
    retention_cap: int = 2**24
    count: int = 0
    mean: float = 0.0
    m2: float = 0.0
    min: float = math.inf
    max: float = -math.inf
    ge_observed: int = 0
    le_observed: int = 0
    abs_ge_observed: int = 0
    histogram: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    _retained: list[np.ndarray] | None = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        if self.bins < 1:
            raise DomainError("histogram needs at least one bin")
        lo, hi = (float(v) for v in self.hist_range)
        if not hi > lo:
            lo, hi = lo - 0.5, hi + 0.5
        self.hist_range = (lo, hi)
        if self.histogram is None:
            self.histogram = np.zeros(self.bins, dtype=np.int64)

    @property
    def variance(self) -> float:
        return self.m2 / self.count if self.count else math.nan

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    @property
    def retained(self) -> np.ndarray | None:
        if self._retained is None:
            return None
        if len(self._retained) != 1:
            joined = (
                np.concatenate(self._retained) if self._retained else np.empty(0)
            )
            self._retained = [joined]
        return self._retained[0]

    @property
    def bin_edges(self) -> np.ndarray:
        return np.linspace(self.hist_range[0], self.hist_range[1], self.bins + 1)

    def empty_like(self) -> DistributionSummary:
        """A fresh summary with the same reference, tolerances and histogram edges."""
        return DistributionSummary(
            reference=self.reference,
            center=self.center,
            tolerance=self.tolerance,
            hist_range=self.hist_range,
            bins=self.bins,
            retention_cap=self.retention_cap,
        )

    def _bin_index(self, values: np.ndarray) -> np.ndarray:
        lo, hi = self.hist_range
        idx = np.floor((values - lo) / (hi - lo) * self.bins).astype(np.int64)
        return np.clip(idx, 0, self.bins - 1)

    def _count_tails(self, values: np.ndarray) -> tuple[int, int, int]:
        ref, tol = self.reference, self.tolerance
        ge = int(np.count_nonzero(values >= ref - tol))
        le = int(np.count_nonzero(values <= ref + tol))
        dist = abs(ref - self.center)
        ab = int(np.count_nonzero(np.abs(values - self.center) >= dist - tol))
        return ge, le, ab

    def _retain(self, values: np.ndarray) -> None:
        if self._retained is None:
            return
        if self.count > self.retention_cap:
            self._retained = None
        else:
            self._retained.append(np.array(values, dtype=float))

    def add(self, value: float) -> None:
        """Accumulate one value with Welford's update."""
        v = float(value)
        if not math.isfinite(v):
            raise DomainError(f"cannot accumulate non-finite value {v}")
        self.count += 1
        delta = v - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (v - self.mean)
        self.min = min(self.min, v)
        self.max = max(self.max, v)
        arr = np.array([v])
        ge, le, ab = self._count_tails(arr)
        self.ge_observed += ge
        self.le_observed += le
        self.abs_ge_observed += ab
        self.histogram[self._bin_index(arr)[0]] += 1
        self._retain(arr)

    def add_batch(self, values: np.ndarray) -> None:
        """Accumulate a block of values; equivalent to merging a summary of the block."""
        values = np.asarray(values, dtype=float).ravel()
        if values.size == 0:
            return
        if not np.isfinite(values).all():
            raise DomainError("cannot accumulate non-finite values")
        part = self.empty_like()
        part.count = int(values.size)
        part.mean = float(values.mean())
        part.m2 = float(((values - part.mean) ** 2).sum())
        part.min = float(values.min())
        part.max = float(values.max())
        part.ge_observed, part.le_observed, part.abs_ge_observed = part._count_tails(
            values
        )
        part.histogram = np.bincount(self._bin_index(values), minlength=self.bins)
        part._retain(values)
        self.merge_in(part)

    def merge_in(self, other: DistributionSummary) -> None:
        """Fold ``other`` into this summary in place."""
        if (
            other.reference != self.reference
            or other.center != self.center
            or other.hist_range != self.hist_range
            or other.bins != self.bins
        ):
            raise DomainError("summaries with different references or bins cannot merge")
        if other.count == 0:
            return
        if self.count == 0:
            self.mean, self.m2 = other.mean, other.m2
        else:
            total = self.count + other.count
            delta = other.mean - self.mean
            self.mean = (self.count * self.mean + other.count * other.mean) / total
            self.m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / total
        self.count += other.count
        self.min = min(self.min, other.min)
        self.max = max(self.max, other.max)
        self.ge_observed += other.ge_observed
        self.le_observed += other.le_observed
        self.abs_ge_observed += other.abs_ge_observed
        self.histogram = self.histogram + other.histogram
        if self._retained is not None:
            if other._retained is None or self.count > self.retention_cap:
                self._retained = None
            else:
                self._retained.extend(other._retained)

    def merge(self, other: DistributionSummary) -> DistributionSummary:
        """Return a new summary covering both inputs."""
        out = self.empty_like()
        out.merge_in(self)
        out.merge_in(other)
        return out


def accumulate(summary: DistributionSummary, value: float) -> DistributionSummary:
    """Add ``value`` to ``summary`` and return it."""
    summary.add(value)
    return summary
