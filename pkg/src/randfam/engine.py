"""The random family test: an observed statistic against its derangement family.

For every derangement ``sigma`` the statistic is evaluated on the pairs
``(x[sigma(i)], y[i])``; the observed (identity) pairing is never part of
the family.  Exact mode visits all ``N(n)`` derangements, Monte Carlo mode
draws them uniformly.

Work is split into fixed units (exact: by the image of position 1;
Monte Carlo: by sample block) whose partial summaries are merged in unit
order, so results are bit-identical for any number of workers.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from randfam import stats
from randfam.derangements import (
    block_rng,
    count_derangements,
    iter_derangement_blocks,
    sample_derangement_block,
)
from randfam.errors import DegenerateInputError, DomainError, SizeRefusalError
from randfam.stats import DistributionSummary, PairedSample

#: Monte Carlo draws per work unit; part of the reproducibility contract.
MC_BLOCK = 1 << 16

# relative width of the tie band used by the tail counters
_TIE_RTOL = 1e-12


class StatisticKind(str, enum.Enum):
    OLS_SLOPE = "slope"
    PEARSON_R = "pearson"
    COVARIANCE = "cov"


class Mode(str, enum.Enum):
    EXACT = "exact"
    MONTE_CARLO = "mc"


class Center(str, enum.Enum):
    """Where the two-sided tail is centred."""

    FAMILY_MEAN = "mean"
    ZERO = "zero"


_SCALAR_KERNELS = {
    StatisticKind.OLS_SLOPE: stats.ols_slope,
    StatisticKind.PEARSON_R: stats.pearson_r,
    StatisticKind.COVARIANCE: stats.covariance,
}


def statistic_value(s: PairedSample, kind: StatisticKind | str) -> float:
    """Evaluate the scalar kernel for ``kind`` on the original pairing."""
    return _SCALAR_KERNELS[StatisticKind(kind)](s)


@dataclass(frozen=True)
class RfmConfig:
    statistic: StatisticKind = StatisticKind.OLS_SLOPE
    mode: Mode = Mode.EXACT
    mc_samples: int = 10_000
    seed: int = 0
    retention_cap: int = 2**24
    histogram_bins: int = 256
    max_exact_n: int = 12
    allow_large: bool = False
    center: Center = Center.FAMILY_MEAN
    workers: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "statistic", StatisticKind(self.statistic))
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "center", Center(self.center))
        if self.mode is Mode.MONTE_CARLO and self.mc_samples < 1:
            raise DomainError("mc_samples must be >= 1 in Monte Carlo mode")
        if self.max_exact_n < 2:
            raise DomainError("max_exact_n must be >= 2")
        if self.seed < 0:
            raise DomainError("seed must be a non-negative integer")
        if self.histogram_bins < 1:
            raise DomainError("histogram_bins must be >= 1")
        if self.retention_cap < 0:
            raise DomainError("retention_cap must be >= 0")
        if self.workers < 1:
            raise DomainError("workers must be >= 1")


@dataclass
class RfmResult:
    observed: float
    family: DistributionSummary = field(repr=False)
    p_upper: float
    p_lower: float
    p_two_sided: float
    percentile_of_observed: float
    family_size: int
    mode: Mode
    seed: int
    statistic: StatisticKind
    n: int
    center: Center
    center_value: float
    expected_mean: float

    def to_dict(self) -> dict:
        fam = self.family
        return {
            "statistic": self.statistic.value,
            "mode": self.mode.value,
            "seed": self.seed,
            "n": self.n,
            "observed": self.observed,
            "family_size": self.family_size,
            "family": {
                "count": fam.count,
                "mean": fam.mean,
                "variance": fam.variance,
                "sd": fam.std,
                "min": fam.min,
                "max": fam.max,
                "ge_observed": fam.ge_observed,
                "le_observed": fam.le_observed,
                "abs_ge_observed": fam.abs_ge_observed,
                "tie_tolerance": fam.tolerance,
                "retained": fam.retained is not None,
            },
            "expected_family_mean": self.expected_mean,
            "two_sided_center": self.center.value,
            "two_sided_center_value": self.center_value,
            "p_upper": self.p_upper,
            "p_lower": self.p_lower,
            "p_two_sided": self.p_two_sided,
            "percentile_of_observed": self.percentile_of_observed,
        }


@dataclass(frozen=True)
class _FamilyKernel:
    """Vectorized statistic over many re-pairings of ``x`` at once.

    Every supported statistic is ``scale * sum_i xc[sigma(i)] * w[i]`` with
    ``xc = x - mean(x)``, since the denominators are permutation invariant.
    """

    xc: np.ndarray
    w: np.ndarray
    scale: float

    @classmethod
    def build(cls, s: PairedSample, kind: StatisticKind) -> _FamilyKernel:
        statistic_value(s, kind)  # raises on degenerate input
        xc = s.x - s.x.mean()
        yc = s.y - s.y.mean()
        if kind is StatisticKind.OLS_SLOPE:
            return cls(xc, s.y.copy(), 1.0 / float((xc * xc).sum()))
        if kind is StatisticKind.COVARIANCE:
            return cls(xc, yc, 1.0 / s.n)
        denom = math.sqrt(float((xc * xc).sum()) * float((yc * yc).sum()))
        return cls(xc, yc, 1.0 / denom)

    def values(self, perms: np.ndarray) -> np.ndarray:
        out = (self.xc[perms] @ self.w) * self.scale
        if not np.isfinite(out).all():
            bad = perms[int(np.flatnonzero(~np.isfinite(out))[0])] + 1
            raise DegenerateInputError(
                f"statistic is not finite for family member {tuple(bad.tolist())}"
            )
        return out

    def support(self) -> tuple[float, float, float]:
        """Bounds on any re-pairing (rearrangement inequality) and a magnitude scale."""
        a = np.sort(self.xc)
        b = np.sort(self.w)
        hi = float(a @ b) * self.scale
        lo = float(a @ b[::-1]) * self.scale
        mag = float(np.sort(np.abs(self.xc)) @ np.sort(np.abs(self.w))) * self.scale
        return lo, hi, mag


def expected_family_mean(
    s: PairedSample, statistic: StatisticKind | str = StatisticKind.OLS_SLOPE
) -> float:
    """Mean of the statistic over all derangements: ``-statistic(s) / (n - 1)``.

    Each off-diagonal position ``sigma(i) = j`` occurs in the same share
    ``1/(n-1)`` of derangements, so ``E[x[sigma(i)]] = (n*mean(x) - x_i)/(n-1)``
    and every statistic linear in the re-paired ``x`` picks up the factor
    ``-1/(n-1)``.
    """
    return -statistic_value(s, statistic) / (s.n - 1)


def percentile_of(summary: DistributionSummary, observed: float) -> float:
    """Mid-rank percentile: ``100 * (#{v < observed} + #{v == observed} / 2) / count``.

    Uses the exact tail counters when ``observed`` is the summary's
    reference, otherwise the retained values.
    """
    if summary.count == 0:
        raise DomainError("percentile of an empty summary is undefined")
    if observed == summary.reference:
        ge, le = summary.ge_observed, summary.le_observed
    else:
        values = summary.retained
        if values is None:
            raise DomainError(
                "values were not retained; percentile is only available for "
                "the summary's reference value"
            )
        tol = summary.tolerance
        ge = int(np.count_nonzero(values >= observed - tol))
        le = int(np.count_nonzero(values <= observed + tol))
    # below = count - ge, ties = ge + le - count
    return 100.0 * (summary.count + le - ge) / (2.0 * summary.count)


def _exact_unit(
    kernel: _FamilyKernel, template: DistributionSummary, n: int, first: int
) -> DistributionSummary:
    summary = template.empty_like()
    for block in iter_derangement_blocks(n, first=first):
        summary.add_batch(kernel.values(block))
    return summary


def _mc_unit(
    kernel: _FamilyKernel,
    template: DistributionSummary,
    n: int,
    seed: int,
    block: int,
    size: int,
) -> DistributionSummary:
    summary = template.empty_like()
    perms = sample_derangement_block(n, size, block_rng(seed, block))
    summary.add_batch(kernel.values(perms))
    return summary


def _run_units(func, tasks: list[tuple], workers: int) -> list[DistributionSummary]:
    if workers <= 1 or len(tasks) <= 1:
        return [func(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(func, *zip(*tasks)))


def rfm_test(s: PairedSample, cfg: RfmConfig = RfmConfig()) -> RfmResult:
    """Compare the observed statistic with its distribution over the random family."""
    n = s.n
    kind = cfg.statistic
    if cfg.mode is Mode.EXACT and n > cfg.max_exact_n and not cfg.allow_large:
        raise SizeRefusalError(
            f"exact mode for n={n} evaluates N({n})={count_derangements(n):,} "
            f"derangements, above the cap n<={cfg.max_exact_n}; use Monte Carlo "
            "mode or raise the cap explicitly"
        )
    kernel = _FamilyKernel.build(s, kind)
    observed = float(kernel.values(np.arange(n)[None, :])[0])
    expected = -observed / (n - 1)
    center = expected if cfg.center is Center.FAMILY_MEAN else 0.0
    lo, hi, mag = kernel.support()
    template = DistributionSummary(
        reference=observed,
        center=center,
        tolerance=_TIE_RTOL * max(mag, abs(observed)),
        hist_range=(lo, hi),
        bins=cfg.histogram_bins,
        retention_cap=cfg.retention_cap,
    )

    if cfg.mode is Mode.EXACT:
        tasks = [(kernel, template, n, first) for first in range(2, n + 1)]
        parts = _run_units(_exact_unit, tasks, cfg.workers)
    else:
        m = cfg.mc_samples
        tasks = [
            (kernel, template, n, cfg.seed, b, min(MC_BLOCK, m - b * MC_BLOCK))
            for b in range(math.ceil(m / MC_BLOCK))
        ]
        parts = _run_units(_mc_unit, tasks, cfg.workers)

    family = template.empty_like()
    for part in parts:
        family.merge_in(part)

    if cfg.mode is Mode.EXACT:
        size = count_derangements(n)
        if family.count != size:
            raise RuntimeError(f"enumerated {family.count} members, expected {size}")

        def p(b: int) -> float:
            return b / size
    else:
        size = cfg.mc_samples

        def p(b: int) -> float:
            return (b + 1) / (size + 1)

    return RfmResult(
        observed=observed,
        family=family,
        p_upper=p(family.ge_observed),
        p_lower=p(family.le_observed),
        p_two_sided=p(family.abs_ge_observed),
        percentile_of_observed=percentile_of(family, observed),
        family_size=size,
        mode=cfg.mode,
        seed=cfg.seed,
        statistic=kind,
        n=n,
        center=cfg.center,
        center_value=center,
        expected_mean=expected,
    )
