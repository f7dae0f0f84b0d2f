"""Gaussian kernel density estimates on a regular grid."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from randfam.errors import DegenerateInputError, DomainError

SILVERMAN = "silverman"

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class KdeConfig:
    """Bandwidth (a positive float or ``"silverman"``) and output grid.

    Without ``grid_range`` the grid spans the data padded by three
    bandwidths on each side.
    """

    bandwidth: float | str = SILVERMAN
    grid_points: int = 512
    grid_range: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if isinstance(self.bandwidth, str):
            if self.bandwidth != SILVERMAN:
                raise DomainError(f"unknown bandwidth rule {self.bandwidth!r}")
        elif not (math.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise DomainError(f"bandwidth must be positive, got {self.bandwidth}")
        if self.grid_points < 2:
            raise DomainError("grid_points must be >= 2")
        if self.grid_range is not None and not self.grid_range[1] > self.grid_range[0]:
            raise DomainError(f"empty grid range {self.grid_range}")


def silverman_bandwidth(
    values: Sequence[float], weights: Sequence[float] | None = None
) -> float:
    """``0.9 * min(sd, IQR / 1.34) * n**(-1/5)``.

    With ``weights`` the quartiles use the inverted empirical CDF.  Falls
    back to the standard deviation when the IQR is zero.  Raises
    :class:`DegenerateInputError` when every value is identical.
    """
    v = np.asarray(values, dtype=float).ravel()
    w = np.ones_like(v) if weights is None else np.asarray(weights, dtype=float).ravel()
    n = float(w.sum())
    if n < 2:
        raise DegenerateInputError(
            "Silverman's rule needs at least two values; pass an explicit bandwidth"
        )
    mean = float((w * v).sum() / n)
    sd = math.sqrt(float((w * (v - mean) ** 2).sum()) / (n - 1))
    if weights is None:
        q1, q3 = np.quantile(v, [0.25, 0.75])
    else:
        q1, q3 = np.quantile(v, [0.25, 0.75], weights=w, method="inverted_cdf")
    iqr = float(q3 - q1)
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    if not spread > 0:
        raise DegenerateInputError(
            "all values are identical so the bandwidth rule gives zero; "
            "pass an explicit bandwidth"
        )
    return 0.9 * spread * n ** (-0.2)


def kde_evaluate(
    values: Sequence[float],
    points: Sequence[float],
    bandwidth: float,
    weights: Sequence[float] | None = None,
) -> np.ndarray:
    """Density ``(1/(n h)) * sum_i w_i * phi((g - v_i) / h)`` at each point ``g``."""
    v = np.asarray(values, dtype=float).ravel()
    g = np.asarray(points, dtype=float).ravel()
    if v.size == 0:
        raise DomainError("KDE needs at least one value")
    if not bandwidth > 0:
        raise DomainError(f"bandwidth must be positive, got {bandwidth}")
    w = np.ones_like(v) if weights is None else np.asarray(weights, dtype=float).ravel()
    total = float(w.sum())
    out = np.zeros(g.size)
    # bounded working set: about 4M kernel evaluations per step
    step = max(1, 4_000_000 // max(1, g.size))
    for start in range(0, v.size, step):
        z = (g[:, None] - v[None, start : start + step]) / bandwidth
        out += np.exp(-0.5 * z * z) @ w[start : start + step]
    return out * _INV_SQRT_2PI / (total * bandwidth)


def kde_density(
    values: Sequence[float],
    cfg: KdeConfig = KdeConfig(),
    weights: Sequence[float] | None = None,
) -> list[tuple[float, float]]:
    """Gaussian KDE of ``values`` as ``(grid point, density)`` pairs.

    ``weights`` turns the values into a weighted sample, e.g. histogram
    midpoints with bin counts.  Repeated values are collapsed before
    evaluation, which changes nothing but the cost.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise DomainError("KDE needs at least one value")
    if not np.isfinite(v).all():
        raise DomainError("KDE input contains non-finite values")
    w = np.ones_like(v) if weights is None else np.asarray(weights, dtype=float).ravel()
    if w.shape != v.shape:
        raise DomainError("weights must match values in length")
    if isinstance(cfg.bandwidth, str):
        h = silverman_bandwidth(v, weights)
    else:
        h = float(cfg.bandwidth)
    uniq, inverse = np.unique(v, return_inverse=True)
    if uniq.size < v.size:
        w = np.bincount(inverse.ravel(), weights=w, minlength=uniq.size)
        v = uniq
    if cfg.grid_range is None:
        lo, hi = float(v.min()) - 3 * h, float(v.max()) + 3 * h
    else:
        lo, hi = cfg.grid_range
    grid = np.linspace(lo, hi, cfg.grid_points)
    dens = kde_evaluate(v, grid, h, w)
    return list(zip(grid.tolist(), dens.tolist()))
