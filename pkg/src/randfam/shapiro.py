"""Shapiro-Wilk normality test using Royston's 1995 approximation (AS R94).

Only complete (uncensored) samples are supported.  Inputs longer than
:data:`MAX_N` are reduced to a seeded subsample first, because the
approximation is only calibrated for ``3 <= n <= 5000``.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass
from statistics import NormalDist

import numpy as np

from randfam.errors import DegenerateInputError, DomainError

MAX_N = 5000

_NORMAL = NormalDist()

# Polynomial coefficients, lowest order first.
_C1 = (0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056)
_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)
_C3 = (0.5440, -0.39978, 0.025054, -6.714e-4)
_C4 = (1.3822, -0.77857, 0.062767, -0.0020322)
_C5 = (-1.5861, -0.31082, -0.083751, 0.0038915)
_C6 = (-0.4803, -0.082676, 0.0030302)
_G = (-2.273, 0.459)


def _poly(coeffs: Sequence[float], x: float) -> float:
    result = 0.0
    for c in reversed(coeffs):
        result = result * x + c
    return result


@dataclass(frozen=True)
class SwResult:
    w: float
    p_value: float
    n_used: int
    subsampled: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _coefficients(n: int) -> np.ndarray:
    """Antisymmetric weights for the ordered sample, normalized to unit length."""
    half = n // 2
    if n == 3:
        lower = np.array([math.sqrt(0.5)])
    else:
        m = np.array(
            [_NORMAL.inv_cdf((i - 0.375) / (n + 0.25)) for i in range(1, half + 1)]
        )
        summ2 = 2.0 * float((m**2).sum())
        ssumm2 = math.sqrt(summ2)
        rsn = 1.0 / math.sqrt(n)
        a1 = _poly(_C1, rsn) - m[0] / ssumm2
        if n > 5:
            a2 = -m[1] / ssumm2 + _poly(_C2, rsn)
            fac = math.sqrt(
                (summ2 - 2.0 * m[0] ** 2 - 2.0 * m[1] ** 2)
                / (1.0 - 2.0 * a1**2 - 2.0 * a2**2)
            )
            lower = -m / fac
            lower[0], lower[1] = a1, a2
        else:
            fac = math.sqrt((summ2 - 2.0 * m[0] ** 2) / (1.0 - 2.0 * a1**2))
            lower = -m / fac
            lower[0] = a1
    a = np.zeros(n)
    a[:half] = -lower
    a[n - half :] = lower[::-1]
    return a


def _p_value(w: float, n: int) -> float:
    if n == 3:
        return max(0.0, 6.0 / math.pi * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75))))
    y = math.log1p(-w) if w < 1.0 else -math.inf
    if n <= 11:
        gamma = _poly(_G, n)
        if y >= gamma:
            return 1e-99
        y = -math.log(gamma - y)
        m = _poly(_C3, n)
        s = math.exp(_poly(_C4, n))
    else:
        ln = math.log(n)
        m = _poly(_C5, ln)
        s = math.exp(_poly(_C6, ln))
    if math.isinf(y):
        return 1.0
    z = (y - m) / s
    return min(1.0, max(0.0, 0.5 * math.erfc(z / math.sqrt(2.0))))


def shapiro_wilk(values: Sequence[float], seed: int = 0) -> SwResult:
    """Shapiro-Wilk W and its p-value.

    More than :data:`MAX_N` values are subsampled without replacement using
    ``seed``; the result then has ``subsampled=True``.
    """
    x = np.asarray(values, dtype=float).ravel()
    if x.size < 3:
        raise DomainError(f"Shapiro-Wilk needs at least 3 values, got {x.size}")
    if not np.isfinite(x).all():
        raise DomainError("Shapiro-Wilk input contains non-finite values")
    subsampled = x.size > MAX_N
    if subsampled:
        rng = np.random.default_rng(seed)
        x = x[rng.choice(x.size, MAX_N, replace=False)]
    x = np.sort(x)
    n = x.size
    if not x[-1] - x[0] > 0.0:
        raise DegenerateInputError("Shapiro-Wilk input has zero spread")
    xs = (x - x.mean()) / (x[-1] - x[0])
    a = _coefficients(n)
    num = float(a @ xs)
    w = num * num / (float(a @ a) * float(xs @ xs))
    w = min(w, 1.0)
    if n == 3:
        w = max(w, 0.75)
    return SwResult(w=w, p_value=_p_value(w, n), n_used=n, subsampled=subsampled)
