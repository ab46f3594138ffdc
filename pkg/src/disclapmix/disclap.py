"""Univariate discrete Laplace distribution.

``DL(p, y)`` has mass ``(1 - p) / (1 + p) * p ** |x - y|`` on the integers,
with dispersion ``0 < p < 1`` and integer location ``y``.  ``p == 0`` is
accepted as a degenerate point mass at ``y`` (what :func:`mle` returns for
constant data).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

# exponent magnitude above which p ** d is evaluated through exp(log)
_LOG_SAFE = 700.0


@dataclass(frozen=True)
class DiscreteLaplace:
    p: float
    y: int = 0

    def __post_init__(self) -> None:
        if not (0.0 <= self.p < 1.0) or math.isnan(self.p):
            raise ValueError(f"dispersion p must lie in [0, 1), got {self.p!r}")
        if int(self.y) != self.y:
            raise ValueError(f"location y must be an integer, got {self.y!r}")
        object.__setattr__(self, "y", int(self.y))

    @property
    def degenerate(self) -> bool:
        return self.p == 0.0

    def pmf(self, x):
        """Probability mass at ``x`` (scalar or array of integers)."""
        d = np.abs(np.asarray(x, dtype=np.int64) - self.y)
        if self.p == 0.0:
            out = (d == 0).astype(float)
        else:
            coef = (1.0 - self.p) / (1.0 + self.p)
            logp = math.log(self.p)
            with np.errstate(under="ignore"):
                direct = coef * np.power(self.p, d.astype(float))
                far = d * -logp > _LOG_SAFE
                if np.any(far):
                    direct = np.where(far, np.exp(math.log(coef) + d * logp), direct)
            out = direct
        return out if out.ndim else float(out)

    def log_pmf(self, x):
        if self.p <= 0.0:
            raise ValueError("log_pmf is undefined for the degenerate point mass (p = 0)")
        d = np.abs(np.asarray(x, dtype=np.int64) - self.y)
        out = math.log1p(-self.p) - math.log1p(self.p) + d * math.log(self.p)
        return out if np.ndim(out) else float(out)

    def mean_abs_deviation(self) -> float:
        """E|X - y| = 2p / (1 - p^2)."""
        return 2.0 * self.p / (1.0 - self.p * self.p)

    def sample(self, n: int, rng: np.random.Generator) -> npt.NDArray[np.int64]:
        """Draw ``n`` values as ``y + G1 - G2`` with G1, G2 i.i.d. geometric on {0, 1, ...}."""
        if n < 0:
            raise ValueError("n must be non-negative")
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"sampling requires 0 < p < 1, got {self.p!r}")
        if n == 0:
            return np.empty(0, dtype=np.int64)
        g1 = rng.geometric(1.0 - self.p, size=n)
        g2 = rng.geometric(1.0 - self.p, size=n)
        return (self.y + g1 - g2).astype(np.int64)


@dataclass(frozen=True)
class SingleSampleMle:
    y_hat: int
    mu_hat: float
    p_hat: float

    def distribution(self) -> DiscreteLaplace:
        return DiscreteLaplace(self.p_hat, self.y_hat)


def lower_median(xs) -> int:
    """Median of integers; the lower middle order statistic when ``len(xs)`` is even."""
    a = np.sort(np.asarray(xs, dtype=np.int64))
    if a.size == 0:
        raise ValueError("median of an empty sample")
    return int(a[(a.size - 1) // 2])


def dispersion_from_mad(mu: float) -> float:
    """Invert ``mu = 2p / (1 - p^2)`` for p in [0, 1)."""
    if mu < 0:
        raise ValueError("mean absolute deviation must be non-negative")
    if mu == 0:
        return 0.0
    # (sqrt(mu^2 + 1) - 1) / mu, rewritten to avoid cancellation for small mu
    return mu / (math.sqrt(mu * mu + 1.0) + 1.0)


def mle(xs) -> SingleSampleMle:
    """Closed-form maximum likelihood estimates from a single integer sample."""
    a = np.asarray(xs, dtype=np.int64).ravel()
    if a.size == 0:
        raise ValueError("mle needs at least one observation")
    y_hat = lower_median(a)
    mu_hat = float(np.mean(np.abs(a - y_hat)))
    return SingleSampleMle(y_hat, mu_hat, dispersion_from_mad(mu_hat))
