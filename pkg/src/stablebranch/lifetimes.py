"""Particle lifetime laws.

Three families cover the regimes of interest: Exponential (the
memoryless classic), Gamma (finite mean, non-constant hazard), and
ParetoTail (regularly varying survival with infinite mean).  The
ParetoTail law is calibrated so that its survival function satisfies

    sf(u) * Gamma(1 - gamma) * u**gamma  ->  1   as u -> infinity,

i.e. the tail constant is exactly one; `make_pareto_tail` picks the
scale that achieves this.

All sampling is inverse-CDF, one uniform per draw, which keeps
counter-based replicate streams aligned regardless of platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special


def _as_array(u):
    return np.asarray(u, dtype=float)


@dataclass(frozen=True)
class Exponential:
    """Exponential lifetimes with the given rate."""

    rate: float

    def __post_init__(self):
        if self.rate <= 0.0:
            raise ValueError("rate must be positive")

    name = "exponential"

    def cdf(self, u):
        u = _as_array(u)
        return np.where(u > 0.0, -np.expm1(-self.rate * u), 0.0)

    def pdf(self, u):
        u = _as_array(u)
        return np.where(u >= 0.0, self.rate * np.exp(-self.rate * u), 0.0)

    def sf(self, u):
        u = _as_array(u)
        return np.where(u > 0.0, np.exp(-self.rate * u), 1.0)

    def hazard(self, u):
        return np.full_like(_as_array(u), self.rate)

    def mean(self) -> float:
        return 1.0 / self.rate

    def sample(self, rng, size=None):
        v = rng.random(size=size)
        return -np.log1p(-v) / self.rate

    def sample_residual(self, rng, ages):
        ages = _as_array(ages)
        return self.sample(rng, size=ages.shape)  # memoryless


@dataclass(frozen=True)
class Gamma:
    """Gamma lifetimes with shape ``shape`` and rate ``rate`` (mean shape/rate)."""

    shape: float
    rate: float

    def __post_init__(self):
        if self.shape <= 0.0 or self.rate <= 0.0:
            raise ValueError("shape and rate must be positive")

    name = "gamma"

    def cdf(self, u):
        u = _as_array(u)
        return special.gammainc(self.shape, self.rate * np.clip(u, 0.0, None))

    def pdf(self, u):
        u = _as_array(u)
        x = self.rate * u
        with np.errstate(divide="ignore", invalid="ignore"):
            val = (
                self.rate
                * x ** (self.shape - 1.0)
                * np.exp(-x)
                / special.gamma(self.shape)
            )
        return np.where(u > 0.0, val, 0.0)

    def sf(self, u):
        u = _as_array(u)
        return special.gammaincc(self.shape, self.rate * np.clip(u, 0.0, None))

    def hazard(self, u):
        return self.pdf(u) / self.sf(u)

    def mean(self) -> float:
        return self.shape / self.rate

    def sample(self, rng, size=None):
        v = rng.random(size=size)
        return special.gammaincinv(self.shape, v) / self.rate

    def sample_residual(self, rng, ages):
        ages = _as_array(ages)
        v = rng.random(size=ages.shape)
        target = self.sf(ages) * (1.0 - v)
        return special.gammainccinv(self.shape, target) / self.rate - ages


@dataclass(frozen=True)
class ParetoTail:
    """Heavy-tailed lifetimes: sf(u) = (1 + u/scale)**(-gamma), gamma in (0,1).

    The mean is infinite; the residual lifetime at age a is the same law
    with scale inflated to scale + a, which makes exact stationary-age
    initialisation cheap.
    """

    gamma: float
    scale: float

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.scale <= 0.0:
            raise ValueError("scale must be positive")

    name = "pareto_tail"

    def cdf(self, u):
        u = _as_array(u)
        return np.where(u > 0.0, -np.expm1(-self.gamma * np.log1p(u / self.scale)), 0.0)

    def pdf(self, u):
        u = _as_array(u)
        val = (self.gamma / self.scale) * (1.0 + u / self.scale) ** (-self.gamma - 1.0)
        return np.where(u >= 0.0, val, 0.0)

    def sf(self, u):
        u = _as_array(u)
        return np.where(u > 0.0, (1.0 + u / self.scale) ** (-self.gamma), 1.0)

    def hazard(self, u):
        u = _as_array(u)
        return self.gamma / (self.scale + u)

    def mean(self) -> float:
        return math.inf

    def sample(self, rng, size=None):
        v = rng.random(size=size)
        return self.scale * np.expm1(-np.log1p(-v) / self.gamma)

    def sample_residual(self, rng, ages):
        ages = _as_array(ages)
        v = rng.random(size=ages.shape)
        return (self.scale + ages) * np.expm1(-np.log1p(-v) / self.gamma)


def make_pareto_tail(gamma: float) -> ParetoTail:
    """ParetoTail law whose tail constant equals one.

    sf(u) ~ scale**gamma * u**(-gamma) for large u, so requiring
    sf(u) ~ u**(-gamma) / Gamma(1-gamma) fixes
    scale = Gamma(1-gamma)**(-1/gamma).  For gamma = 1/2 this gives
    scale = 1/pi.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    scale = float(special.gamma(1.0 - gamma)) ** (-1.0 / gamma)
    return ParetoTail(gamma=gamma, scale=scale)


LifetimeLaw = Exponential | Gamma | ParetoTail
