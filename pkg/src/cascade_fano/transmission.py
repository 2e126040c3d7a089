"""Transmission-time densities censored to a finite horizon ``[0, T]``.

Every family is written through its cumulative hazard ``H``: the uncensored
density is ``g(t) = h(t) exp(-H(t))`` and the censored one is
``f(t) = g(t) / (1 - exp(-H(T)))``.  Sampling uses the closed-form inverse
of ``H``, so no rejection step is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConditionViolation, DomainError, ParameterError, UnsupportedError

FAMILIES = ("exponential", "rayleigh", "weibull")

# uniform grid used for kappa1/kappa2 of families without closed forms
KAPPA_GRID_POINTS = 100_000
# kappa1 below this fraction of kappa2 counts as zero
KAPPA_DEGENERATE_RTOL = 1e-12


@dataclass(frozen=True)
class TransmissionSpec:
    """A censored transmission family on ``[0, horizon]``.

    ``lam`` is the rate of the exponential family and the rate (inverse
    scale) of the Weibull family, so ``weibull(mu=1, lam)`` coincides with
    ``exponential(lam)``.  ``sigma`` is the Rayleigh scale, ``mu`` the
    Weibull shape.
    """

    family: str
    horizon: float
    lam: float | None = None
    sigma: float | None = None
    mu: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown transmission family {self.family!r}")
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise ParameterError(f"horizon T must be positive and finite, got {self.horizon}")
        if self.family in ("exponential", "weibull"):
            if self.lam is None or not (math.isfinite(self.lam) and self.lam > 0):
                raise ParameterError(f"{self.family} needs a positive rate lambda, got {self.lam}")
        if self.family == "rayleigh":
            if self.sigma is None or not (math.isfinite(self.sigma) and self.sigma > 0):
                raise ParameterError(f"rayleigh needs a positive sigma, got {self.sigma}")
        if self.family == "weibull":
            if self.mu is None or not math.isfinite(self.mu):
                raise ParameterError("weibull needs a finite shape mu")
            if self.mu < 1:
                raise UnsupportedError(
                    f"weibull shape mu={self.mu} < 1 has an unbounded density at t=0"
                )

    @classmethod
    def exponential(cls, lam: float, T: float) -> "TransmissionSpec":
        return cls("exponential", float(T), lam=float(lam))

    @classmethod
    def rayleigh(cls, sigma: float, T: float) -> "TransmissionSpec":
        return cls("rayleigh", float(T), sigma=float(sigma))

    @classmethod
    def weibull(cls, mu: float, lam: float, T: float) -> "TransmissionSpec":
        return cls("weibull", float(T), lam=float(lam), mu=float(mu))

    @property
    def kappa1(self) -> float:
        return boundedness_constants(self)[0]

    @property
    def kappa2(self) -> float:
        return boundedness_constants(self)[1]

    @property
    def hypothesis_dependent(self) -> bool:
        # no shipped family depends on the parent set
        return False

    # -- hazard primitives, vectorised over t ---------------------------------

    def _cum_hazard(self, t):
        if self.family == "exponential":
            return self.lam * t
        if self.family == "rayleigh":
            return t * t / (2.0 * self.sigma**2)
        return (self.lam * t) ** self.mu

    def _hazard(self, t):
        if self.family == "exponential":
            return np.full_like(t, self.lam, dtype=float)
        if self.family == "rayleigh":
            return t / self.sigma**2
        return self.mu * self.lam * (self.lam * t) ** (self.mu - 1.0)

    def _inv_cum_hazard(self, y):
        if self.family == "exponential":
            return y / self.lam
        if self.family == "rayleigh":
            return self.sigma * np.sqrt(2.0 * y)
        return y ** (1.0 / self.mu) / self.lam

    def _mass(self) -> float:
        """Uncensored probability of ``[0, T]``."""
        return -math.expm1(-float(self._cum_hazard(self.horizon)))


def _check_domain(spec: TransmissionSpec, t: np.ndarray) -> None:
    if np.any(~np.isfinite(t)) or np.any(t < 0) or np.any(t > spec.horizon):
        raise DomainError(f"elapsed time outside [0, {spec.horizon}]")


def transmission_density(spec: TransmissionSpec, t):
    """Censored density ``f(t)`` on ``[0, T]``; accepts scalars or arrays."""
    arr = np.asarray(t, dtype=float)
    _check_domain(spec, arr)
    out = spec._hazard(arr) * np.exp(-spec._cum_hazard(arr)) / spec._mass()
    return float(out) if out.ndim == 0 else out


def transmission_cdf(spec: TransmissionSpec, t):
    """Censored CDF ``F(t)``; 0 below the support, 1 above it."""
    arr = np.clip(np.asarray(t, dtype=float), 0.0, spec.horizon)
    out = -np.expm1(-spec._cum_hazard(arr)) / spec._mass()
    return float(out) if out.ndim == 0 else out


def sample_transmission(spec: TransmissionSpec, rng: np.random.Generator, size) -> np.ndarray:
    """Draw censored transmission times by inverting ``F``."""
    u = rng.random(size)
    y = -np.log1p(-u * spec._mass())
    # guard the upper end against rounding past T
    return np.minimum(spec._inv_cum_hazard(y), spec.horizon)


def boundedness_constants(spec: TransmissionSpec) -> tuple[float, float]:
    """Return ``(kappa1, kappa2)``, the min and max of ``f`` on ``[0, T]``.

    Exponential densities use the closed form; the other families are
    scanned on a dense uniform grid that includes both endpoints.
    Raises :class:`ConditionViolation` when the minimum is zero.
    """
    if spec.family == "exponential":
        lam, T = spec.lam, spec.horizon
        denom = -math.expm1(-lam * T)
        kappa2 = lam / denom
        kappa1 = lam * math.exp(-lam * T) / denom
    else:
        grid = np.linspace(0.0, spec.horizon, KAPPA_GRID_POINTS)
        dens = transmission_density(spec, grid)
        kappa1, kappa2 = float(dens.min()), float(dens.max())
    if not math.isfinite(kappa2):
        raise ConditionViolation(f"{spec.family} density is unbounded on [0, T]")
    if kappa1 <= KAPPA_DEGENERATE_RTOL * kappa2:
        raise ConditionViolation(
            f"{spec.family} density reaches zero on [0, T] (kappa1={kappa1:.3g})"
        )
    return kappa1, kappa2
