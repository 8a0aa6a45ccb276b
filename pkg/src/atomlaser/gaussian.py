"""Gaussian states of the linearized laser mode.

Quadratures are defined through ``a = sqrt(mu) + (x + i y)/2`` so that a
coherent state has unit variance in both ``x`` (amplitude) and ``y``
(phase), and ``[x, y] = 2i``.  All phases are in the frame co-rotating with
the mean field; the frequency shift of the linearized Hamiltonian is not
modelled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

#: Purity tolerance for analytically constructed states.
EPS_PURE = 1e-9
#: Purity tolerance for states produced by numerical integration.
EPS_PURE_NUMERIC = 1e-6


@dataclass(frozen=True)
class LaserParams:
    """Dimensionless laser parameters.

    ``mu`` is the mean boson number, ``chi = 4 mu C`` the self-energy
    (collisional Kerr) parameter and ``nu = 4 N mu`` the excess phase
    diffusion.
    """

    mu: float = 1.0
    chi: float = 0.0
    nu: float = 0.0

    def __post_init__(self):
        if not self.mu > 0:
            raise DomainError(f"mu must be positive, got {self.mu}")
        if not self.nu >= 0:
            raise DomainError(f"nu must be non-negative, got {self.nu}")
        if not math.isfinite(self.chi):
            raise DomainError(f"chi must be finite, got {self.chi}")

    @classmethod
    def from_rates(cls, mu: float, C: float = 0.0, N: float = 0.0) -> "LaserParams":
        """Build from the raw self-energy rate ``C`` and phase-diffusion rate ``N``."""
        return cls(mu=mu, chi=4 * mu * C, nu=4 * N * mu)

    @property
    def self_energy_rate(self) -> float:
        return self.chi / (4 * self.mu)

    @property
    def phase_diffusion_rate(self) -> float:
        return self.nu / (4 * self.mu)


@dataclass(frozen=True)
class MomentState:
    """First and second central moments of a Gaussian Wigner function."""

    m10: float = 0.0
    m01: float = 0.0
    m20: float = 1.0
    m11: float = 0.0
    m02: float = 1.0

    @classmethod
    def coherent(cls, m10: float = 0.0, m01: float = 0.0) -> "MomentState":
        return cls(m10, m01, 1.0, 0.0, 1.0)

    @classmethod
    def from_triple(cls, t: "CovarianceTriple", m10: float = 0.0, m01: float = 0.0) -> "MomentState":
        return cls(m10, m01, t.gamma, t.beta, t.alpha)

    def as_tuple(self) -> tuple:
        return (self.m10, self.m01, self.m20, self.m11, self.m02)

    @property
    def determinant(self) -> float:
        """``m20 m02 - m11**2``; equal to 1 for pure states, larger when mixed."""
        return self.m20 * self.m02 - self.m11 ** 2

    def is_physical(self, tol: float = EPS_PURE) -> bool:
        return self.m20 > 0 and self.m02 > 0 and self.determinant >= 1 - tol

    def is_pure(self, tol: float = EPS_PURE) -> bool:
        return abs(self.determinant - 1) <= tol


@dataclass(frozen=True)
class CovarianceTriple:
    """Second moments of a pure Gaussian state.

    ``alpha`` is the phase-quadrature variance, ``beta`` the covariance and
    ``gamma`` the amplitude-quadrature variance.  The constructor enforces
    ``alpha * gamma - beta**2 == 1`` to within ``tol``.
    """

    alpha: float
    beta: float
    gamma: float
    tol: float = EPS_PURE

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError(f"gamma must be positive, got {self.gamma}")
        defect = self.alpha * self.gamma - self.beta ** 2 - 1
        # relative to the size of the terms, so very squeezed states are not rejected by rounding
        scale = max(1.0, abs(self.alpha * self.gamma))
        if abs(defect) > self.tol * scale:
            raise DomainError(
                f"triple ({self.alpha}, {self.beta}, {self.gamma}) is not pure: "
                f"alpha*gamma - beta^2 - 1 = {defect:.3e}")

    @classmethod
    def from_beta_gamma(cls, beta: float, gamma: float) -> "CovarianceTriple":
        return cls(alpha_from(beta, gamma), beta, gamma)

    @classmethod
    def coherent(cls) -> "CovarianceTriple":
        return cls(1.0, 0.0, 1.0)

    def as_tuple(self) -> tuple:
        return (self.alpha, self.beta, self.gamma)


def alpha_from(beta: float, gamma: float) -> float:
    """Phase-quadrature variance of the pure state with covariance ``beta``
    and amplitude variance ``gamma``."""
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    return (1 + beta * beta) / gamma


def overlap_with_coherent(t: CovarianceTriple) -> float:
    """Overlap of the state with a coherent state of the same mean amplitude."""
    return 2 / math.sqrt(2 + t.alpha + t.gamma)


def gaussian_overlap(t1: CovarianceTriple, t2: CovarianceTriple) -> float:
    """Overlap of two pure Gaussian states that share their mean amplitudes."""
    return 2 / math.sqrt((t1.alpha + t2.alpha) * (t1.gamma + t2.gamma) - (t1.beta + t2.beta) ** 2)
