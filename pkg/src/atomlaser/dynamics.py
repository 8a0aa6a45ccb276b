"""Unconditioned moment evolution of the linearized laser master equation.

The five moment ODEs are linear and decouple into a triangular cascade, so
they have an elementary closed-form solution (``evolve_analytic``).  A fixed
step RK4 integrator (``evolve_ode``) solves the same ODEs numerically and
serves as an independent check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, IntegrationError
from .gaussian import LaserParams, MomentState

#: Ratio below which an asymptotic "much less than" condition counts as met.
DEFAULT_MARGIN = 0.1
DEFAULT_STEP = 1e-3


@dataclass(frozen=True)
class MomentTrajectory:
    times: tuple
    states: tuple

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise DomainError("times and states differ in length")
        if not self.times or self.times[0] != 0:
            raise DomainError("trajectory must start at t=0")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise DomainError("times must be strictly increasing")

    def as_array(self) -> np.ndarray:
        """Rows ``(t, m10, m01, m20, m11, m02)``."""
        return np.array([(t,) + s.as_tuple() for t, s in zip(self.times, self.states)])


def evolve_analytic(init: MomentState, p: LaserParams, t: float) -> MomentState:
    """Closed-form moments at time ``t`` (units of the inverse decay rate)."""
    if t < 0:
        raise DomainError(f"t must be non-negative, got {t}")
    if t == 0:
        return init
    chi, nu = p.chi, p.nu
    w = math.exp(-t)
    one_w = -math.expm1(-t)            # 1 - w without cancellation
    one_w2 = -math.expm1(-2 * t)       # 1 - w**2
    x0, y0, c20, c11, c02 = init.as_tuple()

    m10 = x0 * w
    m01 = y0 - chi * x0 * one_w
    m20 = c20 * w * w + one_w2
    # 1 + w(c20-2) + w^2(1-c20) factors as (1-w)(1 - w(1-c20)); no cancellation at small t
    m11 = c11 * w - chi * one_w * (1 - w * (1 - c20))
    m02 = (c02 + (2 + nu) * t - 2 * chi * c11 * one_w
           + 2 * chi * chi * (t + (c20 - 2) * one_w + (1 - c20) * one_w2 / 2))
    return MomentState(m10, m01, m20, m11, m02)


def moment_rhs(s: Sequence[float], chi: float, nu: float) -> tuple:
    x, y, c20, c11, c02 = s
    return (-x, -chi * x, 2 - 2 * c20, -c11 - chi * c20, -2 * chi * c11 + 2 + nu)


def _rk4_step(s, h, chi, nu):
    k1 = moment_rhs(s, chi, nu)
    k2 = moment_rhs([a + 0.5 * h * b for a, b in zip(s, k1)], chi, nu)
    k3 = moment_rhs([a + 0.5 * h * b for a, b in zip(s, k2)], chi, nu)
    k4 = moment_rhs([a + h * b for a, b in zip(s, k3)], chi, nu)
    return [a + h / 6 * (b + 2 * c + 2 * d + e) for a, b, c, d, e in zip(s, k1, k2, k3, k4)]


def evolve_ode(init: MomentState, p: LaserParams, grid: Sequence[float],
               h: float = DEFAULT_STEP) -> MomentTrajectory:
    """Integrate the moment ODEs from ``init`` with classical RK4, reporting at each grid time.

    Between consecutive grid points the interval is split into
    ``ceil(dt/h)`` equal steps, so every step is at most ``h``.
    """
    grid = [float(t) for t in grid]
    if not grid or grid[0] != 0 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("grid must start at 0 and be strictly increasing")
    if not h > 0:
        raise DomainError("step must be positive")
    s = list(init.as_tuple())
    states = [init]
    for a, b in zip(grid, grid[1:]):
        n = max(1, math.ceil((b - a) / h - 1e-9))
        step = (b - a) / n
        for _ in range(n):
            s = _rk4_step(s, step, p.chi, p.nu)
        if not all(math.isfinite(v) for v in s):
            raise IntegrationError(f"non-finite moments at t={b}; reduce the step")
        states.append(MomentState(*s))
    return MomentTrajectory(tuple(grid), tuple(states))


def phase_variance_at_interatomic_time(p: LaserParams) -> float:
    """Phase variance accumulated over one inter-atomic time ``t = 1/mu``."""
    if p.mu < 1:
        raise DomainError("requires mu >= 1")
    mu = p.mu
    return (1 + (2 + p.nu) / mu + p.chi ** 2 / mu ** 2) / (4 * mu)


@dataclass(frozen=True)
class CoherenceReport:
    number_defined: bool
    chi_margin: float
    nu_margin: float
    chi_ok: bool
    nu_ok: bool

    @property
    def coherent(self) -> bool:
        return self.number_defined and self.chi_ok and self.nu_ok


def coherence_report(p: LaserParams, threshold: float = DEFAULT_MARGIN) -> CoherenceReport:
    """Check ``mu >> 1``, ``chi << mu**1.5`` and ``nu << mu**2``.

    Each "much less than" is read as a ratio below ``threshold``; ``mu >> 1``
    as ``1/mu`` below it.
    """
    chi_margin = abs(p.chi) / p.mu ** 1.5
    nu_margin = p.nu / p.mu ** 2
    return CoherenceReport(
        number_defined=1 / p.mu < threshold,
        chi_margin=chi_margin,
        nu_margin=nu_margin,
        chi_ok=chi_margin < threshold,
        nu_ok=nu_margin < threshold,
    )


@dataclass(frozen=True)
class PhaseGrowth:
    intrinsic: float
    total_unconditional: float


def conditional_phase_growth(V: float, chi: float, t: float, mu: float | None = None) -> PhaseGrowth:
    """Phase-quadrature variance after time ``t`` for an amplitude-squeezed state.

    Under the shear ``y(t) = y(0) - chi t x(0)`` a pure state with amplitude
    variance ``V`` (phase variance ``1/V``) acquires the intrinsic variance
    ``1/V + (chi t)^2 V``; an observer who does not track the amplitude sees
    ``1/V + (chi t)^2``.  ``mu`` is accepted for symmetry with the threshold
    helpers and is not used.
    """
    if not 0 < V <= 1:
        raise DomainError(f"V must lie in (0, 1], got {V}")
    s = (chi * t) ** 2
    return PhaseGrowth(1 / V + s * V, 1 / V + s)


def optimal_squeezing(chi_t: float) -> tuple:
    """``(V, intrinsic)`` minimizing the intrinsic variance at fixed ``chi t``.

    The optimum ``V = 1/(chi t)`` is capped at 1 (coherent) when ``chi t < 1``.
    """
    ct = abs(chi_t)
    V = 1.0 if ct <= 1 else 1 / ct
    return V, 1 / V + ct * ct * V


def conditional_chi_threshold(V: float, mu: float) -> float:
    """Largest ``chi`` keeping the intrinsic variance at ``t = 1/mu`` below ``4 mu``.

    Solves ``1/V + chi^2 V / mu^2 = 4 mu``; returns 0 when even ``chi = 0``
    fails (``1/V > 4 mu``).
    """
    if not 0 < V <= 1:
        raise DomainError(f"V must lie in (0, 1], got {V}")
    rad = (4 * mu - 1 / V) / V
    return mu * math.sqrt(rad) if rad > 0 else 0.0


def max_conditional_chi(mu: float) -> tuple:
    """Best squeezing and the corresponding threshold: ``V = 1/(2 mu)``, ``chi = 2 mu^2``."""
    V = 1 / (2 * mu)
    return V, conditional_chi_threshold(V, mu)
