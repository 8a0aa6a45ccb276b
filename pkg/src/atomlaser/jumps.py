"""Quantum-jump unraveling restricted to number states.

On the number-diagonal manifold the linearized gain adds one boson at total
rate ``mu`` whatever the state, and output coupling removes one at rate
``n``.  The conditioned state therefore hops between number states as a
birth-death chain whose stationary law is Poisson(mu).  Phase diffusion
leaves number states untouched and is not represented.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import diags
from scipy.sparse.linalg import expm_multiply
from scipy.stats import poisson

from .errors import DomainError, TruncationError

LEAK_TOL = 1e-8


def rates(n: int, mu: float) -> tuple:
    """``(birth, death)`` rates out of number state ``n``."""
    if n < 0:
        raise DomainError("occupation must be non-negative")
    return float(mu), float(n)


@dataclass(frozen=True)
class JumpTrajectory:
    event_times: np.ndarray    # times of the jumps, increasing
    occupations: np.ndarray    # occupation after each jump
    n0: int
    t_max: float
    seed: int

    def occupation_at(self, t: float) -> int:
        i = np.searchsorted(self.event_times, t, side="right")
        return int(self.n0 if i == 0 else self.occupations[i - 1])


def gillespie(n0: int, mu: float, t_max: float, seed: int) -> JumpTrajectory:
    """Exact simulation of the chain on ``[0, t_max]``."""
    if n0 < 0 or not t_max > 0 or not mu > 0:
        raise DomainError("need n0 >= 0, mu > 0 and t_max > 0")
    rng = np.random.default_rng(seed)
    times, occ = [], []
    t, n = 0.0, int(n0)
    block = max(1024, int(2 * (mu + n0) * t_max) // 8)
    while True:
        e = rng.standard_exponential(block)
        v = rng.random(block)
        for k in range(block):
            total = mu + n
            t += e[k] / total
            if t > t_max:
                return JumpTrajectory(np.array(times), np.array(occ, dtype=np.int64),
                                      int(n0), float(t_max), seed)
            n += 1 if v[k] * total < mu else -1
            times.append(t)
            occ.append(n)


def occupation_histogram(traj: JumpTrajectory, t_start: float = 0.0) -> np.ndarray:
    """Fraction of ``[t_start, t_max]`` spent in each occupation ``0..max``."""
    if not 0 <= t_start < traj.t_max:
        raise DomainError("t_start must lie in [0, t_max)")
    edges = np.concatenate([[0.0], traj.event_times, [traj.t_max]])
    states = np.concatenate([[traj.n0], traj.occupations])
    dur = np.clip(edges[1:], t_start, None) - np.clip(edges[:-1], t_start, None)
    hist = np.bincount(states, weights=dur)
    return hist / hist.sum()


def histogram_stats(p: np.ndarray) -> tuple:
    """Mean and Fano factor of a distribution over ``0..len(p)-1``."""
    n = np.arange(len(p))
    mean = float(p @ n)
    var = float(p @ (n - mean) ** 2)
    return mean, var / mean


def poisson_pmf(mu: float, n_max: int) -> np.ndarray:
    return poisson.pmf(np.arange(n_max + 1), mu)


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    m = max(len(p), len(q))
    p = np.pad(p, (0, m - len(p)))
    q = np.pad(q, (0, m - len(q)))
    return 0.5 * float(np.abs(p - q).sum())


def default_truncation(mu: float) -> int:
    return int(math.ceil(mu + 12 * math.sqrt(mu)))


def generator(mu: float, n_max: int):
    """Rate matrix on ``0..n_max``; births out of ``n_max`` leave the space."""
    n = np.arange(n_max + 1, dtype=float)
    main = -(mu + n)
    return diags([main, np.full(n_max, mu), n[1:]], [0, -1, 1], format="csr")


def diagonal_master_evolve(p0: Sequence[float], mu: float, grid: Sequence[float],
                           n_max: Optional[int] = None) -> np.ndarray:
    """Number-state populations at each grid time, shape ``(len(grid), n_max + 1)``.

    Raises :class:`TruncationError` if more than ``LEAK_TOL`` of the
    probability escapes past ``n_max``.
    """
    if n_max is None:
        n_max = max(default_truncation(mu), len(p0) - 1)
    p = np.zeros(n_max + 1)
    p0 = np.asarray(p0, dtype=float)
    if len(p0) > n_max + 1:
        raise DomainError("initial vector longer than the truncation")
    p[:len(p0)] = p0
    if abs(p.sum() - 1) > 1e-12:
        raise DomainError("initial distribution must be normalized")
    grid = np.asarray(grid, dtype=float)
    if grid[0] != 0 or np.any(np.diff(grid) <= 0):
        raise DomainError("grid must start at 0 and increase")
    if len(grid) == 1:
        return p[None, :]
    out = expm_multiply(generator(mu, n_max), p, start=grid[0], stop=grid[-1],
                        num=len(grid), endpoint=True) if _uniform(grid) else \
        np.array([expm_multiply(generator(mu, n_max) * t, p) for t in grid])
    leak = 1 - out.sum(axis=1)
    if leak.max() > LEAK_TOL:
        raise TruncationError(f"probability {leak.max():.3e} leaked past n_max={n_max}; enlarge it")
    return out


def _uniform(grid) -> bool:
    d = np.diff(grid)
    return bool(np.allclose(d, d[0], rtol=1e-12, atol=0))


def write_histogram_csv(hist: np.ndarray, mu: float, fh) -> None:
    ref = poisson_pmf(mu, len(hist) - 1)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["n", "prob_empirical", "prob_poisson"])
    for n, (a, b) in enumerate(zip(hist, ref)):
        w.writerow([n, repr(float(a)), repr(float(b))])
