"""Continuous Markovian unravelings and the conditioned moment SDEs.

An unraveling is fixed by a complex symmetric 3x3 matrix ``u = r + i h``
giving the correlations ``E[dW_j dW_k] = u_jk dt`` of three complex Wiener
increments with ``E[dW_j dW_k*] = delta_jk dt``.  Writing ``dW = a + i b``
the real vector ``(a, b)`` has covariance

    dt/2 * [[I + r, h], [h, I - r]]

whose eigenvalues are ``(1 +- s_k)/2`` for the singular values ``s_k`` of
``u``; it is positive semidefinite exactly when the largest singular value
is at most one.  Increments are synthesized from a Cholesky factor of this
matrix.

Channel order: 0 is the loss channel, 1 the phase-diffusion channel and 2
the (linearized) gain channel.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dynamics import evolve_analytic
from .errors import ConstraintViolation, DomainError, IntegrationError
from .gaussian import LaserParams, MomentState

EPS_NORM = 1e-10
JITTER = 1e-12
DEFAULT_DT = 1e-3
BURN_IN = 10.0

# (i, j) index of the 12 real variables r00 r11 r22 r01 r02 r12 h00 h11 h22 h01 h02 h12
PAIRS = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))
VARIABLE_NAMES = tuple(f"r{i}{j}" for i, j in PAIRS) + tuple(f"h{i}{j}" for i, j in PAIRS)

_CHUNK = 256


def _as_sym(m) -> tuple:
    a = np.asarray(m, dtype=float)
    if a.shape != (3, 3):
        raise DomainError(f"expected a 3x3 matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix entries must be finite")
    if not np.allclose(a, a.T, rtol=0, atol=1e-12):
        raise DomainError("matrix must be symmetric")
    a = (a + a.T) / 2
    return tuple(tuple(float(x) for x in row) for row in a)


@dataclass(frozen=True)
class UnravelingMatrix:
    """``u = r + i h`` with ``r`` and ``h`` real symmetric."""

    r: tuple = field(default=((0.0,) * 3,) * 3)
    h: tuple = field(default=((0.0,) * 3,) * 3)

    def __post_init__(self):
        object.__setattr__(self, "r", _as_sym(self.r))
        object.__setattr__(self, "h", _as_sym(self.h))

    @classmethod
    def zero(cls) -> "UnravelingMatrix":
        return cls()

    @classmethod
    def from_complex(cls, u) -> "UnravelingMatrix":
        u = np.asarray(u, dtype=complex)
        return cls(u.real, u.imag)

    @classmethod
    def from_vector(cls, x) -> "UnravelingMatrix":
        """Build from the 12 reals ordered as ``VARIABLE_NAMES``."""
        x = np.asarray(x, dtype=float)
        if x.shape != (12,):
            raise DomainError("expected 12 components")
        r = np.zeros((3, 3))
        h = np.zeros((3, 3))
        for k, (i, j) in enumerate(PAIRS):
            r[i, j] = r[j, i] = x[k]
            h[i, j] = h[j, i] = x[6 + k]
        return cls(r, h)

    @property
    def complex(self) -> np.ndarray:
        return np.array(self.r) + 1j * np.array(self.h)

    def to_vector(self) -> np.ndarray:
        r, h = np.array(self.r), np.array(self.h)
        return np.array([r[i, j] for i, j in PAIRS] + [h[i, j] for i, j in PAIRS])

    def is_admissible(self, tol: float = EPS_NORM) -> bool:
        return spectral_norm(self) <= 1 + tol


def spectral_norm(u: UnravelingMatrix) -> float:
    """Largest singular value of ``u``."""
    return float(np.linalg.svd(u.complex, compute_uv=False)[0])


def noise_covariance(u: UnravelingMatrix) -> np.ndarray:
    """Covariance per unit time of ``(Re dW_0..2, Im dW_0..2)``."""
    r, h = np.array(u.r), np.array(u.h)
    eye = np.eye(3)
    return 0.5 * np.block([[eye + r, h], [h, eye - r]])


def noise_factor(u: UnravelingMatrix, tol: float = EPS_NORM) -> np.ndarray:
    """Lower-triangular ``L`` with ``L L^T`` equal to the noise covariance.

    A tiny diagonal jitter lets boundary unravelings (norm exactly one,
    singular covariance) factor.  If rounding still defeats Cholesky for an
    admissible ``u`` a symmetric square root with clipped eigenvalues is
    used instead; this matrix is not triangular but serves identically.
    """
    norm = spectral_norm(u)
    if norm > 1 + tol:
        raise ConstraintViolation(
            f"unraveling not admissible: spectral norm {norm:.12g} exceeds 1")
    C = noise_covariance(u)
    try:
        return np.linalg.cholesky(C + JITTER * np.eye(6))
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(C)
        return V * np.sqrt(np.clip(w, 0, None))


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Stream for trajectory ``index`` under root ``seed``.

    Equal to the ``index``-th child of ``SeedSequence(seed).spawn``, so a
    trajectory does not depend on how many others are run or in what order.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


@dataclass(frozen=True)
class NoisePath:
    dt: float
    increments: np.ndarray   # (n_steps, 3) complex
    seed: int

    def sample_correlations(self) -> tuple:
        """Sample ``E[dW dW^H]/dt`` and ``E[dW dW^T]/dt``."""
        z = self.increments
        n = len(z)
        return z.T @ z.conj() / (n * self.dt), z.T @ z / (n * self.dt)


def synthesize_noise(u: UnravelingMatrix, dt: float, n_steps: int, seed: int) -> NoisePath:
    L = noise_factor(u)
    z = trajectory_rng(seed, 0).standard_normal((n_steps, 6))
    x = z @ L.T * math.sqrt(dt)
    return NoisePath(dt, x[:, :3] + 1j * x[:, 3:], seed)


def noise_coefficients(m20: float, m11: float, m02: float, nu: float) -> tuple:
    """Complex coefficients multiplying ``zeta_k^*`` in the ``m10`` and ``m01`` equations."""
    s = math.sqrt(1 + nu)
    A = (complex(m20 - 1, m11), s * m20, complex(m11, 1))
    B = (complex(m11, m02 - 1), s * complex(m11, -1), complex(m02, 0))
    return A, B


def second_moment_drift(m, u: UnravelingMatrix, p: LaserParams) -> tuple:
    """Deterministic right-hand sides ``(dm20, dm11, dm02)/dt`` of the conditioned state.

    ``m`` is ``(m20, m11, m02)``; a :class:`MomentState` or
    :class:`~atomlaser.gaussian.CovarianceTriple` is also accepted.
    """
    if isinstance(m, MomentState):
        m20, m11, m02 = m.m20, m.m11, m.m02
    elif hasattr(m, "alpha"):
        m20, m11, m02 = m.gamma, m.beta, m.alpha
    else:
        m20, m11, m02 = m
    if not (m20 > 0 and m02 > 0):
        raise DomainError("variances must be positive")
    chi, nu = p.chi, p.nu
    s = math.sqrt(1 + nu)
    uc = np.conj(u.complex)
    u00, u11, u22 = uc[0, 0], uc[1, 1], uc[2, 2]
    u01, u02, u12 = uc[0, 1], uc[0, 2], uc[1, 2]
    a = m20 - 1 + 1j * m11          # loss coefficient in the x equation
    g = m11 + 1j                    # gain coefficient in the x equation
    b = 1j * m02 - 1j + m11         # loss coefficient in the y equation
    e = m11 - 1j                    # phase-diffusion coefficient in the y equation (over sqrt(1+nu))

    d20 = 2 - 2 * m20 - (
        (m20 - 1) ** 2 + m11 ** 2 + (1 + nu) * m20 ** 2 + m11 ** 2 + 1
        + u00 * a ** 2 + u11 * (1 + nu) * m20 ** 2 + u22 * g ** 2
        + 2 * u01 * s * a * m20 + 2 * u02 * a * g + 2 * u12 * s * g * m20
    ).real / 2
    d02 = -2 * chi * m11 + 2 + nu - (
        (m02 - 1) ** 2 + m11 ** 2 + (1 + nu) * (m11 ** 2 + 1) + m02 ** 2
        + u00 * b ** 2 + u11 * (1 + nu) * e ** 2 + u22 * m02 ** 2
        + 2 * u01 * s * b * e + 2 * u02 * b * m02 + 2 * u12 * s * e * m02
    ).real / 2
    d11 = -m11 - chi * m20 - (
        a * (-1j * m02 + 1j + m11) + (1 + nu) * e * m20 + m02 * e
        + u00 * a * b + u11 * (1 + nu) * m20 * e + u22 * m02 * g
        + u01 * s * (a * e + m20 * b)
        + u12 * s * (m20 * m02 + g * e)
        + u02 * (b * g + a * m02)
    ).real / 2
    return float(d20), float(d11), float(d02)


@dataclass(frozen=True)
class ConditionedTrajectory:
    times: np.ndarray            # (n_saved,)
    first_moments: np.ndarray    # (n_saved, 2): m10, m01
    second_moments: np.ndarray   # (n_saved, 3): m20, m11, m02
    u: UnravelingMatrix
    params: LaserParams
    seed: int

    def rows(self) -> np.ndarray:
        return np.column_stack([self.times, self.first_moments, self.second_moments])


@dataclass(frozen=True)
class EnsembleRun:
    """Result of integrating many trajectories that share ``u``, ``params`` and ``init``.

    ``first_moments`` has shape ``(n_traj, n_saved, 2)``; the second moments
    are common to every member.
    """

    times: np.ndarray
    first_moments: np.ndarray
    second_moments: np.ndarray
    u: UnravelingMatrix
    params: LaserParams
    seed: int

    @property
    def final_first_moments(self) -> np.ndarray:
        return self.first_moments[:, -1, :]

    def trajectory(self, i: int) -> ConditionedTrajectory:
        return ConditionedTrajectory(self.times, self.first_moments[i], self.second_moments,
                                     self.u, self.params, self.seed)


def _second_moment_path(init: MomentState, u, p, dt, n_steps):
    path = np.empty((n_steps + 1, 3))
    m = (init.m20, init.m11, init.m02)
    path[0] = m
    for k in range(n_steps):
        d = second_moment_drift(m, u, p)
        m = (m[0] + d[0] * dt, m[1] + d[1] * dt, m[2] + d[2] * dt)
        if not (m[0] > 0 and m[2] > 0 and all(math.isfinite(v) for v in m)):
            raise IntegrationError(
                f"second moments left the physical domain at step {k + 1} (t={(k + 1) * dt:g}); "
                f"try a smaller dt than {dt:g}")
        path[k + 1] = m
    return path


def _first_moment_block(indices, seed, L, path, init, p, dt, n_steps, save_every):
    """Euler-Maruyama for the first moments of the trajectories in ``indices``."""
    n = len(indices)
    rngs = [trajectory_rng(seed, int(i)) for i in indices]
    x = np.full(n, init.m10)
    y = np.full(n, init.m01)
    n_saved = n_steps // save_every + 1
    out = np.empty((n, n_saved, 2))
    out[:, 0, 0], out[:, 0, 1] = x, y
    sq = math.sqrt(dt)
    chi, nu = p.chi, p.nu
    Lt = L.T * sq
    k = 0
    while k < n_steps:
        m = min(_CHUNK, n_steps - k)
        Z = np.stack([g.standard_normal((m, 6)) for g in rngs]) if n else np.empty((0, m, 6))
        for j in range(m):
            m20, m11, m02 = path[k + j]
            A, B = noise_coefficients(m20, m11, m02, nu)
            # Re(conj(dW) c) = Re(dW) Re(c) + Im(dW) Im(c), with (Re dW, Im dW) = L z sqrt(dt)
            va = Lt @ np.array([A[0].real, A[1].real, A[2].real, A[0].imag, A[1].imag, A[2].imag])
            vb = Lt @ np.array([B[0].real, B[1].real, B[2].real, B[0].imag, B[1].imag, B[2].imag])
            z = Z[:, j, :]
            # explicit fixed-order sums keep each member bit-identical whatever the batch size
            dx = z[:, 0] * va[0]
            dy = z[:, 0] * vb[0]
            for c in range(1, 6):
                dx = dx + z[:, c] * va[c]
                dy = dy + z[:, c] * vb[c]
            x, y = x + (-x * dt + dx), y + (-chi * x * dt + dy)
            step = k + j + 1
            if step % save_every == 0:
                out[:, step // save_every, 0] = x
                out[:, step // save_every, 1] = y
        k += m
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise IntegrationError(f"non-finite first moments near t={k * dt:g}; reduce dt")
    return out


def simulate_ensemble(u: UnravelingMatrix, p: LaserParams, init: MomentState, dt: float,
                      n_steps: int, n_traj: int, seed: int, save_every: Optional[int] = None,
                      workers: int = 1) -> EnsembleRun:
    """Integrate ``n_traj`` conditioned trajectories by Euler-Maruyama.

    ``save_every=None`` keeps only the initial and final states.  With
    ``workers > 1`` trajectory blocks run in threads; every trajectory draws
    from its own stream so results do not depend on ``workers``.
    """
    if not dt > 0 or n_steps < 1 or n_traj < 1:
        raise DomainError("need dt > 0, n_steps >= 1 and n_traj >= 1")
    if not init.is_physical():
        raise DomainError("initial state violates the uncertainty bound")
    L = noise_factor(u)
    every = n_steps if save_every is None else int(save_every)
    if every < 1:
        raise DomainError("save_every must be a positive integer")
    path = _second_moment_path(init, u, p, dt, n_steps)
    idx = np.arange(n_traj)
    blocks = np.array_split(idx, max(1, min(workers, n_traj)))
    args = (seed, L, path, init, p, dt, n_steps, every)
    if len(blocks) == 1:
        parts = [_first_moment_block(blocks[0], *args)]
    else:
        with ThreadPoolExecutor(max_workers=len(blocks)) as ex:
            parts = list(ex.map(lambda b: _first_moment_block(b, *args), blocks))
    saved = np.arange(0, n_steps + 1, every)
    return EnsembleRun(saved * dt, np.concatenate(parts), path[saved], u, p, seed)


def simulate(u: UnravelingMatrix, p: LaserParams, init: MomentState, dt: float, n_steps: int,
             seed: int, save_every: int = 1) -> ConditionedTrajectory:
    """One conditioned trajectory; identical to member 0 of :func:`simulate_ensemble`."""
    return simulate_ensemble(u, p, init, dt, n_steps, 1, seed, save_every).trajectory(0)


@dataclass(frozen=True)
class MomentComparison:
    name: str
    ensemble: float
    analytic: float
    stderr: float

    @property
    def z(self) -> float:
        diff = self.ensemble - self.analytic
        if self.stderr > 0:
            return diff / self.stderr
        return 0.0 if abs(diff) < 1e-12 else math.inf


@dataclass(frozen=True)
class EnsembleCheck:
    t: float
    n_traj: int
    comparisons: tuple
    insufficient_statistics: bool

    def ok(self, n_sigma: float = 3.0) -> bool:
        return not self.insufficient_statistics and all(abs(c.z) <= n_sigma for c in self.comparisons)


def _mean_se(v):
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(len(v)))


def ensemble_average_check(u, p, init, dt, n_steps, n_traj, seed, workers: int = 1,
                           min_traj: int = 30) -> EnsembleCheck:
    """Compare ensemble-averaged conditioned moments at ``t = n_steps dt`` with the master equation.

    Totals about the ensemble mean are the common conditioned second moment
    plus the spread of the conditioned means.
    """
    run = simulate_ensemble(u, p, init, dt, n_steps, n_traj, seed, workers=workers)
    t = float(run.times[-1])
    ref = evolve_analytic(init, p, t)
    if n_traj < 2:
        return EnsembleCheck(t, n_traj, (), True)
    x, y = run.final_first_moments.T
    c20, c11, c02 = run.second_moments[-1]
    dx, dy = x - x.mean(), y - y.mean()
    n = len(x)
    rows = []
    for name, val, ana in (("m10", x, ref.m10), ("m01", y, ref.m01)):
        mu, se = _mean_se(val)
        rows.append(MomentComparison(name, mu, ana, se))
    for name, prod, base, ana in (("m20", dx * dx, c20, ref.m20), ("m11", dx * dy, c11, ref.m11),
                                  ("m02", dy * dy, c02, ref.m02)):
        mu, se = _mean_se(prod)
        rows.append(MomentComparison(name, base + mu * n / (n - 1), ana, se))
    return EnsembleCheck(t, n_traj, tuple(rows), n_traj < min_traj)


def write_trajectory_csv(traj: ConditionedTrajectory, fh, save_every: int = 1) -> None:
    """Write ``t,m10,m01,m20,m11,m02`` rows, keeping every ``save_every``-th saved row."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t", "m10", "m01", "m20", "m11", "m02"])
    for row in traj.rows()[::save_every]:
        w.writerow([repr(float(v)) for v in row])


def random_unraveling(rng: np.random.Generator, norm: Optional[float] = None) -> UnravelingMatrix:
    """Random complex symmetric ``u``; rescaled to the given spectral norm if one is supplied."""
    z = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    z = (z + z.T) / 2
    if norm is not None:
        z *= norm / np.linalg.svd(z, compute_uv=False)[0]
    return UnravelingMatrix.from_complex(z)


def stationary_variance_x(gamma: float) -> float:
    """Spread of the conditioned amplitude means in a stationary ensemble."""
    return 1 - gamma

