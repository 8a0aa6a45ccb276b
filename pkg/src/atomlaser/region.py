"""Physically realizable (PR) stationary ensembles in the (beta, gamma) plane.

A pure Gaussian ensemble with amplitude variance ``gamma`` and covariance
``beta`` is realizable when some admissible unraveling ``u`` (spectral norm
at most one) keeps its second moments stationary.  Stationarity is three
real linear equations in the twelve real entries of ``u``; the question is
whether the affine solution set meets the unit spectral-norm ball.

Two independent routes answer it:

* a closed-form inequality in (beta, gamma, chi, nu), and
* a numerical search for the minimum spectral norm over the solution set.

For the numerical route the minimum norm is bracketed from both sides.  A
primal Nelder-Mead search over null-space coordinates gives an upper bound
with an explicit witness ``u``.  Lagrangian duality gives

    min ||u||  =  max_lambda  lambda.b / (2 * nuclear_norm(Y(lambda)))

where ``Y(lambda)`` is the complex symmetric matrix assembled from
``W^-1 A^T lambda`` with ``W`` the weights that turn the 12-vector inner
product into ``Re tr(u^H Y)``.  Any lambda certifies a lower bound, and the
maximum over the 2-sphere of directions is found to near machine precision.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import minimize, minimize_scalar

from .errors import ConvergenceError, DomainError, InternalError
from .gaussian import CovarianceTriple, LaserParams, alpha_from
from .unraveling import (PAIRS, UnravelingMatrix, second_moment_drift, spectral_norm)

#: Feasibility tolerance on the minimum norm.  Outside the boundary on the
#: negative-beta side the minimum exceeds one by as little as 1e-11, so a
#: coarse tolerance would misclassify whole regions.
EPS_FEAS = 1e-12
EPS_LIN = 1e-8
GAMMA_MIN = 1e-4

# Re tr(u^H Y) written against the 12-vector (r_ij, h_ij): off-diagonals count twice.
_W = np.array([2, 2, 2, 4, 4, 4, 2, 2, 2, 4, 4, 4], dtype=float)


@dataclass(frozen=True)
class PRQuery:
    beta: float
    gamma: float
    params: LaserParams = LaserParams()

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise DomainError(f"gamma must lie in (0, 1], got {self.gamma}")
        if not math.isfinite(self.beta):
            raise DomainError("beta must be finite")

    @property
    def alpha(self) -> float:
        return alpha_from(self.beta, self.gamma)


@dataclass(frozen=True)
class FeasibilityResult:
    """Outcome of the min-norm search.

    ``min_norm`` is the certified dual value (a lower bound on the minimum
    spectral norm, tight at convergence); ``u_star`` is the best primal
    solution found and ``u_star_norm`` its norm (an upper bound).
    ``residual`` is the largest violation of the stationarity equations by
    ``u_star``.
    """

    feasible: bool
    min_norm: float
    u_star: UnravelingMatrix
    residual: float
    u_star_norm: float
    multiplier: tuple = ()

    @property
    def gap(self) -> float:
        return self.u_star_norm - self.min_norm


# closed form ---------------------------------------------------------------

def pr_expression(beta: float, gamma: float, chi: float, nu: float) -> float:
    """Left side of the realizability inequality; realizable iff ``>= 0``."""
    return (2 + nu - 2 * chi * beta) * (2 - 2 * gamma) - (beta + chi * gamma) ** 2


def pr_closed_form(q: PRQuery) -> bool:
    p = q.params
    return pr_expression(q.beta, q.gamma, p.chi, p.nu) >= 0


def feasible_beta_interval(gamma: float, p: LaserParams) -> Optional[tuple]:
    """Roots ``(beta_lo, beta_hi)`` of the inequality read as a quadratic in beta.

    ``-beta^2 - 2 chi (2 - gamma) beta + (2 + nu)(2 - 2 gamma) - chi^2 gamma^2 >= 0``
    has discriminant ``8 (1 - gamma)(2 chi^2 + 2 + nu)``, so every gamma in
    (0, 1] has a (possibly degenerate) interval.
    """
    if not 0 < gamma <= 1:
        raise DomainError(f"gamma must lie in (0, 1], got {gamma}")
    chi, nu = p.chi, p.nu
    rad = 2 * (1 - gamma) * (2 * chi * chi + 2 + nu)
    if rad < 0:
        return None
    c = -chi * (2 - gamma)
    w = math.sqrt(rad)
    prod = chi * chi * gamma * gamma - (2 + nu) * (2 - 2 * gamma)
    # take the larger-magnitude root directly and the other from the product
    if c < 0:
        lo = c - w
        hi = prod / lo
    elif c > 0:
        hi = c + w
        lo = prod / hi
    else:
        lo, hi = -w, w
    return lo + 0.0, hi + 0.0     # no negative zeros in exports


# the 3 x 12 stationarity system ----------------------------------------------

def steady_state_system(beta: float, gamma: float, p: LaserParams) -> tuple:
    """Coefficients ``(A, b)`` with ``A x = b`` for the 12 reals of ``u``.

    Rows are the stationarity conditions for m20, m02 and m11 in that order;
    columns follow :data:`atomlaser.unraveling.VARIABLE_NAMES`.
    """
    g, bt = gamma, beta
    a = alpha_from(bt, g)
    chi, nu = p.chi, p.nu
    s = math.sqrt(1 + nu)
    M = 1 + nu / 2
    # columns: r00 r11 r22 r01 r02 r12 h00 h11 h22 h01 h02 h12
    A = np.array([
        [((g - 1) ** 2 - bt * bt) / 2, (1 + nu) * g * g / 2, (bt * bt - 1) / 2,
         s * g * (g - 1), (g - 2) * bt, s * g * bt,
         bt * (g - 1), 0.0, bt,
         s * g * bt, bt * bt + g - 1, s * g],
        [(bt * bt - (a - 1) ** 2) / 2, (1 + nu) * (bt * bt - 1) / 2, a * a / 2,
         s * (bt * bt + a - 1), bt * a, s * bt * a,
         bt * (a - 1), -(1 + nu) * bt, 0.0,
         s * (a - 2) * bt, (a - 1) * a, -s * a],
        [bt * (g - a) / 2, (1 + nu) * g * bt / 2, bt * a / 2,
         s * g * bt, (bt * bt + 1 + (g - 2) * a) / 2, s * (a * g + bt * bt + 1) / 2,
         (bt * bt + (a - 1) * (g - 1)) / 2, -(1 + nu) * g / 2, a / 2,
         s * (bt * bt + 1 + (a - 2) * g) / 2, bt * a, 0.0],
    ])
    b = np.array([
        1 - g - M * g * g - bt * bt,
        -2 * chi * bt + M * (1 - bt * bt) - a * a + a,
        -chi * g - a * bt - M * g * bt,
    ])
    return A, b


def _umat(x) -> np.ndarray:
    u = np.zeros((3, 3), dtype=complex)
    for k, (i, j) in enumerate(PAIRS):
        u[i, j] = u[j, i] = x[k] + 1j * x[6 + k]
    return u


def _norm(x) -> float:
    return float(np.linalg.svd(_umat(x), compute_uv=False)[0])


class _Above(Exception):
    pass


def dual_norm_bound(A: np.ndarray, b: np.ndarray, lam0=None, stop_above: Optional[float] = None,
                    restarts: int = 6) -> tuple:
    """Best Lagrangian lower bound on ``min ||u||`` subject to ``A x = b``.

    Maximizes ``lambda.b / (2 ||Y(lambda)||_*)`` over unit directions
    ``lambda`` with Nelder-Mead in two angles, restarting until the simplex
    stops moving.  With ``stop_above`` the search returns as soon as the
    bound exceeds it (infeasibility is then certified).

    Returns ``(bound, lambda)`` with lambda in the original row scaling.
    """
    sc = np.abs(A).max(axis=1)
    sc[sc == 0] = 1.0
    A2 = A / sc[:, None]
    b2 = b / sc
    if lam0 is None:
        x_ls = np.linalg.lstsq(A2, b2, rcond=None)[0]
        lam0 = np.linalg.lstsq(A2.T, _W * x_ls, rcond=None)[0]
    else:
        lam0 = np.asarray(lam0, dtype=float) * sc
    if not np.any(lam0):
        lam0 = b2.copy() if np.any(b2) else np.ones(3)
    # rotate so the warm start sits at angles (0, 0)
    Q = np.linalg.qr(np.column_stack([lam0, np.eye(3)]))[0][:, :3]
    Q = Q * np.sign(Q[:, 0] @ lam0)
    best = [0.0, lam0 / np.linalg.norm(lam0)]

    def value(ang):
        ca, sa, cb, sb = math.cos(ang[0]), math.sin(ang[0]), math.cos(ang[1]), math.sin(ang[1])
        lam = Q @ np.array([ca * cb, sa * cb, sb])
        nuc = 2 * np.linalg.svd(_umat(A2.T @ lam / _W), compute_uv=False).sum()
        v = (lam @ b2) / nuc if nuc > 0 else 0.0
        if v > best[0]:
            best[0], best[1] = v, lam
        if stop_above is not None and v > stop_above:
            raise _Above
        return -v

    z = np.zeros(2)
    try:
        for _ in range(restarts):
            simplex = np.array([z, z + [0.3, 0.0], z + [0.0, 0.3]])
            r = minimize(value, z, method="Nelder-Mead",
                         options=dict(xatol=1e-12, fatol=1e-16, maxfev=2000, initial_simplex=simplex))
            if np.abs(r.x - z).max() < 1e-11:
                break
            z = r.x
    except _Above:
        pass
    return float(best[0]), best[1] / sc


def _primal_search(A, b, seed: int = 0, restarts: int = 8) -> tuple:
    x0 = np.linalg.lstsq(A, b, rcond=None)[0]
    N = null_space(A)
    k = N.shape[1]

    def f(z):
        return _norm(x0 + N @ z)

    rng = np.random.default_rng(seed)
    best_z = np.zeros(k)
    best_f = f(best_z)
    for s in range(restarts):
        z = best_z.copy() if s == 0 else best_z + rng.normal(scale=0.5, size=k)
        for _ in range(4):
            r = minimize(f, z, method="Nelder-Mead",
                         options=dict(xatol=1e-9, fatol=1e-11, maxfev=4000, adaptive=True))
            if r.fun < best_f - 1e-12:
                best_f, best_z = float(r.fun), r.x
            if np.allclose(r.x, z):
                break
            z = r.x
    return x0 + N @ best_z, best_f


def solve_min_norm(q: PRQuery, eps_feas: float = EPS_FEAS, decide_only: bool = False,
                   lam0=None, seed: int = 0) -> FeasibilityResult:
    """Minimum spectral norm of an unraveling that keeps ``q`` stationary.

    ``decide_only`` skips the primal search: ``u_star`` is then the
    minimum-Euclidean-norm solution of the linear system, which satisfies
    the equations but is not norm-optimal.  ``lam0`` warm-starts the dual
    (pass ``result.multiplier`` from a neighbouring query).
    """
    A, b = steady_state_system(q.beta, q.gamma, q.params)
    x_ls = np.linalg.lstsq(A, b, rcond=None)[0]
    scale = max(1.0, float(np.abs(A).max() * np.abs(x_ls).max()), float(np.abs(b).max()))
    if np.abs(A @ x_ls - b).max() > EPS_LIN * scale:
        raise InternalError(f"stationarity system inconsistent at beta={q.beta}, gamma={q.gamma}")
    bound, lam = dual_norm_bound(A, b, lam0=lam0,
                                 stop_above=(1 + eps_feas) if decide_only else None)
    if decide_only:
        x, xn = x_ls, _norm(x_ls)
    else:
        x, xn = _primal_search(A, b, seed=seed)
    feasible = bound <= 1 + eps_feas or xn <= 1 + eps_feas
    return FeasibilityResult(
        feasible=bool(feasible),
        min_norm=min(bound, xn),
        u_star=UnravelingMatrix.from_vector(x),
        residual=float(np.abs(A @ x - b).max()),
        u_star_norm=xn,
        multiplier=tuple(float(v) for v in lam),
    )


@dataclass(frozen=True)
class GridComparison:
    n_points: int
    n_agree: int
    disagreements: tuple     # (gamma, beta, solver, closed_form, distance)
    band: float

    @property
    def agreement(self) -> float:
        return self.n_agree / self.n_points

    @property
    def outside_band(self) -> tuple:
        return tuple(d for d in self.disagreements if d[4] > self.band)


def boundary_distance(beta: float, gamma: float, p: LaserParams) -> float:
    """Distance in beta from the interval endpoints at this gamma."""
    iv = feasible_beta_interval(gamma, p)
    if iv is None:
        return math.inf
    return min(abs(beta - iv[0]), abs(beta - iv[1]))


def default_beta_range(p: LaserParams) -> tuple:
    return (-2 * abs(p.chi) - 4.0, 3.0)


def compare_grid(p: LaserParams, gammas: Sequence[float], betas: Sequence[float],
                 band: float = 1e-2, eps_feas: float = EPS_FEAS) -> GridComparison:
    """Solver feasibility against the closed form on a (gamma, beta) grid."""
    n = agree = 0
    bad = []
    for g in gammas:
        lam = None
        for bt in betas:
            q = PRQuery(float(bt), float(g), p)
            res = solve_min_norm(q, eps_feas=eps_feas, decide_only=True, lam0=lam)
            lam = res.multiplier
            cf = pr_closed_form(q)
            n += 1
            if res.feasible == cf:
                agree += 1
            else:
                bad.append((float(g), float(bt), res.feasible, cf, boundary_distance(bt, g, p)))
    return GridComparison(n, agree, tuple(bad), band)


# distinguished ensembles ------------------------------------------------------

def _cc_objective(gamma: float, p: LaserParams) -> float:
    lo, hi = feasible_beta_interval(gamma, p)
    b = min(max(0.0, lo), hi)
    return gamma + (1 + b * b) / gamma


def cc_ensemble(p: LaserParams, n_grid: int = 400) -> CovarianceTriple:
    """Realizable triple of largest overlap with a coherent state (smallest ``alpha + gamma``)."""
    if p.chi == 0:
        return CovarianceTriple(1.0, 0.0, 1.0)
    gs = np.geomspace(GAMMA_MIN, 1.0, n_grid)
    vals = np.array([_cc_objective(g, p) for g in gs])
    i = int(np.argmin(vals))
    f = lambda g: _cc_objective(float(g), p)
    if 0 < i < n_grid - 1:
        r = minimize_scalar(f, bracket=(gs[i - 1], gs[i], gs[i + 1]), method="golden",
                            options=dict(xtol=1e-12))
        g = float(r.x)
    else:
        g = float(gs[i])
    lo, hi = feasible_beta_interval(g, p)
    b = min(max(0.0, lo), hi)
    return CovarianceTriple.from_beta_gamma(b, g)


def qsd_ensemble(p: LaserParams) -> CovarianceTriple:
    """Stationary triple for quantum state diffusion (``u = 0``), in closed form.

    The textbook forms ``-1 + 4M - F`` and ``G - E`` cancel catastrophically;
    they are evaluated through the equivalent
    ``-2 - 4d`` and ``chi^2 (2 + 8d + 8d^2)/(S + T)`` with
    ``T = M + 1/4``, ``S = sqrt(T^2 + chi^2)``, ``d = chi^2/(S + T)``.
    """
    chi, nu = p.chi, p.nu
    M = 1 + nu / 2
    T = M + 0.25
    S = math.hypot(T, chi)
    d = chi * chi / (S + T)
    lead = -2 - 4 * d                                  # -1 + 4M - F
    gme = chi * chi * (2 + 8 * d + 8 * d * d) / (S + T)  # G - E
    if gme < 0:
        raise InternalError("negative radicand in the diffusion ensemble")
    beta = (lead * chi + math.sqrt(gme)) / (4 * (chi * chi + M))
    q = 1 - beta * beta
    ra = 1 - 8 * chi * beta + 4 * M * q
    rg = 1 + 4 * M * q
    if ra < 0 or rg < 0:
        raise InternalError("negative radicand in the diffusion ensemble")
    alpha = (1 + math.sqrt(ra)) / 2
    gamma = 2 * q / (1 + math.sqrt(rg))               # (-1 + sqrt(rg)) / (2M)
    return CovarianceTriple(alpha, beta, gamma, tol=1e-8)


def qsd_closed_form_textbook(p: LaserParams) -> tuple:
    """Direct evaluation of the published expressions, kept as a cross-check."""
    chi, nu = p.chi, p.nu
    M = 1 + nu / 2
    E = (24 * M - 2) * chi ** 2 + 32 * M ** 3 + 8 * M ** 2
    F = 4 * math.sqrt((M + 0.25) ** 2 + chi ** 2)
    G = 2 * (4 * M ** 2 + chi ** 2) * F
    beta = ((-1 + 4 * M - F) * chi + math.sqrt(max(G - E, 0.0))) / (4 * (chi ** 2 + M))
    alpha = (1 + math.sqrt(1 - 8 * chi * beta + 4 * M * (1 - beta ** 2))) / 2
    gamma = (-1 + math.sqrt(1 + 4 * M * (1 - beta ** 2))) / (2 * M)
    return alpha, beta, gamma


def qsd_asymptotes(p: LaserParams) -> dict:
    """Leading large-chi and large-nu behaviour of the diffusion ensemble."""
    out = {}
    if p.chi > 0:
        out["chi"] = dict(alpha=math.sqrt(2 * p.chi), beta=-1.0, gamma=math.sqrt(2 / p.chi))
    if p.nu > 0:
        out["nu"] = dict(alpha=math.sqrt(p.nu / 2), beta=0.0, gamma=math.sqrt(2 / p.nu))
    return out


def qsd_fixed_point_check(p: LaserParams, triple=None) -> float:
    """Largest |drift| of the conditioned second moments at the diffusion ensemble with ``u = 0``.

    ``triple`` may override the point as ``(alpha, beta, gamma)``.
    """
    if triple is None:
        t = qsd_ensemble(p)
        triple = (t.alpha, t.beta, t.gamma)
    alpha, beta, gamma = triple
    d = second_moment_drift((gamma, beta, alpha), UnravelingMatrix.zero(), p)
    return max(abs(v) for v in d)


# output-only monitoring ---------------------------------------------------------

def output_only_rhs(m, p: LaserParams) -> np.ndarray:
    m20, m11, m02 = m
    return np.array([
        2 - 2 * m20 - m11 * m11,
        -m11 - p.chi * m20 - (m02 - 1) * m11,
        -2 * p.chi * m11 + 2 + p.nu - (m02 - 1) ** 2,
    ])


def output_only_jacobian(m, p: LaserParams) -> np.ndarray:
    m20, m11, m02 = m
    return np.array([
        [-2.0, -2 * m11, 0.0],
        [-p.chi, -1 - (m02 - 1), -m11],
        [0.0, -2 * p.chi, -2 * (m02 - 1)],
    ])


def _newton(m, p, max_iter=200, tol=1e-13):
    m = np.asarray(m, dtype=float)
    f = output_only_rhs(m, p)
    for it in range(max_iter):
        fn = np.abs(f).max()
        if fn <= tol * max(1.0, np.abs(m).max()):
            return m, it
        step = np.linalg.solve(output_only_jacobian(m, p), -f)
        t = 1.0
        while True:
            trial = m + t * step
            ft = output_only_rhs(trial, p)
            if trial[0] > 0 and trial[2] > 0 and np.abs(ft).max() < fn:
                break
            t *= 0.5
            if t < 1e-12:
                raise ConvergenceError(
                    json.dumps(dict(stage="line search", chi=p.chi, nu=p.nu, point=list(m),
                                    residual=float(fn))))
        m, f = trial, ft
    raise ConvergenceError(json.dumps(dict(stage="max iterations", chi=p.chi, nu=p.nu,
                                           point=list(m), residual=float(np.abs(f).max()))))


def output_only_steady_state(p: LaserParams, max_iter: int = 200) -> tuple:
    """Stationary ``(m20, m11, m02)`` when only the output phase quadrature is monitored.

    At ``chi = 0`` the answer ``(1, 0, 1 + sqrt(2 + nu))`` is returned
    directly.  Otherwise damped Newton (step halving) is continued from
    ``chi = 0`` along chi, doubling chi at each stage.
    """
    m = np.array([1.0, 0.0, 1 + math.sqrt(2 + p.nu)])
    if p.chi == 0:
        return tuple(float(v) for v in m)
    stages = [p.chi]
    while abs(stages[-1]) > 0.5:
        stages.append(stages[-1] / 2)
    for c in reversed(stages):
        m, _ = _newton(m, LaserParams(p.mu, c, p.nu), max_iter=max_iter)
    return tuple(float(v) for v in m)


def output_only_asymptotes(p: LaserParams) -> tuple:
    c = p.chi
    return 2 ** 1.25 * c ** -0.5, -math.sqrt(2), 2 ** 0.75 * c ** 0.5


# export --------------------------------------------------------------------------

def region_rows(gammas: Sequence[float], p: LaserParams) -> list:
    rows = []
    for g in gammas:
        iv = feasible_beta_interval(float(g), p)
        rows.append((float(g),) + (iv if iv is not None else (None, None)))
    return rows


def write_region_csv(rows, fh) -> None:
    fh.write("gamma,beta_lo,beta_hi\n")
    for g, lo, hi in rows:
        fh.write(f"{g!r},{'' if lo is None else repr(lo)},{'' if hi is None else repr(hi)}\n")


def ensemble_record(t, p: LaserParams, kind: str) -> dict:
    """``t`` is a :class:`CovarianceTriple` or a plain ``(alpha, beta, gamma)``
    (the output-only state is mixed, so it has no pure triple)."""
    if kind not in ("CC", "QSD", "output-only"):
        raise DomainError(f"unknown ensemble kind {kind!r}")
    alpha, beta, gamma = t.as_tuple() if hasattr(t, "as_tuple") else t
    return dict(chi=p.chi, nu=p.nu, alpha=float(alpha), beta=float(beta), gamma=float(gamma),
                kind=kind)


def ensemble_json(t, p: LaserParams, kind: str) -> str:
    return json.dumps(ensemble_record(t, p, kind), sort_keys=True)
