import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from atomlaser.errors import DomainError
from atomlaser.gaussian import CovarianceTriple, LaserParams, overlap_with_coherent
from atomlaser.region import (PRQuery, cc_ensemble, compare_grid, ensemble_json,
                              feasible_beta_interval, output_only_asymptotes,
                              output_only_jacobian, output_only_rhs, output_only_steady_state,
                              pr_closed_form, pr_expression, qsd_closed_form_textbook,
                              qsd_ensemble, qsd_fixed_point_check, region_rows,
                              solve_min_norm, steady_state_system, write_region_csv)
from atomlaser.unraveling import UnravelingMatrix, second_moment_drift

SQ5 = math.sqrt(5)


def P(chi=0.0, nu=0.0):
    return LaserParams(1.0, chi, nu)


def test_query_domain():
    with pytest.raises(DomainError):
        PRQuery(0, 0)
    with pytest.raises(DomainError):
        PRQuery(0, 1.2)


def test_closed_form_examples():
    assert pr_closed_form(PRQuery(0, 1, P()))
    assert pr_expression(0, 1, 0, 0) == 0
    assert not pr_closed_form(PRQuery(0, 1, P(1)))
    assert pr_expression(0, 1, 1, 0) == -1
    # gamma = 1/2 at chi = nu = 0 lies inside: (2)(1) - 0
    assert pr_expression(0, 0.5, 0, 0) == 2 and pr_closed_form(PRQuery(0, 0.5, P()))


def test_interval_examples():
    assert feasible_beta_interval(1.0, P()) == (0.0, 0.0)
    lo, hi = feasible_beta_interval(1.0, P(4))
    assert lo == pytest.approx(-4) and hi == pytest.approx(-4)
    lo, hi = feasible_beta_interval(0.5, P(4))
    assert (lo, hi) == pytest.approx((-11.830951894845301, -0.16904810515469954), rel=1e-12)


@pytest.mark.parametrize("gamma,chi,nu", [(0.5, 4, 0), (0.05, 16, 10), (0.9, 1, 0), (0.3, 0, 3)])
def test_interval_endpoints_by_bisection(gamma, chi, nu):
    lo, hi = feasible_beta_interval(gamma, P(chi, nu))
    f = lambda b: pr_expression(b, gamma, chi, nu)
    centre = -chi * (2 - gamma)
    assert f(centre) > 0

    def bisect(a, b):
        for _ in range(200):
            m = (a + b) / 2
            if (f(m) >= 0) == (f(a) >= 0):
                a = m
            else:
                b = m
        return (a + b) / 2

    assert bisect(centre, centre - 1e3) == pytest.approx(lo, abs=1e-9)
    assert bisect(centre, centre + 1e3) == pytest.approx(hi, abs=1e-9)


@given(st.floats(1e-3, 1), st.floats(-100, 100), st.floats(0, 100), st.floats(-300, 300))
def test_interval_agrees_with_inequality(gamma, chi, nu, beta):
    lo, hi = feasible_beta_interval(gamma, P(chi, nu))
    expr = pr_expression(beta, gamma, chi, nu)
    scale = 1 + abs(beta) * (1 + abs(chi)) + chi * chi + nu
    if lo + 1e-9 * scale < beta < hi - 1e-9 * scale:
        assert expr >= -1e-9 * scale ** 2
    elif beta < lo - 1e-9 * scale or beta > hi + 1e-9 * scale:
        assert expr < 1e-9 * scale ** 2


def test_interval_midpoints_negative():
    for chi in (1, 4, 16, 1000):
        for g in (0.01, 0.1, 0.3):
            lo, hi = feasible_beta_interval(g, P(chi))
            assert lo + hi < 0


def test_system_columns_match_drift():
    # each column of A is the drift response to a unit entry of u (drift = b - A x)
    for beta, gamma, chi, nu in [(0.3, 0.5, 4, 0), (-1.2, 0.2, 16, 10), (0.7, 0.9, 1, 3)]:
        p = P(chi, nu)
        A, b = steady_state_system(beta, gamma, p)
        m = (gamma, beta, (1 + beta * beta) / gamma)
        d0 = np.array(second_moment_drift(m, UnravelingMatrix.zero(), p))
        order = [0, 2, 1]             # rows: m20, m02, m11
        assert np.allclose(d0[order], b, atol=1e-12)
        for k in range(12):
            e = np.zeros(12)
            e[k] = 1
            d = np.array(second_moment_drift(m, UnravelingMatrix.from_vector(e), p))
            assert np.allclose(d0[order] - d[order], A[:, k], atol=1e-12)


def test_min_norm_coherent_point():
    r = solve_min_norm(PRQuery(0, 1, P()))
    assert r.feasible and r.min_norm <= 1 + 1e-12
    assert r.residual <= 1e-8


def test_min_norm_number_state_limit():
    r = solve_min_norm(PRQuery(1e-3, 1e-3, P()))
    assert r.feasible
    assert r.min_norm == pytest.approx(1, abs=1e-5)
    assert r.residual <= 1e-8
    # diag(1, 1, -1) becomes an exact solution as gamma, beta -> 0
    x = UnravelingMatrix(np.diag([1.0, 1, -1])).to_vector()
    rel = []
    for e in (1e-1, 1e-2, 1e-3):
        A, b = steady_state_system(e, e, P())
        rel.append(np.abs(A @ x - b).max() / np.abs(b).max())
    assert rel[0] > rel[1] > rel[2] and rel[2] < 1e-5


def test_primal_and_dual_meet():
    for beta, gamma, chi in [(-5, 0.5, 4), (0.5, 0.8, 1), (-20, 0.1, 16)]:
        r = solve_min_norm(PRQuery(beta, gamma, P(chi)))
        assert abs(r.gap) < 1e-6
        assert r.feasible == pr_closed_form(PRQuery(beta, gamma, P(chi)))


def test_excess_outside_boundary_is_tiny():
    # why the feasibility tolerance must be far below 1e-3
    p = P(16)
    lo, _ = feasible_beta_interval(0.05, p)
    r = solve_min_norm(PRQuery(lo - 0.01, 0.05, p), decide_only=True)
    assert not r.feasible
    assert 0 < r.min_norm - 1 < 1e-9


def test_grid_agreement_chi4():
    p = P(4)
    cmp = compare_grid(p, np.linspace(0.05, 1, 25), np.linspace(-3, 1, 25))
    assert not cmp.outside_band


def test_cc_examples():
    assert cc_ensemble(P(0, 7)).as_tuple() == (1.0, 0.0, 1.0)
    chi = 1e4
    t = cc_ensemble(P(chi))
    assert t.alpha / (2 * 3 ** -0.75 * chi ** 0.5) == pytest.approx(1, abs=0.05)
    assert t.gamma / (2 * 3 ** -0.25 * chi ** -0.5) == pytest.approx(1, abs=0.05)
    assert t.beta == pytest.approx(-1 / math.sqrt(3), rel=0.05)
    assert overlap_with_coherent(cc_ensemble(P(5, 100))) >= 0.99


def test_cc_frozen_values():
    t = cc_ensemble(P(16))
    assert t.as_tuple() == pytest.approx((3.7167975334664627, -0.47358282157882575, 0.3293912778059609),
                                         rel=1e-8)


@pytest.mark.parametrize("chi,nu", [(0.1, 0), (1, 0), (4, 10), (16, 0), (100, 3), (1000, 0)])
def test_cc_on_boundary_and_beats_qsd(chi, nu):
    t = cc_ensemble(P(chi, nu))
    assert abs(pr_expression(t.beta, t.gamma, chi, nu)) <= 1e-6
    assert overlap_with_coherent(t) >= overlap_with_coherent(qsd_ensemble(P(chi, nu)))


def test_qsd_examples():
    t = qsd_ensemble(P())
    assert t.as_tuple() == pytest.approx(((SQ5 + 1) / 2, 0, (SQ5 - 1) / 2), abs=1e-12)
    t = qsd_ensemble(P(1e4))
    assert t.alpha / (math.sqrt(2) * 100) == pytest.approx(1, abs=0.05)
    assert t.beta == pytest.approx(-1, abs=0.05)
    t = qsd_ensemble(P(0, 1e4))
    assert t.alpha / (100 / math.sqrt(2)) == pytest.approx(1, abs=0.05)
    assert t.beta == 0


@pytest.mark.parametrize("chi,nu", [(0, 0), (1, 0), (16, 10), (0.3, 50), (200, 1)])
def test_qsd_stable_form_matches_textbook(chi, nu):
    assert qsd_ensemble(P(chi, nu)).as_tuple() == pytest.approx(qsd_closed_form_textbook(P(chi, nu)),
                                                                 rel=1e-9)


def test_qsd_fixed_point_residuals():
    assert qsd_fixed_point_check(P()) <= 1e-9
    assert qsd_fixed_point_check(P(16, 10)) <= 1e-9
    t = qsd_ensemble(P())
    assert qsd_fixed_point_check(P(), (t.alpha + 0.1, t.beta, t.gamma)) > 1e-3


@pytest.mark.parametrize("chi,nu", [(0, 0), (1, 0), (4, 10), (16, 0), (16, 10)])
def test_qsd_inside_region(chi, nu):
    t = qsd_ensemble(P(chi, nu))
    assert pr_expression(t.beta, t.gamma, chi, nu) > 0


def test_output_only_examples():
    assert output_only_steady_state(P(0, 7)) == (1.0, 0.0, 4.0)
    m = output_only_steady_state(P())
    assert m[0] * m[2] - m[1] ** 2 == pytest.approx(1 + math.sqrt(2))
    p = P(1e4, 1)
    for got, want in zip(output_only_steady_state(p), output_only_asymptotes(p)):
        assert got == pytest.approx(want, rel=0.05)


@pytest.mark.parametrize("chi,nu", [(0.5, 0), (4, 0), (40, 2), (3000, 1)])
def test_output_only_fixed_point_stable(chi, nu):
    p = P(chi, nu)
    m = output_only_steady_state(p)
    assert np.abs(output_only_rhs(m, p)).max() < 1e-9 * max(1, chi)
    assert np.linalg.eigvals(output_only_jacobian(m, p)).real.max() < 0


def test_exports():
    buf = io.StringIO()
    write_region_csv(region_rows([0.5, 1.0], P()), buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "gamma,beta_lo,beta_hi"
    assert lines[2] == "1.0,0.0,0.0"
    rec = json.loads(ensemble_json(qsd_ensemble(P()), P(), "QSD"))
    assert rec["kind"] == "QSD" and rec["alpha"] == pytest.approx((SQ5 + 1) / 2)
    rec = json.loads(ensemble_json(output_only_steady_state(P(0, 7))[::-1], P(0, 7), "output-only"))
    assert rec["alpha"] == 4.0
    with pytest.raises(DomainError):
        ensemble_json(qsd_ensemble(P()), P(), "other")
