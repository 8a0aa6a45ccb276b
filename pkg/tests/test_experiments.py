import math

import pytest

from atomlaser.errors import DomainError
from atomlaser.experiments import (TrapExperiment, chi_thomas_fermi, coherence_flux_condition,
                                   linewidth, linewidth_crossover, linewidth_seam_ratio,
                                   load_species, proposed, report, single_mode_check,
                                   table_csv, table_text, thomas_fermi_ratio)


def test_species_file():
    s = load_species()
    assert s["Na23"]["mass"] == 3.8175e-26 and s["Na23"]["a_s"] == 2.75e-9


def test_proposed_chi_frozen():
    # closed-form value; the published table lists 990 (see notes)
    e = proposed()
    assert chi_thomas_fermi(e) == pytest.approx(507.1283876933249, rel=1e-12)
    assert thomas_fermi_ratio(e) < 1e-3


def test_chi_scaling():
    e = proposed()
    c = chi_thomas_fermi(e)
    assert chi_thomas_fermi(e.scaled(mu=2 * e.mu)) == pytest.approx(c * 2 ** 0.4)
    assert chi_thomas_fermi(e.scaled(kappa=2 * e.kappa)) == pytest.approx(c / 2)


def test_chi_from_self_energy_integral():
    # independent route: chi = 4 mu C with C from the Thomas-Fermi density integral
    e = proposed()
    hbar = 1.054571817e-34
    g = 4 * math.pi * hbar ** 2 * e.a_s / e.mass
    a_ho = math.sqrt(hbar / (e.mass * e.omega_mean))
    mu_c = hbar * e.omega_mean / 2 * (15 * e.mu * e.a_s / a_ho) ** 0.4
    R3 = (2 * mu_c / (e.mass * e.omega_mean ** 2)) ** 1.5
    int_psi4 = 15 / (14 * math.pi * R3)
    # normalization check: g N * peak density equals the chemical potential
    assert g * e.mu * 15 / (8 * math.pi * R3) == pytest.approx(mu_c, rel=1e-12)
    C = 2 * math.pi * hbar * e.a_s / (e.kappa * e.mass) * int_psi4
    assert 4 * e.mu * C == pytest.approx(chi_thomas_fermi(e), rel=1e-10)


def test_linewidth_branches():
    e = proposed()
    assert linewidth(e, 0) == e.kappa / (2 * e.mu)
    assert linewidth_crossover(1e6) == pytest.approx(1595.769, abs=1e-3)
    chi = 990.0
    assert linewidth(e, chi) == e.kappa * (1 + chi * chi) / (2 * e.mu)
    assert linewidth(e, 2000) == pytest.approx(2 * e.kappa * 2000 / math.sqrt(2 * math.pi * e.mu))
    assert linewidth_seam_ratio(1e6) == pytest.approx(1 / (1 + math.pi / 8e6), rel=1e-9)
    with pytest.raises(DomainError):
        linewidth(e, -1)


def test_flux_condition():
    e = proposed()
    fc = coherence_flux_condition(e)
    assert fc.IT == pytest.approx(2.8e5)
    assert fc.root_factor == pytest.approx(0.0524363222570961, rel=1e-9)
    assert fc.threshold == pytest.approx(1.61 * e.omega_mean * fc.root_factor)
    assert fc.satisfied
    assert not coherence_flux_condition(e, flux=0.0).satisfied


def test_flux_threshold_equivalent_to_chi_condition():
    # I >> threshold is chi << mu^(3/2) rewritten; equality holds at the same mu
    e = proposed()
    fc = coherence_flux_condition(e)
    mu_star = fc.threshold / e.kappa
    with pytest.warns(RuntimeWarning):           # far outside Thomas-Fermi, formula still defined
        chi = chi_thomas_fermi(e.scaled(mu=mu_star))
    assert chi / mu_star ** 1.5 == pytest.approx(1, rel=1e-3)


def test_single_mode():
    e = proposed()
    sm = single_mode_check(e, linewidth(e, chi_thomas_fermi(e)))
    assert sm.r1 == pytest.approx(2 * math.pi * 25 / 7)
    assert sm.ok
    assert not single_mode_check(e.scaled(kappa=e.omega_min), 1.0).ok


def test_report_consistency():
    r = report(proposed())
    assert r.degeneracy == r.flux / r.ell
    assert r.kappa_over_ell == pytest.approx(r.degeneracy / 1e6)


def test_units_audit():
    base = report(proposed())
    e = proposed()
    for s, L in [(3.0, 1.0), (1.0, 2.5), (0.2, 0.7)]:
        # time rescaling with m -> m/s, length rescaling with m -> m/L^2
        f = e.scaled(omega_mean=e.omega_mean * s, omega_min=e.omega_min * s, kappa=e.kappa * s,
                     mass=e.mass / s / L ** 2, a_s=e.a_s * L)
        r = report(f)
        for name in ("chi", "tf_ratio", "IT", "kappa_over_ell", "omega_min_over_kappa",
                     "omega_min_over_ell", "degeneracy"):
            assert getattr(r, name) == pytest.approx(getattr(base, name), rel=1e-10)


def test_validation_and_tables():
    with pytest.raises(DomainError):
        TrapExperiment(0, 1, 1, 1, 1, 1)
    with pytest.raises(DomainError):
        TrapExperiment.from_species("Xx", 1, 1, 1, 1)
    r = report(proposed())
    txt = table_text([r])
    assert txt.splitlines()[1].startswith("chi") and "Proposed" in txt
    csv = table_csv([r])
    assert csv.splitlines()[0] == "quantity,Proposed"
    assert [l.split(",")[0] for l in csv.splitlines()[1:]] == [
        "chi", "IT", "I/l", "kappa/l", "omega_min/kappa", "omega_min/l"]


def test_tf_warning():
    e = proposed().scaled(mu=1.0)
    with pytest.warns(RuntimeWarning):
        chi_thomas_fermi(e)
