"""Map trap and condensate data onto the dimensionless laser parameters.

All inputs are SI: mass in kg, angular frequencies in rad/s, scattering
length in m, decay rate in 1/s.  ``omega_mean`` is the geometric mean of
the three trap frequencies.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass
from importlib import resources

from .errors import DomainError

HBAR = 1.054571817e-34
TF_WARN = 0.3
DEFAULT_FACTOR = 10.0


def load_species() -> dict:
    """Atomic constants shipped in ``species.json`` (editable)."""
    return json.loads(resources.files(__package__).joinpath("species.json").read_text())


@dataclass(frozen=True)
class TrapExperiment:
    mass: float
    omega_mean: float
    omega_min: float
    a_s: float
    kappa: float
    mu: float
    label: str = ""

    def __post_init__(self):
        for name in ("mass", "omega_mean", "omega_min", "a_s", "kappa", "mu"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be a positive finite number, got {v!r}")

    @classmethod
    def from_species(cls, species: str, omega_mean: float, omega_min: float, kappa: float,
                     mu: float, label: str = "") -> "TrapExperiment":
        table = load_species()
        if species not in table:
            raise DomainError(f"unknown species {species!r}; known: {sorted(table)}")
        c = table[species]
        return cls(c["mass"], omega_mean, omega_min, c["a_s"], kappa, mu, label or species)

    @property
    def flux(self) -> float:
        """Output flux ``I = kappa mu`` (atoms per second)."""
        return self.kappa * self.mu

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega_mean

    def scaled(self, **changes) -> "TrapExperiment":
        d = dict(self.__dict__)
        d.update(changes)
        return TrapExperiment(**d)


def thomas_fermi_ratio(e: TrapExperiment) -> float:
    """Kinetic over interaction energy; small in the Thomas-Fermi regime."""
    return (HBAR / (64 * math.pi ** 2 * e.mass * e.omega_mean * e.mu ** 2 * e.a_s ** 2)) ** 0.4


def chi_thomas_fermi(e: TrapExperiment) -> float:
    tf = thomas_fermi_ratio(e)
    if tf > TF_WARN:
        warnings.warn(f"Thomas-Fermi ratio {tf:.3g} is not small; chi is unreliable", RuntimeWarning)
    inner = 225 * e.mu ** 2 * e.mass * e.omega_mean ** 6 * e.a_s ** 2 / HBAR
    return 4 / (7 * e.kappa) * inner ** 0.2


def linewidth_crossover(mu: float) -> float:
    return math.sqrt(8 * mu / math.pi)


def linewidth(e: TrapExperiment, chi: float) -> float:
    """Output linewidth; Schawlow-Townes-like below the crossover, collision-limited above.

    At the crossover the two branches differ by the factor ``1 + pi/(8 mu)``.
    """
    if chi < 0:
        raise DomainError("chi must be non-negative")
    if chi < linewidth_crossover(e.mu):
        return e.kappa * (1 + chi * chi) / (2 * e.mu)
    return 2 * e.kappa * chi / math.sqrt(2 * math.pi * e.mu)


def linewidth_seam_ratio(mu: float) -> float:
    """Upper over lower branch evaluated at the crossover."""
    c = linewidth_crossover(mu)
    return (2 * c / math.sqrt(2 * math.pi * mu)) / ((1 + c * c) / (2 * mu))


@dataclass(frozen=True)
class FluxCondition:
    threshold: float
    root_factor: float
    satisfied: bool
    IT: float


def coherence_flux_condition(e: TrapExperiment, flux: float | None = None,
                             factor: float = DEFAULT_FACTOR) -> FluxCondition:
    """Is the flux far above the coherence threshold ``1.61 omega (a^4 omega m^2 kappa / hbar^2)^(1/11)``?"""
    I = e.flux if flux is None else flux
    root = (e.a_s ** 4 * e.omega_mean * e.mass ** 2 * e.kappa / HBAR ** 2) ** (1 / 11)
    thr = 1.61 * e.omega_mean * root
    return FluxCondition(thr, root, I >= factor * thr, I * e.period)


@dataclass(frozen=True)
class SingleMode:
    r1: float
    r2: float
    ok: bool


def single_mode_check(e: TrapExperiment, ell: float, factor: float = DEFAULT_FACTOR) -> SingleMode:
    r1 = e.omega_min / e.kappa
    r2 = e.omega_min / ell
    return SingleMode(r1, r2, r1 >= factor and r2 >= factor)


@dataclass(frozen=True)
class ExperimentReport:
    label: str
    chi: float
    tf_ratio: float
    flux: float
    ell: float
    degeneracy: float
    IT: float
    kappa_over_ell: float
    omega_min_over_kappa: float
    omega_min_over_ell: float
    coherent: bool
    single_mode: bool

    def table_rows(self) -> list:
        return [("chi", self.chi), ("IT", self.IT), ("I/l", self.degeneracy),
                ("kappa/l", self.kappa_over_ell), ("omega_min/kappa", self.omega_min_over_kappa),
                ("omega_min/l", self.omega_min_over_ell)]


def report(e: TrapExperiment, factor: float = DEFAULT_FACTOR) -> ExperimentReport:
    chi = chi_thomas_fermi(e)
    ell = linewidth(e, chi)
    fc = coherence_flux_condition(e, factor=factor)
    sm = single_mode_check(e, ell, factor=factor)
    D = e.flux / ell
    return ExperimentReport(
        label=e.label, chi=chi, tf_ratio=thomas_fermi_ratio(e), flux=e.flux, ell=ell,
        degeneracy=D, IT=fc.IT, kappa_over_ell=e.kappa / ell,
        omega_min_over_kappa=sm.r1, omega_min_over_ell=sm.r2,
        coherent=fc.satisfied, single_mode=sm.ok)


def proposed() -> TrapExperiment:
    """Sodium condensate of 10^6 atoms in an isotropic 25 Hz trap, outcoupled at 7/s."""
    w = 2 * math.pi * 25
    return TrapExperiment.from_species("Na23", w, w, 7.0, 1e6, label="Proposed")


def table_text(reports) -> str:
    reports = list(reports)
    names = [r for r, _ in reports[0].table_rows()]
    width = max(len(n) for n in names) + 2
    cols = [max(12, len(r.label) + 2) for r in reports]
    lines = ["".ljust(width) + "".join(r.label.rjust(c) for r, c in zip(reports, cols))]
    for i, n in enumerate(names):
        lines.append(n.ljust(width) + "".join(
            f"{r.table_rows()[i][1]:.3g}".rjust(c) for r, c in zip(reports, cols)))
    return "\n".join(lines) + "\n"


def table_csv(reports) -> str:
    reports = list(reports)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["quantity"] + [r.label for r in reports])
    for i, (n, _) in enumerate(reports[0].table_rows()):
        w.writerow([n] + [repr(r.table_rows()[i][1]) for r in reports])
    return buf.getvalue()
