"""Upper bounds on the minimal length from oscillator and hydrogen data (SI units)."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

from scipy import constants as sc

CODATA = "CODATA 2018 via scipy.constants"

# AURIGA first longitudinal mode: the frequency is not given alongside the
# energy bound, so the default is a documented, overridable choice
AURIGA_DEFAULT_FREQUENCY_HZ = 865.0
AURIGA_DEFAULT_ENERGY_J = 1.3e-26
AURIGA_DEFAULT_MASS_PLANCK = 1e13
HYDROGEN_DEFAULT_RELATIVE_UNCERTAINTY = 4.5e-15

CONVENTIONS = {
    # |Delta E_n| = c * E_h * (L / a0)^2 / n^3
    "closed_form": 8 * math.pi,
    "oracle": 2.0,
}


class BoundError(ValueError):
    pass


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = sc.hbar
    c: float = sc.c
    G: float = sc.G
    e: float = sc.e
    epsilon0: float = sc.epsilon_0
    electron_mass: float = sc.m_e
    proton_mass: float = sc.m_p
    citation: str = CODATA

    @property
    def planck_length(self) -> float:
        return math.sqrt(self.hbar * self.G / self.c ** 3)

    @property
    def planck_mass(self) -> float:
        return math.sqrt(self.hbar * self.c / self.G)

    @property
    def reduced_mass(self) -> float:
        """Electron-proton reduced mass."""
        return self.electron_mass * self.proton_mass / (self.electron_mass + self.proton_mass)

    @property
    def bohr_radius(self) -> float:
        """Reduced-mass Bohr radius ``4 pi eps0 hbar^2 / (mu e^2)``."""
        return 4 * math.pi * self.epsilon0 * self.hbar ** 2 / (self.reduced_mass * self.e ** 2)

    @property
    def hartree(self) -> float:
        """``e^2 / (4 pi eps0 a0)`` with the reduced-mass radius."""
        return self.e ** 2 / (4 * math.pi * self.epsilon0 * self.bohr_radius)

    def as_dict(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k != "citation"}
        out.update(planck_length=self.planck_length, planck_mass=self.planck_mass,
                   reduced_mass=self.reduced_mass, bohr_radius=self.bohr_radius)
        return {"values": out, "citation": self.citation}


@dataclass(frozen=True)
class Auriga:
    mass: float
    omega: float
    energy: float
    d: int = 1

    def __post_init__(self):
        if not (self.mass > 0 and self.omega > 0 and self.energy > 0 and self.d >= 1):
            raise BoundError("AURIGA inputs must be positive")

    @classmethod
    def default(cls, constants: PhysicalConstants | None = None, frequency_hz=AURIGA_DEFAULT_FREQUENCY_HZ,
                energy=AURIGA_DEFAULT_ENERGY_J, mass_planck=AURIGA_DEFAULT_MASS_PLANCK, d=1):
        c = constants or PhysicalConstants()
        return cls(mass_planck * c.planck_mass, 2 * math.pi * frequency_hz, energy, d)


@dataclass(frozen=True)
class Hydrogen1S2S:
    relative_uncertainty: float

    def __post_init__(self):
        if not 0 < self.relative_uncertainty < 1:
            raise BoundError("relative uncertainty must lie in (0, 1)")


@dataclass(frozen=True)
class BoundResult:
    l0_max_m: float
    l0_max_planck: float
    formula: str
    inputs: dict
    constants: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def auriga_bound(rec: Auriga, constants: PhysicalConstants | None = None) -> BoundResult:
    """Largest ``l0`` with ``(d/2) hbar w + (d/2) m l0^2 w^2 <= E_exp``."""
    c = constants or PhysicalConstants()
    floor = rec.d * c.hbar * rec.omega / 2
    if rec.energy < floor:
        raise BoundError(f"E_exp = {rec.energy:.6g} J lies below the zero-point floor d*hbar*omega/2 = {floor:.6g} J")
    l0 = math.sqrt(max(2 * rec.energy / rec.d - c.hbar * rec.omega, 0.0) / (rec.mass * rec.omega ** 2))
    inputs = asdict(rec)
    inputs.update(frequency_hz=rec.omega / (2 * math.pi), mass_planck=rec.mass / c.planck_mass,
                  zero_point_floor_j=floor)
    return BoundResult(l0, l0 / c.planck_length, "oscillator ground-state shift: sqrt((2E/d - hbar w)/(m w^2))",
                       inputs, c.as_dict())


def hydrogen_1s2s_bound(rec: Hydrogen1S2S, convention: str = "closed_form",
                        constants: PhysicalConstants | None = None) -> BoundResult:
    """Bound on ``sqrt(l1^2 + l2^2)`` from ``|dE_2 - dE_1| <= eps (E_2 - E_1)``."""
    if convention not in CONVENTIONS:
        raise BoundError(f"unknown convention {convention!r}; expected one of {sorted(CONVENTIONS)}")
    c = constants or PhysicalConstants()
    coef = CONVENTIONS[convention]
    transition = 3.0 / 8.0 * c.hartree
    # |dE_2 - dE_1| = coef * (7/8) * E_h * (L/a0)^2
    L = c.bohr_radius * math.sqrt(rec.relative_uncertainty * transition / (coef * 7.0 / 8.0 * c.hartree))
    inputs = {"relative_uncertainty": rec.relative_uncertainty, "convention": convention,
              "shift_coefficient": coef, "transition_energy_j": transition}
    return BoundResult(L, L / c.planck_length, f"1S-2S difference of S shifts ({convention} prefactor)",
                       inputs, c.as_dict())


def bounds_report(results: dict) -> str:
    return json.dumps({k: asdict(v) for k, v in results.items()}, indent=2, sort_keys=True) + "\n"
