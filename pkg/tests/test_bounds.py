import json
import math

import numpy as np
import pytest
from scipy import constants as sc

from povmqm.bounds import (Auriga, BoundError, Hydrogen1S2S, PhysicalConstants, auriga_bound, bounds_report,
                           hydrogen_1s2s_bound)

C = PhysicalConstants()


def test_planck_units():
    assert C.planck_length == pytest.approx(1.616255e-35, rel=1e-6)
    assert C.planck_mass == pytest.approx(2.176434e-8, rel=1e-6)
    assert C.planck_length == pytest.approx(math.sqrt(C.hbar * C.G / C.c ** 3), rel=1e-15)


def test_bohr_radius_uses_reduced_mass():
    a_inf = sc.physical_constants["Bohr radius"][0]
    assert C.bohr_radius == pytest.approx(a_inf * sc.m_e / C.reduced_mass, rel=1e-6)
    assert C.hartree * 2 == pytest.approx(sc.m_e * 0 + C.reduced_mass * (sc.e ** 2 / (4 * math.pi * sc.epsilon_0 * sc.hbar)) ** 2 * 2, rel=1e-9)


def test_auriga_saturated_floor():
    rec = Auriga(1.0, 10.0, C.hbar * 10.0 / 2, 1)
    assert auriga_bound(rec).l0_max_m == 0.0


def test_auriga_below_floor_names_the_floor():
    with pytest.raises(BoundError, match="zero-point"):
        auriga_bound(Auriga(1.0, 10.0, C.hbar, 3))


def test_auriga_reported_order_of_magnitude():
    r = auriga_bound(Auriga.default())
    assert 0.1 < r.l0_max_planck / 3.8e16 < 10
    for key in ("mass", "omega", "energy", "d", "frequency_hz"):
        assert key in r.inputs


def test_auriga_mass_scaling():
    a = auriga_bound(Auriga(1e-3, 1e4, 1e-20))
    b = auriga_bound(Auriga(2e-3, 1e4, 1e-20))
    assert b.l0_max_m ** 2 == pytest.approx(a.l0_max_m ** 2 / 2, rel=1e-14)


def test_auriga_monotonicity():
    energies = np.geomspace(1e-26, 1e-22, 5)
    masses = np.geomspace(1e-6, 1e2, 5)
    omegas = np.geomspace(1e2, 1e4, 5)
    by_e = [auriga_bound(Auriga(1.0, 1e3, e)).l0_max_m for e in energies]
    by_m = [auriga_bound(Auriga(m, 1e3, 1e-24)).l0_max_m for m in masses]
    by_w = [auriga_bound(Auriga(1.0, w, 1e-24)).l0_max_m for w in omegas]
    assert np.all(np.diff(by_e) > 0)
    assert np.all(np.diff(by_m) < 0)
    assert np.all(np.diff(by_w) < 0)


def test_unit_renderings_agree():
    for r in (auriga_bound(Auriga.default()), hydrogen_1s2s_bound(Hydrogen1S2S(4.5e-15))):
        assert r.l0_max_planck * C.planck_length == pytest.approx(r.l0_max_m, rel=1e-12)


def test_hydrogen_bound_reported_value():
    r = hydrogen_1s2s_bound(Hydrogen1S2S(4.5e-15), "closed_form")
    assert 1 / 3 < r.l0_max_planck / 2.8e16 < 3
    assert r.inputs["relative_uncertainty"] == 4.5e-15


def test_hydrogen_bound_closed_form():
    # L = a0 sqrt(3 eps / (7 c)) for |dE_n| = c E_h (L/a0)^2 / n^3
    eps = 4.5e-15
    for conv, c in (("closed_form", 8 * math.pi), ("oracle", 2.0)):
        r = hydrogen_1s2s_bound(Hydrogen1S2S(eps), conv)
        assert r.l0_max_m == pytest.approx(C.bohr_radius * math.sqrt(3 * eps / (7 * c)), rel=1e-14)


def test_hydrogen_bound_sqrt_scaling():
    a = hydrogen_1s2s_bound(Hydrogen1S2S(1e-14)).l0_max_m
    b = hydrogen_1s2s_bound(Hydrogen1S2S(4e-14)).l0_max_m
    assert b / a == pytest.approx(2.0, rel=1e-14)
    assert hydrogen_1s2s_bound(Hydrogen1S2S(1e-300)).l0_max_m < 1e-150


def test_bound_input_errors():
    with pytest.raises(BoundError):
        hydrogen_1s2s_bound(Hydrogen1S2S(1e-15), "bogus")
    with pytest.raises(BoundError):
        Hydrogen1S2S(1.5)
    with pytest.raises(BoundError):
        Auriga(-1.0, 1.0, 1.0)


def test_report_is_json_with_citations():
    rep = json.loads(bounds_report({"auriga": auriga_bound(Auriga.default())}))
    assert rep["auriga"]["constants"]["citation"].startswith("CODATA")
    assert rep["auriga"]["inputs"]["energy"] == 1.3e-26
    assert json.loads(auriga_bound(Auriga.default()).to_json())["formula"]
