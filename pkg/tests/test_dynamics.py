import math

import numpy as np
import pytest

from povmqm import reference
from povmqm.dynamics import (MemoryGuardError, NumericalGuardError, build_hamiltonian, eigensolve,
                             ehrenfest_check, oscillator_spectrum_analytic, oscillator_spectrum_check, propagate,
                             sinc_second_derivative, spectrum_to_csv, standard_oscillator_levels)
from povmqm.kernels import RadialKernel
from povmqm.potentials import GaussianWell, Harmonic, Tabulated
from povmqm.wavefunction import MomentumGrid, make_gaussian_state, random_state


def test_sinc_second_derivative_on_gaussian():
    n, h = 128, 0.1
    x = (np.arange(n) - n // 2) * h
    f = np.exp(-x ** 2)
    exact = (4 * x ** 2 - 2) * f
    assert np.abs(sinc_second_derivative(n, h) @ f - exact).max() < 1e-10


@pytest.mark.parametrize("V", [None, Harmonic(1.0, 1.0), GaussianWell(-1.0, 1.0)], ids=["free", "harmonic", "well"])
def test_hamiltonian_is_hermitian(V):
    g = MomentumGrid.from_cutoff(64, 8.0)
    H = build_hamiltonian(g, V, RadialKernel.gaussian(0.3), 1.0)
    assert H.hermiticity_error() < 1e-12


@pytest.mark.parametrize("k", [RadialKernel.gaussian(0.2), RadialKernel.schoenberg([0.1, 0.25], [1.0, 1.0])],
                         ids=["gaussian", "schoenberg"])
def test_oscillator_shift(k):
    g = MomentumGrid.from_cutoff(256, 14.0)
    for num, ana, diff in oscillator_spectrum_check(g, 1.0, 1.0, k, 6):
        assert abs(diff) < 1e-8


def test_oscillator_shift_with_other_parameters():
    # m = 2, omega = 0.5, hbar = 0.8: shift m w^2 l0^2 / 2 = 0.0225
    g = MomentumGrid.from_cutoff(256, 10.0, hbar=0.8)
    k = RadialKernel.gaussian(0.3, hbar=0.8)
    rows = oscillator_spectrum_check(g, 0.5, 2.0, k, 4)
    standard = standard_oscillator_levels(1, 0.5, 2.0, 4, 0.8)
    for (num, _, _), s in zip(rows, standard):
        assert num - s == pytest.approx(0.0225, abs=1e-8)


def test_two_dimensional_oscillator():
    g = MomentumGrid.from_cutoff(32, 8.0, d=2)
    k = RadialKernel.gaussian(0.2, 2)
    rows = oscillator_spectrum_check(g, 1.0, 1.0, k, 6)
    # levels 1, 2, 2, 3, 3, 3 shifted by d * l0^2 / 2 = 0.04
    for num, ana, diff in rows:
        assert abs(diff) < 1e-6
    assert rows[1][1] == pytest.approx(2.04)


def test_analytic_levels():
    assert oscillator_spectrum_analytic(1, 1.0, 1.0, 0.1, 0) == pytest.approx(0.505)
    assert oscillator_spectrum_analytic(3, 2.0, 1.0, 0.0, [1, 0, 0]) == pytest.approx(5.0)
    with pytest.raises(ValueError):
        oscillator_spectrum_analytic(1, 1.0, 1.0, 0.0, -1)


def test_well_spectrum_matches_position_reference():
    g = MomentumGrid.from_spacing(256, 0.1)
    V = GaussianWell(-2.0, 1.0)
    num = eigensolve(build_hamiltonian(g, V, RadialKernel.constant(), 1.0), 2).energies
    ref = reference.eigenvalues(g.x_axis, V.value([g.x_axis]), 1.0, 2)
    assert np.abs(num - ref).max() < 1e-8


@pytest.mark.parametrize("k", [RadialKernel.constant(), RadialKernel.gaussian(0.5)], ids=["constant", "gaussian"])
def test_tabulated_and_analytic_well_agree(k):
    g = MomentumGrid.from_spacing(128, 0.25)
    V = GaussianWell(-2.0, 1.0)
    a = eigensolve(build_hamiltonian(g, V, k, 1.0), 3).energies
    b = eigensolve(build_hamiltonian(g, Tabulated(g, V.value([g.x_axis])), k, 1.0), 3).energies
    assert np.abs(a - b).max() < 1e-9


def test_smoothing_raises_well_levels():
    # a smoothed well is shallower, so binding energies shrink
    g = MomentumGrid.from_spacing(128, 0.25)
    V = GaussianWell(-2.0, 1.0)
    e0 = eigensolve(build_hamiltonian(g, V, RadialKernel.constant(), 1.0), 1).energies[0]
    e1 = eigensolve(build_hamiltonian(g, V, RadialKernel.gaussian(0.5), 1.0), 1).energies[0]
    assert e1 > e0


def test_memory_guard():
    with pytest.raises(MemoryGuardError):
        build_hamiltonian(MomentumGrid.from_cutoff(128, 5.0, d=2), None, RadialKernel.constant(2), 1.0)
    with pytest.raises(MemoryGuardError):
        build_hamiltonian(MomentumGrid.from_cutoff(8, 5.0, d=3), None, RadialKernel.constant(3), 1.0)


def test_eigensolve_residual_guard(monkeypatch):
    import povmqm.dynamics as dyn

    monkeypatch.setattr(dyn, "RESIDUAL_TOL", -1.0)
    with pytest.raises(NumericalGuardError):
        eigensolve(np.diag([1.0, 2.0]), 1)


def test_split_matches_dense():
    g = MomentumGrid.from_spacing(128, 0.2)
    V = GaussianWell(-2.0, 1.0)
    k = RadialKernel.gaussian(0.3)
    s = make_gaussian_state(g, 1.0, 0.5, 1.0)
    a = propagate(s, V, k, 1.0, 1e-4, 2000, snapshot_stride=2000)
    b = propagate(s, V, k, 1.0, 0.05, 4, snapshot_stride=4, method="dense")
    assert np.abs(a.snapshots[-1].amplitudes - b.snapshots[-1].amplitudes).max() < 1e-8


def test_split_error_is_second_order():
    g = MomentumGrid.from_spacing(128, 0.2)
    V = GaussianWell(-2.0, 1.0)
    k = RadialKernel.gaussian(0.3)
    s = make_gaussian_state(g, 1.0, 0.5, 1.0)
    exact = propagate(s, V, k, 1.0, 0.4, 1, snapshot_stride=1, method="dense").snapshots[-1].amplitudes
    err = []
    for dt in (8e-4, 4e-4):
        steps = int(round(0.4 / dt))
        out = propagate(s, V, k, 1.0, dt, steps, snapshot_stride=steps).snapshots[-1].amplitudes
        err.append(np.abs(out - exact).max())
    assert 3.5 < err[0] / err[1] < 4.5


def test_free_spreading_law():
    # dx(t)^2 = l0^2 + sigma^2 + (hbar t / (2 m sigma))^2 for a free packet
    g = MomentumGrid.from_spacing(512, 0.1)
    k = RadialKernel.gaussian(0.4)
    m, sigma = 1.3, 0.8
    tr = propagate(make_gaussian_state(g, 0.0, 1.0, sigma), None, k, m, 2e-4, 2500, snapshot_stride=500)
    expect = np.sqrt(0.16 + sigma ** 2 + (tr.times / (2 * m * sigma)) ** 2)
    assert np.abs(tr.delta_x[:, 0] - expect).max() < 1e-10
    assert np.abs(tr.x_mean[:, 0] - tr.times / m).max() < 1e-10
    assert np.abs(tr.norm - 1).max() < 1e-12


def test_step_and_argument_guards():
    g = MomentumGrid.from_spacing(128, 0.2)
    s = make_gaussian_state(g)
    with pytest.raises(ValueError):
        propagate(s, None, RadialKernel.constant(), 1.0, 1.0, 2)
    with pytest.raises(ValueError):
        propagate(s, None, RadialKernel.constant(), 1.0, 1e-4, 0)
    with pytest.raises(ValueError):
        propagate(s, None, RadialKernel.constant(), 1.0, 1e-4, 2, method="rk4")


def test_norm_drift_guard(monkeypatch):
    import povmqm.dynamics as dyn

    monkeypatch.setattr(dyn, "NORM_DRIFT_ABORT", -1.0)
    g = MomentumGrid.from_spacing(128, 0.2)
    with pytest.raises(NumericalGuardError):
        propagate(make_gaussian_state(g), None, RadialKernel.constant(), 1.0, 1e-4, 2)


def test_ehrenfest_in_harmonic_trap():
    g = MomentumGrid.from_spacing(256, 0.25)
    V = Harmonic(1.0, 1.0)
    k = RadialKernel.schoenberg([0.1, 0.3], [1.0, 1.0])
    tr = propagate(make_gaussian_state(g, 1.0, 0.0, 1.0), V, k, 1.0, 1e-3, 1000, snapshot_stride=10)
    assert ehrenfest_check(tr, V, k) < 1e-4
    assert np.abs(tr.x_mean[:, 0] - np.cos(tr.times)).max() < 1e-6


def test_ehrenfest_in_well():
    g = MomentumGrid.from_spacing(256, 0.2)
    V = GaussianWell(-2.0, 1.0)
    k = RadialKernel.gaussian(0.3)
    tr = propagate(random_state(g, np.random.default_rng(1)), V, k, 1.0, 2e-4, 1000, snapshot_stride=20)
    assert ehrenfest_check(tr, V, k) < 1e-3


def test_trajectory_csv_and_moments():
    g = MomentumGrid.from_spacing(128, 0.2)
    k = RadialKernel.gaussian(0.3)
    tr = propagate(make_gaussian_state(g, 0.0, 0.0, 1.0), None, k, 1.0, 5e-4, 3)
    lines = tr.to_csv().splitlines()
    assert lines[0].startswith("t,x_mean_0") and len(lines) == 5
    # <x^4> of a centred gaussian smoothed by l0: 3 (sigma^2 + l0^2)^2
    assert tr.x4[0] == pytest.approx(3 * (1 + 0.09) ** 2, rel=1e-12)


def test_spectrum_csv_columns():
    text = spectrum_to_csv([(0.505, 0.505, 0.0)], [1e-14], [0.5])
    header, row = text.splitlines()
    assert header == "index,numeric,analytic,difference,shift,residual"
    assert float(row.split(",")[4]) == pytest.approx(0.005)


def test_eigenstates_are_normalized():
    g = MomentumGrid.from_cutoff(128, 10.0)
    spec = eigensolve(build_hamiltonian(g, Harmonic(1.0, 1.0), RadialKernel.gaussian(0.1), 1.0), 3)
    for s in spec.states:
        assert s.norm == pytest.approx(1.0, abs=1e-12)
    assert math.isclose(spec.energies[0], 0.505, abs_tol=1e-8)
