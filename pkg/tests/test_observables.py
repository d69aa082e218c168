import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from povmqm import reference
from povmqm.dynamics import propagate
from povmqm.kernels import RadialKernel, kernel_l0
from povmqm.observables import (continuity_residual, moment, position_density, position_density_direct,
                                probability_current_free, probability_current_interacting, standard_moment,
                                uncertainty_report)
from povmqm.potentials import GaussianWell, Harmonic
from povmqm.wavefunction import MomentumGrid, make_gaussian_state, random_state, to_position_amplitudes, white_state

KERNELS_1D = [RadialKernel.constant(1), RadialKernel.gaussian(0.6), RadialKernel.schoenberg([0.3, 1.1], [2.0, 1.0])]


@pytest.fixture(scope="module")
def grid():
    return MomentumGrid.from_spacing(256, 0.15)


@pytest.mark.parametrize("k", KERNELS_1D, ids=lambda k: k.family)
def test_density_fft_matches_direct_sum(k):
    g = MomentumGrid.from_spacing(64, 0.3)
    s = white_state(g, np.random.default_rng(11))
    rho = position_density(s, k)
    assert np.abs(rho.values - position_density_direct(s, k)).max() < 1e-12
    assert rho.total == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("d", [2, 3])
def test_density_fft_matches_direct_sum_multidim(d):
    g = MomentumGrid.from_spacing(8, 0.5, d)
    s = white_state(g, np.random.default_rng(d))
    for k in (RadialKernel.gaussian(1.2, d), RadialKernel.schoenberg([0.4, 1.0], [1.0, 1.0], d)):
        assert np.abs(position_density(s, k).values - position_density_direct(s, k)).max() < 1e-12


def test_constant_kernel_density_is_squared_modulus(grid):
    s = random_state(grid, np.random.default_rng(2))
    rho = position_density(s, RadialKernel.constant())
    assert np.allclose(rho.values, np.abs(to_position_amplitudes(s)) ** 2, atol=1e-15)


def test_density_nonnegative_and_clamp_metadata(grid):
    s = random_state(grid, np.random.default_rng(3))
    rho = position_density(s, RadialKernel.gaussian(0.5))
    assert np.all(rho.values >= 0)
    assert "clamped_cells" in rho.metadata


def test_gaussian_density_is_widened_gaussian():
    # |psi|^2 of width sigma smoothed by a gaussian of width l0
    g = MomentumGrid.from_spacing(256, 0.1)
    s = make_gaussian_state(g, 0.4, 0.0, 1.0)
    l0 = 0.5
    rho = position_density(s, RadialKernel.gaussian(l0)).values
    var = 1.0 + l0 * l0
    expect = np.exp(-(g.x_axis - 0.4) ** 2 / (2 * var)) / math.sqrt(2 * math.pi * var)
    assert np.abs(rho - expect).max() < 1e-12


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), which=st.integers(0, 2))
def test_variance_identity(seed, which):
    g = MomentumGrid.from_spacing(256, 0.15)
    k = KERNELS_1D[which]
    r = uncertainty_report(random_state(g, np.random.default_rng(seed)), k)
    assert r.delta_x[0] ** 2 - r.var_std[0] == pytest.approx(kernel_l0(k) ** 2, abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), which=st.integers(0, 2))
def test_uncertainty_relation_holds(seed, which):
    g = MomentumGrid.from_spacing(256, 0.15)
    r = uncertainty_report(random_state(g, np.random.default_rng(seed)), KERNELS_1D[which])
    assert not r.violated


@pytest.mark.parametrize("sigma", [0.4, 1.0, 2.5])
@pytest.mark.parametrize("k", KERNELS_1D, ids=lambda k: k.family)
def test_gaussians_saturate_bound(sigma, k):
    g = MomentumGrid.from_spacing(512, 0.1)
    r = uncertainty_report(make_gaussian_state(g, -0.3, 0.4, sigma), k)
    assert r.product[0] == pytest.approx(r.bound[0], abs=1e-10)
    assert r.delta_p[0] == pytest.approx(1 / (2 * sigma), rel=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("k", KERNELS_1D, ids=lambda k: k.family)
def test_moment_expansion_matches_quadrature(n, k, grid):
    s = random_state(grid, np.random.default_rng(n))
    a = moment(s, k, 0, n, "expansion")
    b = moment(s, k, 0, n, "quadrature")
    assert a == pytest.approx(b, rel=1e-9, abs=1e-10)


def test_moment_expansion_second_order_is_shifted(grid):
    s = make_gaussian_state(grid, 1.0, 0.0, 1.0)
    k = RadialKernel.gaussian(0.3)
    assert moment(s, k, 0, 2) - standard_moment(s, 0, 2) == pytest.approx(0.09, abs=1e-12)
    with pytest.raises(ValueError):
        moment(s, k, 0, 5)


@pytest.mark.parametrize("k", KERNELS_1D, ids=lambda k: k.family)
def test_free_current_integrates_to_mean_velocity(k, grid):
    m = 1.7
    s = random_state(grid, np.random.default_rng(8))
    cur = probability_current_free(s, k, m)
    pmean = np.sum(grid.p_axis * np.abs(s.amplitudes) ** 2) * grid.dp
    assert cur.total[0] == pytest.approx(pmean / m, abs=1e-12)


def test_current_divergence_is_spectral_derivative(grid):
    k = RadialKernel.gaussian(0.4)
    cur = probability_current_free(make_gaussian_state(grid, 0.5, 1.0, 1.0), k, 1.0)
    kx = 2 * np.pi * np.fft.fftfreq(grid.n, grid.dx)
    spectral = np.fft.ifft(1j * kx * np.fft.fft(cur.values[0])).real
    assert np.abs(spectral - cur.divergence).max() < 1e-10


def test_constant_kernel_current_matches_reference(grid):
    s = make_gaussian_state(grid, 0.5, 1.0, 0.9)
    k = RadialKernel.constant()
    ref = reference.current(s.amplitudes, grid.x_axis, grid.p_axis, grid.dp, 2.0)
    assert np.abs(probability_current_free(s, k, 2.0).values[0] - ref).max() < 1e-13
    cur = probability_current_interacting(s, k, GaussianWell(-1.0, 1.0), 2.0)
    assert np.abs(cur.values[0] - ref).max() < 1e-12


def test_potential_term_is_negligible_in_one_dimension(grid):
    s = make_gaussian_state(grid, 0.5, 1.0, 0.9)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        cur = probability_current_interacting(s, RadialKernel.gaussian(0.3), Harmonic(1.0, 1.0), 1.0)
    assert cur.metadata["beta_to_alpha"] < 1e-3


@pytest.mark.parametrize("V", [None, Harmonic(1.0, 1.0), GaussianWell(-2.0, 1.0)], ids=["free", "harmonic", "well"])
@pytest.mark.parametrize("k", [RadialKernel.constant(), RadialKernel.gaussian(0.2),
                               RadialKernel.schoenberg([0.1, 0.3], [1.0, 1.0])], ids=lambda k: k.family)
def test_continuity_residual_is_second_order(V, k):
    g = MomentumGrid.from_spacing(512, 0.25)
    s = make_gaussian_state(g, 1.0, 0.5, 1.0)
    res = []
    for dt in (1e-3, 5e-4):
        tr = propagate(s, V, k, 1.0, dt, 10, snapshot_stride=1)
        res.append(continuity_residual(tr.snapshots, k, V, 1.0, dt))
    assert res[1] < 1e-5
    assert 3.5 < res[0] / res[1] < 4.5


def test_mismatched_kernel_dimension_rejected(grid):
    with pytest.raises(ValueError):
        position_density(make_gaussian_state(grid), RadialKernel.gaussian(0.3, 2))
