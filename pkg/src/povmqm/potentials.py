"""External potentials and their kernel-smoothed counterparts.

The deformed potential operator acts on the auxiliary position amplitude as
multiplication by ``V_eff = V * g``, the potential convolved with the
kernel's smoothing profile.  Closed forms are used where they exist.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .kernels import RadialKernel, kernel_l0, lag_multiplier
from .wavefunction import MomentumGrid, WaveState, position_to_momentum, to_position_amplitudes


class PotentialError(ValueError):
    pass


@dataclass(frozen=True)
class Harmonic:
    """``V = (m omega^2 / 2) |x|^2``."""

    mass: float
    omega: float

    def __post_init__(self):
        if self.mass <= 0 or self.omega <= 0:
            raise PotentialError("harmonic potential needs positive mass and frequency")

    def value(self, mesh):
        return 0.5 * self.mass * self.omega ** 2 * sum(x * x for x in mesh)

    def gradient(self, mesh):
        return [self.mass * self.omega ** 2 * x for x in mesh]


@dataclass(frozen=True)
class GaussianWell:
    """``V = depth * exp(-|x|^2 / (2 width^2))`` with ``depth < 0``."""

    depth: float
    width: float

    def __post_init__(self):
        if not self.depth < 0 or not self.width > 0:
            raise PotentialError("gaussian well needs depth < 0 and width > 0")

    def value(self, mesh):
        r2 = sum(x * x for x in mesh)
        return self.depth * np.exp(-r2 / (2 * self.width ** 2))

    def gradient(self, mesh):
        v = self.value(mesh)
        return [-x / self.width ** 2 * v for x in mesh]

    def fourier(self, q, d: int, hbar: float = 1.0):
        """``int V(x) e^{i q x / hbar} d^dx`` for ``|q|`` given."""
        q = np.asarray(q, dtype=float)
        return self.depth * (2 * math.pi) ** (d / 2) * self.width ** d * np.exp(-(self.width * q / hbar) ** 2 / 2)


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Samples of ``V`` on the full dual position grid of ``grid``."""

    grid: MomentumGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values)
        if np.iscomplexobj(v):
            if np.max(np.abs(v.imag)) > 0:
                raise PotentialError("potential must be real-valued")
            v = v.real
        v = v.astype(float)
        if v.shape != self.grid.shape:
            raise PotentialError(f"tabulated potential has shape {v.shape}, grid expects {self.grid.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def value(self, mesh=None):
        return self.values

    def gradient(self, mesh=None):
        g = self.grid
        vk = np.fft.fftn(self.values)
        out = []
        for ax in range(g.d):
            m = np.fft.fftfreq(g.n, 1.0 / g.n)
            shape = [1] * g.d
            shape[ax] = g.n
            k = (m * g.dp / g.hbar).reshape(shape)
            out.append(np.fft.ifftn(1j * k * vk).real)
        return out


def effective_potential(V, k: RadialKernel, grid: MomentumGrid) -> Tabulated:
    """``V_eff = V * g`` sampled on the dual position grid of ``grid``."""
    if k.dimension != grid.d:
        raise PotentialError("kernel and grid dimensions differ")
    mesh = grid.x_mesh()
    if V is None:
        return Tabulated(grid, np.zeros(grid.shape))
    if isinstance(V, Tabulated) and V.grid != grid:
        raise PotentialError("tabulated potential is defined on a different grid")
    if k.family == "constant":
        return Tabulated(grid, V.value(mesh))
    l0 = kernel_l0(k)
    d = grid.d
    if isinstance(V, Harmonic):
        r2 = sum(x * x for x in mesh)
        return Tabulated(grid, 0.5 * V.mass * V.omega ** 2 * (r2 + d * l0 * l0))
    if isinstance(V, GaussianWell):
        r = np.sqrt(sum(x * x for x in mesh))
        w2 = V.width ** 2
        if k.family == "gaussian":
            s2 = w2 + l0 * l0
            return Tabulated(grid, V.depth * (w2 / s2) ** (d / 2) * np.exp(-r * r / (2 * s2)))
        total = sum(k.measure.weights)
        out = np.zeros(grid.shape)
        for u, w in zip(k.measure.nodes, k.measure.weights):
            out += (w / total) * _gaussian_shell_average(r, k.hbar * u, w2, d)
        return Tabulated(grid, V.depth * out)
    if isinstance(V, Tabulated):
        lags = np.meshgrid(*([np.fft.fftfreq(grid.n, 1.0 / grid.n)] * d), indexing="ij")
        mult = lag_multiplier(k, lags, grid.dp)
        return Tabulated(grid, np.fft.ifftn(np.fft.fftn(V.values) * mult).real)
    raise PotentialError(f"unsupported potential {V!r}")


def _gaussian_shell_average(r, radius, w2, d):
    """Mean of ``exp(-|x - y|^2 / 2 w2)`` over ``y`` uniform on a sphere."""
    if radius == 0:
        return np.exp(-r * r / (2 * w2))
    if d == 1:
        return 0.5 * (np.exp(-(r - radius) ** 2 / (2 * w2)) + np.exp(-(r + radius) ** 2 / (2 * w2)))
    z = r * radius / w2
    near = np.exp(-(r - radius) ** 2 / (2 * w2))
    if d == 2:
        return near * special.i0e(z)
    far = np.exp(-(r + radius) ** 2 / (2 * w2))
    small = z < 1e-6
    zs = np.where(small, 1.0, z)
    return np.where(small, np.exp(-(r * r + radius * radius) / (2 * w2)) * (1 + z * z / 6), (near - far) / (2 * zs))


def apply_potential(state: WaveState, veff: Tabulated) -> np.ndarray:
    """Momentum amplitudes of ``V_eff psi`` (the discrete potential term)."""
    g = state.grid
    psi = to_position_amplitudes(state)
    return position_to_momentum(veff.values * psi, (g.dp,) * g.d, g.hbar)
