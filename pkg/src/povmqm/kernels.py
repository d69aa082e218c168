"""Radial positive-definite kernels in momentum space.

A kernel ``f(|p - k|)`` fixes the position POVM.  Three families are
available: the constant kernel (ordinary quantum mechanics), the Gaussian
kernel parametrised by the minimal length ``l0``, and finite mixtures of
Schoenberg profiles ``Omega_d(r u)``, which span the whole admissible class.

Natural units are used throughout; ``hbar`` is carried explicitly so that
every formula stays dimensionally honest.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy import special

SUPPORTED_DIMENSIONS = (1, 2, 3)
SERIES_CUTOFF = 1e-4
PSD_RELATIVE_TOL = 1e-10


class KernelError(ValueError):
    """Invalid kernel specification."""


class ResolutionError(ValueError):
    """A grid is too coarse for the requested kernel or state."""


def _check_dimension(d):
    if d not in SUPPORTED_DIMENSIONS:
        raise KernelError(f"unsupported dimension {d!r}; expected one of {SUPPORTED_DIMENSIONS}")


def omega(d: int, r):
    """Schoenberg profile ``Omega_d(r) = Gamma(d/2) (2/r)^((d-2)/2) J_((d-2)/2)(r)``.

    Evaluated through its closed forms ``cos``, ``J_0`` and ``sin(r)/r``.
    Below ``r = 1e-4`` the series ``1 - r^2/(2d) + r^4/(8d(d+2))`` is used.
    """
    _check_dimension(d)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("omega is defined for r >= 0")
    if d == 1:
        out = np.cos(r)
    elif d == 2:
        out = special.j0(r)
    else:
        small = r < SERIES_CUTOFF
        rs = np.where(small, 1.0, r)
        r2 = r * r
        out = np.where(small, 1.0 - r2 / 6.0 + r2 * r2 / 120.0, np.sin(rs) / rs)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class SchoenbergMeasure:
    """Discrete measure ``sum_k w_k delta(u - u_k)`` on the half line."""

    nodes: tuple
    weights: tuple

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.size == 0 or nodes.shape != weights.shape:
            raise KernelError("nodes and weights must be non-empty 1-d sequences of equal length")
        if np.any(nodes < 0) or np.any(np.diff(nodes) <= 0):
            raise KernelError("nodes must be non-negative and strictly increasing")
        if np.any(weights <= 0):
            raise KernelError("weights must be strictly positive")
        object.__setattr__(self, "nodes", tuple(float(v) for v in nodes))
        object.__setattr__(self, "weights", tuple(float(v) for v in weights))


@dataclass(frozen=True)
class RadialKernel:
    """Isotropic kernel ``f(r)`` with ``f(0) = (2 pi hbar)^-d``.

    Build instances with :meth:`constant`, :meth:`gaussian` or
    :meth:`schoenberg` rather than the raw constructor.
    """

    dimension: int
    family: str
    l0_param: float = 0.0
    measure: SchoenbergMeasure | None = None
    hbar: float = 1.0

    def __post_init__(self):
        _check_dimension(self.dimension)
        if self.hbar <= 0:
            raise KernelError("hbar must be positive")
        if self.family == "constant":
            pass
        elif self.family == "gaussian":
            if not (self.l0_param >= 0 and math.isfinite(self.l0_param)):
                raise KernelError("gaussian kernel needs a finite l0 >= 0")
        elif self.family == "schoenberg":
            if self.measure is None:
                raise KernelError("schoenberg kernel needs a measure")
            total = sum(self.measure.weights)
            if not math.isclose(total, self.f0, rel_tol=1e-12):
                raise KernelError(
                    f"schoenberg weights sum to {total!r}, expected (2 pi hbar)^-d = {self.f0!r}"
                )
        else:
            raise KernelError(f"unknown kernel family {self.family!r}")

    @classmethod
    def constant(cls, dimension: int = 1, hbar: float = 1.0) -> "RadialKernel":
        return cls(dimension, "constant", hbar=hbar)

    @classmethod
    def gaussian(cls, l0: float, dimension: int = 1, hbar: float = 1.0) -> "RadialKernel":
        return cls(dimension, "gaussian", l0_param=float(l0), hbar=hbar)

    @classmethod
    def schoenberg(cls, nodes: Sequence[float], weights: Sequence[float],
                   dimension: int = 1, hbar: float = 1.0,
                   normalize: bool = True) -> "RadialKernel":
        """Discrete Schoenberg mixture.

        With ``normalize`` the weights are treated as relative and rescaled so
        that they sum to ``(2 pi hbar)^-d``.
        """
        weights = np.asarray(weights, dtype=float)
        if normalize:
            if np.any(weights <= 0):
                raise KernelError("weights must be strictly positive")
            weights = weights / weights.sum() * (2.0 * math.pi * hbar) ** (-dimension)
        measure = SchoenbergMeasure(tuple(nodes), tuple(weights))
        return cls(dimension, "schoenberg", measure=measure, hbar=hbar)

    @property
    def f0(self) -> float:
        return (2.0 * math.pi * self.hbar) ** (-self.dimension)

    @property
    def l0(self) -> float:
        return kernel_l0(self)

    def __call__(self, r):
        return eval_kernel(self, r)

    def xi(self, order: int) -> float:
        """Axis derivative ``d^j f / dp_i^j`` at zero separation, ``j <= 4``."""
        d, hb, f0 = self.dimension, self.hbar, self.f0
        if order < 0 or order > 4:
            raise ValueError("axis derivatives are available up to fourth order")
        if order == 0:
            return f0
        if order % 2 == 1 or self.family == "constant":
            return 0.0
        if self.family == "gaussian":
            a = self.l0_param ** 2 / (2.0 * hb * hb)
            return -2.0 * a * f0 if order == 2 else 12.0 * a * a * f0
        u = np.asarray(self.measure.nodes)
        w = np.asarray(self.measure.weights)
        if order == 2:
            return float(-np.sum(w * u ** 2) / d)
        return float(3.0 * np.sum(w * u ** 4) / (d * (d + 2)))

    def to_config(self) -> dict:
        out = {"family": self.family, "dimension": self.dimension, "hbar": self.hbar}
        if self.family == "gaussian":
            out["l0"] = self.l0_param
        elif self.family == "schoenberg":
            out["nodes"] = list(self.measure.nodes)
            out["weights"] = list(self.measure.weights)
        return out


def eval_kernel(k: RadialKernel, r):
    r = np.asarray(r, dtype=float)
    if k.family == "constant":
        out = np.full(r.shape, k.f0)
    elif k.family == "gaussian":
        out = k.f0 * np.exp(-(k.l0_param * r / k.hbar) ** 2 / 2.0)
    else:
        out = np.zeros(r.shape)
        for u, w in zip(k.measure.nodes, k.measure.weights):
            out = out + w * omega(k.dimension, r * u)
    return out[()] if out.ndim == 0 else out


def kernel_l0(k: RadialKernel) -> float:
    """Minimal position uncertainty ``sqrt(-xi_2 (2 pi hbar)^d hbar^2)``."""
    if k.family == "constant":
        return 0.0
    if k.family == "gaussian":
        return k.l0_param
    u = np.asarray(k.measure.nodes)
    w = np.asarray(k.measure.weights)
    return float(k.hbar * math.sqrt(np.sum(w * u ** 2) / (k.dimension * np.sum(w))))


def finite_difference_l0(k: RadialKernel, h: float | None = None) -> float:
    """``l0`` estimated from a five-point stencil of ``f`` along one axis."""
    if h is None:
        h = max(1e-3, kernel_l0(k) / 100.0)
    f = [float(eval_kernel(k, abs(s) * h)) for s in (-2, -1, 0, 1, 2)]
    # stencil weights sum to zero; differencing against the centre keeps a flat profile exactly flat
    c = f[2]
    xi2 = (-(f[0] - c) + 16 * (f[1] - c) + 16 * (f[3] - c) - (f[4] - c)) / (12.0 * h * h)
    return math.sqrt(max(-xi2, 0.0) * (2 * math.pi * k.hbar) ** k.dimension * k.hbar ** 2)


KernelLike = Union[RadialKernel, Callable]


def gram_psd_check(k: KernelLike, points, tol: float = PSD_RELATIVE_TOL):
    """Check that ``[f(|p_i - p_j|)]`` is positive semi-definite.

    Returns ``(ok, min_eigenvalue)`` where ``ok`` means the smallest
    eigenvalue is at least ``-tol`` times the largest.  ``k`` may be any
    callable radial profile, which is how non-kernels are screened.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] < 2:
        raise ValueError("need at least two points")
    if np.all(np.ptp(pts, axis=0) == 0):
        warnings.warn("degenerate point set: all points coincide", RuntimeWarning, stacklevel=2)
    dist = np.sqrt(np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1))
    gram = np.asarray(k(dist), dtype=float)
    gram = 0.5 * (gram + gram.T)
    eig = np.linalg.eigvalsh(gram)
    scale = max(abs(eig[-1]), abs(eig[0]))
    return bool(eig[0] >= -tol * scale), float(eig[0])


def smoothing_profile(k: RadialKernel, xgrid: Sequence[np.ndarray]):
    """Position-space profile ``g`` with ``rho = |psi|^2 * g``.

    ``xgrid`` is one uniform, zero-centred axis per dimension.  Samples are
    densities (mass per cell volume), so ``sum(g) * dx^d == 1``.  Singular
    profiles (the constant kernel and Schoenberg shells) are deposited onto
    cells with linear weights.
    """
    axes = [np.asarray(a, dtype=float) for a in xgrid]
    if len(axes) != k.dimension:
        raise KernelError("grid dimension does not match kernel dimension")
    dx = axes[0][1] - axes[0][0]
    cell = dx ** k.dimension
    l0 = kernel_l0(k)
    if l0 > 0 and l0 < 4 * dx:
        raise ResolutionError(f"kernel width l0={l0:g} is unresolved by dx={dx:g} (need l0 >= 4 dx)")
    mesh = np.meshgrid(*axes, indexing="ij")
    shape = mesh[0].shape

    if k.family == "gaussian":
        s2 = l0 * l0
        r2 = sum(m * m for m in mesh)
        return np.exp(-r2 / (2 * s2)) / (2 * math.pi * s2) ** (k.dimension / 2.0)

    g = np.zeros(shape)
    if k.family == "constant":
        _deposit(g, axes, np.zeros((1, k.dimension)), np.ones(1))
        return g / cell

    total = sum(k.measure.weights)
    for u, w in zip(k.measure.nodes, k.measure.weights):
        radius = k.hbar * u
        pts, mass = _shell_samples(k.dimension, radius, dx)
        _deposit(g, axes, pts, mass * (w / total))
    return g / cell


def _shell_samples(d, radius, dx):
    """Equal-mass points on the sphere of the given radius in ``d`` dimensions."""
    if d == 1 or radius == 0:
        pts = np.array([[-radius], [radius]]) if d == 1 else np.zeros((1, d))
        return pts, np.full(len(pts), 1.0 / len(pts))
    n = max(64, int(8 * math.pi * radius / dx))
    if d == 2:
        t = 2 * math.pi * (np.arange(n) + 0.5) / n
        pts = radius * np.column_stack([np.cos(t), np.sin(t)])
    else:
        # Fibonacci lattice, roughly uniform on the sphere
        m = n * n // 8 + 64
        i = np.arange(m) + 0.5
        z = 1 - 2 * i / m
        phi = math.pi * (3 - math.sqrt(5)) * i
        s = np.sqrt(1 - z * z)
        pts = radius * np.column_stack([s * np.cos(phi), s * np.sin(phi), z])
    return pts, np.full(len(pts), 1.0 / len(pts))


def _deposit(g, axes, pts, mass):
    """Cloud-in-cell deposit of point masses onto the grid (mass-conserving)."""
    d = len(axes)
    dx = axes[0][1] - axes[0][0]
    n = np.array(g.shape)
    origin = np.array([a[0] for a in axes])
    fidx = (pts - origin) / dx
    base = np.floor(fidx).astype(int)
    frac = fidx - base
    if np.any(base < 0) or np.any(base + 1 >= n):
        raise ResolutionError("smoothing profile does not fit inside the position box")
    for corner in np.ndindex(*(2,) * d):
        c = np.array(corner)
        weight = np.prod(np.where(c == 1, frac, 1 - frac), axis=1) * mass
        np.add.at(g, tuple((base + c).T), weight)


def lag_multiplier(k: RadialKernel, lags: Sequence[np.ndarray], dp: float):
    """``(2 pi hbar)^d f(|q|)`` on a lattice of integer momentum lags.

    ``lags`` holds one integer array per axis of this kernel (already
    broadcast against each other).  Multiplying the Fourier coefficients of
    ``|psi|^2`` by this factor applies the position POVM exactly.
    """
    q = dp * np.sqrt(sum(np.asarray(m, dtype=float) ** 2 for m in lags))
    return eval_kernel(k, q) * (2 * math.pi * k.hbar) ** k.dimension
