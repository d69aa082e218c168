"""Momentum-space states on uniform grids.

The momentum wavefunction is the primary object.  The position amplitude
``psi(x)`` obtained here is an auxiliary Fourier transform, not a
probability amplitude; densities come from :mod:`povmqm.observables`.
"""
from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

NORM_TOL = 1e-10
BOUNDARY_DECAY = 1e-8


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class MomentumGrid:
    """Centred grid ``p_j = (j - N/2) dp`` in ``d`` dimensions.

    The dual position grid has ``dx = 2 pi hbar / (N dp)`` and the same
    centring.
    """

    d: int
    n: int
    dp: float
    hbar: float = 1.0

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError("grid dimension must be 1, 2 or 3")
        if self.n < 2 or self.n & (self.n - 1):
            raise ValueError("points per axis must be a power of two")
        if not self.dp > 0:
            raise ValueError("momentum spacing must be positive")

    @classmethod
    def from_cutoff(cls, n: int, pmax: float, d: int = 1, hbar: float = 1.0) -> "MomentumGrid":
        """Grid covering ``[-pmax, pmax)``."""
        return cls(d, n, 2.0 * pmax / n, hbar)

    @classmethod
    def from_spacing(cls, n: int, dx: float, d: int = 1, hbar: float = 1.0) -> "MomentumGrid":
        """Grid whose dual position grid has spacing ``dx``."""
        return cls(d, n, 2.0 * math.pi * hbar / (n * dx), hbar)

    @property
    def dx(self) -> float:
        return 2.0 * math.pi * self.hbar / (self.n * self.dp)

    @property
    def p_axis(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.dp

    @property
    def x_axis(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.dx

    @property
    def p_cutoff(self) -> float:
        return self.n * self.dp / 2.0

    @property
    def half_width(self) -> float:
        return self.n * self.dx / 2.0

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.d

    @property
    def dp_volume(self) -> float:
        return self.dp ** self.d

    @property
    def dx_volume(self) -> float:
        return self.dx ** self.d

    def p_mesh(self):
        return np.meshgrid(*([self.p_axis] * self.d), indexing="ij")

    def x_mesh(self):
        return np.meshgrid(*([self.x_axis] * self.d), indexing="ij")

    def header(self) -> dict:
        return {"d": self.d, "n": self.n, "dp": self.dp, "hbar": self.hbar}


@dataclass(frozen=True, eq=False)
class WaveState:
    grid: MomentumGrid
    amplitudes: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != self.grid.shape:
            raise GridMismatchError(f"amplitudes have shape {amps.shape}, grid expects {self.grid.shape}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.dp_volume)

    def normalized(self) -> "WaveState":
        return WaveState(self.grid, self.amplitudes / math.sqrt(self.norm), self.time)

    def with_amplitudes(self, amps, time=None) -> "WaveState":
        return WaveState(self.grid, amps, self.time if time is None else time)

    def boundary_ratio(self) -> float:
        """Largest amplitude on the outermost grid shell relative to the maximum."""
        a = np.abs(self.amplitudes)
        edge = 0.0
        for ax in range(self.grid.d):
            edge = max(edge, np.take(a, 0, axis=ax).max(), np.take(a, -1, axis=ax).max())
        return float(edge / a.max()) if a.max() > 0 else 0.0

    def check_boundary(self) -> bool:
        ratio = self.boundary_ratio()
        if ratio > BOUNDARY_DECAY:
            warnings.warn(f"momentum amplitude at grid edge is {ratio:.2e} of maximum", RuntimeWarning, stacklevel=2)
            return False
        return True


# Centred discrete transforms. The scale factors make them exact
# discretisations of psi(x) = (2 pi hbar)^(-d/2) int psi~(p) e^{ipx/hbar} d^dp.

def _forward_scale(ns, dps, hbar):
    return math.prod(n * dp / math.sqrt(2 * math.pi * hbar) for n, dp in zip(ns, dps))


def momentum_to_position(amps: np.ndarray, dps, hbar: float = 1.0, refine: int = 1) -> np.ndarray:
    """Position amplitudes from centred momentum amplitudes.

    With ``refine = 2`` the momentum array is zero-padded so that the output
    lives on a grid of half the spacing (same box).  Even-indexed points of
    the refined grid coincide with the original position grid.
    """
    amps = np.asarray(amps)
    if refine != 1:
        pad = [((refine - 1) * n // 2, (refine - 1) * n // 2) for n in amps.shape]
        amps = np.pad(amps, pad)
    scale = _forward_scale(amps.shape, dps, hbar)
    return np.fft.fftshift(np.fft.ifftn(np.fft.ifftshift(amps))) * scale


def position_to_momentum(psi: np.ndarray, dps, hbar: float = 1.0) -> np.ndarray:
    scale = _forward_scale(psi.shape, dps, hbar)
    return np.fft.fftshift(np.fft.fftn(np.fft.ifftshift(psi))) / scale


def to_position_amplitudes(state: WaveState, refine: int = 1) -> np.ndarray:
    g = state.grid
    return momentum_to_position(state.amplitudes, (g.dp,) * g.d, g.hbar, refine)


def from_position_amplitudes(grid: MomentumGrid, psi: np.ndarray, time: float = 0.0) -> WaveState:
    return WaveState(grid, position_to_momentum(psi, (grid.dp,) * grid.d, grid.hbar), time)


def overlap(a: WaveState, b: WaveState) -> complex:
    if a.grid != b.grid:
        raise GridMismatchError("states live on different grids")
    return complex(np.vdot(a.amplitudes, b.amplitudes) * a.grid.dp_volume)


def make_gaussian_state(grid: MomentumGrid, x0=0.0, p0=0.0, sigma_x: float = 1.0) -> WaveState:
    """Minimum-uncertainty packet with position variance ``sigma_x^2`` per axis."""
    hbar = grid.hbar
    if grid.dx > sigma_x / 3.0:
        raise ValueError(f"sigma_x={sigma_x:g} unresolved: dx={grid.dx:g} must be <= sigma_x/3")
    if hbar / (2 * sigma_x) > grid.p_cutoff / 3.0:
        raise ValueError(f"momentum width {hbar / (2 * sigma_x):g} exceeds a third of the cutoff {grid.p_cutoff:g}")
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), (grid.d,))
    p0 = np.broadcast_to(np.asarray(p0, dtype=float), (grid.d,))
    log_amp = np.zeros(grid.shape, dtype=complex)
    for ax, p in enumerate(grid.p_mesh()):
        log_amp += -(sigma_x * (p - p0[ax]) / hbar) ** 2 - 1j * p * x0[ax] / hbar
    state = WaveState(grid, np.exp(log_amp)).normalized()
    state.check_boundary()
    return state


def random_state(grid: MomentumGrid, rng: np.random.Generator, packets: int = 3,
                 sigma_range=(0.5, 1.5), spread: float = 0.125) -> WaveState:
    """Normalized superposition of Gaussian packets with random parameters.

    Centres are drawn within ``spread`` of the box half-width and of the
    momentum cutoff, so the result decays at both grid edges.
    """
    hbar = grid.hbar
    amps = np.zeros(grid.shape, dtype=complex)
    pm = grid.p_mesh()
    for _ in range(packets):
        sigma = rng.uniform(*sigma_range)
        x0 = rng.uniform(-spread, spread, grid.d) * grid.half_width
        p0 = rng.uniform(-spread, spread, grid.d) * grid.p_cutoff
        c = rng.normal() + 1j * rng.normal()
        log_amp = sum(-(sigma * (p - p0[ax]) / hbar) ** 2 - 1j * p * x0[ax] / hbar for ax, p in enumerate(pm))
        amps += c * np.exp(log_amp)
    return WaveState(grid, amps).normalized()


def white_state(grid: MomentumGrid, rng: np.random.Generator) -> WaveState:
    """Normalized complex white noise; no decay anywhere."""
    amps = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    return WaveState(grid, amps).normalized()


# CSV: one "# key = value" line per grid parameter, then real,imag rows in
# C order. 17 significant digits make the text round-trip bit-exactly.

def state_to_csv(state: WaveState) -> str:
    buf = io.StringIO()
    for key, value in state.grid.header().items():
        buf.write(f"# {key} = {value!r}\n")
    buf.write(f"# time = {state.time!r}\n")
    buf.write("real,imag\n")
    for z in state.amplitudes.ravel():
        buf.write(f"{z.real:.17g},{z.imag:.17g}\n")
    return buf.getvalue()


def state_from_csv(text: str) -> WaveState:
    meta = {}
    rows = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            meta[key.strip()] = value.strip()
        elif line and line != "real,imag":
            re_, im_ = line.split(",")
            rows.append(complex(float(re_), float(im_)))
    grid = MomentumGrid(int(meta["d"]), int(meta["n"]), float(meta["dp"]), float(meta["hbar"]))
    amps = np.array(rows, dtype=complex).reshape(grid.shape)
    return WaveState(grid, amps, float(meta.get("time", 0.0)))


def save_state(state: WaveState, path) -> None:
    Path(path).write_text(state_to_csv(state), encoding="utf-8")


def load_state(path) -> WaveState:
    return state_from_csv(Path(path).read_text(encoding="utf-8"))
