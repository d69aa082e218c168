"""Deformed momentum-space Hamiltonians, spectra and time evolution."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .kernels import RadialKernel, eval_kernel, kernel_l0
from .observables import moment, position_density
from .potentials import GaussianWell, Harmonic, Tabulated, effective_potential
from .wavefunction import MomentumGrid, WaveState, to_position_amplitudes

MAX_DENSE_SIZE = 4096
MAX_EXPONENTIAL_SIZE = 1024
HERMITIAN_TOL = 1e-12
RESIDUAL_TOL = 1e-8
NORM_DRIFT_ABORT = 1e-6
STEP_GUARD = 0.1


class NumericalGuardError(RuntimeError):
    """A numerical safeguard tripped (norm drift, convergence failure)."""


class MemoryGuardError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class HamiltonianMatrix:
    matrix: np.ndarray
    grid: MomentumGrid
    kernel: RadialKernel
    potential: object
    mass: float

    def hermiticity_error(self) -> float:
        h = self.matrix
        return float(np.abs(h - h.conj().T).max() / max(np.abs(h).max(), 1e-300))


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    energies: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    states: list = field(default_factory=list)


@dataclass(eq=False)
class TrajectoryRecord:
    times: np.ndarray
    x_mean: np.ndarray
    p_mean: np.ndarray
    delta_x: np.ndarray
    delta_p: np.ndarray
    norm: np.ndarray
    x4: np.ndarray
    snapshots: list
    mass: float
    dt: float
    stride: int

    def to_csv(self) -> str:
        d = self.x_mean.shape[1]
        cols = ["t"]
        for name in ("x_mean", "p_mean", "delta_x", "delta_p"):
            cols += [f"{name}_{i}" for i in range(d)]
        cols += ["norm", "x4_0"]
        buf = io.StringIO()
        buf.write(",".join(cols) + "\n")
        for i, t in enumerate(self.times):
            row = [t, *self.x_mean[i], *self.p_mean[i], *self.delta_x[i], *self.delta_p[i], self.norm[i], self.x4[i]]
            buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
        return buf.getvalue()


def _flat_points(grid: MomentumGrid) -> np.ndarray:
    return np.stack([m.ravel() for m in grid.p_mesh()], axis=1)


def sinc_second_derivative(n: int, spacing: float) -> np.ndarray:
    """Sinc-DVR second-derivative matrix on a uniform grid."""
    idx = np.arange(n)
    diff = idx[:, None] - idx[None, :]
    with np.errstate(divide="ignore"):
        off = -2.0 * (-1.0) ** np.abs(diff) / (diff.astype(float) ** 2)
    off[idx, idx] = -math.pi ** 2 / 3.0
    return off / spacing ** 2


def _laplacian(grid: MomentumGrid) -> np.ndarray:
    d2 = sinc_second_derivative(grid.n, grid.dp)
    eye = np.eye(grid.n)
    lap = np.zeros((grid.n ** grid.d,) * 2)
    for ax in range(grid.d):
        term = np.array([[1.0]])
        for a in range(grid.d):
            term = np.kron(term, d2 if a == ax else eye)
        lap += term
    return lap


def build_hamiltonian(grid: MomentumGrid, V, k: RadialKernel, m: float) -> HamiltonianMatrix:
    """Dense momentum-representation Hamiltonian.

    Off-diagonal potential elements are ``f(|p_i - p_j|) V~(p_j - p_i) dp^d``.
    The harmonic transform is a second derivative of a delta, so its matrix is
    the sinc second-derivative stencil applied to ``f(|p_i - p|) psi(p)``;
    the curvature of ``f`` then yields the constant energy shift numerically.
    """
    size = grid.n ** grid.d
    if grid.d > 2 or size > MAX_DENSE_SIZE:
        raise MemoryGuardError(f"dense assembly limited to d <= 2 and N^d <= {MAX_DENSE_SIZE} (got {size})")
    if k.dimension != grid.d:
        raise ValueError("kernel and grid dimensions differ")
    hbar = grid.hbar
    pts = _flat_points(grid)
    h = np.diag(np.sum(pts ** 2, axis=1) / (2 * m)).astype(complex)
    if V is None:
        return HamiltonianMatrix(h, grid, k, V, m)
    diff = pts[None, :, :] - pts[:, None, :]          # p_j - p_i
    dist = np.sqrt(np.sum(diff ** 2, axis=-1))
    fmat = eval_kernel(k, dist)
    if isinstance(V, Harmonic):
        coeff = -0.5 * V.mass * V.omega ** 2 * hbar ** 2 * (2 * math.pi * hbar) ** grid.d
        h += coeff * fmat * _laplacian(grid)
    elif isinstance(V, GaussianWell):
        h += fmat * V.fourier(dist, grid.d, hbar) * grid.dp_volume
    elif isinstance(V, Tabulated):
        if V.grid != grid:
            raise ValueError("tabulated potential is defined on a different grid")
        vt = np.fft.ifftn(np.fft.ifftshift(V.values)) * size * grid.dx_volume
        lag = np.rint(diff / grid.dp).astype(int) % grid.n
        h += fmat * vt[tuple(lag[..., a] for a in range(grid.d))] * grid.dp_volume
    else:
        raise ValueError(f"unsupported potential {V!r}")
    return HamiltonianMatrix(h, grid, k, V, m)


def eigensolve(H, count: int) -> SpectrumResult:
    """Lowest ``count`` eigenpairs of a dense Hermitian matrix."""
    mat = H.matrix if isinstance(H, HamiltonianMatrix) else np.asarray(H)
    n = mat.shape[0]
    if not 1 <= count <= n:
        raise ValueError(f"count must lie in [1, {n}]")
    energies, vecs = linalg.eigh(mat, subset_by_index=[0, count - 1])
    scale = np.linalg.norm(mat, 2) if n <= 64 else np.abs(mat).sum(axis=1).max()
    residuals = np.linalg.norm(mat @ vecs - vecs * energies, axis=0)
    if np.any(residuals > RESIDUAL_TOL * scale):
        raise NumericalGuardError(f"eigensolver residuals too large: max {residuals.max():.3e}")
    states = []
    if isinstance(H, HamiltonianMatrix):
        g = H.grid
        for i in range(count):
            states.append(WaveState(g, vecs[:, i].reshape(g.shape) / math.sqrt(g.dp_volume)))
    return SpectrumResult(energies, vecs, residuals, states)


def oscillator_spectrum_analytic(d: int, omega: float, m: float, l0: float, n, hbar: float = 1.0) -> float:
    n = np.broadcast_to(np.asarray(n, dtype=int), (d,))
    if np.any(n < 0):
        raise ValueError("quantum numbers must be non-negative")
    return float(np.sum(n + 0.5) * hbar * omega + 0.5 * d * m * l0 ** 2 * omega ** 2)


def _analytic_levels(d, omega, m, l0, count, hbar):
    nmax = count
    levels = sorted(oscillator_spectrum_analytic(d, omega, m, l0, idx, hbar)
                    for idx in np.ndindex(*(nmax,) * d))
    return levels[:count]


def oscillator_spectrum_check(grid: MomentumGrid, omega: float, m: float, k: RadialKernel, count: int):
    """Numeric oscillator levels against the closed form, as (numeric, analytic, diff)."""
    H = build_hamiltonian(grid, Harmonic(m, omega), k, m)
    spec = eigensolve(H, count)
    analytic = _analytic_levels(grid.d, omega, m, kernel_l0(k), count, grid.hbar)
    rows = [(float(e), a, float(e) - a) for e, a in zip(spec.energies, analytic)]
    for st in spec.states:
        st.check_boundary()
    return rows


def _kinetic(grid: MomentumGrid, m: float) -> np.ndarray:
    return sum(p * p for p in grid.p_mesh()) / (2 * m)


def propagate(state: WaveState, V, k: RadialKernel, m: float, dt: float, steps: int,
              snapshot_stride: int = 1, method: str = "split") -> TrajectoryRecord:
    """Evolve ``state`` for ``steps`` steps of ``dt``.

    ``split`` is Strang splitting (half kinetic kick in momentum space, full
    ``V_eff`` phase in position space).  ``dense`` exponentiates the dense
    Hamiltonian exactly and is meant for small grids.
    """
    g = state.grid
    hbar = g.hbar
    kin = _kinetic(g, m)
    if method == "split" and dt * kin.max() / hbar > STEP_GUARD:
        raise ValueError(f"time step too large: dt * max(T) / hbar = {dt * kin.max() / hbar:.3g} > {STEP_GUARD}")
    if steps < 1 or snapshot_stride < 1:
        raise ValueError("steps and snapshot_stride must be positive")
    l0 = kernel_l0(k)

    if method == "split":
        veff = effective_potential(V, k, g).values
        half_kick = np.exp(-0.5j * dt * kin / hbar)
        pot_phase = np.fft.ifftshift(np.exp(-1j * dt * veff / hbar))

        def advance(amps, _):
            amps = amps * half_kick
            psi = np.fft.ifftn(np.fft.ifftshift(amps))
            amps = np.fft.fftshift(np.fft.fftn(pot_phase * psi))
            return amps * half_kick
    elif method == "dense":
        if g.n ** g.d > MAX_EXPONENTIAL_SIZE:
            raise MemoryGuardError(f"dense propagation limited to N^d <= {MAX_EXPONENTIAL_SIZE}")
        H = build_hamiltonian(g, V, k, m).matrix
        energies, vecs = linalg.eigh(H)
        coeffs0 = vecs.conj().T @ state.amplitudes.ravel()

        def advance(_, step):
            phase = np.exp(-1j * energies * (step * dt) / hbar)
            return (vecs @ (phase * coeffs0)).reshape(g.shape)
    else:
        raise ValueError(f"unknown method {method!r}")

    n_rec = steps + 1
    rec = {key: np.zeros((n_rec, g.d)) for key in ("x_mean", "p_mean", "delta_x", "delta_p")}
    norms = np.zeros(n_rec)
    x4 = np.zeros(n_rec)
    snapshots = []
    amps = np.array(state.amplitudes)
    pm = g.p_mesh()
    xm = g.x_mesh()
    for step in range(n_rec):
        if step > 0:
            amps = advance(amps, step)
        t = state.time + step * dt
        pden = np.abs(amps) ** 2
        norm = float(pden.sum() * g.dp_volume)
        if abs(norm - 1.0) > NORM_DRIFT_ABORT:
            raise NumericalGuardError(f"norm drifted to {norm!r} at t={t:g}")
        psi = to_position_amplitudes(WaveState(g, amps))
        xden = np.abs(psi) ** 2
        for ax in range(g.d):
            x1 = np.sum(xm[ax] * xden) * g.dx_volume
            x2 = np.sum(xm[ax] ** 2 * xden) * g.dx_volume
            p1 = np.sum(pm[ax] * pden) * g.dp_volume
            p2 = np.sum(pm[ax] ** 2 * pden) * g.dp_volume
            rec["x_mean"][step, ax] = x1
            rec["p_mean"][step, ax] = p1
            rec["delta_x"][step, ax] = math.sqrt(max(l0 * l0 + x2 - x1 * x1, 0.0))
            rec["delta_p"][step, ax] = math.sqrt(max(p2 - p1 * p1, 0.0))
        norms[step] = norm
        cur = WaveState(g, amps, t)
        x4[step] = moment(cur, k, 0, 4)
        if step % snapshot_stride == 0:
            snapshots.append(cur)
    times = state.time + dt * np.arange(n_rec)
    return TrajectoryRecord(times, rec["x_mean"], rec["p_mean"], rec["delta_x"], rec["delta_p"],
                            norms, x4, snapshots, m, dt, snapshot_stride)


def ehrenfest_check(traj: TrajectoryRecord, V, k: RadialKernel) -> float:
    """Largest ``|m d^2<x>/dt^2 + <grad V>_rho|`` over interior snapshots.

    Both ``<x>`` and ``<grad V>`` integrate against the POVM density.
    """
    snaps = traj.snapshots
    if len(snaps) < 5:
        raise ValueError("ehrenfest check needs at least five snapshots")
    times = np.array([s.time for s in snaps])
    spacing = np.diff(times)
    if not np.allclose(spacing, spacing[0], rtol=1e-9, atol=0):
        raise ValueError("snapshots must be uniformly spaced")
    h = spacing[0]
    g = snaps[0].grid
    xm = g.x_mesh()
    xs, forces = [], []
    for s in snaps:
        rho = position_density(s, k).values
        xs.append([np.sum(x * rho) * g.dx_volume for x in xm])
        if V is None:
            forces.append([0.0] * g.d)
        else:
            forces.append([np.sum(gv * rho) * g.dx_volume for gv in V.gradient(xm)])
    xs = np.array(xs)
    forces = np.array(forces)
    accel = (xs[2:] - 2 * xs[1:-1] + xs[:-2]) / h ** 2
    return float(np.abs(traj.mass * accel + forces[1:-1]).max())


def standard_oscillator_levels(d, omega, m, count, hbar=1.0):
    """Undeformed oscillator levels, the reference for the shift column."""
    return _analytic_levels(d, omega, m, 0.0, count, hbar)


def spectrum_to_csv(rows, residuals=None, standard=None) -> str:
    """Rows of ``(numeric, analytic, difference)``; ``analytic`` may be None."""
    def fmt(v):
        return "" if v is None else f"{v:.17g}"

    buf = io.StringIO()
    buf.write("index,numeric,analytic,difference,shift,residual\n")
    for i, (num, ana, diff) in enumerate(rows):
        shift = None if standard is None else num - standard[i]
        res = None if residuals is None else float(residuals[i])
        buf.write(f"{i},{fmt(num)},{fmt(ana)},{fmt(diff)},{fmt(shift)},{fmt(res)}\n")
    return buf.getvalue()
