"""Plain position-space quantum mechanics used as an independent check.

Nothing here touches kernels or FFTs: transforms are explicit DFT sums,
the Hamiltonian is a sinc-DVR matrix on the position grid and time
evolution is the exact exponential of that matrix.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import linalg


def dft_matrix(x, p, dp, hbar=1.0):
    """Rows map momentum amplitudes to ``psi(x) = sum_p psi~(p) e^{ipx/hbar} dp / sqrt(2 pi hbar)``."""
    return np.exp(1j * np.outer(x, p) / hbar) * dp / math.sqrt(2 * math.pi * hbar)


def wavefunction(amps, x, p, dp, hbar=1.0):
    return dft_matrix(x, p, dp, hbar) @ amps


def density(amps, x, p, dp, hbar=1.0):
    return np.abs(wavefunction(amps, x, p, dp, hbar)) ** 2


def current(amps, x, p, dp, m, hbar=1.0):
    """``(hbar/m) Im(psi* dpsi/dx)`` with the derivative taken inside the DFT sum."""
    mat = dft_matrix(x, p, dp, hbar)
    psi = mat @ amps
    dpsi = mat @ (1j * p / hbar * amps)
    return hbar / m * np.imag(psi.conj() * dpsi)


def dvr_second_derivative(n, dx):
    """Colbert-Miller sinc-DVR second derivative on an unbounded uniform grid."""
    i = np.arange(n)
    diff = i[:, None] - i[None, :]
    with np.errstate(divide="ignore"):
        off = np.where(diff == 0, 0.0, -2.0 * (-1.0) ** diff / np.where(diff == 0, 1, diff) ** 2)
    return (off - np.eye(n) * math.pi ** 2 / 3) / dx ** 2


def hamiltonian(x, vvals, m, hbar=1.0):
    dx = x[1] - x[0]
    return -hbar ** 2 / (2 * m) * dvr_second_derivative(len(x), dx) + np.diag(vvals)


def eigenvalues(x, vvals, m, count, hbar=1.0):
    h = hamiltonian(x, vvals, m, hbar)
    return linalg.eigh(h, eigvals_only=True, subset_by_index=[0, count - 1])


def evolve(psi0, x, vvals, m, t, hbar=1.0):
    """Exact ``exp(-i H t / hbar) psi0`` for the DVR Hamiltonian (grid normalisation preserved)."""
    e, vec = linalg.eigh(hamiltonian(x, vvals, m, hbar))
    return vec @ (np.exp(-1j * e * t / hbar) * (vec.conj().T @ psi0))
