"""Quantum mechanics with a kernel-smoothed position POVM in place of a position operator."""
from .kernels import RadialKernel, gram_psd_check, kernel_l0
from .wavefunction import MomentumGrid, WaveState, make_gaussian_state
from .observables import position_density, probability_current_free, probability_current_interacting, uncertainty_report
from .dynamics import build_hamiltonian, eigensolve, propagate
from .potentials import GaussianWell, Harmonic, Tabulated

__version__ = "0.1.0"

__all__ = [
    "RadialKernel", "gram_psd_check", "kernel_l0", "MomentumGrid", "WaveState", "make_gaussian_state",
    "position_density", "probability_current_free", "probability_current_interacting", "uncertainty_report",
    "build_hamiltonian", "eigensolve", "propagate", "GaussianWell", "Harmonic", "Tabulated",
]
