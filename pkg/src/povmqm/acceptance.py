"""Acceptance criteria as callable checks.

Each check returns a :class:`CriterionResult`.  Measured values go into the
result payload; wall-clock times are kept apart so that payloads are
reproducible byte for byte.
"""
from __future__ import annotations

import io
import json
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import reference
from .bounds import Auriga, Hydrogen1S2S, auriga_bound, hydrogen_1s2s_bound
from .dynamics import (build_hamiltonian, eigensolve, ehrenfest_check, oscillator_spectrum_check,
                       propagate)
from .kernels import RadialKernel, gram_psd_check, kernel_l0
from .observables import (continuity_residual, position_density, position_density_direct,
                          probability_current_interacting, uncertainty_report)
from .potentials import GaussianWell, Harmonic
from .twobody import (ParticlePair, TwoParticleState, contact_quadrature_oracle, hydrogen_s_correction,
                      s_density_at_origin, two_particle_density, two_particle_density_direct)
from .wavefunction import MomentumGrid, make_gaussian_state, random_state, white_state

SEED = 20240601
REPORTED_AURIGA_PLANCK = 3.8e16
REPORTED_1S2S_PLANCK = 2.8e16


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: dict
    threshold: str
    elapsed: float = field(default=0.0, compare=False)

    def payload(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "measured": self.measured, "threshold": self.threshold}

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.number}: {self.name}"


def _schoenberg_l01():
    # two cosine shells with l0 = 0.1 in d = 1
    return RadialKernel.schoenberg([0.05, 0.15], [5.0, 3.0], 1)


def _kernels_for_variance():
    return [RadialKernel.gaussian(0.3, 1), RadialKernel.schoenberg([0.2, 0.6, 1.0], [1.0, 2.0, 1.0], 1),
            RadialKernel.gaussian(0.58, 1)]


def oscillator_spectrum():
    t0 = time.perf_counter()
    grid = MomentumGrid.from_cutoff(512, 20.0)
    out = {}
    worst = 0.0
    shifts = {}
    for name, k in (("gaussian", RadialKernel.gaussian(0.1)), ("schoenberg", _schoenberg_l01())):
        rows = oscillator_spectrum_check(grid, 1.0, 1.0, k, 8)
        shift = [num - (n + 0.5) for n, (num, _, _) in enumerate(rows)]
        shifts[name] = np.array(shift)
        dev = max(abs(s - 0.005) for s in shift)
        worst = max(worst, dev)
        out[f"{name}_levels"] = [r[0] for r in rows]
        out[f"{name}_max_deviation"] = dev
    agree = float(np.abs(shifts["gaussian"] - shifts["schoenberg"]).max())
    out["shift_difference"] = agree
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and agree <= 1e-6 and elapsed < 30
    return CriterionResult(1, "oscillator spectrum shift", ok, out, "levels within 1e-6; runtime < 30 s", elapsed)


def standard_reduction():
    t0 = time.perf_counter()
    k = RadialKernel.constant(1)
    V = GaussianWell(-2.0, 1.0)
    out = {}
    # bound spectrum
    g = MomentumGrid.from_spacing(256, 0.1)
    num = eigensolve(build_hamiltonian(g, V, k, 1.0), 2).energies
    ref = reference.eigenvalues(g.x_axis, V.value([g.x_axis]), 1.0, 2)
    out["spectrum"] = float(np.abs(num - ref).max())
    # density and current
    g = MomentumGrid.from_spacing(256, 0.15)
    x, p = g.x_axis, g.p_axis
    s = make_gaussian_state(g, 1.0, 0.5, 1.0)
    out["density"] = float(np.abs(position_density(s, k).values - reference.density(s.amplitudes, x, p, g.dp)).max())
    cur = probability_current_interacting(s, k, V, 1.0).values[0]
    out["current"] = float(np.abs(cur - reference.current(s.amplitudes, x, p, g.dp, 1.0)).max())
    # trajectories to t = 1
    psi0 = reference.wavefunction(s.amplitudes, x, p, g.dp)
    psit = reference.evolve(psi0, x, V.value([x]), 1.0, 1.0)
    rho_ref = np.abs(psit) ** 2
    for method, dt, steps in (("dense", 1e-2, 100), ("split", 1e-4, 10000)):
        tr = propagate(s, V, k, 1.0, dt, steps, snapshot_stride=steps, method=method)
        final = tr.snapshots[-1]
        rho = reference.density(final.amplitudes, x, p, g.dp)
        out[f"trajectory_{method}"] = float(np.abs(rho - rho_ref).max())
    elapsed = time.perf_counter() - t0
    ok = max(out.values()) <= 1e-8 and elapsed < 60
    return CriterionResult(2, "standard-QM reduction", ok, out, "all differences <= 1e-8; runtime < 60 s", elapsed)


def variance_identity(samples=100):
    rng = np.random.default_rng(SEED)
    grid = MomentumGrid.from_spacing(256, 0.15)
    out = {}
    worst = 0.0
    for i, k in enumerate(_kernels_for_variance()):
        l0 = kernel_l0(k)
        dev = 0.0
        for _ in range(samples):
            r = uncertainty_report(random_state(grid, rng), k)
            dev = max(dev, abs(float(r.delta_x[0] ** 2 - r.var_std[0]) - l0 * l0))
        out[f"kernel{i}_{k.family}_max_deviation"] = dev
        worst = max(worst, dev)
    return CriterionResult(3, "variance identity", worst <= 1e-8, out, "|dx^2 - var - l0^2| <= 1e-8")


def infimum_sweep(k, sigmas):
    """Position spreads of minimum-uncertainty Gaussians and the fitted infimum.

    ``dx^2`` is linear in ``sigma^2``; the infimum over all widths is the
    intercept of a least-squares line through the sweep.
    """
    dx2 = []
    for s in sigmas:
        grid = MomentumGrid.from_spacing(512, s / 6.0, 1, k.hbar)
        r = uncertainty_report(make_gaussian_state(grid, 0.0, 0.0, s), k)
        dx2.append(float(r.delta_x[0] ** 2))
    A = np.stack([np.ones(len(sigmas)), np.asarray(sigmas) ** 2], axis=1)
    (a, b), *_ = np.linalg.lstsq(A, np.array(dx2), rcond=None)
    return math.sqrt(max(a, 0.0)), float(b), float(math.sqrt(min(dx2)))


def uncertainty_relation(samples=1000):
    rng = np.random.default_rng(SEED + 1)
    grid = MomentumGrid.from_spacing(256, 0.15)
    out = {}
    kernels = [RadialKernel.gaussian(0.3), RadialKernel.schoenberg([0.2, 0.6, 1.0], [1.0, 2.0, 1.0])]
    violations = 0
    slack = math.inf
    for i in range(samples):
        k = kernels[i % 2]
        r = uncertainty_report(random_state(grid, rng), k)
        violations += int(r.violated)
        slack = min(slack, float((r.product - r.bound)[0]))
    out["states"] = samples
    out["violations"] = violations
    out["min_slack"] = slack
    eq = 0.0
    for s in (0.5, 1.0, 2.0):
        for k in kernels:
            r = uncertainty_report(make_gaussian_state(grid, 0.3, -0.2, s), k)
            eq = max(eq, abs(float(r.product[0] - r.bound[0])))
    out["gaussian_equality_deviation"] = eq
    k = kernels[0]
    sigmas = np.geomspace(0.05, 5.0, 25)
    inf_fit, slope, raw_min = infimum_sweep(k, sigmas)
    out["sweep_infimum"] = inf_fit
    out["sweep_slope"] = slope
    out["sweep_smallest_sampled"] = raw_min
    out["l0"] = kernel_l0(k)
    ok = violations == 0 and eq <= 1e-9 and abs(inf_fit - kernel_l0(k)) <= 1e-6
    return CriterionResult(4, "modified uncertainty relation", ok, out,
                           "no violations; equality within 1e-9; infimum within 1e-6 of l0")


def density_oracle():
    rng = np.random.default_rng(SEED + 2)
    grid = MomentumGrid.from_spacing(128, 0.2)
    out = {}
    single = 0.0
    for k in (RadialKernel.constant(), RadialKernel.gaussian(0.8), _schoenberg_l01(),
              RadialKernel.schoenberg([0.3, 0.9], [2.0, 1.0])):
        for _ in range(3):
            s = white_state(grid, rng)
            single = max(single, float(np.abs(position_density(s, k).values - position_density_direct(s, k)).max()))
    out["single_particle"] = single
    g2 = MomentumGrid.from_spacing(32, 0.25)
    pair = ParticlePair(1.0, 2.0, RadialKernel.gaussian(1.0), RadialKernel.schoenberg([0.3, 0.5], [1.0, 2.0]))
    amps = rng.normal(size=(32, 32)) + 1j * rng.normal(size=(32, 32))
    st = TwoParticleState(g2, g2, amps).normalized()
    out["two_particle"] = float(np.abs(two_particle_density(st, pair) - two_particle_density_direct(st, pair)).max())
    ok = single <= 1e-8 and out["two_particle"] <= 1e-6
    return CriterionResult(5, "density oracle", ok, out, "single <= 1e-8 (N=128); pair <= 1e-6 (N=32)")


def _continuity_run(V, k, dt, duration=0.2):
    grid = MomentumGrid.from_spacing(512, 0.25)
    s = make_gaussian_state(grid, 1.0, 0.5, 1.0)
    steps = int(round(duration / dt))
    tr = propagate(s, V, k, 1.0, dt, steps, snapshot_stride=1)
    return continuity_residual(tr.snapshots, k, V, 1.0, dt)


def continuity():
    out = {}
    ok = True
    for vname, V in (("free", None), ("harmonic", Harmonic(1.0, 1.0))):
        for l0 in (0.0, 0.2):
            k = RadialKernel.constant() if l0 == 0 else RadialKernel.gaussian(l0)
            r1 = _continuity_run(V, k, 1e-3)
            r2 = _continuity_run(V, k, 5e-4)
            key = f"{vname}_l0_{l0}"
            out[f"{key}_residual"] = r1
            out[f"{key}_halving_ratio"] = r1 / r2
            ok = ok and r1 <= 1e-5 and 3.5 <= r1 / r2 <= 4.5
    return CriterionResult(6, "continuity", ok, out, "residual <= 1e-5 at dt=1e-3; halving ratio in [3.5, 4.5]")


def ehrenfest(x0=1.0):
    grid = MomentumGrid.from_spacing(512, 0.25)
    V = Harmonic(1.0, 1.0)
    k = RadialKernel.gaussian(0.2)
    dt, stride = 1e-3, 10
    steps = int(round(2 * math.pi / dt))
    tr = propagate(make_gaussian_state(grid, x0, 0.0, 1.0), V, k, 1.0, dt, steps, snapshot_stride=stride)
    force_scale = V.mass * V.omega ** 2 * x0
    resid = ehrenfest_check(tr, V, k) / force_scale
    track = float(np.abs(tr.x_mean[:, 0] - x0 * np.cos(V.omega * tr.times)).max())
    out = {"relative_residual": resid, "mean_position_deviation": track, "steps": steps}
    return CriterionResult(7, "Ehrenfest", resid <= 1e-4 and track <= 1e-4, out,
                           "residual <= 1e-4 of m w^2 x0; <x> within 1e-4 of x0 cos(wt)")


def hydrogen():
    l1, l2 = 1e-3, 2e-3
    rows = [hydrogen_s_correction(n, l1, l2) for n in range(1, 6)]
    scaled_p = [abs(r.delta_e_closed_form) * r.n ** 3 for r in rows]
    scaled_o = [abs(r.delta_e_oracle) * r.n ** 3 for r in rows]
    spread = max((max(v) - min(v)) / max(v) for v in (scaled_p, scaled_o))
    quad = {}
    for n in (1, 2):
        target = 4 * math.pi * s_density_at_origin(n)
        quad[n] = abs(contact_quadrature_oracle(n) - target) / target
    ratios = [r.ratio for r in rows]
    ratio_spread = (max(ratios) - min(ratios)) / abs(ratios[0])
    out = {"n3_scaling_spread": spread, "quadrature_relative_error_n1": quad[1],
           "quadrature_relative_error_n2": quad[2], "closed_form_to_oracle_ratio": ratios[0],
           "ratio_spread": ratio_spread, "negative": all(r.delta_e_closed_form < 0 and r.delta_e_oracle < 0 for r in rows)}
    ok = spread <= 1e-10 and max(quad.values()) <= 0.01 and ratio_spread <= 1e-12 and out["negative"]
    return CriterionResult(8, "hydrogen corrections", ok, out, "1/n^3 within 1e-10; quadrature within 1%")


def bounds():
    a = auriga_bound(Auriga.default())
    h = hydrogen_1s2s_bound(Hydrogen1S2S(4.5e-15), "closed_form")
    ho = hydrogen_1s2s_bound(Hydrogen1S2S(4.5e-15), "oracle")
    ratio_a = a.l0_max_planck / REPORTED_AURIGA_PLANCK
    ratio_h = h.l0_max_planck / REPORTED_1S2S_PLANCK
    echoed = all(key in a.inputs for key in ("mass", "omega", "energy", "d")) and \
        "relative_uncertainty" in h.inputs
    out = {"auriga_l0_planck": a.l0_max_planck, "auriga_ratio_to_reported": ratio_a,
           "auriga_inputs": a.inputs, "hydrogen_l0_planck": h.l0_max_planck,
           "hydrogen_ratio_to_reported": ratio_h, "hydrogen_oracle_l0_planck": ho.l0_max_planck,
           "hydrogen_inputs": h.inputs}
    ok = 0.1 <= ratio_a <= 10 and 1 / 3 <= ratio_h <= 3 and echoed
    return CriterionResult(9, "experimental bounds", ok, out, "AURIGA within 10x; 1S-2S within 3x; inputs echoed")


def random_schoenberg(rng, d):
    m = int(rng.integers(1, 6))
    nodes = np.unique(rng.uniform(0.05, 3.0, size=m))
    m = len(nodes)
    weights = rng.uniform(0.1, 1.0, size=m)
    return RadialKernel.schoenberg(nodes, weights, d)


def kernel_validity(count=100, npts=64):
    rng = np.random.default_rng(SEED + 3)
    worst = math.inf
    passed = 0
    for i in range(count):
        d = 1 + i % 3
        k = random_schoenberg(rng, d)
        pts = rng.uniform(-3.0, 3.0, size=(npts, d))
        ok, emin = gram_psd_check(k, pts)
        passed += int(ok)
        gram_max = k.f0
        worst = min(worst, emin / gram_max)
    pts = rng.uniform(-3.0, 3.0, size=(npts, 3))
    cos_ok, cos_min = gram_psd_check(lambda r: np.cos(5.0 * r), pts)
    out = {"kernels": count, "psd_passed": passed, "worst_relative_min_eigenvalue": worst,
           "cosine_d3_accepted": cos_ok, "cosine_d3_min_eigenvalue": cos_min}
    return CriterionResult(10, "kernel validity", passed == count and not cos_ok, out,
                           "all random kernels PSD to 1e-10; cosine in d=3 rejected")


CRITERIA = {
    1: oscillator_spectrum,
    2: standard_reduction,
    3: variance_identity,
    4: uncertainty_relation,
    5: density_oracle,
    6: continuity,
    7: ehrenfest,
    8: hydrogen,
    9: bounds,
    10: kernel_validity,
}


def run_all(numbers=None, log=None):
    results = []
    for n in numbers or sorted(CRITERIA):
        t0 = time.perf_counter()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            r = CRITERIA[n]()
        r.elapsed = time.perf_counter() - t0
        if log is not None:
            log(f"{r.line()} ({r.elapsed:.2f} s)")
        results.append(r)
    return results


def summary_table(results) -> str:
    buf = io.StringIO()
    buf.write("criterion,name,status\n")
    for r in results:
        buf.write(f"{r.number},{r.name},{'pass' if r.passed else 'fail'}\n")
    return buf.getvalue()


def results_json(results) -> str:
    return json.dumps([r.payload() for r in results], indent=2, sort_keys=True) + "\n"
