"""Command-line front end.

Exit codes: 0 success, 1 some acceptance criterion failed (``reproduce``
only), 2 invalid configuration or input, 3 numerical guard tripped.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
import warnings
from pathlib import Path

import numpy as np

from . import acceptance, config as cfgmod
from .bounds import PhysicalConstants, auriga_bound, bounds_report, hydrogen_1s2s_bound
from .dynamics import (STEP_GUARD, NumericalGuardError, build_hamiltonian, eigensolve, oscillator_spectrum_check,
                       propagate, spectrum_to_csv, standard_oscillator_levels)
from .kernels import KernelError, ResolutionError, finite_difference_l0, gram_psd_check, kernel_l0
from .observables import position_density, uncertainty_report
from .potentials import Harmonic
from .twobody import CONVENTION_NOTE, hydrogen_table, hydrogen_to_csv
from .wavefunction import make_gaussian_state, random_state

OUT_ENV = "POVMQM_OUT"
DEFAULT_OUT = "povmqm-out"
COMMANDS = ("kernel-check", "density", "uncertainty", "spectrum", "evolve", "hydrogen", "bounds", "reproduce")

log = logging.getLogger("povmqm")


class _Encoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, np.generic):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        return super().default(o)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, cls=_Encoder) + "\n"


def _csv_rows(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


# subcommands: each returns {filename: text} and does no I/O itself --------

def cmd_kernel_check(cfg):
    k = cfgmod.build_kernel(cfg)
    rng = np.random.default_rng(cfg["seed"])
    n = cfg["kernel_check.points"]
    pts = rng.uniform(-3.0, 3.0, size=(n, k.dimension))
    ok, emin = gram_psd_check(k, pts)
    report = {"kernel": k.to_config(), "l0": kernel_l0(k), "l0_finite_difference": finite_difference_l0(k),
              "psd": ok, "min_eigenvalue": emin, "points": n, "seed": cfg["seed"]}
    csv = _csv_rows(["key", "value"], [("l0", report["l0"]), ("l0_finite_difference", report["l0_finite_difference"]),
                                       ("psd", str(ok)), ("min_eigenvalue", emin)])
    return {"kernel_check.json": _json(report), "kernel_check.csv": csv}


def _state(cfg, grid):
    return make_gaussian_state(grid, cfg["state.x0"], cfg["state.p0"], cfg["state.sigma"])


def cmd_density(cfg):
    k = cfgmod.build_kernel(cfg)
    grid = cfgmod.build_grid(cfg)
    s = _state(cfg, grid)
    rho = position_density(s, k)
    if grid.d != 1:
        xs = [m.ravel() for m in grid.x_mesh()]
        rows = zip(*xs, rho.values.ravel())
        header = [f"x{i}" for i in range(grid.d)] + ["rho"]
    else:
        rows = zip(rho.x, rho.values)
        header = ["x", "rho"]
    return {"density.csv": _csv_rows(header, rows), "density.json": _json(rho.metadata)}


def cmd_uncertainty(cfg):
    k = cfgmod.build_kernel(cfg)
    grid = cfgmod.build_grid(cfg)
    rng = np.random.default_rng(cfg["seed"])
    states = [("gaussian", _state(cfg, grid))]
    states += [(f"random{i}", random_state(grid, rng)) for i in range(cfg["uncertainty.samples"])]
    rows = []
    worst = np.inf
    for name, s in states:
        r = uncertainty_report(s, k)
        for ax in range(grid.d):
            rows.append((name, str(ax), r.delta_x[ax], r.delta_p[ax], r.product[ax], r.bound[ax]))
            worst = min(worst, float(r.product[ax] - r.bound[ax]))
    summary = {"kernel": k.to_config(), "l0": kernel_l0(k), "states": len(states), "min_slack": worst,
               "violations": sum(1 for row in rows if row[4] < row[5] - 1e-10)}
    return {"uncertainty.csv": _csv_rows(["state", "axis", "delta_x", "delta_p", "product", "bound"], rows),
            "uncertainty.json": _json(summary)}


def cmd_spectrum(cfg):
    k = cfgmod.build_kernel(cfg)
    grid = cfgmod.build_grid(cfg)
    V = cfgmod.build_potential(cfg)
    m = cfg["particle.mass"]
    count = cfg["spectrum.count"]
    if isinstance(V, Harmonic):
        rows = oscillator_spectrum_check(grid, V.omega, m, k, count)
        standard = standard_oscillator_levels(grid.d, V.omega, m, count, grid.hbar)
        spec = None
    else:
        spec = eigensolve(build_hamiltonian(grid, V, k, m), count)
        rows = [(float(e), None, None) for e in spec.energies]
        standard = None
    meta = {"kernel": k.to_config(), "grid": grid.header(), "potential": cfg["potential.type"], "mass": m,
            "count": count, "l0": kernel_l0(k)}
    res = None if spec is None else spec.residuals
    return {"spectrum.csv": spectrum_to_csv(rows, res, standard), "spectrum.json": _json(meta)}


def cmd_evolve(cfg):
    k = cfgmod.build_kernel(cfg)
    grid = cfgmod.build_grid(cfg)
    V = cfgmod.build_potential(cfg)
    tr = propagate(_state(cfg, grid), V, k, cfg["particle.mass"], cfg["evolve.dt"], cfg["evolve.steps"],
                   snapshot_stride=cfg["evolve.stride"], method=cfg["evolve.method"])
    meta = {"kernel": k.to_config(), "grid": grid.header(), "potential": cfg["potential.type"],
            "dt": tr.dt, "steps": cfg["evolve.steps"], "method": cfg["evolve.method"],
            "final_norm": float(tr.norm[-1]), "max_norm_drift": float(np.abs(tr.norm - 1).max())}
    return {"trajectory.csv": tr.to_csv(), "trajectory.json": _json(meta)}


def cmd_hydrogen(cfg):
    nmax = cfg["hydrogen.nmax"]
    rows = hydrogen_table(nmax, cfg["hydrogen.l1"], cfg["hydrogen.l2"])
    meta = {"l1": cfg["hydrogen.l1"], "l2": cfg["hydrogen.l2"], "nmax": nmax, "units": rows[0].units,
            "length_unit": "reduced-mass Bohr radius", "convention": CONVENTION_NOTE,
            "closed_form_to_oracle_ratio": rows[0].ratio}
    return {"hydrogen.csv": hydrogen_to_csv(rows), "hydrogen.json": _json(meta)}


def cmd_bounds(cfg):
    const = PhysicalConstants()
    which = cfg["bounds.experiment"]
    if which not in cfgmod.EXPERIMENTS:
        raise cfgmod.ConfigError(f"bounds.experiment must be one of {cfgmod.EXPERIMENTS}")
    results = {}
    if which in ("all", "auriga"):
        results["auriga"] = auriga_bound(cfgmod.build_auriga(cfg, const), const)
    if which in ("all", "hydrogen"):
        results["hydrogen_1s2s"] = hydrogen_1s2s_bound(cfgmod.build_hydrogen1s2s(cfg),
                                                       cfg["hydrogen1s2s.convention"], const)
    rows = [(name, r.formula, r.l0_max_m, r.l0_max_planck) for name, r in results.items()]
    return {"bounds.json": bounds_report(results),
            "bounds.csv": _csv_rows(["experiment", "formula", "l0_max_m", "l0_max_planck"], rows)}


def cmd_reproduce(cfg):
    results = acceptance.run_all(log=log.info)
    return {"acceptance_summary.csv": acceptance.summary_table(results),
            "acceptance_results.json": acceptance.results_json(results)}, all(r.passed for r in results)


HANDLERS = {
    "kernel-check": cmd_kernel_check,
    "density": cmd_density,
    "uncertainty": cmd_uncertainty,
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "hydrogen": cmd_hydrogen,
    "bounds": cmd_bounds,
    "reproduce": cmd_reproduce,
}


def validate(command, cfg):
    """Build every object the command needs before any computation starts."""
    if command in ("kernel-check", "density", "uncertainty", "spectrum", "evolve"):
        k = cfgmod.build_kernel(cfg)
        if command != "kernel-check":
            grid = cfgmod.build_grid(cfg)
            if k.dimension != grid.d:
                raise cfgmod.ConfigError("kernel and grid dimensions differ")
            if cfg["particle.mass"] <= 0:
                raise cfgmod.ConfigError("particle.mass must be positive")
            if command in ("spectrum", "evolve"):
                cfgmod.build_potential(cfg)
            if command != "spectrum":
                _state(cfg, grid)
        if command == "kernel-check" and cfg["kernel_check.points"] < 2:
            raise cfgmod.ConfigError("kernel_check.points must be at least 2")
        if command == "spectrum" and cfg["spectrum.count"] < 1:
            raise cfgmod.ConfigError("spectrum.count must be positive")
        if command == "uncertainty" and cfg["uncertainty.samples"] < 0:
            raise cfgmod.ConfigError("uncertainty.samples must be non-negative")
    if command == "evolve":
        if cfg["evolve.dt"] <= 0 or cfg["evolve.steps"] < 1 or cfg["evolve.stride"] < 1:
            raise cfgmod.ConfigError("evolve.dt, evolve.steps and evolve.stride must be positive")
        if cfg["evolve.method"] not in ("split", "dense"):
            raise cfgmod.ConfigError("evolve.method must be 'split' or 'dense'")
        if cfg["evolve.method"] == "split":
            grid = cfgmod.build_grid(cfg)
            tmax = grid.d * np.abs(grid.p_axis).max() ** 2 / (2 * cfg["particle.mass"])
            ratio = cfg["evolve.dt"] * tmax / grid.hbar
            if ratio > STEP_GUARD:
                raise cfgmod.ConfigError(f"evolve.dt too large for this grid: dt * max(T) / hbar = {ratio:.3g} "
                                         f"> {STEP_GUARD}")
    if command == "hydrogen":
        if cfg["hydrogen.l1"] < 0 or cfg["hydrogen.l2"] < 0:
            raise cfgmod.ConfigError("hydrogen lengths must be non-negative")
        if not 1 <= cfg["hydrogen.nmax"] <= 10:
            raise cfgmod.ConfigError("hydrogen.nmax must lie in [1, 10]")
    if command == "bounds":
        auriga_bound(cfgmod.build_auriga(cfg))
        cfgmod.build_hydrogen1s2s(cfg)


def write_outputs(out_dir: Path, files: dict, fmt: str):
    """Write the selected files atomically, all or nothing."""
    keep = {name: text for name, text in files.items()
            if fmt == "both" or name.endswith("." + fmt)}
    out_dir.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name, text in sorted(keep.items()):
            fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=f".{name}.")
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            staged.append((tmp, out_dir / name))
    except BaseException:
        for tmp, _ in staged:
            os.unlink(tmp)
        raise
    for tmp, dest in staged:
        os.replace(tmp, dest)
    return [dest for _, dest in staged]


def build_parser():
    parser = argparse.ArgumentParser(
        prog="povmqm",
        description="Kernel-deformed quantum mechanics without a position operator: "
                    "densities, spectra, dynamics, hydrogen shifts and minimal-length bounds.",
        epilog=f"Output directory defaults to ${OUT_ENV} or ./{DEFAULT_OUT}. "
               "Exit codes: 0 ok, 1 acceptance failure, 2 invalid input, 3 numerical guard.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", metavar="PATH", help="key = value configuration file")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument("--format", choices=("csv", "json", "both"), default="both")
    parser.add_argument("--override", metavar="KEY=VALUE", action="append", default=[],
                        help="override one configuration key (repeatable)")
    parser.add_argument("--experiment", choices=cfgmod.EXPERIMENTS,
                        help="bounds only: which experiment to evaluate")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(message)s")
    out_dir = Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    try:
        cfg = cfgmod.load_config(args.config, args.override)
        if args.experiment:
            cfg["bounds.experiment"] = args.experiment
        validate(args.command, cfg)
        log.info("running %s", args.command)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            result = HANDLERS[args.command](cfg)
        passed = True
        if isinstance(result, tuple):
            result, passed = result
        for path in write_outputs(out_dir, result, args.format):
            log.info("wrote %s", path)
    except NumericalGuardError as exc:
        print(f"povmqm: numerical guard: {exc}", file=sys.stderr)
        return 3
    except (cfgmod.ConfigError, KernelError, ResolutionError, ValueError) as exc:
        print(f"povmqm: invalid input: {exc}", file=sys.stderr)
        return 2
    if not passed:
        print("povmqm: some acceptance criteria failed", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
