"""Line-based ``key = value`` run configuration.

Keys are dotted (``kernel.l0 = 0.1``), lists are comma separated and ``#``
starts a comment.  Every key must be known; values are coerced to the type
of the default and validated by building the objects they describe.
"""
from __future__ import annotations

import math
from pathlib import Path

from .bounds import (AURIGA_DEFAULT_ENERGY_J, AURIGA_DEFAULT_FREQUENCY_HZ, AURIGA_DEFAULT_MASS_PLANCK,
                     HYDROGEN_DEFAULT_RELATIVE_UNCERTAINTY, CONVENTIONS, Auriga, Hydrogen1S2S)
from .kernels import RadialKernel
from .potentials import GaussianWell, Harmonic
from .wavefunction import MomentumGrid

DEFAULTS = {
    "hbar": 1.0,
    "seed": 20240601,
    "kernel.family": "gaussian",
    "kernel.dimension": 1,
    "kernel.l0": 0.1,
    "kernel.nodes": [0.05, 0.15],
    "kernel.weights": [5.0, 3.0],
    "grid.n": 512,
    "grid.pmax": 20.0,
    "grid.dx": 0.0,
    "potential.type": "harmonic",
    "potential.omega": 1.0,
    "potential.depth": -2.0,
    "potential.width": 1.0,
    "particle.mass": 1.0,
    "state.x0": 1.0,
    "state.p0": 0.0,
    "state.sigma": 1.0,
    "evolve.dt": 2.5e-4,
    "evolve.steps": 4000,
    "evolve.stride": 40,
    "evolve.method": "split",
    "spectrum.count": 8,
    "uncertainty.samples": 100,
    "kernel_check.points": 64,
    "hydrogen.nmax": 5,
    "hydrogen.l1": 1e-3,
    "hydrogen.l2": 1e-3,
    "auriga.frequency_hz": AURIGA_DEFAULT_FREQUENCY_HZ,
    "auriga.energy": AURIGA_DEFAULT_ENERGY_J,
    "auriga.mass_planck": AURIGA_DEFAULT_MASS_PLANCK,
    "auriga.d": 1,
    "hydrogen1s2s.relative_uncertainty": HYDROGEN_DEFAULT_RELATIVE_UNCERTAINTY,
    "hydrogen1s2s.convention": "closed_form",
    "bounds.experiment": "all",
}

KERNEL_FAMILIES = ("constant", "gaussian", "schoenberg")
POTENTIALS = ("none", "harmonic", "gaussian_well")
EXPERIMENTS = ("all", "auriga", "hydrogen")


class ConfigError(ValueError):
    pass


def _coerce(key, raw: str, default):
    raw = raw.strip()
    try:
        if isinstance(default, list):
            items = [s.strip() for s in raw.split(",") if s.strip()]
            return [float(s) for s in items]
        if isinstance(default, bool):
            if raw.lower() not in ("true", "false"):
                raise ValueError(raw)
            return raw.lower() == "true"
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            val = float(raw)
            if not math.isfinite(val):
                raise ValueError(raw)
            return val
    except ValueError:
        raise ConfigError(f"{key}: cannot read {raw!r} as {type(default).__name__}") from None
    return raw


def parse_config(text: str, source: str = "<config>") -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = _coerce(key, raw, DEFAULTS[key])
    return values


def load_config(path=None, overrides=()) -> dict:
    cfg = dict(DEFAULTS)
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {p}: {exc.strerror}") from None
        cfg.update(parse_config(text, str(p)))
    for item in overrides:
        cfg.update(parse_config(item, "--override"))
    return cfg


def dump_config(cfg: dict) -> str:
    lines = []
    for key in sorted(cfg):
        v = cfg[key]
        if isinstance(v, list):
            v = ", ".join(repr(x) for x in v)
        lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"


# builders -----------------------------------------------------------------

def build_kernel(cfg) -> RadialKernel:
    fam = cfg["kernel.family"]
    d = cfg["kernel.dimension"]
    hbar = cfg["hbar"]
    if fam == "constant":
        return RadialKernel.constant(d, hbar)
    if fam == "gaussian":
        return RadialKernel.gaussian(cfg["kernel.l0"], d, hbar)
    if fam == "schoenberg":
        nodes, weights = cfg["kernel.nodes"], cfg["kernel.weights"]
        if len(nodes) != len(weights) or not nodes:
            raise ConfigError("kernel.nodes and kernel.weights must be non-empty and of equal length")
        return RadialKernel.schoenberg(nodes, weights, d, hbar)
    raise ConfigError(f"kernel.family must be one of {KERNEL_FAMILIES}, got {fam!r}")


def build_grid(cfg) -> MomentumGrid:
    d = cfg["kernel.dimension"]
    if cfg["grid.dx"] > 0:
        return MomentumGrid.from_spacing(cfg["grid.n"], cfg["grid.dx"], d, cfg["hbar"])
    return MomentumGrid.from_cutoff(cfg["grid.n"], cfg["grid.pmax"], d, cfg["hbar"])


def build_potential(cfg):
    kind = cfg["potential.type"]
    if kind == "none":
        return None
    if kind == "harmonic":
        return Harmonic(cfg["particle.mass"], cfg["potential.omega"])
    if kind == "gaussian_well":
        return GaussianWell(cfg["potential.depth"], cfg["potential.width"])
    raise ConfigError(f"potential.type must be one of {POTENTIALS}, got {kind!r}")


def build_auriga(cfg, constants=None) -> Auriga:
    return Auriga.default(constants, cfg["auriga.frequency_hz"], cfg["auriga.energy"],
                          cfg["auriga.mass_planck"], cfg["auriga.d"])


def build_hydrogen1s2s(cfg) -> Hydrogen1S2S:
    if cfg["hydrogen1s2s.convention"] not in CONVENTIONS:
        raise ConfigError(f"hydrogen1s2s.convention must be one of {sorted(CONVENTIONS)}")
    return Hydrogen1S2S(cfg["hydrogen1s2s.relative_uncertainty"])
