"""Simulation parameters, validation, and plain-text configuration files.

The config format is one ``key = value`` per line with ``#`` comments.
Keys are exactly the SimulationParams field names; unknown keys are
errors.  Composite values use comma-separated numbers:

    grid             = nx, ny, Lx, Ly
    potential_coeffs = a0, a1, ..., aN
    h_vec            = h1, h2, h3
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .grid import GridSpec


@dataclass(frozen=True)
class SimulationParams:
    mu: float = 1.0                 # viscosity
    lambda_c: float = 1.0           # kinetic/elastic coupling
    gamma_c: float = 1.0            # orientation relaxation constant
    potential_coeffs: tuple = (-1.0, 1.0)   # a_0 .. a_N, a_N > 0
    potential_degree: int = 1
    h_vec: tuple = (0.0, 0.0, 0.0)  # constant rotation axis (scaled)
    beta: float = 1.0               # OU damping shift
    noise_spectrum_exponent: float = 3.0    # q in lambda_n = (1 + alpha_n)^-q
    noise_mode_count: int = 8
    grid: GridSpec = field(default_factory=lambda: GridSpec(32, 32))
    dt: float = 1e-3
    seed: int = 1

    def __post_init__(self):
        object.__setattr__(self, "potential_coeffs",
                           tuple(float(a) for a in self.potential_coeffs))
        object.__setattr__(self, "h_vec", tuple(float(h) for h in self.h_vec))


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


class ConfigError(ValueError):
    """Raised for malformed or inconsistent configuration input."""


def validate_params(p: SimulationParams) -> ValidationReport:
    """Check every declared invariant; report-style, never raises, never mutates."""
    rep = ValidationReport()
    bad = rep.violations.append

    if p.mu <= 0:
        bad("viscosity mu must be positive")
    if p.lambda_c <= 0:
        bad("coupling lambda_c must be positive")
    if p.gamma_c <= 0:
        bad("relaxation gamma_c must be positive")
    if p.potential_degree < 1:
        bad("potential degree must be at least 1")
    if len(p.potential_coeffs) != p.potential_degree + 1:
        bad("potential_coeffs length must equal potential_degree + 1")
    elif p.potential_coeffs[-1] <= 0:
        bad("leading coefficient a_N must be positive")
    if len(p.h_vec) != 3:
        bad("h_vec must have three components")
    if p.beta < 0:
        bad("beta must be nonnegative")
    if p.noise_spectrum_exponent <= 0:
        bad("noise spectrum exponent q must be positive")
    if p.noise_mode_count < 1:
        bad("noise mode count must be at least 1")
    if p.dt <= 0:
        bad("time step dt must be positive")
    if p.grid.nx < 8 or p.grid.ny < 8:
        bad("grid must be at least 8x8")
    if not (-(2**63) <= int(p.seed) < 2**63):
        bad("seed must fit in 64 bits")
    if p.noise_mode_count > p.grid.ncells // 4:
        bad("noise mode count exceeds nx*ny/4")

    if p.noise_spectrum_exponent < 3:
        rep.warnings.append(
            "q < 3: finite truncations stay summable but the continuum-limit "
            "spectrum condition is only documented for q >= 3")
    if not (p.mu == 1.0 and p.lambda_c == 1.0 and p.gamma_c == 1.0):
        rep.warnings.append(
            "constants not normalized to mu = lambda = gamma = 1; the energy "
            "and Ito identity checkers assume the normalized triple")
    hmag = float(np.linalg.norm(p.h_vec))
    if hmag >= 1.0:
        rep.warnings.append(
            f"|h| = {hmag:.3g} is not small; absorbing-ball behavior is "
            "reported as observed, no smallness threshold is enforced")
    return rep


# --- config file parsing -------------------------------------------------

_SCALAR_FLOAT = {"mu", "lambda_c", "gamma_c", "beta", "noise_spectrum_exponent", "dt"}
_SCALAR_INT = {"potential_degree", "noise_mode_count", "seed"}
_FIELD_NAMES = {f.name for f in fields(SimulationParams)}


def _parse_floats(text: str, key: str) -> tuple:
    try:
        return tuple(float(tok) for tok in text.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"cannot parse numbers for '{key}': {text!r}") from exc


def parse_config(text: str) -> SimulationParams:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _FIELD_NAMES:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        values[key] = (lineno, val)

    kwargs = {}
    for key, (lineno, val) in values.items():
        try:
            if key in _SCALAR_FLOAT:
                kwargs[key] = float(val)
            elif key in _SCALAR_INT:
                kwargs[key] = int(val)
            elif key == "potential_coeffs":
                kwargs[key] = _parse_floats(val, key)
            elif key == "h_vec":
                vec = _parse_floats(val, key)
                if len(vec) != 3:
                    raise ConfigError(f"line {lineno}: h_vec needs 3 components")
                kwargs[key] = vec
            elif key == "grid":
                nums = _parse_floats(val, key)
                if len(nums) != 4:
                    raise ConfigError(f"line {lineno}: grid needs 'nx, ny, Lx, Ly'")
                kwargs[key] = GridSpec(int(nums[0]), int(nums[1]), nums[2], nums[3])
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for '{key}': {val!r}") from exc
    return SimulationParams(**kwargs)


def load_config(path) -> SimulationParams:
    return parse_config(Path(path).read_text())


def format_config(p: SimulationParams) -> str:
    """Render parameters in the config format (round-trips through parse_config)."""
    g = p.grid
    lines = [
        f"mu = {p.mu!r}",
        f"lambda_c = {p.lambda_c!r}",
        f"gamma_c = {p.gamma_c!r}",
        "potential_coeffs = " + ", ".join(repr(a) for a in p.potential_coeffs),
        f"potential_degree = {p.potential_degree}",
        "h_vec = " + ", ".join(repr(h) for h in p.h_vec),
        f"beta = {p.beta!r}",
        f"noise_spectrum_exponent = {p.noise_spectrum_exponent!r}",
        f"noise_mode_count = {p.noise_mode_count}",
        f"grid = {g.nx}, {g.ny}, {g.Lx!r}, {g.Ly!r}",
        f"dt = {p.dt!r}",
        f"seed = {p.seed}",
    ]
    return "\n".join(lines) + "\n"


def with_overrides(p: SimulationParams, **kwargs) -> SimulationParams:
    return replace(p, **kwargs)
