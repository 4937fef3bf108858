"""Run configuration: JSON config file merged with command-line flags."""

import argparse
import json
from dataclasses import dataclass, field, fields

import numpy as np

from .geometry import angles_to_cartesian

COMMANDS = ("psi", "kernel", "simulate", "scaling", "lass", "gaussian", "selftest")


class ConfigError(ValueError):
    """Invalid configuration (exit status 2)."""


@dataclass
class RunConfig:
    command: str
    n: int = 1
    H: float = 0.25
    rho: list = field(default_factory=lambda: [1.0])
    theta: float = 1.0
    cutoff: float = 0.9
    r_min: float = 0.0
    points: list = field(default_factory=list)
    weights: list = field(default_factory=list)
    base: list = field(default_factory=list)
    tangent: list = field(default_factory=list)
    u_grid: list = field(default_factory=list)
    r_grid: list = field(default_factory=list)
    eps_grid: list = field(default_factory=lambda: [1e-1, 1e-2, 1e-3, 1e-4])
    replicates: int = 1000
    mc_samples: int = 0
    seed: int = 12345
    sampler: str = "auto"
    workers: int = 1
    chunk: int = 256
    tol: float = 1e-9
    var_z: float = 3.0
    rel_tol: float = 0.05
    asymptote: bool = False
    criteria: list = field(default_factory=list)
    output: str = ""
    summary: str = ""
    samples_csv: str = ""

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @property
    def points_xyz(self):
        """Points as unit vectors from spherical angles (one list per point)."""
        if not self.points:
            return np.zeros((0, self.n + 1))
        return angles_to_cartesian(np.array(self.points, dtype=float))

    @property
    def base_xyz(self):
        return angles_to_cartesian(np.array(self.base, dtype=float)) if self.base else None


def parse_grid(text):
    """``"a:b:k"`` (k evenly spaced values), ``"log:a:b:k"`` or a comma list."""
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    text = str(text).strip()
    try:
        if text.startswith("log:"):
            a, b, k = text[4:].split(":")
            return np.logspace(float(a), float(b), int(k)).tolist()
        if ":" in text:
            a, b, k = text.split(":")
            return np.linspace(float(a), float(b), int(k)).tolist()
        return [float(x) for x in text.split(",") if x]
    except ValueError as exc:
        raise ConfigError(f"bad grid {text!r}: {exc}") from None


def parse_points(text):
    """``"a1,a2;b1,b2"`` -> ``[[a1, a2], [b1, b2]]``."""
    if isinstance(text, (list, tuple)):
        return [[float(v) for v in np.atleast_1d(p)] for p in text]
    try:
        return [[float(v) for v in part.split(",")] for part in str(text).split(";") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad point list {text!r}: {exc}") from None


def parse_ints(text):
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    return [int(x) for x in str(text).split(",") if x]


_CONVERTERS = {
    "rho": parse_grid, "points": parse_points, "weights": parse_points,
    "base": lambda t: parse_points(t)[0] if parse_points(t) else [],
    "tangent": parse_points, "u_grid": parse_grid, "r_grid": parse_grid,
    "eps_grid": parse_grid, "criteria": parse_ints,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _parser():
    p = _Parser(prog="ballthrow", description=__doc__)
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON file with configuration keys")
    add = p.add_argument
    add("--n", type=int)
    add("--H", type=float)
    add("--rho", help="scale factor or list (comma separated)")
    add("--theta", type=float)
    add("--cutoff", type=float, help="radius cutoff fraction c_f in (0, 1); 0 for none")
    add("--r-min", dest="r_min", type=float)
    add("--points", help="spherical angles, points separated by ';', angles by ','")
    add("--weights", help="one row per measure over the points, ';'-separated rows")
    add("--base", help="base point angles")
    add("--tangent", help="tangent vectors, ';'-separated")
    add("--u-grid", dest="u_grid", help="a:b:k, log:a:b:k or comma list")
    add("--r-grid", dest="r_grid")
    add("--eps-grid", dest="eps_grid")
    add("--replicates", type=int)
    add("--mc-samples", dest="mc_samples", type=int)
    add("--seed", type=int)
    add("--sampler", choices=("auto", "pattern", "balls"))
    add("--workers", type=int)
    add("--chunk", type=int)
    add("--tol", type=float)
    add("--var-z", dest="var_z", type=float)
    add("--rel-tol", dest="rel_tol", type=float)
    add("--asymptote", action="store_const", const=True, default=None)
    add("--criteria", help="comma list of acceptance criteria to run")
    add("--output", help="output file (default: stdout or $BALLTHROW_OUTPUT_DIR)")
    add("--summary", help="JSON summary file for 'simulate'")
    add("--samples-csv", dest="samples_csv", help="CSV file for raw samples")
    return p


def parse_config(argv):
    """Resolve flags over config-file values and validate the result."""
    parser = _parser()
    args = parser.parse_args(argv)
    values = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(values, dict):
            raise ConfigError("config file must hold a JSON object")
    known = {f.name for f in fields(RunConfig)} - {"command"}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for key in known:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    for key, conv in _CONVERTERS.items():
        if key in values:
            values[key] = conv(values[key])
    if "rho" in values and not isinstance(values["rho"], list):
        values["rho"] = [float(values["rho"])]
    try:
        cfg = RunConfig(command=args.command, **values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    validate(cfg)
    return cfg


def validate(cfg):
    if cfg.n < 1:
        raise ConfigError("n must be >= 1")
    if not cfg.H > 0:
        raise ConfigError("H must be positive")
    if 2.0 * cfg.H == cfg.n:
        raise ConfigError(f"2H ≠ n is required (got n={cfg.n}, H={cfg.H})")
    if cfg.cutoff and not 0.0 < cfg.cutoff < 1.0:
        raise ConfigError("cutoff must lie in (0, 1), or 0 for the pure power law")
    if cfg.r_min < 0:
        raise ConfigError("r_min must be >= 0")
    if any(r < 1.0 for r in cfg.rho):
        raise ConfigError("rho must be >= 1")
    for name in ("tol", "var_z", "rel_tol"):
        if not getattr(cfg, name) > 0:
            raise ConfigError(f"{name} must be > 0")
    if cfg.replicates < 1 or cfg.workers < 1 or cfg.chunk < 1 or cfg.mc_samples < 0:
        raise ConfigError("replicates, workers and chunk must be >= 1")
    for p in cfg.points + ([cfg.base] if cfg.base else []):
        if len(p) != cfg.n:
            raise ConfigError(f"each point needs {cfg.n} spherical angles")
    for v in cfg.tangent:
        if len(v) != cfg.n:
            raise ConfigError(f"each tangent vector needs {cfg.n} components")
    for w in cfg.weights:
        if len(w) != len(cfg.points):
            raise ConfigError("each weight row needs one entry per point")
    if any(u < 0 or u > np.pi for u in cfg.u_grid):
        raise ConfigError("u grid must lie in [0, pi]")
    if any(e <= 0 for e in cfg.eps_grid):
        raise ConfigError("eps grid must be positive")
