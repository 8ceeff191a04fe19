"""Run configuration: sectioned key-value files, every key mandatory.

Example::

    [model]
    closure = greenshields
    gamma = 1
    v_max = 1.0
    rho_max = 1.0
    relaxation = none

    [grid]
    x_end = 2.0
    cells = 400

    [solver]
    cfl = 0.45
    t_end = 1.0
    boundary = zero_gradient
    snapshot_times = 0, 0.5, 1

    [uncertainty]
    level = 3
    rho_left_low = 0.55
    rho_left_high = 0.85
    rho_right = 0.3
    v_left = 0.3
    v_right = 0.7
    jump = 1.0
    quadrature_points = 5

    [reference]
    target = arz_homogeneous
    samples = 100000
    seed = 7
    t = 1.0

``relaxation`` is ``none`` (homogeneous system, source skipped) or a comma
separated list of non-negative relaxation times; a list describes a sweep.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, SGARZError
from .model import ModelConfig, greenshields
from .reference import RiemannProblem, Target
from .solver import Grid, SolverConfig

SCHEMA = {
    "model": ("closure", "gamma", "v_max", "rho_max", "relaxation"),
    "grid": ("x_end", "cells"),
    "solver": ("cfl", "t_end", "boundary", "snapshot_times"),
    "uncertainty": ("level", "rho_left_low", "rho_left_high", "rho_right",
                    "v_left", "v_right", "jump", "quadrature_points"),
    "reference": ("target", "samples", "seed", "t"),
}
CLOSURES = ("greenshields",)


@dataclass(frozen=True)
class RunConfig:
    closure: str
    gamma: int
    v_max: float
    rho_max: float
    taus: tuple[float, ...]  # math.inf is the homogeneous sentinel
    grid: Grid
    solver: SolverConfig
    problem: RiemannProblem
    level: int
    quadrature_points: int
    target: Target
    samples: int
    seed: int
    t_ref: float

    def __post_init__(self):
        if self.closure not in CLOSURES:
            raise ConfigError(f"unknown closure {self.closure!r}; expected one of {CLOSURES}")
        if not self.taus:
            raise ConfigError("relaxation needs at least one value")
        if self.level < 0:
            raise ConfigError("level must be >= 0")
        if self.quadrature_points < 1:
            raise ConfigError("quadrature_points must be >= 1")
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if not self.t_ref >= 0:
            raise ConfigError("reference time must be >= 0")
        self.model(self.taus[0])  # validates the closure parameters

    @property
    def is_sweep(self) -> bool:
        return len(self.taus) > 1

    def model(self, tau: float) -> ModelConfig:
        return ModelConfig(greenshields(self.gamma, self.v_max, self.rho_max), tau)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        """Echo in the file format; :func:`parse_text` inverts it exactly."""
        p, s, g = self.problem, self.solver, self.grid
        sections = {
            "model": {
                "closure": self.closure,
                "gamma": str(self.gamma),
                "v_max": repr(self.v_max),
                "rho_max": repr(self.rho_max),
                "relaxation": format_taus(self.taus),
            },
            "grid": {"x_end": repr(g.x_end), "cells": str(g.cells)},
            "solver": {
                "cfl": repr(s.cfl),
                "t_end": repr(s.t_end),
                "boundary": s.boundary,
                "snapshot_times": ", ".join(repr(t) for t in s.snapshot_times),
            },
            "uncertainty": {
                "level": str(self.level),
                "rho_left_low": repr(p.rho_left_low),
                "rho_left_high": repr(p.rho_left_high),
                "rho_right": repr(p.rho_right),
                "v_left": repr(p.v_left),
                "v_right": repr(p.v_right),
                "jump": repr(p.jump),
                "quadrature_points": str(self.quadrature_points),
            },
            "reference": {
                "target": self.target.value,
                "samples": str(self.samples),
                "seed": str(self.seed),
                "t": repr(self.t_ref),
            },
        }
        lines = []
        for name, keys in sections.items():
            lines.append(f"[{name}]")
            lines.extend(f"{k} = {v}" for k, v in keys.items())
            lines.append("")
        return "\n".join(lines)


def format_taus(taus) -> str:
    if len(taus) == 1 and math.isinf(taus[0]):
        return "none"
    return ", ".join(repr(float(t)) for t in taus)


def _parse_taus(text: str) -> tuple[float, ...]:
    if text.strip().lower() == "none":
        return (math.inf,)
    vals = tuple(_float(v, "relaxation") for v in _split(text))
    if any(not (math.isfinite(v) and v >= 0) for v in vals):
        raise ConfigError("relaxation times must be finite and >= 0 (use 'none' for the homogeneous system)")
    return vals


def _split(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _float(text: str, key: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None


def _int(text: str, key: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from None


def parse_text(text: str, source: str = "<config>") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    missing, unknown = [], []
    for sec, keys in SCHEMA.items():
        if not cp.has_section(sec):
            missing.append(f"[{sec}]")
            continue
        missing += [f"{sec}.{k}" for k in keys if k not in cp[sec]]
        unknown += [f"{sec}.{k}" for k in cp[sec] if k not in keys]
    unknown += [f"[{s}]" for s in cp.sections() if s not in SCHEMA]
    if missing:
        raise ConfigError(f"{source}: missing {', '.join(missing)}")
    if unknown:
        raise ConfigError(f"{source}: unknown {', '.join(unknown)}")

    m, g, s, u, r = (cp[k] for k in SCHEMA)
    try:
        target = Target(r["target"].strip())
    except ValueError:
        raise ConfigError(f"unknown reference target {r['target']!r}") from None
    try:
        return RunConfig(
            closure=m["closure"].strip(),
            gamma=_int(m["gamma"], "gamma"),
            v_max=_float(m["v_max"], "v_max"),
            rho_max=_float(m["rho_max"], "rho_max"),
            taus=_parse_taus(m["relaxation"]),
            grid=Grid(_float(g["x_end"], "x_end"), _int(g["cells"], "cells")),
            solver=SolverConfig(
                cfl=_float(s["cfl"], "cfl"),
                t_end=_float(s["t_end"], "t_end"),
                boundary=s["boundary"].strip(),
                snapshot_times=tuple(_float(v, "snapshot_times") for v in _split(s["snapshot_times"])),
            ),
            problem=RiemannProblem(*(_float(u[k], k) for k in SCHEMA["uncertainty"][1:7])),
            level=_int(u["level"], "level"),
            quadrature_points=_int(u["quadrature_points"], "quadrature_points"),
            target=target,
            samples=_int(r["samples"], "samples"),
            seed=_int(r["seed"], "seed"),
            t_ref=_float(r["t"], "t"),
        )
    except ConfigError:
        raise
    except SGARZError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_text(text, str(path))


def bundled_config(name: str) -> Path:
    """Path of a configuration shipped with the package (e.g. ``rarefaction.cfg``)."""
    return Path(__file__).parent / "configs" / name
