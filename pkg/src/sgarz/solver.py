"""First-order finite-volume IMEX solver for the Galerkin ARZ system.

Transport uses a local Lax-Friedrichs flux; the relaxation source is linear
in ``z`` and is integrated implicitly before the explicit transport update.
Boundaries use zero-gradient ghost cells.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .basis import EigenFrame
from .errors import ConfigError, PositivityError
from .galerkin import eigenvalues_of, require_positive
from .model import (
    GpcState,
    ModelConfig,
    equilibrium_modes,
    equilibrium_prime_eigs,
    equilibrium_target,
    flux,
    max_wave_speed,
)

log = logging.getLogger(__name__)

CSV_FMT = "%.17g"


@dataclass(frozen=True)
class Grid:
    x_end: float
    cells: int

    def __post_init__(self):
        if self.cells < 4:
            raise ConfigError(f"need at least 4 cells, got {self.cells}")
        if not self.x_end > 0:
            raise ConfigError("x_end must be positive")

    @property
    def dx(self) -> float:
        return self.x_end / self.cells

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.cells) + 0.5) * self.dx

    @property
    def edges(self) -> np.ndarray:
        return np.arange(self.cells + 1) * self.dx


@dataclass(frozen=True)
class SolverConfig:
    cfl: float
    t_end: float
    boundary: str = "zero_gradient"
    snapshot_times: tuple[float, ...] = ()

    def __post_init__(self):
        if not 0.0 < self.cfl <= 1.0:
            raise ConfigError(f"cfl must lie in (0, 1], got {self.cfl}")
        if not self.t_end > 0:
            raise ConfigError("t_end must be positive")
        if self.boundary != "zero_gradient":
            raise ConfigError(f"unsupported boundary {self.boundary!r}")
        times = tuple(float(t) for t in self.snapshot_times)
        if list(times) != sorted(times) or any(t < 0 or t > self.t_end for t in times):
            raise ConfigError("snapshot_times must be sorted and lie in [0, t_end]")
        object.__setattr__(self, "snapshot_times", times)


@dataclass(frozen=True, eq=False)
class FieldState:
    """Per-cell modes ``rho[j]`` and ``z[j]`` at time ``t``."""

    rho: np.ndarray
    z: np.ndarray
    t: float = 0.0

    @property
    def cells(self) -> GpcState:
        return GpcState(self.rho, self.z)


@dataclass
class RunResult:
    grid: Grid
    snapshots: list[FieldState] = field(default_factory=list)
    # rows of (step, t, dt, max_speed, total_mass)
    diagnostics: list[tuple[int, float, float, float, float]] = field(default_factory=list)
    final: FieldState | None = None

    def diagnostics_array(self) -> np.ndarray:
        return np.array(self.diagnostics, dtype=float).reshape(-1, 5)

    def write_csv(self, out_dir) -> list[Path]:
        """Snapshot and diagnostics CSVs; returns the written paths."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        for snap in self.snapshots:
            p = out / f"snapshot_t{snap.t:.6f}.csv"
            write_snapshot_csv(p, self.grid, snap)
            paths.append(p)
        p = out / "diagnostics.csv"
        np.savetxt(p, self.diagnostics_array(), fmt=CSV_FMT, delimiter=",",
                   header="step,t,dt,max_speed,total_mass", comments="")
        paths.append(p)
        return paths


def write_snapshot_csv(path, grid: Grid, state: FieldState) -> None:
    n = state.rho.shape[1]
    header = ",".join(["x"] + [f"rho_{k}" for k in range(n)] + [f"z_{k}" for k in range(n)])
    data = np.column_stack([grid.centers, state.rho, state.z])
    np.savetxt(path, data, fmt=CSV_FMT, delimiter=",", header=header, comments="")


def read_snapshot_csv(path) -> tuple[np.ndarray, FieldState]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    n = (data.shape[1] - 1) // 2
    return data[:, 0], FieldState(data[:, 1:1 + n], data[:, 1 + n:])


def total_mass(state: FieldState, grid: Grid) -> float:
    return float(state.rho[:, 0].sum() * grid.dx)


def _pad(a: np.ndarray) -> np.ndarray:
    return np.concatenate([a[:1], a, a[-1:]], axis=0)


def llf_flux(left: GpcState, right: GpcState, cfg: ModelConfig, frame: EigenFrame):
    """Local Lax-Friedrichs flux between (batches of) left and right states."""
    fl = flux(left, cfg, frame)
    fr = flux(right, cfg, frame)
    alpha = np.maximum(max_wave_speed(left, cfg, frame), max_wave_speed(right, cfg, frame))
    alpha = np.asarray(alpha)[..., None]
    return (
        0.5 * (fl[0] + fr[0]) + 0.5 * alpha * (left.rho - right.rho),
        0.5 * (fl[1] + fr[1]) + 0.5 * alpha * (left.z - right.z),
    )


def _edge_fluxes(rho, z, cfg, frame):
    """LLF fluxes at all N+1 edges and the per-cell speed envelope."""
    cells = GpcState(rho, z)
    fr, fz = flux(cells, cfg, frame)
    speed = max_wave_speed(cells, cfg, frame)
    rho_g, z_g, fr_g, fz_g, s_g = map(_pad, (rho, z, fr, fz, speed))
    alpha = np.maximum(s_g[:-1], s_g[1:])[:, None]
    F_rho = 0.5 * (fr_g[:-1] + fr_g[1:]) + 0.5 * alpha * (rho_g[:-1] - rho_g[1:])
    F_z = 0.5 * (fz_g[:-1] + fz_g[1:]) + 0.5 * alpha * (z_g[:-1] - z_g[1:])
    return F_rho, F_z, speed


def _capped_step(speed: float, dx: float, cfl: float, remaining: float) -> float:
    if speed <= 0.0:
        if math.isinf(remaining):
            raise ConfigError("zero wave speed and no end time to cap the step")
        return remaining
    return min(cfl * dx / speed, remaining)


def cfl_timestep(state: FieldState, cfg: ModelConfig, frame: EigenFrame, grid: Grid,
                 cfl: float, cap: float = math.inf) -> float:
    """``cfl dx / max speed``, never stepping past ``cap`` (an absolute time)."""
    speed = float(np.max(max_wave_speed(state.cells, cfg, frame)))
    return _capped_step(speed, grid.dx, cfl, cap - state.t)


def relax(rho, z, dt: float, cfg: ModelConfig, frame: EigenFrame):
    """Implicit relaxation stage ``z1 = (tau z + dt M(rho)) / (tau + dt)``."""
    if cfg.homogeneous:
        return z
    target = equilibrium_target(rho, cfg, frame)
    if cfg.tau == 0.0:
        return target
    return cfg.tau / (cfg.tau + dt) * z + dt / (cfg.tau + dt) * target


def imex_step(state: FieldState, dt: float, cfg: ModelConfig, frame: EigenFrame, grid: Grid) -> FieldState:
    if not dt > 0:
        raise ValueError(f"time step must be positive, got {dt}")
    z1 = relax(state.rho, state.z, dt, cfg, frame)
    F_rho, F_z, _ = _edge_fluxes(state.rho, z1, cfg, frame)
    lam = dt / grid.dx
    rho_new = state.rho - lam * (F_rho[1:] - F_rho[:-1])
    z_new = z1 - lam * (F_z[1:] - F_z[:-1])
    t_new = state.t + dt
    require_positive(eigenvalues_of(rho_new, frame), time=t_new)
    return FieldState(rho_new, z_new, t_new)


def _advance(initial: FieldState, solver: SolverConfig, grid: Grid, step, speed_of) -> RunResult:
    result = RunResult(grid=grid)
    state = initial
    pending = [t for t in solver.snapshot_times]
    stops = sorted(set(pending) | {solver.t_end})
    if pending and pending[0] <= state.t:
        result.snapshots.append(state)
        pending.pop(0)
    result.diagnostics.append((0, state.t, 0.0, speed_of(state), total_mass(state, grid)))
    n = 0
    for stop in stops:
        while state.t < stop:
            dt, speed = step.timestep(state, stop)
            state = step(state, dt)
            # landing exactly on the stop avoids a sliver step from rounding
            if stop - state.t <= 1e-12 * max(1.0, stop):
                state = FieldState(state.rho, state.z, stop)
            n += 1
            result.diagnostics.append((n, state.t, dt, speed, total_mass(state, grid)))
        while pending and pending[0] <= state.t:
            result.snapshots.append(state)
            pending.pop(0)
    result.final = state
    log.debug("run finished after %d steps at t=%g", n, state.t)
    return result


class _ArzStepper:
    def __init__(self, cfg, solver, frame, grid):
        self.cfg, self.solver, self.frame, self.grid = cfg, solver, frame, grid

    def timestep(self, state, stop):
        speed = float(np.max(max_wave_speed(state.cells, self.cfg, self.frame)))
        return _capped_step(speed, self.grid.dx, self.solver.cfl, stop - state.t), speed

    def __call__(self, state, dt):
        try:
            return imex_step(state, dt, self.cfg, self.frame, self.grid)
        except PositivityError as exc:
            log.debug("positivity lost: %s", exc)
            raise


def run(initial: FieldState, model: ModelConfig, solver: SolverConfig, frame: EigenFrame, grid: Grid) -> RunResult:
    """Advance ``initial`` to ``solver.t_end`` recording snapshots and diagnostics."""
    if initial.rho.shape != (grid.cells, frame.size) or initial.z.shape != initial.rho.shape:
        raise ConfigError("initial state does not match grid and basis sizes")
    require_positive(eigenvalues_of(initial.rho, frame), time=initial.t)
    stepper = _ArzStepper(model, solver, frame, grid)
    return _advance(initial, solver, grid, stepper,
                    lambda s: float(np.max(max_wave_speed(s.cells, model, frame))))


# -- equilibrium (LWR-type) model -----------------------------------------------


def equilibrium_flux(rho, cfg: ModelConfig, frame: EigenFrame):
    """``rho * V_eq(rho)`` and the speed envelope ``max |lam_eq|``."""
    d = eigenvalues_of(rho, frame)
    require_positive(d)
    veq = equilibrium_modes(rho, cfg, frame)
    lam_eq = eigenvalues_of(veq, frame) + d * equilibrium_prime_eigs(rho, cfg, frame, d)
    return frame.apply(rho, veq), np.abs(lam_eq).max(axis=-1)


class _EquilibriumStepper:
    def __init__(self, cfg, solver, frame, grid):
        self.cfg, self.solver, self.frame, self.grid = cfg, solver, frame, grid

    def timestep(self, state, stop):
        speed = float(np.max(equilibrium_flux(state.rho, self.cfg, self.frame)[1]))
        return _capped_step(speed, self.grid.dx, self.solver.cfl, stop - state.t), speed

    def __call__(self, state, dt):
        f, s = equilibrium_flux(state.rho, self.cfg, self.frame)
        rho_g, f_g, s_g = map(_pad, (state.rho, f, s))
        alpha = np.maximum(s_g[:-1], s_g[1:])[:, None]
        F = 0.5 * (f_g[:-1] + f_g[1:]) + 0.5 * alpha * (rho_g[:-1] - rho_g[1:])
        rho_new = state.rho - dt / self.grid.dx * (F[1:] - F[:-1])
        t_new = state.t + dt
        require_positive(eigenvalues_of(rho_new, self.frame), time=t_new)
        return FieldState(rho_new, equilibrium_target(rho_new, self.cfg, self.frame), t_new)


def run_equilibrium(initial_rho, model: ModelConfig, solver: SolverConfig, frame: EigenFrame, grid: Grid) -> RunResult:
    """Same first-order LLF scheme applied to ``rho_t + (rho * V_eq(rho))_x = 0``.

    This is the discretization-only counterpart of the relaxation limit; the
    returned states carry ``z = M(rho)``.
    """
    rho = np.asarray(initial_rho, dtype=float)
    initial = FieldState(rho, equilibrium_target(rho, model, frame), 0.0)
    stepper = _EquilibriumStepper(model, solver, frame, grid)
    return _advance(initial, solver, grid, stepper,
                    lambda s: float(np.max(equilibrium_flux(s.rho, model, frame)[1])))
