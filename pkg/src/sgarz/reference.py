"""Exact Riemann solutions, Monte-Carlo reference statistics, comparisons.

The exact solvers assume the linear hesitation ``h(rho) = rho`` and, for the
equilibrium model, ``V_eq(rho) = 1 - rho``.  They are vectorized: every
argument may be an array and the usual broadcasting applies.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .basis import EigenFrame, HaarBasis, project_function
from .errors import DomainError, GridMismatchError, UnsupportedConfiguration
from .model import ModelConfig, state_from_velocity
from .solver import CSV_FMT, FieldState, Grid

MC_CHUNK = 1 << 14


class Target(enum.Enum):
    ARZ_HOMOGENEOUS = "arz_homogeneous"
    LWR_EQUILIBRIUM = "lwr_equilibrium"


@dataclass(frozen=True)
class RiemannProblem:
    """Uncertain left density ``a + (b - a) xi``; everything else deterministic."""

    rho_left_low: float
    rho_left_high: float
    rho_right: float
    v_left: float
    v_right: float
    jump: float = 1.0

    def __post_init__(self):
        if not 0 < self.rho_left_low <= self.rho_left_high:
            raise DomainError("need 0 < rho_left_low <= rho_left_high")
        if not self.rho_right > 0:
            raise DomainError("rho_right must be positive")
        if self.v_left < 0 or self.v_right < 0:
            raise DomainError("velocities must be non-negative")

    def rho_left(self, xi):
        return self.rho_left_low + (self.rho_left_high - self.rho_left_low) * np.asarray(xi)


SHOCK = RiemannProblem(0.15, 0.45, 0.7, 0.7, 0.3)
RAREFACTION = RiemannProblem(0.55, 0.85, 0.3, 0.3, 0.7)


@dataclass(frozen=True, eq=False)
class StatSummary:
    x: np.ndarray
    mean: np.ndarray
    std: np.ndarray

    @property
    def lower(self) -> np.ndarray:
        return self.mean - self.std

    @property
    def upper(self) -> np.ndarray:
        return self.mean + self.std

    def write_csv(self, path) -> None:
        data = np.column_stack([self.x, self.mean, self.std, self.lower, self.upper])
        np.savetxt(path, data, fmt=CSV_FMT, delimiter=",", header="x,mean,std,lower,upper", comments="")

    @classmethod
    def read_csv(cls, path) -> "StatSummary":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] != 5:
            raise ValueError(f"{path}: expected columns x,mean,std,lower,upper")
        return cls(data[:, 0], data[:, 1], data[:, 2])


@dataclass
class ComparisonReport:
    l1: dict[str, float]
    linf: dict[str, float]

    @property
    def mean_l1(self) -> float:
        return self.l1["mean"]

    @property
    def band_l1(self) -> float:
        return max(self.l1["lower"], self.l1["upper"])

    def format(self) -> str:
        lines = [f"{'statistic':<10}{'L1':>14}{'Linf':>14}"]
        for key in self.l1:
            lines.append(f"{key:<10}{self.l1[key]:>14.6e}{self.linf[key]:>14.6e}")
        return "\n".join(lines)


# -- exact solvers -----------------------------------------------------------------


def arz_riemann_exact(rho_l, v_l, rho_r, v_r, xi):
    """Self-similar solution ``(rho, v)`` of the homogeneous ARZ model at ``xi = x/t``.

    A 1-wave (shock or rarefaction, ``w = v + rho`` invariant) connects the
    left state to ``(rho_l + v_l - v_r, v_r)``, which is followed by a contact
    moving at ``v_r``.
    """
    rho_l, v_l, rho_r, v_r, xi = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (rho_l, v_l, rho_r, v_r, xi)))
    if np.any(rho_l <= 0) or np.any(rho_r <= 0):
        raise DomainError("densities must be positive")
    w = v_l + rho_l
    rho_s = w - v_r
    if np.any(rho_s <= 0):
        raise UnsupportedConfiguration("intermediate state is a vacuum (rho* <= 0)")

    lam_l = v_l - rho_l
    lam_s = v_r - rho_s
    shock = rho_s > rho_l
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(shock, (rho_s * v_r - rho_l * v_l) / (rho_s - rho_l), 0.0)
    # 1-wave: left of it the left state, right of it the star state
    left_edge = np.where(shock, s, lam_l)
    right_edge = np.where(shock, s, lam_s)
    rho_fan = np.clip(0.5 * (w - xi), rho_s, rho_l)

    rho = np.where(xi < left_edge, rho_l, np.where(xi >= right_edge, rho_s, rho_fan))
    v = np.where(xi < left_edge, v_l, w - rho)
    contact = xi >= v_r
    rho = np.where(contact, rho_r, rho)
    v = np.where(contact, v_r, v)
    return rho, v


def lwr_riemann_exact(rho_l, rho_r, xi):
    """Entropy solution of ``rho_t + (rho (1 - rho))_x = 0`` at ``xi = x/t``."""
    rho_l, rho_r, xi = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (rho_l, rho_r, xi)))
    shock = rho_l < rho_r
    s = 1.0 - rho_l - rho_r
    lo, hi = 1.0 - 2.0 * rho_l, 1.0 - 2.0 * rho_r
    fan = np.clip(0.5 * (1.0 - xi), rho_r, rho_l)
    rare = np.where(xi <= lo, rho_l, np.where(xi >= hi, rho_r, fan))
    return np.where(shock, np.where(xi < s, rho_l, rho_r), rare)


def exact_density(problem: RiemannProblem, target, rho_left, x, t):
    """Exact density at positions ``x`` for (an array of) left densities."""
    target = Target(target)
    if t == 0:
        return np.where(np.asarray(x) < problem.jump, rho_left, problem.rho_right)
    xi = (np.asarray(x) - problem.jump) / t
    if target is Target.ARZ_HOMOGENEOUS:
        return arz_riemann_exact(rho_left, problem.v_left, problem.rho_right, problem.v_right, xi)[0]
    return lwr_riemann_exact(rho_left, problem.rho_right, xi)


# -- Monte Carlo ---------------------------------------------------------------


def sample_xi(seed: int, start: int, stop: int) -> np.ndarray:
    """Uniform samples with indices ``start..stop-1`` of the stream ``seed``.

    Sample ``m`` lives in chunk ``m // MC_CHUNK``; each chunk is an
    independent Philox stream keyed by ``(seed, chunk)``, so any partition of
    the index range reproduces the same numbers.
    """
    out = []
    m = start
    while m < stop:
        chunk, offset = divmod(m, MC_CHUNK)
        take = min(stop - m, MC_CHUNK - offset)
        gen = np.random.Generator(np.random.Philox(key=[int(seed) & (2**64 - 1), chunk]))
        out.append(gen.random(offset + take)[offset:])
        m += take
    return np.concatenate(out) if out else np.empty(0)


def _block_moments(vals):
    mean = vals.mean(axis=0)
    return vals.shape[0], mean, ((vals - mean) ** 2).sum(axis=0), vals.min(axis=0), vals.max(axis=0)


def _chunk_moments(problem, target, x, t, seed, start, stop, block=2048):
    rho_left = problem.rho_left(sample_xi(seed, start, stop))
    acc = None
    for i in range(0, rho_left.size, block):
        vals = exact_density(problem, target, rho_left[i:i + block, None], x[None, :], t)
        part = _block_moments(vals)
        acc = part if acc is None else _merge(acc, part)
    return acc


def _merge(a, b):
    """Chan et al. pairwise update of (count, mean, M2), plus running min/max."""
    na, ma, m2a, lo_a, hi_a = a
    nb, mb, m2b, lo_b, hi_b = b
    n = na + nb
    delta = mb - ma
    return (n, ma + delta * (nb / n), m2a + m2b + delta**2 * (na * nb / n),
            np.minimum(lo_a, lo_b), np.maximum(hi_a, hi_b))


def monte_carlo_reference(
    problem: RiemannProblem,
    model: ModelConfig | None,
    target,
    t: float,
    grid: Grid,
    samples: int,
    seed: int,
    threads: int = 1,
) -> StatSummary:
    """Mean and standard deviation of the exact density at the cell centers.

    ``model`` (optional) is checked against what the exact solvers support.
    """
    if samples < 1:
        raise DomainError("need at least one sample")
    target = Target(target)
    if model is not None:
        cl = model.closure
        if (cl.h_coef, cl.h_exp) != (1.0, 1):
            raise UnsupportedConfiguration("exact ARZ solver requires h(rho) = rho")
        if target is Target.LWR_EQUILIBRIUM and (cl.veq_max, cl.veq_coef, cl.veq_exp) != (1.0, 1.0, 1):
            raise UnsupportedConfiguration("exact LWR solver requires V_eq(rho) = 1 - rho")
    x = grid.centers
    bounds = list(range(0, samples, MC_CHUNK)) + [samples]
    jobs = list(zip(bounds[:-1], bounds[1:]))
    work = lambda ab: _chunk_moments(problem, target, x, t, seed, *ab)  # noqa: E731
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, jobs))
    else:
        parts = [work(ab) for ab in jobs]
    acc = parts[0]
    for part in parts[1:]:
        acc = _merge(acc, part)
    n, mean, m2, lo, hi = acc
    # cells where every sample agrees are reported exactly, free of summation rounding
    const = lo == hi
    mean = np.where(const, lo, mean)
    std = np.where(const, 0.0, np.sqrt(m2 / n))
    return StatSummary(x, mean, std)


# -- Galerkin statistics and comparisons ----------------------------------------


def gpc_statistics(field: FieldState, grid: Grid) -> StatSummary:
    """Mean ``rho_0`` and standard deviation ``sqrt(sum_{k>=1} rho_k^2)``."""
    rho = np.asarray(field.rho)
    return StatSummary(grid.centers, rho[:, 0].copy(), np.sqrt((rho[:, 1:] ** 2).sum(axis=1)))


def compare_summaries(sgr: StatSummary, mc: StatSummary, grid: Grid | None = None) -> ComparisonReport:
    if sgr.x.shape != mc.x.shape or not np.allclose(sgr.x, mc.x, rtol=0, atol=1e-12):
        raise GridMismatchError("summaries are defined on different grids")
    if grid is not None and sgr.x.shape != (grid.cells,):
        raise GridMismatchError("summaries do not match the grid")
    dx = grid.dx if grid is not None else float(sgr.x[1] - sgr.x[0])
    l1, linf = {}, {}
    for key in ("mean", "std", "lower", "upper"):
        d = np.abs(getattr(sgr, key) - getattr(mc, key))
        l1[key] = float(dx * d.sum())
        linf[key] = float(d.max())
    return ComparisonReport(l1, linf)


def initial_field(problem: RiemannProblem, model: ModelConfig, basis: HaarBasis, frame: EigenFrame,
                  grid: Grid, quadrature_points: int = 5) -> FieldState:
    """Projected Riemann data: random left density, deterministic right state."""
    n = basis.size
    rho_l = project_function(basis, problem.rho_left, quadrature_points)
    e1 = np.zeros(n)
    e1[0] = 1.0
    left = grid.centers < problem.jump
    rho = np.where(left[:, None], rho_l[None, :], problem.rho_right * e1[None, :])
    v = np.where(left[:, None], problem.v_left * e1, problem.v_right * e1)
    st = state_from_velocity(rho, v, model, frame)
    return FieldState(st.rho, st.z, 0.0)
