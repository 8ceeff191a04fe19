"""Stability diagnostics: hyperbolicity, sub-characteristic condition, diffusion.

Diagonal quantities (D_{h'}, D_{V_eq'}, speeds) live in the shared frame;
the sub-characteristic comparison is made column by column in that frame.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .basis import EigenFrame, TripleProductSet, build_space, evaluate_expansion, project_function
from .errors import PositivityError
from .galerkin import eigenvalues_of, galerkin_power, p_matrix, require_positive
from .model import (
    GpcState,
    ModelConfig,
    char_speeds,
    equilibrium_modes,
    equilibrium_target,
    flux_jacobian,
)

SC_TOL = 1e-10
OFFDIAG_TOL = 1e-8


def _require_nonnegative(d) -> None:
    """No inverse is taken here, so the empty road ``rho = 0`` is admissible."""
    d = np.asarray(d)
    if d.size and d.min() < 0.0:
        raise PositivityError(float(d.min()))


@dataclass
class StabilityReport:
    lam1: np.ndarray
    lam_eq: np.ndarray
    lam2: np.ndarray
    schat: np.ndarray  # elementwise lam1 <= lam_eq <= lam2
    dveq: np.ndarray
    mu_min_eig: float
    offdiag_residual: float
    tol: float = SC_TOL

    @property
    def dveq_negative(self) -> bool:
        return bool(np.all(self.dveq < 0))

    @property
    def passed(self) -> bool:
        return bool(np.all(self.schat)) and self.dveq_negative

    @property
    def dissipative(self) -> bool:
        return self.mu_min_eig >= -self.tol

    @property
    def consistent(self) -> bool:
        """Sub-characteristic pass coincides with a PSD diffusion matrix."""
        return self.passed == self.dissipative

    @property
    def within_assumptions(self) -> bool:
        return self.offdiag_residual <= OFFDIAG_TOL


@dataclass
class HyperbolicityEntry:
    eigenvalues: np.ndarray | None
    max_imag: float
    eigvec_cond: float
    rejected: str | None = None
    tol: float = 1e-9

    @property
    def strongly_hyperbolic(self) -> bool:
        return self.rejected is None and self.max_imag <= self.tol and np.isfinite(self.eigvec_cond)


def _dense_power(rho, p: int, mats: TripleProductSet) -> np.ndarray:
    return np.linalg.matrix_power(p_matrix(rho, mats), p - 1)


def closure_jacobians(rho, cfg: ModelConfig, mats: TripleProductSet):
    """Dense Jacobians ``h'(rho)`` and ``V_eq'(rho)`` from matrix powers of P.

    This route does not use the eigenframe, so rotating the results by V
    tests the constant-eigenvector assumption.
    """
    cl = cfg.closure
    dh = cl.h_coef * cl.h_exp * _dense_power(rho, cl.h_exp, mats)
    dveq = -cl.veq_coef * cl.veq_exp * _dense_power(rho, cl.veq_exp, mats)
    return dh, dveq


def _rotated_diag(mat, V):
    rot = V.T @ mat @ V
    diag = np.diag(rot).copy()
    off = rot - np.diag(diag)
    return diag, float(np.abs(off).max()) if off.size else 0.0


def frame_diagonals(rho, cfg: ModelConfig, mats: TripleProductSet, frame: EigenFrame):
    """``D_{h'}``, ``D_{V_eq'}`` and the largest off-diagonal residual."""
    dh, dveq = closure_jacobians(rho, cfg, mats)
    d_h, r1 = _rotated_diag(dh, frame.V)
    d_v, r2 = _rotated_diag(dveq, frame.V)
    return d_h, d_v, max(r1, r2)


def equilibrium_speeds(rho, cfg: ModelConfig, frame: EigenFrame, mats: TripleProductSet | None = None):
    """``D(V_eq(rho)) + D(rho) D_{V_eq'}(rho)``."""
    d = eigenvalues_of(rho, frame)
    _require_nonnegative(d)
    if mats is None:
        cl = cfg.closure
        dveq = -cl.veq_coef * cl.veq_exp * d ** (cl.veq_exp - 1)
    else:
        dveq = frame_diagonals(rho, cfg, mats, frame)[1]
    return eigenvalues_of(equilibrium_modes(rho, cfg, frame), frame) + d * dveq


def equilibrium_jacobian_dense(rho, cfg: ModelConfig, mats: TripleProductSet, frame: EigenFrame):
    """``P(V_eq(rho)) + P(rho) V_eq'(rho)`` as a dense matrix."""
    veq = equilibrium_modes(rho, cfg, frame)
    return p_matrix(veq, mats) + p_matrix(rho, mats) @ closure_jacobians(rho, cfg, mats)[1]


def diffusion_coefficient(rho, cfg: ModelConfig, frame: EigenFrame, mats: TripleProductSet | None = None):
    """Chapman-Enskog matrix ``-V [D^2 D_{V'} (D_{V'} + D_{h'})] V^T``."""
    d = eigenvalues_of(rho, frame)
    _require_nonnegative(d)
    if mats is None:
        cl = cfg.closure
        d_h = cl.h_coef * cl.h_exp * d ** (cl.h_exp - 1)
        d_v = -cl.veq_coef * cl.veq_exp * d ** (cl.veq_exp - 1)
    else:
        d_h, d_v, _ = frame_diagonals(rho, cfg, mats, frame)
    V = frame.V
    return -(V * (d**2 * d_v * (d_v + d_h))) @ V.T


def subcharacteristic_check(rho, cfg: ModelConfig, frame: EigenFrame, mats: TripleProductSet,
                            tol: float = SC_TOL) -> StabilityReport:
    rho = np.asarray(rho, dtype=float)
    d = eigenvalues_of(rho, frame)
    require_positive(d)
    _, d_v, offdiag = frame_diagonals(rho, cfg, mats, frame)
    state = GpcState(rho, equilibrium_target(rho, cfg, frame))
    cs = char_speeds(state, cfg, frame)
    lam_eq = equilibrium_speeds(rho, cfg, frame, mats)
    mu = diffusion_coefficient(rho, cfg, frame, mats)
    mu_min = float(np.linalg.eigvalsh(0.5 * (mu + mu.T)).min())
    schat = (cs.lam1 <= lam_eq + tol) & (lam_eq <= cs.lam2 + tol)
    return StabilityReport(cs.lam1, lam_eq, cs.lam2, schat, d_v, mu_min, offdiag, tol)


def hyperbolicity_certificate(states, cfg: ModelConfig, mats: TripleProductSet, frame: EigenFrame,
                              tol: float = 1e-9) -> list[HyperbolicityEntry]:
    out = []
    for st in states:
        try:
            jac = flux_jacobian(st, cfg, mats, frame)
        except PositivityError as exc:
            out.append(HyperbolicityEntry(None, np.nan, np.inf, rejected=str(exc), tol=tol))
            continue
        w, R = np.linalg.eig(jac)
        R = R / np.linalg.norm(R, axis=0)
        out.append(HyperbolicityEntry(w, float(np.abs(w.imag).max()), float(np.linalg.cond(R)), tol=tol))
    return out


def random_positive_modes(rng: np.random.Generator, frame: EigenFrame, low: float = 0.2,
                          high: float = 0.8, margin: float = 0.05, spread: float = 0.3) -> np.ndarray:
    """``c e_1 + delta`` with ``c`` in [low, high] and min eigenvalue >= margin."""
    n = frame.size
    c = rng.uniform(low, high)
    delta = rng.standard_normal(n) * spread / np.sqrt(n)
    delta[0] = 0.0
    dmin = -eigenvalues_of(delta, frame).min()
    if dmin > c - margin:
        delta *= (c - margin) / dmin
    delta[0] = c
    return delta


def random_positive_state(rng: np.random.Generator, cfg: ModelConfig, frame: EigenFrame) -> GpcState:
    from .model import state_from_velocity

    rho = random_positive_modes(rng, frame)
    v = random_positive_modes(rng, frame, 0.1, 0.9, margin=0.0)
    return state_from_velocity(rho, v, cfg, frame)


def write_stability_csv(path, reports: list[StabilityReport]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["probe", "mu_min_eig", "schat_pass"])
        for i, r in enumerate(reports):
            w.writerow([i, f"{r.mu_min_eig:.17g}", int(r.passed)])


def format_reports(reports: list[StabilityReport]) -> str:
    lines = [f"{'probe':>5} {'mu_min_eig':>14} {'schat':>6} {'psd':>4} {'offdiag':>10}"]
    for i, r in enumerate(reports):
        lines.append(f"{i:>5} {r.mu_min_eig:>14.6e} {str(r.passed):>6} {str(r.dissipative):>4} {r.offdiag_residual:>10.2e}")
    return "\n".join(lines)


def power_consistency_errors(gamma: int, levels, low: float = 0.3, slope: float = 0.2,
                             quadrature_points: int = 8, fine_cells: int = 2**12) -> list[float]:
    """L2(xi) error of the Galerkin power of projected ``low + slope xi`` against the true power.

    The error splits into the coefficient error against the exact projection
    of ``rho^gamma`` plus the (orthogonal) projection residual, the latter
    integrated with Gauss-Legendre rules on ``fine_cells`` subintervals.
    """
    f = lambda x: (low + slope * x) ** gamma  # noqa: E731
    nodes, weights = np.polynomial.legendre.leggauss(quadrature_points)
    pts = (np.arange(fine_cells)[:, None] + 0.5 * (nodes + 1)) / fine_cells
    errs = []
    for level in levels:
        sp = build_space(level)
        rho = project_function(sp.basis, lambda x: low + slope * x, quadrature_points)
        exact = project_function(sp.basis, f, quadrature_points)
        approx = galerkin_power(rho, gamma, sp.frame)
        vals = evaluate_expansion(sp.basis, exact, pts.ravel()).reshape(pts.shape)
        resid2 = float((((f(pts) - vals) ** 2) * weights).sum() / (2 * fine_cells))
        errs.append(float(np.sqrt(((approx - exact) ** 2).sum() + resid2)))
    return errs
