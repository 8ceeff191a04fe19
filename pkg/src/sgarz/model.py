"""Stochastic Galerkin ARZ model: closures, flux, relaxation and wave speeds.

The conserved unknowns per cell are the modes of the density ``rho`` and of
``z = rho (v + h(rho))``.  All functions accept batches with the mode index on
the last axis and evaluate through the eigenframe (O(K^2) per state).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import EigenFrame, TripleProductSet
from .errors import ConfigError
from .galerkin import eigenvalues_of, inverse_apply, p_matrix, require_positive


@dataclass(frozen=True)
class Closure:
    """Power-law hesitation and equilibrium velocity.

    ``h(rho) = h_coef rho^h_exp`` and ``V_eq(rho) = veq_max - veq_coef rho^veq_exp``.
    Integer exponents are lifted with Galerkin powers ``P^(p-1)(rho) rho``.
    """

    name: str
    h_coef: float
    h_exp: int
    veq_max: float
    veq_coef: float
    veq_exp: int

    def __post_init__(self):
        if self.h_exp < 1 or self.veq_exp < 1:
            raise ConfigError("closure exponents must be integers >= 1")
        if self.h_coef <= 0 or self.veq_coef <= 0 or self.veq_max <= 0:
            raise ConfigError("closure coefficients must be positive")

    # scalar versions, used for deterministic states and exact solvers
    def h(self, rho):
        return self.h_coef * rho**self.h_exp

    def dh(self, rho):
        return self.h_coef * self.h_exp * rho ** (self.h_exp - 1)

    def veq(self, rho):
        return self.veq_max - self.veq_coef * rho**self.veq_exp

    def dveq(self, rho):
        return -self.veq_coef * self.veq_exp * rho ** (self.veq_exp - 1)


def greenshields(gamma: int, v_max: float, rho_max: float) -> Closure:
    """``V_eq = (v_max / rho_max)(rho_max - rho^gamma)``, ``h = V_eq(0) - V_eq``."""
    if v_max <= 0 or rho_max <= 0:
        raise ConfigError("v_max and rho_max must be positive")
    if int(gamma) != gamma or gamma < 1:
        raise ConfigError(f"gamma must be a positive integer, got {gamma}")
    c = v_max / rho_max
    return Closure("greenshields", c, int(gamma), float(v_max), c, int(gamma))


def linear_lwr() -> Closure:
    """``h(rho) = rho`` with ``V_eq(rho) = 1 - rho``."""
    return Closure("linear_lwr", 1.0, 1, 1.0, 1.0, 1)


HOMOGENEOUS_TAU = 1e12


@dataclass(frozen=True)
class ModelConfig:
    closure: Closure
    tau: float = math.inf  # any tau >= HOMOGENEOUS_TAU selects the homogeneous system

    def __post_init__(self):
        if not (self.tau >= 0):
            raise ConfigError(f"relaxation time must be >= 0, got {self.tau}")

    @property
    def homogeneous(self) -> bool:
        return self.tau >= HOMOGENEOUS_TAU

    @property
    def gamma(self) -> int:
        return self.closure.veq_exp

    @property
    def v_max(self) -> float:
        return self.closure.veq_max

    @property
    def rho_max(self) -> float:
        return self.closure.veq_max / self.closure.veq_coef


@dataclass(frozen=True, eq=False)
class GpcState:
    """Modes ``rho`` and ``z``; arrays of shape ``(..., K+1)``."""

    rho: np.ndarray
    z: np.ndarray


@dataclass(frozen=True, eq=False)
class CharSpeeds:
    lam1: np.ndarray
    lam2: np.ndarray


def _power(rho, p: int, frame: EigenFrame, d=None):
    """``P^(p-1)(rho) rho`` and the eigenvalues of P(rho)."""
    if d is None:
        d = eigenvalues_of(rho, frame)
    if p == 1:
        return np.array(rho, dtype=float), d
    return frame.from_eigen(d ** (p - 1) * frame.to_eigen(rho)), d


def hesitation_modes(rho, cfg: ModelConfig, frame: EigenFrame) -> np.ndarray:
    cl = cfg.closure
    return cl.h_coef * _power(rho, cl.h_exp, frame)[0]


def equilibrium_modes(rho, cfg: ModelConfig, frame: EigenFrame) -> np.ndarray:
    cl = cfg.closure
    out = -cl.veq_coef * _power(rho, cl.veq_exp, frame)[0]
    out[..., 0] += cl.veq_max
    return out


def hesitation_prime_eigs(rho, cfg: ModelConfig, frame: EigenFrame, d=None) -> np.ndarray:
    """D_{h'}(rho): eigenvalues of the hesitation Jacobian in frame order."""
    cl = cfg.closure
    if d is None:
        d = eigenvalues_of(rho, frame)
    return cl.h_coef * cl.h_exp * d ** (cl.h_exp - 1)


def equilibrium_prime_eigs(rho, cfg: ModelConfig, frame: EigenFrame, d=None) -> np.ndarray:
    """D_{V_eq'}(rho)."""
    cl = cfg.closure
    if d is None:
        d = eigenvalues_of(rho, frame)
    return -cl.veq_coef * cl.veq_exp * d ** (cl.veq_exp - 1)


def hesitation_jacobian(rho, cfg: ModelConfig, frame: EigenFrame) -> np.ndarray:
    """Dense ``h'(rho) = h_coef h_exp P^(h_exp-1)(rho)``."""
    V = frame.V
    return (V * hesitation_prime_eigs(rho, cfg, frame)) @ V.T


def equilibrium_jacobian(rho, cfg: ModelConfig, frame: EigenFrame) -> np.ndarray:
    V = frame.V
    return (V * equilibrium_prime_eigs(rho, cfg, frame)) @ V.T


def state_from_velocity(rho, v, cfg: ModelConfig, frame: EigenFrame) -> GpcState:
    """Build ``z = rho * (v + h(rho))`` from density and velocity modes."""
    rho = np.asarray(rho, dtype=float)
    z = frame.apply(rho, np.asarray(v, dtype=float) + hesitation_modes(rho, cfg, frame))
    return GpcState(rho, z)


def auxiliary_velocity(state: GpcState, cfg: ModelConfig, frame: EigenFrame) -> np.ndarray:
    """``v = P^{-1}(rho) z - h(rho)``."""
    return inverse_apply(state.rho, state.z, frame) - hesitation_modes(state.rho, cfg, frame)


def equilibrium_target(rho, cfg: ModelConfig, frame: EigenFrame) -> np.ndarray:
    """``M(rho) = rho * (V_eq(rho) + h(rho))``, the relaxation fixed point for z."""
    target = equilibrium_modes(rho, cfg, frame) + hesitation_modes(rho, cfg, frame)
    return frame.apply(rho, target)


def flux(state: GpcState, cfg: ModelConfig, frame: EigenFrame):
    """Conservative flux ``(P(rho) v, P(z) v)``."""
    v = auxiliary_velocity(state, cfg, frame)
    return frame.apply(state.rho, v), frame.apply(state.z, v)


def flux_direct(state: GpcState, cfg: ModelConfig, mats: TripleProductSet, frame: EigenFrame):
    """Single-state flux from dense matrices and a linear solve.

    ``(z - P(rho) h, P(z) P^{-1}(rho) z - P(z) h)``; used to cross-check
    :func:`flux`.
    """
    h = hesitation_modes(state.rho, cfg, frame)
    pr = p_matrix(state.rho, mats)
    pz = p_matrix(state.z, mats)
    w = np.linalg.solve(pr, state.z)
    return state.z - pr @ h, pz @ w - pz @ h


def source(state: GpcState, cfg: ModelConfig, frame: EigenFrame) -> np.ndarray:
    """z-component of the relaxation term, ``M(rho) - z`` (rho-component is 0)."""
    require_positive(eigenvalues_of(state.rho, frame))
    return equilibrium_target(state.rho, cfg, frame) - state.z


def source_direct(state: GpcState, cfg: ModelConfig, mats: TripleProductSet, frame: EigenFrame):
    """``rho * (V_eq(rho) - v)`` with dense matrices."""
    v = auxiliary_velocity(state, cfg, frame)
    return p_matrix(state.rho, mats) @ (equilibrium_modes(state.rho, cfg, frame) - v)


def char_speeds(state: GpcState, cfg: ModelConfig, frame: EigenFrame) -> CharSpeeds:
    """``lam2 = D(v)`` and ``lam1 = D(v) - D_{h'}(rho) D(rho)``."""
    d = eigenvalues_of(state.rho, frame)
    require_positive(d)
    v = auxiliary_velocity(state, cfg, frame)
    lam2 = eigenvalues_of(v, frame)
    lam1 = lam2 - hesitation_prime_eigs(state.rho, cfg, frame, d) * d
    return CharSpeeds(lam1, lam2)


def max_wave_speed(state: GpcState, cfg: ModelConfig, frame: EigenFrame):
    """Envelope ``max(|lam1|, |lam2|)`` over all modes (per state in a batch)."""
    cs = char_speeds(state, cfg, frame)
    return np.maximum(np.abs(cs.lam1), np.abs(cs.lam2)).max(axis=-1)


def flux_jacobian(state: GpcState, cfg: ModelConfig, mats: TripleProductSet, frame: EigenFrame) -> np.ndarray:
    """Dense ``2(K+1) x 2(K+1)`` Jacobian of the flux, assembled blockwise."""
    n = mats.size
    rho, z = np.asarray(state.rho, float), np.asarray(state.z, float)
    require_positive(eigenvalues_of(rho, frame))
    h = hesitation_modes(rho, cfg, frame)
    ph = p_matrix(h, mats)
    pr = p_matrix(rho, mats)
    pz = p_matrix(z, mats)
    dh = hesitation_jacobian(rho, cfg, frame)
    pr_inv = np.linalg.inv(pr)
    pzr = pz @ pr_inv
    jac = np.empty((2 * n, 2 * n))
    jac[:n, :n] = -ph - pr @ dh
    jac[:n, n:] = np.eye(n)
    jac[n:, :n] = -pzr @ pzr - pz @ dh
    jac[n:, n:] = 2.0 * pzr - ph
    return jac
