"""Pseudo-spectral Galerkin product and functions of P(alpha).

``P(alpha) = sum_k alpha_k M_k`` and ``alpha * beta = P(alpha) beta``.  Powers
and inverses of P always go through the shared eigenframe; the dense matrix
from :func:`p_matrix` is the independent route used by checks.

Vectors may carry leading batch axes; the mode index is the last axis.
"""

from __future__ import annotations

import numpy as np

from .basis import EigenFrame, TripleProductSet, p_matrix_dense
from .errors import DomainError, PositivityError

#: minimum admissible eigenvalue of P(rho) when an inverse is taken
EPS_POS = 1e-10


def _check_len(alpha, size):
    a = np.asarray(alpha, dtype=float)
    if a.shape[-1] != size:
        raise DomainError(f"mode vector of length {a.shape[-1]}, basis has {size} modes")
    return a


def p_matrix(alpha, mats: TripleProductSet) -> np.ndarray:
    """Dense ``P(alpha)``."""
    a = _check_len(alpha, mats.size)
    if a.ndim != 1:
        raise DomainError("p_matrix expects a single mode vector")
    return p_matrix_dense(mats, a)


def galerkin_product(alpha, beta, mats: TripleProductSet) -> np.ndarray:
    a = _check_len(alpha, mats.size)
    b = _check_len(beta, mats.size)
    return np.einsum("...k,kij,...j->...i", a, mats.mats, b)


def unit(size: int) -> np.ndarray:
    """``e_1``, the unit of the Galerkin algebra."""
    e = np.zeros(size)
    e[0] = 1.0
    return e


def eigenvalues_of(alpha, frame: EigenFrame) -> np.ndarray:
    """Diagonal of ``V^T P(alpha) V`` in frame order."""
    return frame.eigenvalues(_check_len(alpha, frame.size))


def require_positive(eigs, time=None) -> None:
    """Raise :class:`PositivityError` unless every eigenvalue exceeds EPS_POS."""
    eigs = np.asarray(eigs)
    if eigs.size == 0:
        return
    per_row = eigs.min(axis=-1)
    bad = per_row <= EPS_POS
    if np.any(bad):
        if per_row.ndim == 0:
            raise PositivityError(per_row, time=time)
        cell = int(np.flatnonzero(bad.ravel())[0])
        raise PositivityError(per_row.ravel()[cell], cell=cell, time=time)


def p_power_apply(alpha, exponent: int, x, frame: EigenFrame) -> np.ndarray:
    """``V D(alpha)^exponent V^T x``."""
    d = eigenvalues_of(alpha, frame)
    if exponent < 0:
        require_positive(d)
    return frame.from_eigen(d**exponent * frame.to_eigen(_check_len(x, frame.size)))


def p_power(alpha, exponent: int, frame: EigenFrame) -> np.ndarray:
    """Dense ``P(alpha)^exponent`` through the frame."""
    d = eigenvalues_of(alpha, frame)
    if exponent < 0:
        require_positive(d)
    V = frame.V
    return (V * d**exponent) @ V.T


def galerkin_power(alpha, gamma: int, frame: EigenFrame) -> np.ndarray:
    """``P^(gamma-1)(alpha) alpha``, the Galerkin version of ``rho^gamma``."""
    if gamma < 1:
        raise DomainError(f"gamma must be >= 1, got {gamma}")
    a = _check_len(alpha, frame.size)
    if gamma == 1:
        return a.copy()
    return p_power_apply(a, gamma - 1, a, frame)


def galerkin_power_jacobian(alpha, gamma: int, frame: EigenFrame) -> np.ndarray:
    """``gamma P^(gamma-1)(alpha)``."""
    if gamma < 1:
        raise DomainError(f"gamma must be >= 1, got {gamma}")
    return gamma * p_power(alpha, gamma - 1, frame)


def inverse_apply(rho, z, frame: EigenFrame) -> np.ndarray:
    """``P^{-1}(rho) z``; fails loudly if P(rho) is not positive definite."""
    return p_power_apply(rho, -1, z, frame)


def inverse_apply_jacobian(rho, z, mats: TripleProductSet, frame: EigenFrame) -> np.ndarray:
    """``D_rho[P^{-1}(rho) z] = -P^{-1}(rho) P(P^{-1}(rho) z)``."""
    w = inverse_apply(rho, z, frame)
    return -p_power(rho, -1, frame) @ p_matrix(w, mats)


def homomorphism_check(alpha, beta, mats: TripleProductSet) -> float:
    """``||P(alpha * beta) - P(alpha) P(beta)||_inf``."""
    pa = p_matrix(alpha, mats)
    pb = p_matrix(beta, mats)
    lhs = p_matrix(pa @ np.asarray(beta, dtype=float), mats)
    return float(np.linalg.norm(lhs - pa @ pb, np.inf))
