"""Haar-wavelet chaos basis on xi ~ U[0, 1).

Every basis function is piecewise constant on the 2^(J+1) dyadic cells of
[0, 1), so all inner products below are exact finite sums over those cells.
The basis carries the triple-product matrices M_k = <phi_k, phi_i phi_j> and
the orthonormal frame V that diagonalizes all of them at once.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

from .errors import AssumptionViolation, CacheError, DomainError, SizeLimitError

DEFAULT_MAX_SIZE = 1024

#: tolerances for the assumption report (A1, A2, A3)
A1_TOL = 1e-12
A2_TOL = 1e-10
A3_TOL = 1e-11

CACHE_MAGIC = b"SGARZ-BASIS"
CACHE_VERSION = 1
_HEADER = struct.Struct("<III")


@dataclass(frozen=True, eq=False)
class HaarBasis:
    """Haar basis of level ``J`` with ``K+1 = 2^(J+1)`` functions.

    ``table[k, c]`` is the value of phi_k on the dyadic cell
    ``[c / n_cells, (c + 1) / n_cells)``.
    """

    level: int
    table: np.ndarray

    @property
    def size(self) -> int:
        return self.table.shape[0]

    @property
    def n_cells(self) -> int:
        return self.table.shape[1]

    @property
    def cell_width(self) -> float:
        return 1.0 / self.n_cells

    def gram(self) -> np.ndarray:
        """Exact matrix of inner products <phi_i, phi_j>."""
        return (self.table * self.cell_width) @ self.table.T


@dataclass(frozen=True, eq=False)
class TripleProductSet:
    """Stack ``mats[k] = M_k`` of shape ``(K+1, K+1, K+1)``."""

    level: int
    mats: np.ndarray

    @property
    def size(self) -> int:
        return self.mats.shape[0]

    def __getitem__(self, k):
        return self.mats[k]


@dataclass(frozen=True, eq=False)
class EigenFrame:
    """Shared orthonormal eigenvectors ``V`` of every M_k.

    ``spectra[i, k]`` is the i-th diagonal entry of ``V^T M_k V``.  Because
    ``P`` is linear, the eigenvalues of ``P(alpha)`` in frame order are simply
    ``spectra @ alpha``.

    All helpers act on the last axis, so batches of shape ``(..., K+1)`` work.
    """

    V: np.ndarray
    spectra: np.ndarray

    @property
    def size(self) -> int:
        return self.V.shape[0]

    def eigenvalues(self, alpha):
        return np.asarray(alpha) @ self.spectra.T

    def to_eigen(self, x):
        """Coordinates ``V^T x``."""
        return np.asarray(x) @ self.V

    def from_eigen(self, y):
        """Inverse of :meth:`to_eigen`, ``V y``."""
        return np.asarray(y) @ self.V.T

    def apply(self, alpha, x):
        """``P(alpha) x`` evaluated through the frame, O(K^2)."""
        return self.from_eigen(self.eigenvalues(alpha) * self.to_eigen(x))


@dataclass
class AssumptionReport:
    a1_residual: float
    a1_worst_pair: tuple[int, int] | None
    a2_residual: float
    a2_worst_index: int | None
    orthogonality_residual: float
    a3_residual: float
    a3_pairs: int
    a1_tol: float = A1_TOL
    a2_tol: float = A2_TOL
    a3_tol: float = A3_TOL

    @property
    def a1_pass(self) -> bool:
        return self.a1_residual <= self.a1_tol

    @property
    def a2_pass(self) -> bool:
        return self.a2_residual <= self.a2_tol and self.orthogonality_residual <= self.a2_tol

    @property
    def a3_pass(self) -> bool:
        return self.a3_residual <= self.a3_tol

    @property
    def passed(self) -> bool:
        return self.a1_pass and self.a2_pass and self.a3_pass

    def failures(self) -> list[str]:
        out = []
        if not self.a1_pass:
            out.append(f"A1 (commuting M_k), worst pair {self.a1_worst_pair}")
        if not self.a2_pass:
            out.append(f"A2 (shared eigenvectors), worst index {self.a2_worst_index}")
        if not self.a3_pass:
            out.append("A3 (commuting P matrices)")
        return out


class HaarSpace(NamedTuple):
    basis: HaarBasis
    mats: TripleProductSet
    frame: EigenFrame


def build_basis(level: int, max_size: int = DEFAULT_MAX_SIZE) -> HaarBasis:
    """Haar basis in lexicographic order 1, psi, psi_{1,0}, psi_{1,1}, ..."""
    if level < 0:
        raise DomainError(f"level must be non-negative, got {level}")
    n = 2 ** (level + 1)
    if n > max_size:
        raise SizeLimitError(f"basis size 2^({level}+1) = {n} exceeds maximum {max_size}")
    table = np.zeros((n, n))
    table[0] = 1.0
    row = 1
    for j in range(level + 1):
        width = n >> j  # fine cells covered by the support of psi_{j,k}
        half = width // 2
        amp = 2.0 ** (j / 2)
        for k in range(2**j):
            start = k * width
            table[row, start:start + half] = amp
            table[row, start + half:start + width] = -amp
            row += 1
    table.flags.writeable = False
    return HaarBasis(level=level, table=table)


def triple_products(basis: HaarBasis) -> TripleProductSet:
    t = basis.table
    mats = np.einsum("kc,ic,jc->kij", t, t, t * basis.cell_width, optimize=True)
    # M_k is symmetric in (i, j) by construction; enforce bitwise symmetry
    mats = 0.5 * (mats + mats.transpose(0, 2, 1))
    mats.flags.writeable = False
    return TripleProductSet(level=basis.level, mats=mats)


def probe_vector(size: int) -> np.ndarray:
    """Strictly decreasing probe coefficients 1/(k+2) used to build V."""
    return 1.0 / (np.arange(size) + 2.0)


def p_matrix_dense(mats: TripleProductSet, alpha) -> np.ndarray:
    return np.tensordot(np.asarray(alpha, dtype=float), mats.mats, axes=1)


def _frame_spectra(mats: np.ndarray, V: np.ndarray) -> np.ndarray:
    return np.einsum("ai,kab,bi->ik", V, mats, V, optimize=True)


def _offdiag_residuals(mats: np.ndarray, V: np.ndarray) -> np.ndarray:
    rotated = np.einsum("ai,kab,bj->kij", V, mats, V, optimize=True)
    idx = np.arange(V.shape[0])
    rotated[:, idx, idx] = 0.0
    return np.abs(rotated).max(axis=(1, 2))


def _commutator_norms(mats: np.ndarray, k: int) -> np.ndarray:
    """Infinity norms of [M_k, M_l] for all l."""
    left = np.matmul(mats[k], mats)
    comm = left - left.transpose(0, 2, 1)  # M_l M_k = (M_k M_l)^T for symmetric M
    return np.abs(comm).sum(axis=2).max(axis=1)


def eigen_frame(mats: TripleProductSet, tol: float = A2_TOL) -> EigenFrame:
    """Orthonormal frame diagonalizing every M_k.

    V is obtained from a symmetric eigendecomposition of P(probe) with
    simple eigenvalues; columns are ordered by descending probe eigenvalue and
    signed so that their first nonzero entry is positive.
    """
    m = mats.mats
    n = m.shape[0]
    probe = np.tensordot(probe_vector(n), m, axes=1)
    w, V = np.linalg.eigh(probe)
    order = np.argsort(-w, kind="stable")
    V = V[:, order]
    for col in range(n):
        v = V[:, col]
        lead = np.flatnonzero(np.abs(v) > 1e-12 * np.abs(v).max())[0]
        if v[lead] < 0:
            V[:, col] = -v
    resid = _offdiag_residuals(m, V)
    bad = int(np.argmax(resid))
    if resid[bad] > tol:
        norms = _commutator_norms(m, bad)
        partner = int(np.argmax(norms))
        raise AssumptionViolation(
            f"V^T M_{bad} V not diagonal (off-diagonal {resid[bad]:.3e}); "
            f"worst commutator with M_{partner}: {norms[partner]:.3e}",
            pair=(bad, partner),
            residual=float(resid[bad]),
        )
    V.flags.writeable = False
    spectra = _frame_spectra(m, V)
    spectra.flags.writeable = False
    return EigenFrame(V=V, spectra=spectra)


def build_space(level: int, max_size: int = DEFAULT_MAX_SIZE) -> HaarSpace:
    basis = build_basis(level, max_size)
    mats = triple_products(basis)
    return HaarSpace(basis, mats, eigen_frame(mats))


def check_assumptions(
    mats: TripleProductSet,
    frame: EigenFrame,
    n_pairs: int = 50,
    seed: int = 0,
    a1_tol: float = A1_TOL,
    a2_tol: float = A2_TOL,
    a3_tol: float = A3_TOL,
) -> AssumptionReport:
    """Numerical verification of (A1)-(A3); failures are reported, not raised."""
    m = mats.mats
    n = m.shape[0]

    a1, worst_pair = 0.0, None
    for k in range(n):
        norms = _commutator_norms(m, k)
        l = int(np.argmax(norms))
        if worst_pair is None or norms[l] > a1:
            a1, worst_pair = float(norms[l]), (k, l)

    resid = _offdiag_residuals(m, frame.V)
    a2_idx = int(np.argmax(resid))
    ortho = float(np.abs(frame.V.T @ frame.V - np.eye(n)).max())

    rng = np.random.default_rng(seed)
    a3 = 0.0
    for _ in range(n_pairs):
        pa = np.tensordot(rng.standard_normal(n), m, axes=1)
        pb = np.tensordot(rng.standard_normal(n), m, axes=1)
        a3 = max(a3, commutator_norm(pa, pb))

    return AssumptionReport(
        a1_residual=a1,
        a1_worst_pair=worst_pair,
        a2_residual=float(resid[a2_idx]),
        a2_worst_index=a2_idx,
        orthogonality_residual=ortho,
        a3_residual=a3,
        a3_pairs=n_pairs,
        a1_tol=a1_tol,
        a2_tol=a2_tol,
        a3_tol=a3_tol,
    )


def commutator_norm(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a @ b - b @ a, np.inf))


def evaluate_expansion(basis: HaarBasis, modes, xi):
    """Evaluate ``sum_k modes_k phi_k(xi)``; ``xi`` may be an array."""
    x = np.asarray(xi, dtype=float)
    if np.any((x < 0.0) | (x >= 1.0)) or np.any(np.isnan(x)):
        raise DomainError("xi must lie in [0, 1)")
    modes = np.asarray(modes, dtype=float)
    if modes.shape[-1] != basis.size:
        raise DomainError(f"mode vector of length {modes.shape[-1]}, basis has {basis.size} modes")
    idx = np.floor(x * basis.n_cells).astype(np.intp)
    vals = modes @ basis.table[:, idx.ravel()]
    return vals.reshape(x.shape) if x.ndim else float(vals[0])


def cell_integrals(basis: HaarBasis, f: Callable, points: int = 5) -> np.ndarray:
    """Integral of ``f`` over each dyadic cell by Gauss-Legendre quadrature."""
    nodes, weights = np.polynomial.legendre.leggauss(points)
    h = basis.cell_width
    left = np.arange(basis.n_cells) * h
    x = left[:, None] + 0.5 * h * (nodes + 1.0)[None, :]
    fx = np.broadcast_to(np.asarray(f(x), dtype=float), x.shape)
    return 0.5 * h * (fx @ weights)


def project_function(basis: HaarBasis, f: Callable, quadrature_points_per_cell: int = 5) -> np.ndarray:
    """Modes ``<f, phi_k>`` with composite Gauss-Legendre quadrature.

    ``f`` is called once with a 2-d array of abscissae and must be vectorized.
    """
    return basis.table @ cell_integrals(basis, f, quadrature_points_per_cell)


# -- binary cache --------------------------------------------------------------


def save_cache(path, mats: TripleProductSet, frame: EigenFrame) -> None:
    n = mats.size
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(_HEADER.pack(CACHE_VERSION, mats.level, n))
        fh.write(np.ascontiguousarray(mats.mats, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(frame.V, dtype="<f8").tobytes())


def load_cache(path, level: int | None = None) -> tuple[TripleProductSet, EigenFrame]:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise CacheError(f"cannot read basis cache {path}: {exc}") from exc
    head = len(CACHE_MAGIC) + _HEADER.size
    if len(raw) < head or raw[: len(CACHE_MAGIC)] != CACHE_MAGIC:
        raise CacheError(f"{path}: not a basis cache (bad magic)")
    version, cached_level, n = _HEADER.unpack_from(raw, len(CACHE_MAGIC))
    if version != CACHE_VERSION:
        raise CacheError(f"{path}: unsupported cache version {version}")
    if n != 2 ** (cached_level + 1):
        raise CacheError(f"{path}: inconsistent header (J={cached_level}, K+1={n})")
    if level is not None and cached_level != level:
        raise CacheError(f"{path}: cache holds level {cached_level}, requested {level}")
    expected = head + 8 * (n**3 + n**2)
    if len(raw) != expected:
        raise CacheError(f"{path}: payload length {len(raw) - head}, expected {expected - head}")
    payload = np.frombuffer(raw, dtype="<f8", offset=head).astype(float)
    if not np.all(np.isfinite(payload)):
        raise CacheError(f"{path}: non-finite payload")
    mats = payload[: n**3].reshape(n, n, n)
    V = payload[n**3:].reshape(n, n)
    mats.flags.writeable = False
    V.flags.writeable = False
    spectra = _frame_spectra(mats, V)
    spectra.flags.writeable = False
    return TripleProductSet(level=cached_level, mats=mats), EigenFrame(V=V, spectra=spectra)


def load_space(level: int, cache_path=None, max_size: int = DEFAULT_MAX_SIZE) -> HaarSpace:
    """Build a space, reading/writing the binary cache when a path is given."""
    basis = build_basis(level, max_size)
    if cache_path is not None and Path(cache_path).exists():
        mats, frame = load_cache(cache_path, level)
        return HaarSpace(basis, mats, frame)
    mats = triple_products(basis)
    frame = eigen_frame(mats)
    if cache_path is not None:
        save_cache(cache_path, mats, frame)
    return HaarSpace(basis, mats, frame)
