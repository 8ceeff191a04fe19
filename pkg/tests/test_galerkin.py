import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import e1, positive_modes, space
from sgarz.errors import DomainError, PositivityError
from sgarz.galerkin import (
    eigenvalues_of,
    galerkin_power,
    galerkin_power_jacobian,
    galerkin_product,
    homomorphism_check,
    inverse_apply,
    inverse_apply_jacobian,
    p_matrix,
    p_power,
    p_power_apply,
    require_positive,
    unit,
)

FD_STEP = 1e-5


def central_fd(fun, x, h=FD_STEP):
    cols = []
    for k in range(x.size):
        dx = np.zeros_like(x)
        dx[k] = h
        cols.append((fun(x + dx) - fun(x - dx)) / (2 * h))
    return np.stack(cols, axis=1)


seeds = st.integers(0, 2**32 - 1)
levels = st.integers(0, 3)


def test_p_matrix_examples():
    mats = space(0).mats
    assert np.array_equal(p_matrix([0.7, 0.0], mats), 0.7 * np.eye(2))
    assert np.allclose(p_matrix([0.3, 0.2], mats), [[0.3, 0.2], [0.2, 0.3]], atol=1e-16)


@given(seeds, levels)
def test_p_matrix_linear_and_symmetric(seed, level):
    rng = np.random.default_rng(seed)
    mats = space(level).mats
    a, b = rng.standard_normal((2, mats.size))
    pa = p_matrix(a, mats)
    assert np.array_equal(pa, pa.T)
    assert np.allclose(p_matrix(a + b, mats), pa + p_matrix(b, mats), atol=1e-14)


def test_length_mismatch():
    with pytest.raises(DomainError):
        p_matrix(np.ones(3), space(0).mats)


def test_product_examples():
    mats = space(0).mats
    a, b, c, d = 0.3, 0.2, 0.5, -0.1
    assert np.allclose(galerkin_product([a, b], [c, d], mats), [a * c + b * d, a * d + b * c], atol=1e-16)
    beta = np.arange(8.0)
    assert np.allclose(galerkin_product(unit(8), beta, space(2).mats), beta, atol=0)


@given(seeds, levels)
def test_product_symmetric_mean_consistent_associative(seed, level):
    rng = np.random.default_rng(seed)
    mats = space(level).mats
    a, b, y = rng.standard_normal((3, mats.size))
    ab = galerkin_product(a, b, mats)
    assert np.abs(ab - galerkin_product(b, a, mats)).max() <= 1e-13
    assert ab[0] == pytest.approx(a @ b, abs=1e-13)
    lhs = galerkin_product(ab, y, mats)
    rhs = galerkin_product(a, galerkin_product(b, y, mats), mats)
    assert np.abs(lhs - rhs).max() <= 1e-11


def test_eigenvalue_examples():
    fr = space(0).frame
    assert np.allclose(eigenvalues_of([0.4, 0.0], fr), 0.4)
    assert sorted(eigenvalues_of([0.3, 0.2], fr)) == pytest.approx([0.1, 0.5], abs=1e-15)


@given(seeds, st.integers(0, 3))
def test_eigenvalues_match_dense_solver(seed, level):
    rng = np.random.default_rng(seed)
    sp = space(level)
    a = rng.standard_normal(sp.basis.size)
    fast = np.sort(eigenvalues_of(a, sp.frame))
    dense = np.linalg.eigvalsh(p_matrix(a, sp.mats))
    assert np.abs(fast - dense).max() <= 1e-12


def test_power_apply_rules(rng):
    sp = space(2)
    a = positive_modes(rng, sp.frame)
    x = rng.standard_normal(8)
    assert np.allclose(p_power_apply(a, 0, x, sp.frame), x, atol=1e-14)
    assert np.abs(p_power_apply(a, 1, x, sp.frame) - galerkin_product(a, x, sp.mats)).max() <= 1e-12
    back = p_power_apply(a, 1, p_power_apply(a, -1, x, sp.frame), sp.frame)
    assert np.abs(back - x).max() <= 1e-10
    assert np.allclose(p_power(a, 2, sp.frame), p_matrix(a, sp.mats) @ p_matrix(a, sp.mats), atol=1e-13)


def test_galerkin_power_examples(rng):
    sp = space(2)
    a = rng.uniform(0.1, 1.0, 8)
    assert np.array_equal(galerkin_power(a, 1, sp.frame), a)
    sq = galerkin_power(a, 2, sp.frame)
    assert np.abs(sq - galerkin_product(a, a, sp.mats)).max() <= 1e-12
    assert sq[0] == pytest.approx(np.sum(a**2), abs=1e-12)
    with pytest.raises(DomainError):
        galerkin_power(a, 0, sp.frame)


@given(seeds, levels, st.integers(1, 5))
def test_power_routes_agree_and_spectral_mapping(seed, level, gamma):
    rng = np.random.default_rng(seed)
    sp = space(level)
    a = rng.uniform(0.1, 1.0, sp.basis.size)
    rep = a.copy()
    for _ in range(gamma - 1):
        rep = galerkin_product(a, rep, sp.mats)
    fast = galerkin_power(a, gamma, sp.frame)
    assert np.abs(fast - rep).max() <= 1e-11
    d = eigenvalues_of(a, sp.frame)
    assert np.abs(np.sort(eigenvalues_of(fast, sp.frame)) - np.sort(d**gamma)).max() <= 1e-9


def test_power_jacobian_examples():
    sp = space(1)
    assert np.allclose(galerkin_power_jacobian(np.array([0.4, 0.1, 0, 0.2]), 1, sp.frame), np.eye(4), atol=1e-15)
    c = 0.6
    assert np.allclose(galerkin_power_jacobian(e1(4, c), 3, sp.frame), 3 * c**2 * np.eye(4), atol=1e-14)


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(0, 2), st.integers(1, 4))
def test_power_jacobian_vs_finite_differences(seed, level, gamma):
    rng = np.random.default_rng(seed)
    sp = space(level)
    a = rng.uniform(0.1, 1.0, sp.basis.size)
    fd = central_fd(lambda x: galerkin_power(x, gamma, sp.frame), a)
    assert np.abs(galerkin_power_jacobian(a, gamma, sp.frame) - fd).max() <= 1e-6


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(0, 2))
def test_inverse_jacobian_vs_finite_differences(seed, level):
    rng = np.random.default_rng(seed)
    sp = space(level)
    # margin keeps the FD truncation error (~ h^2 / lambda_min^4) well below the tolerance
    rho = positive_modes(rng, sp.frame, 0.4, 0.8, margin=0.2)
    z = rng.standard_normal(sp.basis.size)
    fd = central_fd(lambda r: inverse_apply(r, z, sp.frame), rho)
    assert np.abs(inverse_apply_jacobian(rho, z, sp.mats, sp.frame) - fd).max() <= 1e-6


def test_inverse_requires_positivity():
    fr = space(0).frame
    with pytest.raises(PositivityError):
        inverse_apply([0.3, 0.3], [1.0, 0.0], fr)
    with pytest.raises(PositivityError) as exc:
        require_positive(np.array([[1.0, 2.0], [0.5, -1e-3]]), time=0.25)
    assert exc.value.cell == 1


def test_homomorphism(rng):
    sp = space(3)
    a, b = rng.standard_normal((2, 16))
    assert homomorphism_check(a, unit(16), sp.mats) <= 1e-14
    assert homomorphism_check(a, b, sp.mats) <= 1e-11
    pa, pb = p_matrix(a, sp.mats), p_matrix(b, sp.mats)
    assert np.abs(pa @ pb - pb @ pa).max() <= 1e-11
