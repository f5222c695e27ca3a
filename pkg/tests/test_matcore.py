import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from matfield import matcore

from conftest import random_lorentzian


def triple_loop(a, b):
    n, m, p = a.shape[0], a.shape[1], b.shape[1]
    out = np.zeros((n, p))
    for i in range(n):
        for j in range(p):
            for k in range(m):
                out[i, j] += a[i, k] * b[k, j]
    return out


def leibniz_det(a):
    n = a.shape[0]
    total = 0.0
    for perm in itertools.permutations(range(n)):
        inversions = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term = (-1.0) ** inversions
        for i in range(n):
            term *= a[i, perm[i]]
        total += term
    return total


finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def test_mat_mul_matches_triple_loop(rng):
    for n in (1, 2, 3, 4, 5):
        a, b = rng.normal(size=(n, n)), rng.normal(size=(n, n))
        assert np.allclose(matcore.mat_mul(a, b), triple_loop(a, b), rtol=1e-14, atol=1e-14)


def test_mat_vec_and_transpose(rng):
    a, v = rng.normal(size=(4, 4)), rng.normal(size=4)
    assert np.allclose(matcore.mat_vec(a, v), triple_loop(a, v[:, None])[:, 0])
    assert np.array_equal(matcore.transpose(a), a.T)


def test_shape_errors():
    with pytest.raises(matcore.DimensionError):
        matcore.mat_mul(np.eye(2), np.eye(3))
    with pytest.raises(matcore.DimensionError):
        matcore.as_square(np.ones((2, 3)))
    with pytest.raises(ValueError, match="non-finite"):
        matcore.det(np.array([[1.0, np.nan], [0.0, 1.0]]))


def test_det_matches_leibniz(rng):
    for n in (1, 2, 3, 4, 5):
        a = rng.normal(size=(n, n))
        assert matcore.det(a) == pytest.approx(leibniz_det(a), rel=1e-12, abs=1e-13)


def test_det_of_identity_and_permutation():
    assert matcore.det(np.eye(4)) == 1.0
    p = np.eye(4)[[1, 0, 2, 3]]
    assert matcore.det(p) == -1.0


def test_inverse_multiplies_back(rng):
    for _ in range(20):
        g = random_lorentzian(rng)
        assert np.allclose(matcore.mat_mul(g, matcore.mat_inverse(g)), np.eye(4), atol=1e-13)


def test_linear_solve_vector_and_matrix(rng):
    a = rng.normal(size=(4, 4)) + 4 * np.eye(4)
    x = rng.normal(size=4)
    assert np.allclose(matcore.linear_solve(a, a @ x), x, atol=1e-13)
    X = rng.normal(size=(4, 3))
    assert np.allclose(matcore.linear_solve(a, a @ X), X, atol=1e-13)


def test_singular_matrix_carries_det():
    a = np.array([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(matcore.SingularMatrixError) as exc:
        matcore.mat_inverse(a)
    assert abs(exc.value.det) < 1e-12


def test_singularity_is_scale_free():
    # a badly scaled but regular metric must not be flagged
    g = np.diag([-1e14, -1e14 * 0.5, -1.0, 1e-8])
    inv = matcore.mat_inverse(g)
    assert np.allclose(inv @ g, np.eye(4))


def test_trace_cyclic(rng):
    a, b = rng.normal(size=(4, 4)), rng.normal(size=(4, 4))
    assert matcore.trace(a @ b) == pytest.approx(matcore.trace(b @ a), rel=1e-13)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (3, 3), elements=finite))
def test_det_product_rule(a):
    b = np.array([[2.0, 1.0, 0.0], [0.0, 1.0, 3.0], [1.0, 0.0, 1.0]])
    lhs = matcore.det(a @ b)
    rhs = matcore.det(a) * matcore.det(b)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9 * (1 + np.max(np.abs(a))) ** 3)


def test_charpoly_matches_numpy(rng):
    for n in (2, 3, 4):
        m = rng.normal(size=(n, n))
        assert np.allclose(matcore.charpoly(m), np.poly(m), atol=1e-11)


def test_polynomial_roots(rng):
    roots = np.array([3.0, -1.0, 0.5, 2.0])
    found = np.sort_complex(matcore.polynomial_roots(np.poly(roots)))
    assert np.allclose(found.real, np.sort(roots), atol=1e-10)
    assert np.max(np.abs(found.imag)) < 1e-10


def test_generalized_eigenvalues_match_numpy(rng):
    for _ in range(200):
        g = random_lorentzian(rng)
        s = rng.normal(size=(4, 4))
        R = s + s.T
        try:
            eig = matcore.generalized_eigenvalues(R, g)
        except matcore.EigenError:
            ref = np.linalg.eigvals(np.linalg.solve(g, R))
            assert np.max(np.abs(ref.imag)) > 1e-8
            continue
        ref = np.sort(np.linalg.eigvals(np.linalg.solve(g, R)).real)[::-1]
        assert np.allclose(eig.values, ref, atol=1e-8 * (1 + np.max(np.abs(ref))))
        assert eig.residual < 1e-8


def test_eigenvalues_of_proportional_pencil(rng):
    g = random_lorentzian(rng)
    eig = matcore.generalized_eigenvalues(0.37 * g, g)
    assert len(eig) == 4
    assert np.allclose(eig.values, 0.37, atol=1e-12)


def test_triple_plus_simple_split(rng):
    g = random_lorentzian(rng)
    u = np.array([0.1, -0.2, 0.05, 1.0])
    u = u / np.sqrt(u @ g @ u)
    gu = g @ u
    R = (2.5 - 0.4) * np.outer(gu, gu) + 0.4 * g
    eig = matcore.generalized_eigenvalues(R, g)
    assert sorted(eig.values) == pytest.approx([0.4, 0.4, 0.4, 2.5], abs=1e-10)


def test_complex_spectrum_raises():
    R = np.array([[0.0, -1.0], [1.0, 0.0]])
    with pytest.raises(matcore.EigenError):
        matcore.generalized_eigenvalues(R, np.eye(2))
