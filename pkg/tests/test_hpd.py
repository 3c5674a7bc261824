"""Hermitian/HPD matrix algebra against independent oracles.

The 2x2 eigenvalue oracle solves the characteristic polynomial directly;
reconstruction and round-trip identities are checked against numpy's LAPACK
eigensolver where an external cross-check adds value.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from steerlab.exceptions import InvalidInput, NotPSD, SingularMatrix
from steerlab.hpd import (hermitian_eig, hermitize, invert_hpd, matrix_power_half,
                          matrix_sqrt_of_product)


def random_hermitian(rng, n):
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return g + g.conj().T


def random_hpd(rng, n, ridge=0.1):
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return g @ g.conj().T + ridge * np.eye(n)


def char_poly_eigs_2x2(a):
    """Roots of det(A - lambda I) for a 2x2 Hermitian matrix, descending."""
    tr = (a[0, 0] + a[1, 1]).real
    det = (a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]).real
    disc = np.sqrt(max(tr * tr - 4.0 * det, 0.0))
    return np.array([(tr + disc) / 2.0, (tr - disc) / 2.0])


class TestHermitize:
    def test_symmetrizes_exactly(self):
        rng = np.random.default_rng(0)
        a = random_hermitian(rng, 5) + 1e-14 * rng.normal(size=(5, 5))
        h = hermitize(a)
        assert np.array_equal(h, h.conj().T)

    def test_rejects_asymmetric(self):
        with pytest.raises(InvalidInput):
            hermitize(np.array([[1.0, 2.0], [3.0, 1.0]]))

    def test_rejects_non_finite(self):
        with pytest.raises(InvalidInput):
            hermitize(np.array([[np.nan, 0.0], [0.0, 1.0]]))

    def test_rejects_non_square(self):
        with pytest.raises(InvalidInput):
            hermitize(np.zeros((2, 3)))


class TestHermitianEig:
    def test_identity(self):
        w, v = hermitian_eig(np.eye(3))
        assert np.allclose(w, [1.0, 1.0, 1.0])
        assert np.allclose(v @ v.conj().T, np.eye(3), atol=1e-12)

    def test_real_diagonal(self):
        w, v = hermitian_eig(np.diag([4.0, 1.0]))
        assert np.allclose(w, [4.0, 1.0])
        # eigenvectors are e1, e2 up to phase
        assert abs(abs(v[0, 0]) - 1.0) < 1e-12
        assert abs(abs(v[1, 1]) - 1.0) < 1e-12

    def test_hand_solved_2x2(self):
        # det([[2-l, i], [-i, 2-l]]) = (2-l)^2 - 1 -> l in {3, 1}
        w, _ = hermitian_eig(np.array([[2.0, 1j], [-1j, 2.0]]))
        assert np.allclose(w, [3.0, 1.0], atol=1e-12)

    def test_2x2_characteristic_polynomial_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            a = random_hermitian(rng, 2)
            w, _ = hermitian_eig(a)
            expected = char_poly_eigs_2x2(a)
            assert np.allclose(w, expected, atol=1e-12 * max(1.0, np.abs(expected).max()))

    @pytest.mark.parametrize("n", [1, 2, 3, 5, 9, 16])
    def test_reconstruction_and_unitarity(self, n):
        rng = np.random.default_rng(n)
        for _ in range(20):
            a = random_hermitian(rng, n)
            w, v = hermitian_eig(a)
            assert np.all(np.diff(w) <= 1e-12)  # descending
            assert np.linalg.norm((v * w) @ v.conj().T - a) <= 1e-10 * max(np.linalg.norm(a), 1e-30)
            assert np.linalg.norm(v.conj().T @ v - np.eye(n)) < 1e-10

    def test_matches_lapack(self):
        rng = np.random.default_rng(3)
        for n in (3, 9, 16):
            a = random_hermitian(rng, n)
            w, _ = hermitian_eig(a)
            assert np.allclose(w, np.linalg.eigvalsh(a)[::-1], atol=1e-10 * np.abs(w).max())

    def test_deterministic(self):
        rng = np.random.default_rng(11)
        a = random_hermitian(rng, 9)
        w1, v1 = hermitian_eig(a)
        w2, v2 = hermitian_eig(a)
        assert np.array_equal(w1, w2) and np.array_equal(v1, v2)

    def test_rejects_non_finite(self):
        a = np.eye(3, dtype=complex)
        a[0, 0] = np.inf
        with pytest.raises(InvalidInput):
            hermitian_eig(a)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 6), st.integers(0, 2**31 - 1))
    def test_property_reconstruction(self, n, seed):
        a = random_hermitian(np.random.default_rng(seed), n)
        w, v = hermitian_eig(a)
        assert np.all(np.isreal(w))
        assert np.linalg.norm((v * w) @ v.conj().T - a) <= 1e-10 * max(np.linalg.norm(a), 1e-30)


class TestMatrixPowerHalf:
    def test_diagonal_sqrt(self):
        assert np.allclose(matrix_power_half(np.diag([4.0, 9.0]), 0.5), np.diag([2.0, 3.0]))

    def test_diagonal_inv_sqrt(self):
        assert np.allclose(matrix_power_half(np.diag([4.0, 9.0]), -0.5),
                           np.diag([0.5, 1.0 / 3.0]))

    @pytest.mark.parametrize("sign", [0.5, -0.5])
    def test_identity(self, sign):
        assert np.allclose(matrix_power_half(np.eye(4), sign), np.eye(4), atol=1e-12)

    def test_roundtrips(self):
        rng = np.random.default_rng(23)
        for n in (2, 5, 9):
            a = random_hpd(rng, n)
            s = matrix_power_half(a, 0.5)
            si = matrix_power_half(a, -0.5)
            assert np.linalg.norm(s @ s - a) < 1e-9 * np.linalg.norm(a)
            assert np.linalg.norm(si @ s - np.eye(n)) < 1e-9
            assert np.array_equal(s, s.conj().T)  # exact Hermitian symmetry
            assert np.array_equal(si, si.conj().T)

    def test_commuting_pair_agrees_with_product_root(self):
        rng = np.random.default_rng(31)
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        q, _ = np.linalg.qr(g)
        s = (q * rng.uniform(0.5, 3.0, 4)) @ q.conj().T
        a = (q * rng.uniform(0.5, 3.0, 4)) @ q.conj().T
        lhs = matrix_power_half(hermitize(s, 1e-9), 0.5) @ matrix_power_half(
            hermitize(a, 1e-9), -0.5)
        rhs = matrix_sqrt_of_product(hermitize(s, 1e-9), invert_hpd(hermitize(a, 1e-9)))
        assert np.linalg.norm(lhs - rhs) < 1e-9 * np.linalg.norm(lhs)

    def test_not_psd(self):
        with pytest.raises(NotPSD):
            matrix_power_half(np.diag([1.0, -1.0]), 0.5)

    def test_singular_inverse_root(self):
        with pytest.raises(SingularMatrix):
            matrix_power_half(np.diag([1.0, 0.0]), -0.5)

    def test_bad_sign(self):
        with pytest.raises(InvalidInput):
            matrix_power_half(np.eye(2), 1.0)


class TestInvertHpd:
    def test_identity(self):
        assert np.allclose(invert_hpd(np.eye(5)), np.eye(5), atol=1e-14)

    def test_diagonal(self):
        assert np.allclose(invert_hpd(np.diag([2.0, 5.0])), np.diag([0.5, 0.2]))

    def test_rank_one_plus_ridge_spectrum(self):
        # d d^H + eps I has inverse eigenvalues {1/(1+eps), 1/eps}
        rng = np.random.default_rng(5)
        d = rng.normal(size=4) + 1j * rng.normal(size=4)
        d /= np.linalg.norm(d)
        eps = 1e-7
        inv = invert_hpd(np.outer(d, d.conj()) + eps * np.eye(4))
        w, _ = hermitian_eig(inv)
        assert np.allclose(w[:3], 1.0 / eps, rtol=1e-9)  # multiplicity M-1
        assert np.allclose(w[3], 1.0 / (1.0 + eps), rtol=1e-9)

    def test_product_is_identity(self):
        rng = np.random.default_rng(17)
        a = random_hpd(rng, 9)
        assert np.linalg.norm(a @ invert_hpd(a) - np.eye(9)) < 1e-9

    def test_singular(self):
        with pytest.raises(SingularMatrix):
            invert_hpd(np.diag([1.0, 1e-16]))


class TestMatrixSqrtOfProduct:
    def test_equal_inputs_give_identity(self):
        rng = np.random.default_rng(41)
        a = random_hpd(rng, 5)
        b = matrix_sqrt_of_product(a, invert_hpd(a))
        assert np.linalg.norm(b - np.eye(5)) < 1e-9

    def test_commuting_diagonal(self):
        b = matrix_sqrt_of_product(np.diag([4.0, 1.0]), invert_hpd(np.diag([1.0, 4.0])))
        assert np.allclose(b, np.diag([2.0, 0.5]), atol=1e-12)

    def test_residual_on_random_pairs(self):
        rng = np.random.default_rng(43)
        for _ in range(10):
            s = random_hpd(rng, 3)
            a_inv = invert_hpd(random_hpd(rng, 3))
            b = matrix_sqrt_of_product(s, a_inv)
            prod = s @ a_inv
            assert np.linalg.norm(b @ b - prod) < 1e-8 * np.linalg.norm(prod)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInput):
            matrix_sqrt_of_product(np.eye(2), np.eye(3))
