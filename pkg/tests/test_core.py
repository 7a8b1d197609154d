import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spdr.core import (eig_sym, is_spd, mat_exp, mat_invsqrt, mat_log, mat_pow, mat_sqrt,
                       random_spd, random_symmetric, symmetrize, validate_spd)
from spdr.exceptions import (AsymmetryError, MatrixOverflowError, NotPositiveDefiniteError,
                             NotSquareError)


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


class TestValidate:
    def test_identity(self):
        X, lam = validate_spd(np.eye(3), tol=1e-12, return_min_eig=True)
        assert lam == pytest.approx(1.0)
        np.testing.assert_array_equal(X, np.eye(3))

    def test_negative_eigenvalue(self):
        with pytest.raises(NotPositiveDefiniteError):
            validate_spd(np.diag([1.0, -0.5]))

    def test_counterexample_matrix_is_valid(self):
        assert is_spd(np.array([[72.0, 1.0], [1.0, 88.0]]))

    def test_not_square(self):
        with pytest.raises(NotSquareError):
            validate_spd(np.ones((2, 3)))

    def test_asymmetry_rejected_above_tolerance(self):
        M = np.eye(2)
        M[0, 1] = 1e-3
        with pytest.raises(AsymmetryError):
            validate_spd(M)

    def test_small_asymmetry_is_symmetrized(self):
        M = np.array([[2.0, 1.0 + 1e-12], [1.0, 2.0]])
        X = validate_spd(M)
        assert X[0, 1] == X[1, 0]

    def test_idempotent(self, spd_factory):
        X = validate_spd(spd_factory(6))
        np.testing.assert_array_equal(validate_spd(X), X)

    def test_scale_relative_tolerance(self):
        # tiny but well conditioned matrices are accepted
        assert is_spd(1e-20 * np.eye(4))
        assert not is_spd(np.diag([1.0, 1e-13]))

    def test_batched(self, spd_factory):
        X, lam = validate_spd(spd_factory(4, size=7), return_min_eig=True)
        assert X.shape == (7, 4, 4) and lam.shape == (7,)


class TestEig:
    def test_descending_and_reconstruction(self, rng):
        S = random_symmetric(6, rng)
        w, U = eig_sym(S)
        assert np.all(np.diff(w) <= 0)
        np.testing.assert_allclose(U.T @ U, np.eye(6), atol=1e-10)
        np.testing.assert_allclose(U * w @ U.T, S, atol=1e-10 * np.linalg.norm(S))

    def test_sign_convention(self, rng):
        _, U = eig_sym(random_symmetric(5, rng))
        for col in U.T:
            first = col[np.flatnonzero(np.abs(col) > 1e-12)[0]]
            assert first > 0


class TestMatrixFunctions:
    def test_log_identity(self):
        np.testing.assert_array_equal(mat_log(np.eye(3)), np.zeros((3, 3)))

    def test_log_diagonal(self):
        np.testing.assert_allclose(mat_log(np.diag([np.e, np.e**2])), np.diag([1.0, 2.0]),
                                   atol=1e-14)

    def test_exp_zero(self):
        np.testing.assert_allclose(mat_exp(np.zeros((3, 3))), np.eye(3))

    def test_exp_diagonal(self):
        np.testing.assert_allclose(mat_exp(np.diag([1.0, -1.0])), np.diag([np.e, 1 / np.e]))

    def test_exp_overflow(self):
        with pytest.raises(MatrixOverflowError):
            mat_exp(np.diag([701.0, 0.0]))

    def test_log_rejects_indefinite(self):
        with pytest.raises(NotPositiveDefiniteError):
            mat_log(np.diag([1.0, -1.0]))

    def test_round_trip(self, spd_factory):
        for X in spd_factory(6, size=20, cond=1e4):
            assert rel(mat_exp(mat_log(X)), X) < 1e-9

    def test_trace_det_identity(self, rng):
        for _ in range(20):
            S = random_symmetric(5, rng)
            d = np.linalg.det(mat_exp(S))
            assert d == pytest.approx(np.exp(np.trace(S)), rel=1e-9)

    def test_pow_zero_is_identity(self, spd_factory):
        np.testing.assert_array_equal(mat_pow(spd_factory(4), 0), np.eye(4))

    def test_pow_diagonal(self):
        np.testing.assert_allclose(mat_pow(np.diag([4.0, 9.0]), 0.5), np.diag([2.0, 3.0]))

    def test_sqrt_squares_back(self, spd_factory):
        X = spd_factory(7, cond=1e3)
        R = mat_sqrt(X)
        assert rel(R @ R, X) < 1e-9
        assert rel(mat_invsqrt(X) @ X @ mat_invsqrt(X), np.eye(7)) < 1e-9

    def test_pow_inverse(self, spd_factory):
        X = spd_factory(5)
        assert rel(mat_pow(X, -1), np.linalg.inv(X)) < 1e-9

    @settings(max_examples=40, deadline=None)
    @given(a=st.floats(-2, 2), b=st.floats(-2, 2), seed=st.integers(0, 2**32 - 1))
    def test_powers_commute(self, a, b, seed):
        X = random_spd(4, np.random.default_rng(seed), cond=100)
        assert rel(mat_pow(X, a) @ mat_pow(X, b), mat_pow(X, a + b)) < 1e-9

    def test_trace_log_is_logdet(self, spd_factory):
        for X in spd_factory(6, size=10, cond=1e6):
            sign, ld = np.linalg.slogdet(X)
            assert sign > 0
            assert np.trace(mat_log(X)) == pytest.approx(ld, rel=1e-9, abs=1e-12)

    def test_results_symmetric(self, spd_factory):
        X = spd_factory(5)
        for Y in (mat_log(X), mat_sqrt(X), mat_pow(X, 0.3)):
            np.testing.assert_array_equal(Y, Y.T)


def test_random_spd_condition(rng):
    X = random_spd(8, rng, cond=50.0)
    w = np.linalg.eigvalsh(X)
    assert 1.0 - 1e-9 <= w[0] and w[-1] <= 50.0 * (1 + 1e-9)


def test_symmetrize_exact():
    M = np.arange(9.0).reshape(3, 3)
    S = symmetrize(M)
    np.testing.assert_array_equal(S, S.T)
