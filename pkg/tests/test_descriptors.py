import numpy as np
import pytest

from spdr.descriptors import (centering_matrix, gaussian_embed, joint_covariance,
                              read_observations, region_covariance, sample_covariance, shrink)
from spdr.exceptions import (DataError, InvalidParameterError, RankDeficientError,
                             TooFewObservationsError)


def test_scalar_sample_variance():
    np.testing.assert_allclose(region_covariance([[0.0, 2.0]]), [[2.0]])


def test_direct_sum_oracle(rng):
    O = rng.standard_normal((4, 30))
    mu = O.mean(axis=1)
    oracle = sum(np.outer(o - mu, o - mu) for o in O.T) / 29
    np.testing.assert_allclose(region_covariance(O), oracle, rtol=1e-12)
    np.testing.assert_allclose(region_covariance(O), np.cov(O), rtol=1e-12)


def test_centering_form(rng):
    O = rng.standard_normal((3, 12))
    C = centering_matrix(12)
    np.testing.assert_allclose(region_covariance(O), O @ C @ O.T / 11, rtol=1e-12)


def test_centering_identity_normalization(rng):
    # J = r^-3/2 (r I - 1) gives J J^T = C / r, i.e. the biased estimator
    r = 9
    J = r ** -1.5 * (r * np.eye(r) - np.ones((r, r)))
    np.testing.assert_allclose(J @ J.T, centering_matrix(r) / r, atol=1e-15)
    O = rng.standard_normal((3, r))
    np.testing.assert_allclose(O @ J @ J.T @ O.T * r / (r - 1), region_covariance(O), rtol=1e-12)


def test_identical_observations_rank_deficient():
    with pytest.raises(RankDeficientError):
        region_covariance(np.ones((3, 10)))


def test_too_few_observations():
    with pytest.raises(TooFewObservationsError):
        region_covariance(np.ones((3, 1)))


def test_r_below_n_needs_shrinkage(rng):
    O = rng.standard_normal((6, 4))
    with pytest.raises(RankDeficientError):
        region_covariance(O)
    C = region_covariance(O, shrinkage=0.1)
    assert np.linalg.eigvalsh(C)[0] > 0
    raw = sample_covariance(O)
    np.testing.assert_allclose(C, 0.9 * raw + 0.1 * np.trace(raw) / 6 * np.eye(6), rtol=1e-12)


def test_shrinkage_range():
    with pytest.raises(InvalidParameterError):
        shrink(np.eye(2), 1.0)


def test_projection_property(rng):
    for _ in range(50):
        n, m = 7, 3
        O = rng.standard_normal((n, 25))
        W = np.linalg.qr(rng.standard_normal((n, m)))[0]
        lhs = region_covariance(W.T @ O)
        rhs = W.T @ region_covariance(O) @ W
        assert np.linalg.norm(lhs - rhs) <= 1e-10 * np.linalg.norm(rhs)


def test_permutation_invariance(rng):
    O = rng.standard_normal((4, 20))
    np.testing.assert_allclose(region_covariance(O[:, rng.permutation(20)]), region_covariance(O),
                               rtol=1e-12)


class TestGaussianEmbed:
    def test_constant_scalar_literal(self):
        # O O^T = 2, mu = 1
        np.testing.assert_allclose(gaussian_embed([[1.0, 1.0]]), [[3.0, 1.0], [1.0, 1.0]])

    def test_constant_scalar_normalized(self):
        np.testing.assert_allclose(gaussian_embed([[1.0, 1.0]], normalize=True),
                                   [[2.0, 1.0], [1.0, 1.0]])

    def test_zero_mean_block(self, rng):
        O = rng.standard_normal((3, 10))
        O -= O.mean(axis=1, keepdims=True)
        E = gaussian_embed(O)
        np.testing.assert_allclose(E[:3, 3], 0.0, atol=1e-15)
        np.testing.assert_allclose(E[:3, :3], O @ O.T)

    def test_shape_and_symmetry(self, rng):
        E = gaussian_embed(rng.standard_normal((5, 12)))
        assert E.shape == (6, 6)
        np.testing.assert_array_equal(E, E.T)

    def test_rank_deficient(self):
        with pytest.raises(RankDeficientError):
            gaussian_embed(np.zeros((2, 5)))


class TestJointCovariance:
    def test_static_skeleton(self):
        with pytest.raises(RankDeficientError):
            joint_covariance(np.tile([1.0, 2.0, 3.0, 4.0, 5.0, 6.0], (10, 1)))

    def test_single_varying_coordinate(self):
        seq = np.array([[0.0, 5.0, 7.0], [1.0, 5.0, 7.0]])
        C = sample_covariance(seq.T)
        expected = np.zeros((3, 3))
        expected[0, 0] = 0.5
        np.testing.assert_allclose(C, expected)
        with pytest.raises(RankDeficientError):
            joint_covariance(seq)

    def test_matches_region_covariance(self, rng):
        seq = rng.standard_normal((40, 9))
        np.testing.assert_allclose(joint_covariance(seq), region_covariance(seq.T), rtol=1e-12)

    def test_column_count(self, rng):
        with pytest.raises(DataError):
            joint_covariance(rng.standard_normal((10, 4)))


def test_read_observations(tmp_path):
    p = tmp_path / "obs.csv"
    p.write_text("a,b\n0,1\n2,3\n4,6\n")
    np.testing.assert_array_equal(read_observations(p), [[0, 2, 4], [1, 3, 6]])
    q = tmp_path / "plain.csv"
    q.write_text("0,1\n2,3\n")
    assert read_observations(q).shape == (2, 2)
    bad = tmp_path / "bad.csv"
    bad.write_text("0,1\n2,x\n")
    with pytest.raises(DataError):
        read_observations(bad)
