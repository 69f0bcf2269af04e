"""Operator-calculus tests against independent oracles."""

import numpy as np
import pytest

from hankelsr.hankel import (HankelDims, adjoint_lift, adjoint_lift_isometric,
                             adjoint_lift_lowrank, apply_weights, choose_dims,
                             lift, lift_isometric, lift_matvec, lift_rmatvec,
                             pinv_lift, pinv_lift_lowrank, weight_vector)
from hankelsr.lowrank import truncate_rank


def brute_force_weights(n, n1):
    """Independent oracle: enumerate the anti-diagonal index pairs."""
    n2 = n + 1 - n1
    w = np.zeros(n, dtype=int)
    for j in range(n1):
        for k in range(n2):
            w[j + k] += 1
    return w


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


class TestChooseDims:
    @pytest.mark.parametrize("n,n1,n2,weights", [
        (6, 3, 4, [1, 2, 3, 3, 2, 1]),
        (3, 2, 2, [1, 2, 1]),
        (2, 1, 2, [1, 1]),
    ])
    def test_default_split_and_weights(self, n, n1, n2, weights):
        dims = choose_dims(n, 1)
        assert (dims.n1, dims.n2) == (n1, n2)
        np.testing.assert_array_equal(dims.weights, weights)

    def test_weights_match_brute_force_all_splits(self):
        for n in range(2, 65):
            for n1 in range(1, n + 1):
                np.testing.assert_array_equal(
                    weight_vector(n, n1, n + 1 - n1), brute_force_weights(n, n1))

    def test_weight_sum_is_lifted_area(self):
        for n in (5, 16, 33):
            dims = choose_dims(n, 2)
            assert dims.weights.sum() == dims.n1 * dims.n2

    def test_split_override(self):
        dims = choose_dims(10, 2, n1=3)
        assert (dims.n1, dims.n2) == (3, 8)
        np.testing.assert_array_equal(dims.weights, brute_force_weights(10, 3))

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            choose_dims(1, 1)
        with pytest.raises(ValueError):
            choose_dims(8, 1, n1=0)
        with pytest.raises(ValueError):
            choose_dims(8, 1, n1=9)


class TestLift:
    def test_scalar_rows(self):
        dims = choose_dims(3, 1)
        Z = lift(np.array([[1.0, 2.0, 3.0]]), dims)
        np.testing.assert_array_equal(Z, [[1, 2], [2, 3]])

    def test_block_rows(self):
        dims = choose_dims(3, 2)
        X = np.arange(6.0).reshape(2, 3)
        Z = lift(X, dims)
        assert Z.shape == (4, 2)
        np.testing.assert_array_equal(Z[:, 0], np.concatenate([X[:, 0], X[:, 1]]))
        np.testing.assert_array_equal(Z[:, 1], np.concatenate([X[:, 1], X[:, 2]]))

    def test_frobenius_weight_identity(self):
        rng = np.random.default_rng(3)
        for s, n in [(1, 9), (2, 14), (4, 21)]:
            dims = choose_dims(n, s)
            X = crandn(rng, s, n)
            lhs = np.linalg.norm(lift(X, dims)) ** 2
            rhs = float(np.sum(dims.weights * np.sum(np.abs(X) ** 2, axis=0)))
            assert abs(lhs - rhs) <= 1e-12 * rhs

    def test_shape_mismatch(self):
        dims = choose_dims(4, 2)
        with pytest.raises(ValueError):
            lift(np.zeros((1, 4)), dims)


class TestAdjointLift:
    def test_antidiagonal_sums(self):
        dims = choose_dims(3, 1)
        out = adjoint_lift(np.array([[1.0, 2.0], [3.0, 4.0]]), dims)
        np.testing.assert_array_equal(out, [[1, 5, 4]])

    def test_lift_columns_scaled_by_weights(self):
        rng = np.random.default_rng(4)
        dims = choose_dims(11, 2)
        X = crandn(rng, 2, 11)
        out = adjoint_lift(lift(X, dims), dims)
        np.testing.assert_allclose(out, X * dims.weights[None, :], rtol=0, atol=1e-12)

    def test_adjoint_identity_randomized(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            s = int(rng.integers(1, 5))
            n = int(rng.integers(2, 30))
            dims = choose_dims(n, s)
            X = crandn(rng, s, n)
            Z = crandn(rng, *dims.lifted_shape)
            lhs = np.vdot(lift(X, dims), Z)
            rhs = np.vdot(X, adjoint_lift(Z, dims))
            assert abs(lhs - rhs) <= 1e-10 * (np.linalg.norm(X) * np.linalg.norm(Z))


class TestWeights:
    def test_power_inverse_pair(self):
        rng = np.random.default_rng(6)
        dims = choose_dims(9, 2)
        X = crandn(rng, 2, 9)
        back = apply_weights(apply_weights(X, dims, 1), dims, -1)
        np.testing.assert_allclose(back, X, atol=1e-14)

    def test_square_power_matches_counts(self):
        dims = choose_dims(3, 1)
        out = apply_weights(np.ones((1, 3)), dims, 2)
        np.testing.assert_array_equal(out, [brute_force_weights(3, dims.n1)])

    def test_invalid_power(self):
        dims = choose_dims(4, 1)
        with pytest.raises(ValueError):
            apply_weights(np.ones((1, 4)), dims, 3)


class TestPinvLift:
    def test_weighted_average(self):
        dims = choose_dims(3, 1)
        out = pinv_lift(np.array([[1.0, 2.0], [4.0, 8.0]]), dims)
        np.testing.assert_allclose(out, [[1.0, 3.0, 8.0]])

    def test_left_inverse(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            s = int(rng.integers(1, 5))
            n = int(rng.integers(2, 30))
            dims = choose_dims(n, s)
            X = crandn(rng, s, n)
            back = pinv_lift(lift(X, dims), dims)
            assert np.linalg.norm(back - X) <= 1e-13 * np.linalg.norm(X)

    def test_minimum_residual_delift(self):
        # lift(pinv_lift(Z)) is the closest lift-structured matrix to Z
        rng = np.random.default_rng(8)
        dims = choose_dims(8, 2)
        Z = crandn(rng, *dims.lifted_shape)
        best = np.linalg.norm(lift(pinv_lift(Z, dims), dims) - Z)
        for _ in range(25):
            X = crandn(rng, 2, 8)
            assert best <= np.linalg.norm(lift(X, dims) - Z) + 1e-12


class TestIsometricLift:
    def test_inverse_pair(self):
        rng = np.random.default_rng(9)
        for s, n in [(1, 8), (3, 13)]:
            dims = choose_dims(n, s)
            X = crandn(rng, s, n)
            back = adjoint_lift_isometric(lift_isometric(X, dims), dims)
            assert np.linalg.norm(back - X) <= 1e-13 * np.linalg.norm(X)

    def test_isometry(self):
        rng = np.random.default_rng(10)
        dims = choose_dims(17, 2)
        X = crandn(rng, 2, 17)
        assert abs(np.linalg.norm(lift_isometric(X, dims)) - np.linalg.norm(X)) \
            <= 1e-12 * np.linalg.norm(X)

    def test_adjoint_identity(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            dims = choose_dims(int(rng.integers(2, 24)), int(rng.integers(1, 4)))
            X = crandn(rng, dims.s, dims.n)
            Z = crandn(rng, *dims.lifted_shape)
            lhs = np.vdot(lift_isometric(X, dims), Z)
            rhs = np.vdot(X, adjoint_lift_isometric(Z, dims))
            assert abs(lhs - rhs) <= 1e-10 * (np.linalg.norm(X) * np.linalg.norm(Z))


class TestFastProducts:
    def test_unit_vector_selects_first_block_column(self):
        rng = np.random.default_rng(12)
        dims = choose_dims(10, 2)
        X = crandn(rng, 2, 10)
        e0 = np.zeros(dims.n2)
        e0[0] = 1.0
        out = lift_matvec(X, e0, dims)
        expected = X[:, :dims.n1].T.reshape(-1)  # columns x_0..x_{n1-1} stacked
        np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_matvec_matches_dense(self):
        rng = np.random.default_rng(13)
        for s, n, n1 in [(2, 32, None), (1, 17, None), (3, 20, 5), (2, 16, 11)]:
            dims = choose_dims(n, s, n1)
            X = crandn(rng, s, n)
            Z = lift(X, dims)
            v = crandn(rng, dims.n2)
            got = lift_matvec(X, v, dims)
            want = Z @ v
            assert np.linalg.norm(got - want) <= 1e-10 * np.linalg.norm(want)

    def test_rmatvec_unit_vector_is_conjugate_first_row(self):
        rng = np.random.default_rng(14)
        dims = choose_dims(9, 2)
        X = crandn(rng, 2, 9)
        e0 = np.zeros(dims.s * dims.n1)
        e0[0] = 1.0
        got = lift_rmatvec(X, e0, dims)
        np.testing.assert_allclose(got, np.conj(X[0, :dims.n2]), atol=1e-12)

    def test_rmatvec_matches_dense(self):
        rng = np.random.default_rng(15)
        for s, n, n1 in [(2, 32, None), (1, 17, None), (3, 20, 5)]:
            dims = choose_dims(n, s, n1)
            X = crandn(rng, s, n)
            Z = lift(X, dims)
            u = crandn(rng, dims.s * dims.n1)
            got = lift_rmatvec(X, u, dims)
            want = Z.conj().T @ u
            assert np.linalg.norm(got - want) <= 1e-10 * np.linalg.norm(want)

    def test_block_inputs(self):
        rng = np.random.default_rng(16)
        dims = choose_dims(12, 2)
        X = crandn(rng, 2, 12)
        Z = lift(X, dims)
        V = crandn(rng, dims.n2, 3)
        U = crandn(rng, dims.s * dims.n1, 3)
        np.testing.assert_allclose(lift_matvec(X, V, dims), Z @ V, atol=1e-10)
        np.testing.assert_allclose(lift_rmatvec(X, U, dims), Z.conj().T @ U, atol=1e-10)

    def test_lowrank_delift_matches_dense(self):
        rng = np.random.default_rng(17)
        dims = choose_dims(18, 2)
        W = crandn(rng, *dims.lifted_shape)
        f = truncate_rank(W, 3)
        dense = adjoint_lift(f.reconstruct(), dims)
        fast = adjoint_lift_lowrank(f.U, f.sigma, f.V, dims)
        np.testing.assert_allclose(fast, dense, atol=1e-10 * np.linalg.norm(dense))
        dense_p = pinv_lift(f.reconstruct(), dims)
        fast_p = pinv_lift_lowrank(f.U, f.sigma, f.V, dims)
        np.testing.assert_allclose(fast_p, dense_p, atol=1e-10 * np.linalg.norm(dense_p))

    def test_lowrank_delift_empty_factors(self):
        dims = choose_dims(6, 2)
        out = adjoint_lift_lowrank(np.zeros((dims.s * dims.n1, 0)), np.zeros(0),
                                   np.zeros((dims.n2, 0)), dims)
        np.testing.assert_array_equal(out, np.zeros((2, 6)))
