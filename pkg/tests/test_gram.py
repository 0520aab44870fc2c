"""Tests for datasets, Gram assembly, and exact eigendecompositions."""

import numpy as np
import pytest

from ratelab.errors import DataError, ParameterError
from ratelab.gram import (
    Dataset,
    GaussianRBF,
    assemble_gram,
    eigendecompose,
    mercer_gram_eigen,
    reconstruction_error,
)
from ratelab.mercer import build_model


class TestDataset:
    def test_flat_outputs_gain_a_channel(self):
        data = Dataset(xs=np.array([0.0, 1.0]), ys=np.array([2.0, 3.0]))
        assert data.ys.shape == (2, 1)
        assert data.m == 2
        assert data.output_dim == 1

    def test_shape_mismatch(self):
        with pytest.raises(DataError):
            Dataset(xs=np.zeros(3), ys=np.zeros((2, 1)))

    def test_non_finite_rejected(self):
        with pytest.raises(DataError):
            Dataset(xs=np.array([0.0, np.nan]), ys=np.zeros(2))

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            Dataset(xs=np.zeros(0), ys=np.zeros((0, 1)))


class TestAssembleGram:
    def test_scaling_and_symmetry(self):
        kernel = GaussianRBF(lengthscale=1.0)
        xs = np.array([0.0, 1.0, 3.0])
        gram = assemble_gram(kernel, xs)
        np.testing.assert_allclose(gram, gram.T)
        np.testing.assert_allclose(np.diag(gram), 1.0 / 3.0)

    def test_single_point(self):
        gram = assemble_gram(GaussianRBF(lengthscale=2.0), np.array([1.5]))
        np.testing.assert_allclose(gram, [[1.0]])

    def test_bad_lengthscale(self):
        with pytest.raises(ParameterError):
            GaussianRBF(lengthscale=0.0)


class TestEigendecompose:
    def test_rank_one_constant_kernel(self):
        gram = np.full((2, 2), 0.5)
        eig = eigendecompose(gram)
        np.testing.assert_allclose(eig.eigenvalues, [1.0, 0.0], atol=1e-15)
        assert eig.complete
        assert reconstruction_error(gram, eig) < 1e-14

    def test_descending_order_and_orthonormal_vectors(self):
        rng = np.random.default_rng(3)
        raw = rng.standard_normal((6, 6))
        gram = raw @ raw.T / 6.0
        eig = eigendecompose(gram)
        assert np.all(np.diff(eig.eigenvalues) <= 0)
        np.testing.assert_allclose(eig.vectors.T @ eig.vectors, np.eye(6), atol=1e-12)

    def test_negative_roundoff_clamped_with_warning(self):
        gram = np.diag([1.0, -1e-8])
        with pytest.warns(UserWarning):
            eig = eigendecompose(gram)
        assert eig.eigenvalues.min() == 0.0
        assert eig.clamped == pytest.approx(1e-8)

    def test_rejects_non_square(self):
        with pytest.raises(DataError):
            eigendecompose(np.zeros((2, 3)))


class TestFactoredEigen:
    def test_matches_dense_beyond_feature_count(self):
        model = build_model(b=2.0, n_trunc=8)
        rng = np.random.default_rng(7)
        xs = rng.uniform(0, 2 * np.pi, size=40)
        eig = mercer_gram_eigen(model, xs)
        assert not eig.complete
        assert eig.rank <= 8
        gram = assemble_gram(model, xs)
        dense = eigendecompose(gram)
        np.testing.assert_allclose(
            eig.eigenvalues, dense.eigenvalues[: eig.rank], rtol=1e-9, atol=1e-12
        )
        assert reconstruction_error(gram, eig) < 1e-12

    def test_small_sample_uses_dense_path(self):
        model = build_model(b=2.0, n_trunc=16)
        xs = np.linspace(0.0, 1.0, 5)
        eig = mercer_gram_eigen(model, xs)
        assert eig.complete
        assert eig.size == 5

    def test_columns_orthonormal(self):
        model = build_model(b=1.5, n_trunc=8)
        xs = np.random.default_rng(11).uniform(0, 2 * np.pi, size=64)
        eig = mercer_gram_eigen(model, xs)
        np.testing.assert_allclose(
            eig.vectors.T @ eig.vectors, np.eye(eig.rank), atol=1e-10
        )
