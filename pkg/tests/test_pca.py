import numpy as np
import pytest
from numpy.testing import assert_allclose

from essvec.tasks.pca import (PcaModel, pca_fit, pca_reconstruct,
                              pca_transform)


def eigh_reference(data, k):
    """Top-k eigenpairs straight from a dense symmetric solver."""
    x = np.asarray(data, dtype=float)
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / (x.shape[0] - 1)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1][:k]
    return vals[order], vecs[:, order].T


class TestFit:
    def test_noisy_line_recovers_direction(self, rng):
        t = rng.standard_normal(300)
        data = np.stack([t, t], axis=1)
        data += rng.standard_normal(data.shape) * 0.01
        model = pca_fit(data, k=1)
        direction = np.array([1.0, 1.0]) / np.sqrt(2.0)
        assert_allclose(np.abs(model.components[0] @ direction), 1.0,
                        atol=1e-3)

    def test_exact_line_first_component(self):
        t = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
        data = np.stack([t, t], axis=1)
        model = pca_fit(data, k=1)
        assert_allclose(model.components[0],
                        np.array([1.0, 1.0]) / np.sqrt(2.0), rtol=1e-12)
        # variance along the line: sum(2 t^2)/(n-1)
        assert_allclose(model.explained_variance[0],
                        float((2 * t ** 2).sum()) / 4.0, rtol=1e-10)

    def test_components_orthonormal(self, rng):
        data = rng.standard_normal((40, 7))
        model = pca_fit(data, k=5)
        gram = model.components @ model.components.T
        assert_allclose(gram, np.eye(5), atol=1e-8)

    def test_matches_dense_eigensolver(self, rng):
        data = rng.standard_normal((60, 8)) @ np.diag(
            [5.0, 3.0, 2.0, 1.5, 1.0, 0.5, 0.2, 0.1])
        model = pca_fit(data, k=3)
        vals, vecs = eigh_reference(data, 3)
        assert_allclose(model.explained_variance, vals, rtol=1e-6)
        for got, want in zip(model.components, vecs):
            # eigenvectors are defined up to sign
            assert min(np.abs(got - want).max(),
                       np.abs(got + want).max()) < 1e-6

    def test_sign_convention_deterministic(self, rng):
        data = rng.standard_normal((30, 5))
        a = pca_fit(data, k=4)
        b = pca_fit(data, k=4)
        assert np.array_equal(a.components, b.components)
        for row in a.components:
            assert row[np.argmax(np.abs(row))] > 0

    def test_variances_nonincreasing(self, rng):
        data = rng.standard_normal((50, 6))
        model = pca_fit(data, k=6)
        ev = model.explained_variance
        assert np.all(ev[:-1] >= ev[1:] - 1e-10)

    def test_k_bounds(self, rng):
        data = rng.standard_normal((10, 4))
        with pytest.raises(ValueError):
            pca_fit(data, k=0)
        with pytest.raises(ValueError):
            pca_fit(data, k=5)

    def test_degenerate_direction_raises_by_default(self):
        # rank-1 data cannot support two components
        t = np.arange(5, dtype=float)
        data = np.stack([t, 2 * t], axis=1)
        with pytest.raises(ValueError):
            pca_fit(data, k=2)

    def test_degenerate_direction_optional_zero_row(self):
        t = np.arange(5, dtype=float)
        data = np.stack([t, 2 * t], axis=1)
        model = pca_fit(data, k=2, allow_degenerate=True)
        assert np.all(model.components[1] == 0.0)
        assert model.explained_variance[1] == 0.0


class TestTransform:
    def test_mean_maps_to_origin(self, rng):
        data = rng.standard_normal((20, 4)) + 3.0
        model = pca_fit(data, k=2)
        assert_allclose(pca_transform(model, data.mean(axis=0)),
                        np.zeros(2), atol=1e-12)

    def test_matches_projection_formula(self, rng):
        data = rng.standard_normal((20, 4))
        model = pca_fit(data, k=3)
        x = rng.standard_normal(4)
        assert_allclose(pca_transform(model, x),
                        model.components @ (x - model.mean), rtol=1e-12)

    def test_batch_rows(self, rng):
        data = rng.standard_normal((20, 4))
        model = pca_fit(data, k=2)
        batch = rng.standard_normal((6, 4))
        z = pca_transform(model, batch)
        assert z.shape == (6, 2)
        for i in range(6):
            assert_allclose(z[i], pca_transform(model, batch[i]),
                            rtol=1e-12)


class TestReconstruct:
    def test_full_rank_round_trip(self, rng):
        data = rng.standard_normal((30, 6))
        model = pca_fit(data, k=6)
        recon = pca_reconstruct(model, pca_transform(model, data))
        assert np.abs(recon - data).max() < 1e-8

    def test_truncation_error_equals_discarded_variance(self, rng):
        data = rng.standard_normal((200, 5))
        model = pca_fit(data, k=5)
        k = 2
        top = PcaModel(mean=model.mean, components=model.components[:k],
                       explained_variance=model.explained_variance[:k])
        recon = pca_reconstruct(top, pca_transform(top, data))
        mse = float(((data - recon) ** 2).sum()) / (data.shape[0] - 1)
        assert_allclose(mse, model.explained_variance[k:].sum(),
                        rtol=1e-6)
