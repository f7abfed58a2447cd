"""Haar sampling, decompositions, and moment statistics."""

import math

import numpy as np
import pytest

from ergolab import (
    Decomposition,
    Projection,
    coordinate_projection,
    hypersphere_moments,
    sample_decomposition,
    sample_haar_unitary,
    sample_random_state,
    state_weight_statistics,
    substream,
    unitary_block_statistics,
)


class TestSubstream:
    def test_reproducible(self):
        a = substream(7, 3).standard_normal(5)
        b = substream(7, 3).standard_normal(5)
        np.testing.assert_array_equal(a, b)

    def test_paths_independent(self):
        a = substream(7, 3).standard_normal(5)
        b = substream(7, 4).standard_normal(5)
        assert not np.allclose(a, b)


class TestHaarUnitary:
    def test_unitarity(self):
        u = sample_haar_unitary(16, substream(1, 0))
        assert np.abs(u.conj().T @ u - np.eye(16)).max() < 1e-10

    def test_dimension_one_is_phase(self):
        u = sample_haar_unitary(1, substream(1, 1))
        assert u.shape == (1, 1)
        assert abs(abs(u[0, 0]) - 1) < 1e-12

    def test_zero_dimension_rejected(self):
        with pytest.raises(ValueError):
            sample_haar_unitary(0, substream(1, 2))

    def test_determinism(self):
        u1 = sample_haar_unitary(8, substream(2, 0))
        u2 = sample_haar_unitary(8, substream(2, 0))
        np.testing.assert_array_equal(u1, u2)

    def test_first_entry_moment(self):
        # |U_00|^2 has mean 1/D; 2000 samples, 5 standard errors
        n, dim = 2000, 16
        vals = np.array([
            abs(sample_haar_unitary(dim, substream(3, i))[0, 0]) ** 2
            for i in range(n)
        ])
        se = vals.std(ddof=1) / math.sqrt(n)
        assert abs(vals.mean() - 1 / dim) < 5 * se


class TestRandomState:
    def test_unit_norm(self):
        v = sample_random_state(50, substream(4, 0))
        assert abs(np.linalg.norm(v) - 1) < 1e-12

    def test_dimension_one_full_weight(self):
        v = sample_random_state(1, substream(4, 1))
        cell = coordinate_projection(1, [0])
        assert abs(np.sum(np.abs(cell.basis.conj().T @ v) ** 2) - 1) < 1e-12

    def test_zero_dimension_rejected(self):
        with pytest.raises(ValueError):
            sample_random_state(0, substream(4, 2))

    def test_batched_rows_unit(self):
        batch = sample_random_state(10, substream(4, 3), size=7)
        assert batch.shape == (7, 10)
        np.testing.assert_allclose(np.linalg.norm(batch, axis=1), 1, atol=1e-12)


class TestProjectionAndDecomposition:
    def test_non_orthonormal_rejected(self):
        basis = np.ones((4, 2), dtype=complex)
        with pytest.raises(ValueError, match="orthonormal"):
            Projection(basis=basis, indices=(0, 1))

    def test_rank_index_mismatch_rejected(self):
        with pytest.raises(ValueError, match="rank"):
            Projection(basis=np.eye(4)[:, :2], indices=(0, 1, 2))

    def test_rank_sum_mismatch_rejected(self):
        cells = sample_decomposition([3, 3], substream(5, 0)).cells
        with pytest.raises(ValueError, match="sum"):
            Decomposition(cells=cells[:1])

    def test_full_cell_carries_everything(self):
        dec = sample_decomposition([6], substream(5, 1))
        v = sample_random_state(6, substream(5, 2))
        w = np.sum(np.abs(dec.cells[0].basis.conj().T @ v) ** 2)
        assert abs(w - 1) < 1e-10

    def test_rank_one_cells(self):
        dec = sample_decomposition([1] * 5, substream(5, 3))
        assert dec.ranks == (1,) * 5

    def test_completeness_per_sample(self):
        dec = sample_decomposition([8] * 8, substream(5, 4))
        v = sample_random_state(64, substream(5, 5))
        weights = [
            float(np.sum(np.abs(c.basis.conj().T @ v) ** 2)) for c in dec
        ]
        assert abs(sum(weights) - 1) < 1e-10
        stacked = np.hstack([c.basis for c in dec])
        assert np.abs(stacked.conj().T @ stacked - np.eye(64)).max() < 1e-10

    def test_invalid_ranks_rejected(self):
        with pytest.raises(ValueError):
            sample_decomposition([0, 4], substream(5, 6))


class TestWeightStatistics:
    def test_gates_at_moderate_samples(self):
        stats = state_weight_statistics(100, 10, 20_000, substream(6, 0))
        assert stats["mean"]["pass"]
        assert stats["variance"]["pass"]
        assert stats["mean"]["target"] == pytest.approx(0.1)
        assert stats["variance"]["target"] == pytest.approx(9 / 10100)

    def test_full_rank_degenerate_weight(self):
        stats = state_weight_statistics(12, 12, 500, substream(6, 1))
        assert stats["mean"]["estimate"] == pytest.approx(1.0, abs=1e-12)

    def test_bad_rank_rejected(self):
        with pytest.raises(ValueError):
            state_weight_statistics(4, 5, 100, substream(6, 2))


class TestHypersphereMoments:
    def test_targets(self):
        stats = hypersphere_moments(50, 1000, substream(7, 0))
        assert stats["mean"]["target"] == pytest.approx(0.01)
        assert stats["variance"]["target"] == pytest.approx(49 / 127500)
        assert stats["covariance"]["target"] == pytest.approx(-1 / 127500)

    def test_gates_at_moderate_samples(self):
        stats = hypersphere_moments(50, 20_000, substream(7, 1))
        assert stats["mean"]["pass"]
        assert stats["variance"]["pass"]
        assert stats["covariance"]["pass"]


class TestUnitaryBlockStatistics:
    def test_two_by_two_closed_form(self):
        # at D=2, d=1 the worst diagonal deviation is (u - 1/2)^2 with u
        # uniform on [0, 1]: mean 1/12
        stats = unitary_block_statistics(2, 1, 2000, substream(8, 0))
        rec = stats["max_diag_dev"]
        assert abs(rec["estimate"] - 1 / 12) < 5 * rec["stderr"]

    def test_finite_and_reproducible(self):
        a = unitary_block_statistics(64, 8, 50, substream(8, 1))
        b = unitary_block_statistics(64, 8, 50, substream(8, 1))
        assert a == b
        assert math.isfinite(a["max_offdiag"]["estimate"])
        assert math.isfinite(a["max_diag_dev"]["estimate"])

    def test_rank_equal_dim_rejected(self):
        with pytest.raises(ValueError):
            unitary_block_statistics(4, 4, 10, substream(8, 2))
