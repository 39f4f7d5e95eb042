"""
Tests for includes/compressor.py: joint truncated-SVD compression.
"""

import numpy as np
import pytest

from includes.compressor import (
    CompressedGroup,
    compress_group,
    group_reconstruction_error,
    normalize_signs,
    reconstruct_block,
    storage_accounting,
)
from includes.errors import (
    EmptyBlockList,
    IndexOutOfRange,
    InvalidArgument,
    PlanMismatch,
    RankTooLarge,
    ShapeMismatch,
)
from includes.harness import gen_block, gen_perturbation
from includes.matrix import concat_h, singular_values


class TestNormalizeSigns:
    def test_flips_negative_pivot(self):
        basis = np.array([[0.6, 0.8], [-0.8, 0.6]])
        out = normalize_signs(basis)
        np.testing.assert_array_equal(out[:, 0], [-0.6, 0.8])
        np.testing.assert_array_equal(out[:, 1], [0.8, 0.6])

    def test_input_untouched(self):
        basis = np.array([[-1.0], [0.0]])
        normalize_signs(basis)
        assert basis[0, 0] == -1.0


class TestCompressGroup:
    def test_rank_one_copies_exact(self, rng):
        a = np.outer(rng.standard_normal(5), rng.standard_normal(4))
        group = compress_group([a] * 6, 1)
        for i in range(6):
            np.testing.assert_allclose(reconstruct_block(group, i), a, atol=1e-10)

    def test_shapes(self, rng):
        blocks = [rng.standard_normal((6, 3)) for _ in range(4)]
        group = compress_group(blocks, 2)
        assert group.basis.shape == (6, 2)
        assert len(group.coefficients) == 4
        assert all(c.shape == (2, 3) for c in group.coefficients)
        assert group.original_shape == (6, 3, 4)
        assert group.k == 4

    def test_basis_orthonormal(self, rng):
        group = compress_group([rng.standard_normal((8, 3)) for _ in range(3)], 5)
        np.testing.assert_allclose(group.basis.T @ group.basis, np.eye(5), atol=1e-10)

    def test_lossless_at_full_rank(self, rng):
        blocks = [rng.standard_normal((5, 2)) for _ in range(2)]
        group = compress_group(blocks, 4)
        for i, b in enumerate(blocks):
            np.testing.assert_allclose(reconstruct_block(group, i), b, atol=1e-9)
        errors = group_reconstruction_error(group, blocks)
        assert max(errors.per_block) <= 1e-9
        assert errors.concatenated <= 1e-9

    def test_sign_rule(self, rng):
        group = compress_group([rng.standard_normal((6, 4)) for _ in range(3)], 3)
        for j in range(3):
            col = group.basis[:, j]
            assert col[np.argmax(np.abs(col))] > 0

    def test_bit_deterministic(self, rng):
        blocks = [rng.standard_normal((7, 3)) for _ in range(4)]
        g1, g2 = compress_group(blocks, 3), compress_group(blocks, 3)
        np.testing.assert_array_equal(g1.basis, g2.basis)
        for c1, c2 in zip(g1.coefficients, g2.coefficients):
            np.testing.assert_array_equal(c1, c2)

    def test_idempotent_on_reconstruction(self, rng):
        blocks = [rng.standard_normal((6, 4)) for _ in range(3)]
        group = compress_group(blocks, 2)
        rebuilt = [reconstruct_block(group, i) for i in range(group.k)]
        again = compress_group(rebuilt, 2)
        for c1, c2 in zip(group.coefficients, again.coefficients):
            np.testing.assert_allclose(c1, c2, atol=1e-10)

    def test_near_duplicate_rank_two(self):
        ref = gen_block(8, 5, 2, seed=21)
        blocks = [ref] + [ref + gen_perturbation(8, 5, 1e-6, seed=30 + j) for j in range(4)]
        group = compress_group(blocks, 2)
        errors = group_reconstruction_error(group, blocks)
        assert max(errors.per_block) <= 1e-4

    def test_outputs_read_only(self, rng):
        group = compress_group([rng.standard_normal((3, 3))], 1)
        with pytest.raises(ValueError):
            group.basis[0, 0] = 1.0

    @pytest.mark.parametrize("r", [0, 7])
    def test_rank_out_of_range(self, rng, r):
        # min(m, k n) = min(6, 2 * 3) = 6
        with pytest.raises(RankTooLarge):
            compress_group([rng.standard_normal((6, 3)) for _ in range(2)], r)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            compress_group([np.eye(2), np.eye(3)], 1)

    def test_empty(self):
        with pytest.raises(EmptyBlockList):
            compress_group([], 1)


class TestCompressedGroupInvariants:
    def test_non_orthonormal_basis(self):
        with pytest.raises(InvalidArgument, match="orthonormal"):
            CompressedGroup(basis=np.full((2, 1), 1.0), coefficients=(np.ones((1, 2)),),
                            rank=1, original_shape=(2, 2, 1))

    def test_zero_rank_rejected(self):
        with pytest.raises(InvalidArgument, match="positive"):
            CompressedGroup(basis=np.zeros((2, 0)), coefficients=(np.zeros((0, 2)),) * 3,
                            rank=0, original_shape=(2, 2, 3))

    def test_coefficient_count(self):
        with pytest.raises(InvalidArgument):
            CompressedGroup(basis=np.eye(2)[:, :1], coefficients=(np.ones((1, 2)),),
                            rank=1, original_shape=(2, 2, 2))


class TestReconstruction:
    def test_index_out_of_range(self):
        group = compress_group([np.eye(2)] * 2, 1)
        with pytest.raises(IndexOutOfRange):
            reconstruct_block(group, 2)
        with pytest.raises(IndexOutOfRange):
            reconstruct_block(group, -1)

    @pytest.mark.parametrize("k,r", [(1, 1), (3, 2), (5, 3)])
    def test_concatenated_error_is_next_singular_value(self, rng, k, r):
        """Eckart-Young: the shared top-r basis leaves exactly sigma_{r+1} of the
        concatenation, and no single block can be worse than the whole."""
        blocks = [rng.standard_normal((6, 3)) for _ in range(k)]
        group = compress_group(blocks, r)
        sv = singular_values(concat_h(blocks))
        errors = group_reconstruction_error(group, blocks)
        assert errors.concatenated == pytest.approx(sv[r], rel=1e-9)
        assert max(errors.per_block) <= errors.concatenated * (1 + 1e-9)

    def test_single_block_is_truncated_svd(self, rng):
        a = rng.standard_normal((5, 4))
        errors = group_reconstruction_error(compress_group([a], 2), [a])
        assert errors.per_block[0] == pytest.approx(singular_values(a)[2], rel=1e-9)

    def test_wrong_blocks(self):
        group = compress_group([np.eye(2)] * 2, 1)
        with pytest.raises(PlanMismatch):
            group_reconstruction_error(group, [np.eye(2)])
        with pytest.raises(PlanMismatch):
            group_reconstruction_error(group, [np.eye(3), np.eye(3)])


class TestStorageAccounting:
    def test_hand_arithmetic(self):
        stats = storage_accounting(100, 10, 20, 5, [5] * 20)
        assert stats.joint_scalars == 1500
        assert stats.separate_scalars == 11100
        assert stats.ratio == pytest.approx(1500 / 11100)
        assert stats.ratio == pytest.approx(0.135, abs=1e-3)

    def test_default_per_block_ranks(self):
        assert storage_accounting(100, 10, 20, 5) == storage_accounting(100, 10, 20, 5, [5] * 20)

    def test_singleton_cheaper_than_separate(self):
        stats = storage_accounting(7, 4, 1, 3)
        assert stats.joint_scalars == 3 * (7 + 4)
        assert stats.separate_scalars == 3 * (7 + 4 + 1)

    def test_joint_per_block_decreasing_in_k(self):
        per_block = [storage_accounting(50, 20, k, 5).joint_scalars / k for k in range(1, 30)]
        assert all(b < a for a, b in zip(per_block, per_block[1:]))

    def test_zero_rank_rejected(self):
        with pytest.raises(RankTooLarge):
            storage_accounting(10, 10, 2, 0)

    def test_rank_above_limit(self):
        with pytest.raises(RankTooLarge):
            storage_accounting(4, 1, 2, 3)

    def test_to_dict(self):
        assert storage_accounting(100, 10, 20, 5).to_dict()["joint_scalars"] == 1500
