import numpy as np
import pytest

from blockomp.linalg import (
    BlockPartition,
    PartitionError,
    RankDeficiencyError,
    least_squares,
    load_matrix_csv,
    load_vector_csv,
    mixed_operator_norm_lower,
    mixed_operator_norm_upper,
    mixed_vector_norm,
    project_onto_nullspace,
    project_onto_range,
    save_matrix_csv,
    spectral_norm,
)
from _oracles import mixed_norm_loop, normal_equations_solve_3, spectral_norm_cubic


class TestBlockPartition:
    def test_basic(self):
        part = BlockPartition(d=3, count=4)
        assert part.n == 12
        assert part.block_slice(2) == slice(6, 9)

    def test_for_length_rejects_nondivisor(self):
        with pytest.raises(PartitionError):
            BlockPartition.for_length(10, 3)

    def test_invalid_sizes(self):
        with pytest.raises(PartitionError):
            BlockPartition(d=0, count=4)


class TestMixedVectorNorm:
    def test_single_nonzero_block_inf(self):
        part = BlockPartition(d=2, count=2)
        assert mixed_vector_norm(np.array([3.0, 4.0, 0.0, 0.0]), part, np.inf) == 5.0

    def test_two_unit_blocks_l1(self):
        part = BlockPartition(d=2, count=2)
        assert mixed_vector_norm(np.array([1.0, 0.0, 0.0, 1.0]), part, 1) == 2.0

    def test_matches_scalar_loop(self):
        rng = np.random.default_rng(0)
        z = rng.standard_normal(12)
        part = BlockPartition(d=3, count=4)
        for p in (1, 2, np.inf):
            assert mixed_vector_norm(z, part, p) == pytest.approx(
                mixed_norm_loop(z, 3, p), abs=1e-12)

    def test_p2_is_euclidean(self):
        rng = np.random.default_rng(1)
        z = rng.standard_normal(20)
        part = BlockPartition(d=4, count=5)
        assert mixed_vector_norm(z, part, 2) == pytest.approx(np.linalg.norm(z), abs=1e-12)

    def test_d1_reduces_to_plain_lp(self):
        rng = np.random.default_rng(2)
        z = rng.standard_normal(15)
        part = BlockPartition(d=1, count=15)
        for p in (1, 2, np.inf):
            assert abs(mixed_vector_norm(z, part, p) - np.linalg.norm(z, ord=p)) < 1e-12

    def test_triangle_inequality(self):
        rng = np.random.default_rng(3)
        for _ in range(300):
            d = int(rng.integers(1, 5))
            count = int(rng.integers(1, 6))
            a = rng.standard_normal(d * count)
            b = rng.standard_normal(d * count)
            part = BlockPartition(d=d, count=count)
            for p in (1, 2, np.inf):
                assert (mixed_vector_norm(a + b, part, p)
                        <= mixed_vector_norm(a, part, p) + mixed_vector_norm(b, part, p) + 1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(PartitionError):
            mixed_vector_norm(np.ones(5), BlockPartition(d=2, count=2), 2)

    def test_bad_p(self):
        with pytest.raises(ValueError):
            mixed_vector_norm(np.ones(4), BlockPartition(d=2, count=2), 3)


class TestMixedOperatorNorms:
    def test_upper_identity_d1(self):
        part = BlockPartition(d=1, count=2)
        assert mixed_operator_norm_upper(np.eye(2), part, part) == pytest.approx(1.0)

    def test_upper_block_diagonal(self):
        rng = np.random.default_rng(4)
        B1 = rng.standard_normal((2, 2))
        B2 = rng.standard_normal((2, 2))
        M = np.zeros((4, 4))
        M[:2, :2] = B1
        M[2:, 2:] = B2
        part = BlockPartition(d=2, count=2)
        expected = max(spectral_norm(B1), spectral_norm(B2))
        assert mixed_operator_norm_upper(M, part, part) == pytest.approx(expected, abs=1e-12)

    def test_upper_d1_is_max_abs_row_sum(self):
        rng = np.random.default_rng(5)
        M = rng.standard_normal((4, 6))
        rp = BlockPartition(d=1, count=4)
        cp = BlockPartition(d=1, count=6)
        assert mixed_operator_norm_upper(M, rp, cp) == pytest.approx(
            np.abs(M).sum(axis=1).max(), abs=1e-12)

    def test_upper_ge_sampled_lower_4x6(self):
        rng = np.random.default_rng(6)
        M = rng.standard_normal((4, 6))
        rp = BlockPartition(d=2, count=2)
        cp = BlockPartition(d=2, count=3)
        lower = mixed_operator_norm_lower(M, rp, cp, trials=10_000, seed=0)
        assert mixed_operator_norm_upper(M, rp, cp) >= lower

    def test_lower_identity_any_trials(self):
        part = BlockPartition(d=3, count=2)
        for trials in (1, 7):
            assert mixed_operator_norm_lower(np.eye(6), part, part, trials, seed=1) == (
                pytest.approx(1.0, abs=1e-12))

    def test_lower_zero_matrix(self):
        part = BlockPartition(d=2, count=2)
        assert mixed_operator_norm_lower(np.zeros((4, 4)), part, part, 50, seed=2) == 0.0

    def test_lower_le_upper_6x6(self):
        rng = np.random.default_rng(7)
        M = rng.standard_normal((6, 6))
        part = BlockPartition(d=3, count=2)
        lower = mixed_operator_norm_lower(M, part, part, trials=10_000, seed=3)
        assert lower <= mixed_operator_norm_upper(M, part, part)

    def test_lower_deterministic(self):
        rng = np.random.default_rng(8)
        M = rng.standard_normal((4, 4))
        part = BlockPartition(d=2, count=2)
        a = mixed_operator_norm_lower(M, part, part, 100, seed=5)
        b = mixed_operator_norm_lower(M, part, part, 100, seed=5)
        assert a == b


class TestSpectralNorm:
    def test_diagonal(self):
        assert spectral_norm(np.diag([2.0, 3.0])) == pytest.approx(3.0, rel=1e-12)

    def test_orthonormal_columns(self):
        Q, _ = np.linalg.qr(np.random.default_rng(9).standard_normal((6, 3)))
        assert spectral_norm(Q) == pytest.approx(1.0, rel=1e-10)

    def test_matches_char_poly_oracle(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            X = rng.standard_normal((4, 3))
            assert spectral_norm(X) == pytest.approx(spectral_norm_cubic(X), rel=1e-10)

    def test_transpose_invariance(self):
        rng = np.random.default_rng(11)
        X = rng.standard_normal((5, 3))
        assert spectral_norm(X) == pytest.approx(spectral_norm(X.T), rel=1e-9)


class TestLeastSquares:
    def test_identity(self):
        y = np.array([1.0, -2.0, 3.0])
        assert np.allclose(least_squares(np.eye(3), y), y, atol=1e-14)

    def test_single_unit_column(self):
        a = np.array([0.6, 0.8])
        coef = least_squares(a[:, None], 5.0 * a)
        assert coef.shape == (1,)
        assert coef[0] == pytest.approx(5.0, abs=1e-12)

    def test_matches_normal_equations_oracle(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            B = rng.standard_normal((8, 3))
            y = rng.standard_normal(8)
            assert np.allclose(least_squares(B, y), normal_equations_solve_3(B, y), atol=1e-10)

    def test_residual_orthogonality(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            B = rng.standard_normal((10, 4))
            y = rng.standard_normal(10)
            r = y - B @ least_squares(B, y)
            assert np.abs(B.T @ r).max() <= 1e-8 * np.linalg.norm(y)

    def test_rank_deficiency_names_column(self):
        rng = np.random.default_rng(14)
        B = rng.standard_normal((6, 3))
        B[:, 2] = B[:, 0]
        with pytest.raises(RankDeficiencyError) as err:
            least_squares(B, rng.standard_normal(6))
        assert err.value.column == 2

    def test_empty_matrix(self):
        assert least_squares(np.zeros((4, 0)), np.ones(4)).shape == (0,)


class TestProjections:
    def test_full_space_projects_to_itself(self):
        rng = np.random.default_rng(15)
        B = rng.standard_normal((4, 4))
        y = rng.standard_normal(4)
        assert np.allclose(project_onto_range(B, y), y, atol=1e-10)

    def test_orthogonal_y_projects_to_zero(self):
        B = np.eye(4)[:, :2]
        y = np.array([0.0, 0.0, 1.0, -2.0])
        assert np.allclose(project_onto_range(B, y), 0.0, atol=1e-14)
        assert np.allclose(project_onto_nullspace(B, y), y, atol=1e-14)

    def test_decomposition_identity(self):
        rng = np.random.default_rng(16)
        for _ in range(30):
            B = rng.standard_normal((8, 3))
            y = rng.standard_normal(8)
            p = project_onto_range(B, y)
            q = project_onto_nullspace(B, y)
            ynorm = np.linalg.norm(y)
            assert np.linalg.norm(p + q - y) <= 1e-8 * ynorm
            assert np.abs(B.T @ q).max() <= 1e-8 * ynorm

    def test_idempotence(self):
        rng = np.random.default_rng(17)
        B = rng.standard_normal((9, 4))
        y = rng.standard_normal(9)
        p = project_onto_range(B, y)
        assert np.linalg.norm(project_onto_range(B, p) - p) <= 1e-8 * np.linalg.norm(y)

    def test_empty_matrix_projects_to_zero(self):
        y = np.ones(5)
        assert np.array_equal(project_onto_range(np.zeros((5, 0)), y), np.zeros(5))


class TestCsvIO:
    def test_matrix_roundtrip(self, tmp_path):
        rng = np.random.default_rng(18)
        M = rng.standard_normal((3, 5))
        path = tmp_path / "m.csv"
        save_matrix_csv(path, M)
        assert np.array_equal(load_matrix_csv(path), M)

    def test_vector_roundtrip(self, tmp_path):
        v = np.array([1.5, -2.25, 3e-17])
        path = tmp_path / "v.csv"
        save_matrix_csv(path, v[None, :])
        assert np.array_equal(load_vector_csv(path), v)
