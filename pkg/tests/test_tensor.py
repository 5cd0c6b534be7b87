import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randoms import ginibre, random_unitary
from sepchan.distill import PaperConstants, paper_channel, paper_local_factors
from sepchan.tensor import (
    BipartiteDims,
    DimensionError,
    frobenius_distance,
    numerical_rank,
    realign,
    svd,
    tensor_product,
    unrealign,
)

ALPHA = (2 - np.sqrt(3)) / 4
BETA = 2 + np.sqrt(3)


def realign_by_loops(e, da, db):
    """Index-by-index reference for the realignment convention."""
    r = np.zeros((da * da, db * db), dtype=complex)
    for i in range(da):
        for j in range(da):
            for k in range(db):
                for l in range(db):
                    r[i * da + j, k * db + l] = e[i * db + k, j * db + l]
    return r


def e1_by_hand():
    """E_1 written out entry by entry."""
    e = np.zeros((9, 9))
    sa, sb = np.sqrt(ALPHA), np.sqrt(BETA)
    # A = sqrt(b)|0><0| + |1><1|, B = sqrt(b)|0><1| + |1><0|; entry index (i,k),(j,l) -> 3i+k, 3j+l
    e[0, 1] = sa * sb * sb
    e[1, 0] = sa * sb
    e[3, 4] = sa * sb
    e[4, 3] = sa
    return e


class TestTensorProduct:
    def test_identities(self):
        np.testing.assert_array_equal(tensor_product(np.eye(2), np.eye(3)), np.eye(6))

    def test_elementary_placement(self):
        ket0bra0 = np.array([[1, 0], [0, 0]])
        ket1bra0 = np.array([[0, 0], [1, 0]])
        out = tensor_product(ket0bra0, ket1bra0)
        expected = np.zeros((4, 4))
        expected[1, 0] = 1
        np.testing.assert_array_equal(out, expected)

    def test_builtin_e1_matches_hand_expansion(self):
        a, b = paper_local_factors()[0]
        assert np.abs(tensor_product(a, b) - e1_by_hand()).max() < 1e-15
        assert np.abs(paper_channel().operators[0] - e1_by_hand()).max() < 1e-15

    def test_block_layout(self):
        rng = np.random.default_rng(1)
        a, b = ginibre(rng, 2, 3), ginibre(rng, 3, 2)
        out = tensor_product(a, b)
        for i in range(2):
            for j in range(3):
                for k in range(3):
                    for l in range(2):
                        assert abs(out[i * 3 + k, j * 2 + l] - a[i, j] * b[k, l]) < 1e-15

    def test_size_cap(self, monkeypatch):
        with pytest.raises(DimensionError):
            tensor_product(np.eye(5), np.eye(4))
        monkeypatch.setenv("SEPCHAN_MAX_DIM", "25")
        assert tensor_product(np.eye(5), np.eye(5)).shape == (25, 25)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), scale=st.complex_numbers(max_magnitude=10, allow_nan=False))
    def test_bilinear(self, seed, scale):
        rng = np.random.default_rng(seed)
        a, a2, b = ginibre(rng, 2), ginibre(rng, 2), ginibre(rng, 3)
        lhs = tensor_product(scale * a + a2, b)
        rhs = scale * tensor_product(a, b) + tensor_product(a2, b)
        assert np.abs(lhs - rhs).max() <= 1e-12 * max(1.0, abs(scale))


class TestSvd:
    def test_identity(self):
        np.testing.assert_allclose(svd(np.eye(3)).singular_values, [1, 1, 1])

    def test_diagonal(self):
        np.testing.assert_allclose(svd(np.diag([3.0, 0.0])).singular_values, [3, 0])

    def test_bell_like_coefficients(self):
        # (|01> + |10>)/sqrt2 on 2x3; oracle: eigenvalues of the reduced density operator
        c = np.zeros((2, 3))
        c[0, 1] = c[1, 0] = 1 / np.sqrt(2)
        oracle = np.sqrt(np.sort(np.linalg.eigvalsh(c @ c.conj().T))[::-1])
        np.testing.assert_allclose(svd(c).singular_values, oracle, atol=1e-12)
        np.testing.assert_allclose(svd(c).singular_values, [1 / np.sqrt(2)] * 2, atol=1e-12)

    def test_zero_matrix_gets_identity_bases(self):
        res = svd(np.zeros((2, 3)))
        np.testing.assert_array_equal(res.singular_values, [0, 0])
        np.testing.assert_array_equal(res.left_vectors, np.eye(2))
        np.testing.assert_array_equal(res.right_vectors, np.eye(3))

    def test_reconstruction_many_random(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            rows, cols = rng.integers(1, 10, size=2)
            m = ginibre(rng, rows, cols) * rng.uniform(0.01, 100)
            u, s, v = svd(m)
            k = len(s)
            assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
            rebuilt = u[:, :k] @ np.diag(s) @ v[:, :k].conj().T
            assert np.linalg.norm(m - rebuilt) <= 1e-10 * max(1.0, np.linalg.norm(m))
            np.testing.assert_allclose(u.conj().T @ u, np.eye(rows), atol=1e-10)
            np.testing.assert_allclose(v.conj().T @ v, np.eye(cols), atol=1e-10)

    def test_unitary_invariance(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            d = int(rng.integers(2, 10))
            m = ginibre(rng, d, int(rng.integers(1, 10)))
            u = random_unitary(rng, d)
            np.testing.assert_allclose(svd(u @ m).singular_values, svd(m).singular_values, atol=1e-10)

    def test_numerical_rank_is_relative(self):
        assert numerical_rank([1e6, 1e-5]) == 1
        assert numerical_rank([1.0, 1e-9]) == 2
        assert numerical_rank([0.0, 0.0]) == 0


class TestRealign:
    def test_identity_is_rank_one(self):
        dims = BipartiteDims(2, 2)
        r = realign(np.eye(4), dims)
        vec_i = np.eye(2).reshape(-1)
        np.testing.assert_array_equal(r, np.outer(vec_i, vec_i.conj()))
        assert numerical_rank(svd(r).singular_values) == 1

    def test_swap_is_full_rank(self):
        swap = np.zeros((4, 4))
        for i in range(2):
            for j in range(2):
                swap[j * 2 + i, i * 2 + j] = 1
        oracle = np.linalg.svd(realign_by_loops(swap, 2, 2), compute_uv=False)
        np.testing.assert_allclose(oracle, [1, 1, 1, 1])
        assert numerical_rank(svd(realign(swap, BipartiteDims(2, 2))).singular_values) == 4

    def test_builtin_e1_is_product(self):
        s = svd(realign(paper_channel().operators[0], BipartiteDims(3, 3))).singular_values
        assert s[1] <= 1e-12

    @pytest.mark.parametrize("da,db", [(2, 2), (2, 3), (3, 2), (3, 3), (4, 2)])
    def test_matches_loop_definition_and_inverts(self, da, db):
        rng = np.random.default_rng(da * 10 + db)
        e = ginibre(rng, da * db)
        dims = BipartiteDims(da, db)
        np.testing.assert_array_equal(realign(e, dims), realign_by_loops(e, da, db))
        np.testing.assert_array_equal(unrealign(realign(e, dims), dims), e)

    def test_products_have_rank_one(self):
        rng = np.random.default_rng(3)
        for _ in range(300):
            da, db = rng.integers(1, 4, size=2)
            a, b = ginibre(rng, da), ginibre(rng, db)
            s = svd(realign(np.kron(a, b), BipartiteDims(int(da), int(db)))).singular_values
            if s.size > 1:
                assert s[1] <= 1e-10 * s[0]

    def test_wrong_shape(self):
        with pytest.raises(DimensionError):
            realign(np.eye(6), BipartiteDims(2, 2))


class TestFrobenius:
    def test_identical(self):
        m = ginibre(np.random.default_rng(0), 3)
        assert frobenius_distance(m, m) == 0

    def test_closed_form(self):
        assert frobenius_distance(np.eye(2), np.zeros((2, 2))) == pytest.approx(np.sqrt(2), abs=1e-15)

    def test_builtin_completeness_by_explicit_sum(self):
        total = np.zeros((9, 9), dtype=complex)
        for e in paper_channel().operators:
            for i in range(9):
                for j in range(9):
                    total[i, j] += sum(np.conj(e[k, i]) * e[k, j] for k in range(9))
        assert frobenius_distance(total, np.eye(9)) <= 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            frobenius_distance(np.eye(2), np.eye(3))


class TestDims:
    def test_validation(self):
        with pytest.raises(DimensionError):
            BipartiteDims(0, 2)
        with pytest.raises(DimensionError):
            BipartiteDims(5, 4)

    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("SEPCHAN_MAX_DIM", "20")
        assert BipartiteDims(5, 4).total == 20


def test_constants_identities():
    c = PaperConstants()
    assert abs(c.normalization - 1) <= 1e-14
    assert abs(c.completeness - 1) <= 1e-14
