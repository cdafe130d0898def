import numpy as np
import pytest

from fcp import linalg
from fcp.linalg import ShapeError


def test_matrix_rejects_non_2d():
    with pytest.raises(ShapeError):
        linalg.matrix([1.0, 2.0])
    with pytest.raises(ShapeError):
        linalg.matrix([[[1.0]]])


def test_matrix_rejects_empty_and_nonfinite():
    with pytest.raises(ShapeError):
        linalg.matrix(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        linalg.matrix([[1.0, float("nan")]])
    with pytest.raises(ValueError):
        linalg.matrix([[float("inf")]])


def test_matrix_is_frozen():
    m = linalg.matrix([[1.0, 2.0]])
    with pytest.raises(ValueError):
        m[0, 0] = 5.0


def test_vector_validation():
    v = linalg.vector([1.0, -2.0])
    assert v.dtype == np.float64
    with pytest.raises(ShapeError):
        linalg.vector([[1.0]])
    with pytest.raises(ShapeError):
        linalg.vector([])
    with pytest.raises(ValueError):
        linalg.vector([float("nan")])


def test_identity():
    assert np.array_equal(linalg.identity(3), np.eye(3))
    with pytest.raises(ShapeError):
        linalg.identity(0)


def test_matmul_identity_case():
    m = linalg.matrix([[1.5, -2.0, 0.25], [0.0, 3.0, 7.0]])
    assert np.array_equal(linalg.matmul(linalg.identity(2), m), m)


def test_matmul_diag_times_weights_golden():
    # Scaling the rows of a 2x3 weight matrix by a diagonal [0.5, 0.8]
    # must give the elementwise products bit-for-bit.
    diag = linalg.matrix([[0.5, 0.0], [0.0, 0.8]])
    w = linalg.matrix([[-0.01, 0.3, 0.8], [0.4, -0.1, 0.6]])
    expected = np.array(
        [
            [-0.01 * 0.5, 0.3 * 0.5, 0.8 * 0.5],
            [0.4 * 0.8, -0.1 * 0.8, 0.6 * 0.8],
        ]
    )
    assert np.array_equal(linalg.matmul(diag, w), expected)


def test_matmul_1x1():
    assert np.array_equal(linalg.matmul(linalg.matrix([[2.0]]), linalg.matrix([[3.0]])), [[6.0]])


def test_matmul_shape_error_names_both_shapes():
    a = linalg.matrix(np.ones((2, 3)))
    b = linalg.matrix(np.ones((4, 2)))
    with pytest.raises(ShapeError, match="2x3") as exc:
        linalg.matmul(a, b)
    assert "4x2" in str(exc.value)


def test_matmul_associativity():
    rng = np.random.default_rng(7)
    for _ in range(50):
        p, q, r, s = rng.integers(1, 7, size=4)
        a = linalg.matrix(rng.normal(size=(p, q)))
        b = linalg.matrix(rng.normal(size=(q, r)))
        c = linalg.matrix(rng.normal(size=(r, s)))
        left = linalg.matmul(linalg.matmul(a, b), c)
        right = linalg.matmul(a, linalg.matmul(b, c))
        np.testing.assert_allclose(left, right, rtol=1e-10, atol=1e-10)


def test_transpose_involution_and_golden():
    m = linalg.matrix([[-0.005, 0.15, 0.4], [0.32, -0.08, 0.48]])
    assert np.array_equal(linalg.transpose(linalg.transpose(m)), m)
    assert np.array_equal(
        linalg.transpose(m), [[-0.005, 0.32], [0.15, -0.08], [0.4, 0.48]]
    )


def test_transpose_row_to_column():
    assert linalg.transpose(linalg.matrix([[1.0, 2.0, 3.0]])).shape == (3, 1)


def test_transpose_of_product():
    rng = np.random.default_rng(11)
    for _ in range(30):
        p, q, r = rng.integers(1, 7, size=3)
        a = linalg.matrix(rng.normal(size=(p, q)))
        b = linalg.matrix(rng.normal(size=(q, r)))
        np.testing.assert_allclose(
            linalg.transpose(linalg.matmul(a, b)),
            linalg.matmul(linalg.transpose(b), linalg.transpose(a)),
            rtol=1e-12,
            atol=1e-12,
        )


def test_col_expand_mul_golden():
    out = linalg.col_expand_mul(linalg.vector([0.5, 0.8]), linalg.identity(2))
    assert np.array_equal(out, [[0.5, 0.0], [0.0, 0.8]])


def test_col_expand_mul_ones_and_zeros():
    m = linalg.matrix([[1.0, -2.0], [3.0, 4.0]])
    assert np.array_equal(linalg.col_expand_mul(linalg.vector([1.0, 1.0]), m), m)
    assert np.array_equal(
        linalg.col_expand_mul(linalg.vector([0.0, 0.0]), m), np.zeros((2, 2))
    )


def test_col_expand_mul_matches_diag_matmul_exactly():
    rng = np.random.default_rng(3)
    for _ in range(30):
        rows, cols = rng.integers(1, 8, size=2)
        v = linalg.vector(rng.normal(size=rows))
        m = linalg.matrix(rng.normal(size=(rows, cols)))
        assert np.array_equal(
            linalg.col_expand_mul(v, m), linalg.matmul(linalg.matrix(np.diag(v)), m)
        )


def test_col_expand_mul_length_mismatch():
    with pytest.raises(ShapeError):
        linalg.col_expand_mul(linalg.vector([1.0]), linalg.identity(2))
