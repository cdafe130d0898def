"""Small dense float64 matrix kernel used by the propagation pipelines.

Matrices are plain 2-D numpy arrays and vectors are 1-D arrays, both C-order
float64 and frozen (non-writeable) after construction so they can be shared
without defensive copies. Construction rejects NaN and infinity up front
rather than letting them leak into explanations.

The matrix product here deliberately avoids BLAS: it expands the products and
reduces them with a fixed summation order, so permuting rows or columns of
the operands permutes the result bit-for-bit. Explanation invariants are
checked at that strictness. Batch training code, which has no such
requirement, uses numpy's native operator instead.
"""

import numpy as np


class ShapeError(ValueError):
    """Operand shapes do not conform."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def matrix(data) -> np.ndarray:
    """Build a frozen 2-D float64 matrix.

    Rejects anything that is not finite, not 2-D, or empty along either axis.
    """
    arr = np.array(data, dtype=np.float64, order="C")
    if arr.ndim != 2:
        raise ShapeError(f"matrix must be 2-D, got {arr.ndim}-D")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"matrix must be at least 1x1, got {arr.shape[0]}x{arr.shape[1]}")
    if not np.isfinite(arr).all():
        raise ValueError("matrix entries must be finite")
    return _freeze(arr)


def vector(data) -> np.ndarray:
    """Build a frozen 1-D float64 vector with at least one finite entry."""
    arr = np.array(data, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeError(f"vector must be 1-D, got {arr.ndim}-D")
    if arr.shape[0] < 1:
        raise ShapeError("vector must have at least one entry")
    if not np.isfinite(arr).all():
        raise ValueError("vector entries must be finite")
    return _freeze(arr)


def identity(n: int) -> np.ndarray:
    """Frozen n-by-n identity matrix."""
    if n < 1:
        raise ShapeError(f"identity size must be >= 1, got {n}")
    return _freeze(np.eye(n, dtype=np.float64))


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an explicit fixed-order reduction (no BLAS).

    Slower than ``a @ b`` but bitwise reproducible under operand
    permutations, which the explanation pipeline is tested for.
    """
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul needs 2-D operands, got {a.ndim}-D and {b.ndim}-D")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}"
        )
    return _freeze(np.sum(a[:, :, None] * b[None, :, :], axis=1))


def transpose(a: np.ndarray) -> np.ndarray:
    """Frozen C-order transpose."""
    if a.ndim != 2:
        raise ShapeError(f"transpose needs a 2-D operand, got {a.ndim}-D")
    return _freeze(np.ascontiguousarray(a.T))


def col_expand_mul(v: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Scale row i of ``m`` by ``v[i]``.

    This is the column-vector expansion used when folding activations into a
    composition matrix: the vector is broadcast across each column of ``m``.
    """
    if v.ndim != 1 or m.ndim != 2:
        raise ShapeError(f"need a vector and a matrix, got {v.ndim}-D and {m.ndim}-D")
    if v.shape[0] != m.shape[0]:
        raise ShapeError(f"vector length {v.shape[0]} does not match matrix rows {m.shape[0]}")
    return _freeze(v[:, None] * m)
