"""Dense complex linear algebra at small bipartite dimensions.

Matrices are plain ``numpy`` complex arrays. Everything here is a pure
function of its inputs.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

DEFAULT_TOL = 1e-10
BRANCH_TOL = 1e-12
DEFAULT_MAX_DIM = 16


class DimensionError(ValueError):
    """Shapes or dimensions are inconsistent or exceed the configured cap."""


class NumericalError(ArithmeticError):
    """A decomposition failed to converge."""


def max_dimension() -> int:
    """Largest allowed side length of a bipartite operator.

    Read from ``SEPCHAN_MAX_DIM`` on every call, default 16.
    """
    raw = os.environ.get("SEPCHAN_MAX_DIM")
    if raw is None:
        return DEFAULT_MAX_DIM
    try:
        value = int(raw)
    except ValueError as exc:
        raise DimensionError(f"SEPCHAN_MAX_DIM must be an integer, got {raw!r}") from exc
    if value < 1:
        raise DimensionError(f"SEPCHAN_MAX_DIM must be positive, got {value}")
    return value


@dataclass(frozen=True)
class BipartiteDims:
    """Local dimensions of Alice's and Bob's subsystems."""

    dim_a: int
    dim_b: int

    def __post_init__(self):
        for name in ("dim_a", "dim_b"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
                raise DimensionError(f"{name} must be a positive integer, got {value!r}")
        cap = max_dimension()
        if self.dim_a * self.dim_b > cap:
            raise DimensionError(
                f"total dimension {self.dim_a}*{self.dim_b} exceeds maximum {cap} "
                "(raise SEPCHAN_MAX_DIM to allow it)"
            )

    @property
    def total(self) -> int:
        return self.dim_a * self.dim_b

    def as_list(self) -> list[int]:
        return [int(self.dim_a), int(self.dim_b)]

    def __str__(self) -> str:
        return f"{self.dim_a}x{self.dim_b}"


class SvdResult(NamedTuple):
    """``m = left_vectors @ diag(singular_values) @ right_vectors^H`` (full bases)."""

    left_vectors: np.ndarray
    singular_values: np.ndarray
    right_vectors: np.ndarray


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D complex array."""
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product with Alice-major block layout.

    ``(a (x) b)[i*rows_b + k, j*cols_b + l] = a[i, j] * b[k, l]``.
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    cap = max_dimension()
    if rows > cap or cols > cap:
        raise DimensionError(f"tensor product of shape {rows}x{cols} exceeds maximum dimension {cap}")
    return np.kron(a, b)


def svd(m) -> SvdResult:
    """Full singular value decomposition, singular values descending.

    A zero matrix gives zero singular values with identity bases.
    """
    m = as_matrix(m)
    rows, cols = m.shape
    k = min(rows, cols)
    if not np.any(m):
        return SvdResult(np.eye(rows, dtype=complex), np.zeros(k), np.eye(cols, dtype=complex))
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"SVD did not converge for {rows}x{cols} input "
            f"(frobenius norm {np.linalg.norm(m):.3e}, max |entry| {np.abs(m).max():.3e})"
        ) from exc
    return SvdResult(u, s, vh.conj().T)


def numerical_rank(singular_values, tol: float = DEFAULT_TOL) -> int:
    """Count singular values above ``tol * max(1, largest)``."""
    s = np.asarray(singular_values, dtype=float)
    if s.size == 0:
        return 0
    threshold = tol * max(1.0, float(s.max()))
    return int(np.count_nonzero(s > threshold))


def realign(e, dims: BipartiteDims) -> np.ndarray:
    """Reshuffle a bipartite operator so that products become rank one.

    Returns the ``dim_a**2 x dim_b**2`` matrix with
    ``R[i*dim_a + j, k*dim_b + l] = e[i*dim_b + k, j*dim_b + l]``; for
    ``e = A (x) B`` this is ``vec(A) vec(B)^T`` with row-major ``vec``.
    """
    e = as_matrix(e, "e")
    n = dims.total
    if e.shape != (n, n):
        raise DimensionError(f"operator of shape {e.shape} does not act on {dims} (expected {n}x{n})")
    da, db = dims.dim_a, dims.dim_b
    t = e.reshape(da, db, da, db)
    return t.transpose(0, 2, 1, 3).reshape(da * da, db * db)


def unrealign(r, dims: BipartiteDims) -> np.ndarray:
    """Inverse of :func:`realign`."""
    r = as_matrix(r, "r")
    da, db = dims.dim_a, dims.dim_b
    if r.shape != (da * da, db * db):
        raise DimensionError(f"realigned matrix of shape {r.shape} does not match {dims}")
    return r.reshape(da, da, db, db).transpose(0, 2, 1, 3).reshape(da * db, da * db)


def frobenius_distance(a, b) -> float:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.transpose(m))
