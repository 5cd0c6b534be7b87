"""Bipartite pure and mixed states, Schmidt decompositions, and span analysis."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

import numpy as np

from .tensor import (
    DEFAULT_TOL,
    BipartiteDims,
    DimensionError,
    dagger,
    frobenius_distance,
    svd,
)


class StateError(ValueError):
    """A vector or matrix violates the invariants of a quantum state."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class PureState:
    dims: BipartiteDims
    amplitudes: np.ndarray

    def coefficient_matrix(self) -> np.ndarray:
        """Amplitudes reshaped to ``dim_a x dim_b``."""
        return self.amplitudes.reshape(self.dims.dim_a, self.dims.dim_b)

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def density(self) -> "DensityOperator":
        return DensityOperator(self.dims, _frozen(self.projector()))


@dataclass(frozen=True, eq=False)
class DensityOperator:
    dims: BipartiteDims
    matrix: np.ndarray


def make_pure(dims: BipartiteDims, amplitudes, normalize: bool = False, tol: float = DEFAULT_TOL) -> PureState:
    """Validate amplitudes and wrap them as a :class:`PureState`.

    Without ``normalize`` the vector must already have unit norm within
    ``tol``; with it, any vector of norm above 1e-12 is rescaled.
    """
    vec = np.asarray(amplitudes, dtype=complex).reshape(-1)
    if vec.size != dims.total:
        raise DimensionError(f"expected {dims.total} amplitudes for {dims}, got {vec.size}")
    if not np.all(np.isfinite(vec)):
        raise StateError("amplitudes contain non-finite values")
    norm = float(np.linalg.norm(vec))
    if normalize:
        if norm <= 1e-12:
            raise StateError("cannot normalize the zero vector")
        vec = vec / norm
    elif abs(norm - 1.0) > tol:
        raise StateError(f"state norm {norm!r} deviates from 1 by more than {tol}")
    return PureState(dims, _frozen(vec))


def make_density(dims: BipartiteDims, matrix, tol: float = DEFAULT_TOL) -> DensityOperator:
    """Validate a Hermitian, positive semidefinite, unit-trace matrix."""
    m = np.asarray(matrix, dtype=complex)
    n = dims.total
    if m.shape != (n, n):
        raise DimensionError(f"density matrix of shape {m.shape} does not match {dims}")
    if not np.all(np.isfinite(m)):
        raise StateError("density matrix contains non-finite values")
    herm_dev = float(np.abs(m - dagger(m)).max())
    if herm_dev > tol:
        raise StateError(f"density matrix is not Hermitian (max deviation {herm_dev:.3e})")
    tr = complex(np.trace(m))
    if abs(tr - 1.0) > tol:
        raise StateError(f"density matrix trace {tr.real!r} deviates from 1 by more than {tol}")
    low = float(np.linalg.eigvalsh((m + dagger(m)) / 2).min())
    if low < -tol:
        raise StateError(f"density matrix has negative eigenvalue {low:.3e}")
    return DensityOperator(dims, _frozen(m))


def basis_state(dims: BipartiteDims, i: int, j: int) -> PureState:
    """Computational basis state ``|i j>``."""
    vec = np.zeros(dims.total, dtype=complex)
    vec[i * dims.dim_b + j] = 1.0
    return make_pure(dims, vec)


def partial_trace_b(rho, dims: BipartiteDims) -> np.ndarray:
    """Trace out Bob's subsystem."""
    t = np.asarray(rho, dtype=complex).reshape(dims.dim_a, dims.dim_b, dims.dim_a, dims.dim_b)
    return np.einsum("ijkj->ik", t)


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    weights: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray
    rank: int
    tol: float

    def reconstruct(self) -> np.ndarray:
        """Rebuild the amplitude vector from the retained terms."""
        out = 0
        for k in range(len(self.weights)):
            out = out + np.sqrt(self.weights[k]) * np.kron(self.left_vectors[:, k], self.right_vectors[:, k])
        return np.asarray(out, dtype=complex)


def schmidt_decompose(psi: PureState, tol: float = DEFAULT_TOL) -> SchmidtDecomposition:
    """Schmidt decomposition from the SVD of the coefficient matrix.

    ``left_vectors[:, k]`` and ``right_vectors[:, k]`` are the local vectors
    paired with ``weights[k]``; the state equals
    ``sum_k sqrt(weights[k]) left_k (x) right_k``. Full local bases are
    kept so callers can pad kernel directions.
    """
    res = svd(psi.coefficient_matrix())
    s = res.singular_values
    weights = s**2
    # M = U S V^H, so the k-th right vector is row k of V^H, i.e. conj of column k of V.
    right = np.conj(res.right_vectors)
    rank = int(np.count_nonzero(weights > tol))
    return SchmidtDecomposition(
        weights=weights,
        left_vectors=res.left_vectors,
        right_vectors=right,
        rank=rank,
        tol=tol,
    )


def schmidt_rank(psi: PureState, tol: float = DEFAULT_TOL) -> int:
    return schmidt_decompose(psi, tol).rank


def eigendecompose(rho: DensityOperator, tol: float = DEFAULT_TOL) -> list[tuple[float, PureState]]:
    """Eigenpairs of ``rho`` with weight above ``tol``, heaviest first.

    Degenerate eigenspaces come back in whatever orthonormal basis the
    eigensolver picks; callers must not depend on that choice.
    """
    m = np.asarray(rho.matrix)
    vals, vecs = np.linalg.eigh((m + dagger(m)) / 2)
    order = np.argsort(vals)[::-1]
    out = []
    for k in order:
        if vals[k] > tol:
            out.append((float(vals[k]), make_pure(rho.dims, vecs[:, k], normalize=True)))
    return out


def fidelity_with_pure(rho: DensityOperator, phi: PureState) -> float:
    """``<phi| rho |phi>``."""
    if rho.dims != phi.dims:
        raise DimensionError(f"dimension mismatch: {rho.dims} vs {phi.dims}")
    value = complex(np.conj(phi.amplitudes) @ rho.matrix @ phi.amplitudes)
    return float(value.real)


def overlap(a: PureState, b: PureState) -> complex:
    """Inner product ``<a|b>``."""
    if a.dims != b.dims:
        raise DimensionError(f"dimension mismatch: {a.dims} vs {b.dims}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def is_proportional(a: PureState, b: PureState, tol: float = DEFAULT_TOL) -> bool:
    """Equal up to global phase, tested as ``1 - |<a|b>| <= tol``."""
    return 1.0 - abs(overlap(a, b)) <= tol


def phase_fixed(vec: np.ndarray) -> np.ndarray:
    """Rotate by a global phase so the largest-magnitude entry is real positive."""
    vec = np.asarray(vec, dtype=complex)
    k = int(np.argmax(np.abs(vec)))
    if abs(vec[k]) == 0:
        return vec.copy()
    return vec * (abs(vec[k]) / vec[k])


class SpanVerdict(enum.Enum):
    NO_PRODUCT = "NoProduct"
    FINITE_SET = "FiniteSet"
    ALL_OF_SPAN = "AllOfSpan"


@dataclass(frozen=True)
class SpanProductReport:
    verdict: SpanVerdict
    witnesses: list[tuple[complex, complex]] = field(default_factory=list)

    def product_vectors(self, psi1: PureState, psi2: PureState) -> list[PureState]:
        return [make_pure(psi1.dims, c * psi1.amplitudes + d * psi2.amplitudes, normalize=True) for c, d in self.witnesses]


def _minor_polynomials(m1: np.ndarray, m2: np.ndarray) -> np.ndarray:
    """Coefficients ``(a0, a1, a2)`` of every 2x2 minor of ``m1 + t*m2``."""
    rows, cols = m1.shape
    polys = []
    for r0, r1 in itertools.combinations(range(rows), 2):
        for c0, c1 in itertools.combinations(range(cols), 2):
            p, q, r, s = m1[r0, c0], m1[r1, c1], m1[r0, c1], m1[r1, c0]
            u, v, w, x = m2[r0, c0], m2[r1, c1], m2[r0, c1], m2[r1, c0]
            a0 = p * q - r * s
            a1 = p * v + u * q - r * x - w * s
            a2 = u * v - w * x
            polys.append((a0, a1, a2))
    return np.array(polys, dtype=complex)


def _quadratic_roots(a0: complex, a1: complex, a2: complex, tol: float) -> list[complex | None]:
    """Roots of ``a0 + a1 t + a2 t^2`` on the projective line; ``None`` is t = infinity."""
    if abs(a2) > tol:
        disc = a1 * a1 - 4 * a2 * a0
        if abs(disc) <= tol * max(1.0, abs(a1) ** 2):
            return [-a1 / (2 * a2)]
        sq = np.sqrt(disc)
        # pick the sign that avoids cancellation, then use Vieta for the other root
        big = -(a1 + sq) / 2 if abs(a1 + sq) >= abs(a1 - sq) else -(a1 - sq) / 2
        t1 = big / a2
        t2 = a0 / big if big != 0 else -a1 / a2 - t1
        return [complex(t1), complex(t2)]
    if abs(a1) > tol:
        return [complex(-a0 / a1), None]
    return [None]


def product_vectors_in_span(psi1: PureState, psi2: PureState, tol: float = DEFAULT_TOL) -> SpanProductReport:
    """Find every product vector ``c psi1 + d psi2`` in a two-dimensional span.

    The 2x2 minors of ``M1 + t M2`` (coefficient matrices) are quadratics
    in ``t``; product vectors are their common roots, with ``t = inf``
    standing for ``psi2`` itself. Witnesses ``(c, d)`` are scaled so that
    ``max(|c|, |d|) = 1``.
    """
    if psi1.dims != psi2.dims:
        raise DimensionError(f"dimension mismatch: {psi1.dims} vs {psi2.dims}")
    if psi1.dims.dim_a < 2 or psi1.dims.dim_b < 2:
        raise DimensionError(f"span analysis needs at least 2x2 systems, got {psi1.dims}")
    v1, v2 = psi1.amplitudes, psi2.amplitudes
    gram = np.array([[np.vdot(v1, v1), np.vdot(v1, v2)], [np.vdot(v2, v1), np.vdot(v2, v2)]])
    if abs(np.linalg.det(gram)) <= tol:
        raise StateError("span inputs are linearly dependent")

    polys = _minor_polynomials(psi1.coefficient_matrix(), psi2.coefficient_matrix())
    sizes = np.abs(polys).max(axis=1)
    if sizes.max() <= tol:
        return SpanProductReport(SpanVerdict.ALL_OF_SPAN, [(1.0 + 0j, 0j), (0j, 1.0 + 0j)])

    lead = polys[int(np.argmax(sizes))]
    candidates = _quadratic_roots(*lead, tol=tol)

    witnesses: list[tuple[complex, complex]] = []
    for t in candidates:
        if t is None:
            ok = np.abs(polys[:, 2]).max() <= tol
            pair = (0j, 1.0 + 0j)
        else:
            values = polys[:, 0] + t * polys[:, 1] + t * t * polys[:, 2]
            ok = np.abs(values).max() <= tol * (1 + abs(t) ** 2)
            pair = (1.0 + 0j, complex(t)) if abs(t) <= 1 else (complex(1 / t), 1.0 + 0j)
        if ok and not any(_same_point(pair, w) for w in witnesses):
            witnesses.append(pair)

    if not witnesses:
        return SpanProductReport(SpanVerdict.NO_PRODUCT, [])
    return SpanProductReport(SpanVerdict.FINITE_SET, witnesses)


def _same_point(p: tuple[complex, complex], q: tuple[complex, complex], tol: float = 1e-9) -> bool:
    # projective equality: c1 d2 - c2 d1 = 0
    return abs(p[0] * q[1] - p[1] * q[0]) <= tol


def reconstruction_error(rho: DensityOperator, pairs: list[tuple[float, PureState]]) -> float:
    rebuilt = sum(w * s.projector() for w, s in pairs)
    return frobenius_distance(rho.matrix, rebuilt)


__all__ = [
    "DensityOperator",
    "PureState",
    "SchmidtDecomposition",
    "SpanProductReport",
    "SpanVerdict",
    "StateError",
    "basis_state",
    "eigendecompose",
    "fidelity_with_pure",
    "is_proportional",
    "make_density",
    "make_pure",
    "overlap",
    "partial_trace_b",
    "phase_fixed",
    "product_vectors_in_span",
    "reconstruction_error",
    "schmidt_decompose",
    "schmidt_rank",
]
