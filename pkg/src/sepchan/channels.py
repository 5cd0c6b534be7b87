"""Kraus channels and their product structure."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .states import DensityOperator, PureState, make_density, make_pure
from .tensor import (
    BRANCH_TOL,
    DEFAULT_TOL,
    BipartiteDims,
    DimensionError,
    as_matrix,
    dagger,
    realign,
    svd,
    tensor_product,
)


class ChannelError(ValueError):
    """A channel is malformed or fails a precondition such as completeness."""


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Ordered Kraus operators between two bipartite spaces.

    Construction only checks shapes. Completeness is a property to verify
    with :func:`validate_channel`.
    """

    dims_in: BipartiteDims
    dims_out: BipartiteDims
    operators: tuple

    def __post_init__(self):
        if len(self.operators) == 0:
            raise ChannelError("a channel needs at least one Kraus operator")
        shape = (self.dims_out.total, self.dims_in.total)
        ops = []
        for k, op in enumerate(self.operators):
            m = as_matrix(op, f"kraus[{k}]")
            if m.shape != shape:
                raise DimensionError(f"kraus[{k}] has shape {m.shape}, expected {shape}")
            m = m.copy()
            m.flags.writeable = False
            ops.append(m)
        object.__setattr__(self, "operators", tuple(ops))

    @classmethod
    def on(cls, dims: BipartiteDims, operators: Sequence) -> "KrausChannel":
        """Dimension-preserving channel on ``dims``."""
        return cls(dims, dims, tuple(operators))

    def __len__(self) -> int:
        return len(self.operators)


@dataclass(frozen=True)
class CompletenessReport:
    deviation: float
    passed: bool


@dataclass(frozen=True, eq=False)
class ProductFactorization:
    a_factor: np.ndarray
    b_factor: np.ndarray
    residual: float

    def operator(self) -> np.ndarray:
        return tensor_product(self.a_factor, self.b_factor)


@dataclass(frozen=True)
class NotProduct:
    """Realignment has a second singular value above threshold."""

    second_singular_value: float
    first_singular_value: float


Factorization = Union[ProductFactorization, NotProduct]


@dataclass(frozen=True)
class SeparabilityReport:
    separable: bool
    operators: list


def validate_channel(ch: KrausChannel, tol: float = DEFAULT_TOL) -> CompletenessReport:
    """Frobenius deviation of ``sum_k E_k^H E_k`` from the identity."""
    total = sum(dagger(e) @ e for e in ch.operators)
    deviation = float(np.linalg.norm(total - np.eye(ch.dims_in.total)))
    return CompletenessReport(deviation, deviation <= tol)


def apply_to_density(ch: KrausChannel, rho: DensityOperator, tol: float = DEFAULT_TOL) -> DensityOperator:
    """``sum_k E_k rho E_k^H``; the channel must be complete within ``tol``."""
    if rho.dims != ch.dims_in:
        raise DimensionError(f"channel acts on {ch.dims_in}, state lives on {rho.dims}")
    report = validate_channel(ch, tol)
    if not report.passed:
        raise ChannelError(f"channel is not complete (deviation {report.deviation:.3e} > {tol})")
    out = sum(e @ rho.matrix @ dagger(e) for e in ch.operators)
    out = (out + dagger(out)) / 2
    return make_density(ch.dims_out, out, tol=max(tol, 1e-10))


def apply_branch(
    e, psi: PureState, tol: float = BRANCH_TOL, dims_out: BipartiteDims | None = None
) -> tuple[float, PureState | None]:
    """Apply one Kraus operator to a pure state.

    Returns the branch probability ``||E psi||^2`` and the normalized
    output, or ``None`` for the output when the probability is at most
    ``tol``.
    """
    e = as_matrix(e, "e")
    dims_out = psi.dims if dims_out is None else dims_out
    if e.shape != (dims_out.total, psi.dims.total):
        raise DimensionError(f"operator of shape {e.shape} cannot map {psi.dims} to {dims_out}")
    out = e @ psi.amplitudes
    prob = float(np.vdot(out, out).real)
    if prob <= tol:
        return prob, None
    return prob, make_pure(dims_out, out, normalize=True)


def factor_product(e, dims: BipartiteDims, tol: float = DEFAULT_TOL) -> Factorization:
    """Split ``e`` as ``A (x) B`` through the leading singular triple of its realignment.

    The gauge puts all scale and phase on Bob: ``||A||_F = 1`` and the
    largest-magnitude entry of ``A`` is real positive. Zero operators
    factor trivially as ``I/sqrt(dim_a) (x) 0``.
    """
    e = as_matrix(e, "e")
    n = dims.total
    if e.shape != (n, n):
        raise DimensionError(f"factor_product needs a square {n}x{n} operator, got {e.shape}")
    da, db = dims.dim_a, dims.dim_b
    if float(np.abs(e).max()) <= tol:
        a = np.eye(da, dtype=complex) / np.sqrt(da)
        return ProductFactorization(a, np.zeros((db, db), dtype=complex), 0.0)

    res = svd(realign(e, dims))
    s = res.singular_values
    second = float(s[1]) if s.size > 1 else 0.0
    if second > tol * float(s[0]):
        return NotProduct(second, float(s[0]))

    a = res.left_vectors[:, 0].reshape(da, da)
    b = s[0] * np.conj(res.right_vectors[:, 0]).reshape(db, db)
    flat = a.reshape(-1)
    k = int(np.argmax(np.abs(flat)))
    phase = flat[k] / abs(flat[k])
    a = a / phase
    b = b * phase
    residual = float(np.linalg.norm(e - np.kron(a, b)))
    return ProductFactorization(a, b, residual)


def is_separable(ch: KrausChannel, tol: float = DEFAULT_TOL) -> SeparabilityReport:
    """Every Kraus operator must factor as a local product."""
    if ch.dims_in != ch.dims_out:
        raise DimensionError("separability check needs a dimension-preserving channel")
    results = [factor_product(e, ch.dims_in, tol) for e in ch.operators]
    separable = all(isinstance(r, ProductFactorization) and r.residual <= max(tol, 1e-10) for r in results)
    return SeparabilityReport(separable, results)


def identity_channel(dims: BipartiteDims) -> KrausChannel:
    return KrausChannel.on(dims, [np.eye(dims.total)])


def depolarizing_channel(dims: BipartiteDims) -> KrausChannel:
    """Kraus set ``{|i><j| / sqrt(d)}``, mapping every state to ``I/d``."""
    d = dims.total
    ops = []
    for i in range(d):
        for j in range(d):
            m = np.zeros((d, d), dtype=complex)
            m[i, j] = 1 / np.sqrt(d)
            ops.append(m)
    return KrausChannel.on(dims, ops)


def swap_operator(d: int) -> np.ndarray:
    """SWAP on ``d (x) d``."""
    m = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            m[j * d + i, i * d + j] = 1.0
    return m
