"""Deterministic pure-state distillation by a separable channel on 3x3.

Builds the six-operator separable channel, its mixed source and pure
target, and the checks that certify (or refute) a deterministic
conversion.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .channels import (
    ChannelError,
    KrausChannel,
    ProductFactorization,
    apply_branch,
    apply_to_density,
    factor_product,
    validate_channel,
)
from .states import (
    DensityOperator,
    PureState,
    eigendecompose,
    fidelity_with_pure,
    make_density,
    make_pure,
    overlap,
    schmidt_decompose,
)
from .tensor import BRANCH_TOL, DEFAULT_TOL, BipartiteDims, DimensionError, numerical_rank, svd, tensor_product

QUTRITS = BipartiteDims(3, 3)


@dataclass(frozen=True)
class PaperConstants:
    alpha: float = (2 - np.sqrt(3)) / 4
    beta: float = 2 + np.sqrt(3)

    @property
    def normalization(self) -> float:
        """``4 alpha beta``, which must equal 1."""
        return 4 * self.alpha * self.beta

    @property
    def completeness(self) -> float:
        """``alpha (beta^2 + 1)``, which must equal 1."""
        return self.alpha * (self.beta**2 + 1)


def _ket(i: int, d: int = 3) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[i] = 1
    return v


def _op(i: int, j: int, d: int = 3) -> np.ndarray:
    """``|i><j|`` on a single qutrit."""
    return np.outer(_ket(i, d), _ket(j, d))


def paper_local_factors(constants: PaperConstants = PaperConstants()) -> list[tuple[np.ndarray, np.ndarray]]:
    """Alice and Bob factors of E_1..E_6, overall scale folded into Alice."""
    sa, sb = np.sqrt(constants.alpha), np.sqrt(constants.beta)
    g = np.sqrt(2 * constants.alpha * constants.beta)
    return [
        (sa * (sb * _op(0, 0) + _op(1, 1)), sb * _op(0, 1) + _op(1, 0)),
        (sa * (_op(1, 0) + sb * _op(0, 1)), _op(1, 1) + sb * _op(0, 0)),
        (sa * (sb * _op(0, 0) + _op(1, 2)), sb * _op(0, 2) + _op(1, 0)),
        (sa * (_op(1, 0) + sb * _op(0, 2)), _op(1, 2) + sb * _op(0, 0)),
        (_op(1, 1), g * _op(1, 1) + _op(2, 2)),
        (_op(2, 2), _op(1, 1) + g * _op(2, 2)),
    ]


def paper_channel(constants: PaperConstants = PaperConstants()) -> KrausChannel:
    return KrausChannel.on(QUTRITS, [tensor_product(a, b) for a, b in paper_local_factors(constants)])


def paper_eigenstates() -> tuple[PureState, PureState]:
    """``(|01> + |10>)/sqrt2`` and ``(|02> + |20>)/sqrt2``."""
    psi1 = np.zeros(9, dtype=complex)
    psi1[[1, 3]] = 1 / np.sqrt(2)
    psi2 = np.zeros(9, dtype=complex)
    psi2[[2, 6]] = 1 / np.sqrt(2)
    return make_pure(QUTRITS, psi1), make_pure(QUTRITS, psi2)


def paper_source(p: float) -> DensityOperator:
    """``p |psi1><psi1| + (1 - p) |psi2><psi2|``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"mixing weight p must lie in [0, 1], got {p}")
    psi1, psi2 = paper_eigenstates()
    return make_density(QUTRITS, p * psi1.projector() + (1 - p) * psi2.projector())


def paper_target(constants: PaperConstants = PaperConstants()) -> PureState:
    """``sqrt(alpha) (beta |00> + |11>)``."""
    amps = np.zeros(9, dtype=complex)
    amps[0] = np.sqrt(constants.alpha) * constants.beta
    amps[4] = np.sqrt(constants.alpha)
    return make_pure(QUTRITS, amps)


@dataclass(frozen=True)
class OperatorRecord:
    """Branch data for one Kraus operator.

    ``probabilities[i]`` and ``coefficients[i]`` (``|<phi| E_k psi_i>|``)
    refer to the i-th source eigenstate.
    """

    index: int
    probabilities: tuple
    coefficients: tuple
    passed: bool
    reason: str


@dataclass(frozen=True)
class DistillationReport:
    success: bool
    weights: tuple
    per_operator: list
    total_probability: tuple
    fidelity_grid: list
    failures: list = field(default_factory=list)


def _classify_branch(e, psi: PureState, phi: PureState, tol: float) -> tuple[float, float, str | None]:
    prob, post = apply_branch(e, psi, BRANCH_TOL, dims_out=phi.dims)
    if post is None:
        return prob, 0.0, None
    ov = abs(overlap(phi, post))
    if 1.0 - ov > tol:
        return prob, float(np.sqrt(prob) * ov), "NotProportional"
    return prob, float(np.sqrt(prob) * ov), None


def verify_branches(ch: KrausChannel, states, phi: PureState, tol: float = DEFAULT_TOL):
    """Per-operator proportionality check on a fixed list of input states.

    Returns ``(records, totals, failures)``. Zero-probability branches pass.
    """
    records = []
    failures = []
    totals = np.zeros(len(states))
    for k, e in enumerate(ch.operators):
        probs, coeffs, reasons = [], [], []
        for i, psi in enumerate(states):
            prob, coeff, reason = _classify_branch(e, psi, phi, tol)
            probs.append(prob)
            coeffs.append(coeff)
            totals[i] += prob
            if reason is not None:
                reasons.append(f"{reason} on eigenstate {i}")
        passed = not reasons
        reason = "ok" if passed else "; ".join(reasons)
        if not passed:
            failures.append(f"NotProportional at operator {k}")
        records.append(OperatorRecord(k, tuple(probs), tuple(coeffs), passed, reason))
    for i, t in enumerate(totals):
        if abs(t - 1.0) > tol:
            failures.append(f"total probability {t:.12g} for eigenstate {i}")
    return records, tuple(float(t) for t in totals), failures


def _mixture_grid(pairs, n: int = 21):
    """Densities ``p |psi_1><psi_1| + (1 - p) sigma_rest`` for a grid of ``p``.

    ``sigma_rest`` is the renormalized remainder of the spectrum, so the
    input itself sits at ``p = weight_1``.
    """
    lead_w, lead = pairs[0]
    rest = pairs[1:]
    if not rest:
        return [(1.0, lead.projector())]
    rest_total = sum(w for w, _ in rest)
    sigma = sum(w * s.projector() for w, s in rest) / rest_total
    grid = [float(p) for p in np.linspace(0.0, 1.0, n)]
    if min(abs(p - lead_w) for p in grid) > 1e-12:
        grid = sorted(grid + [lead_w])
    return [(p, p * lead.projector() + (1 - p) * sigma) for p in grid]


def verify_deterministic_distillation(
    ch: KrausChannel, rho: DensityOperator, phi: PureState, tol: float = DEFAULT_TOL
) -> DistillationReport:
    """Check that ``ch`` maps ``rho`` to ``|phi><phi|`` with certainty.

    Two conditions must hold. Every Kraus branch sends every eigenstate of
    ``rho`` either to zero or to a multiple of ``phi``. The channel output
    itself has fidelity at least ``1 - tol`` with ``phi``, for ``rho`` and
    for a grid of other mixtures of its eigenstates. The second condition
    does not care how a degenerate eigenspace was diagonalized.
    """
    if rho.dims != ch.dims_in or phi.dims != ch.dims_out:
        raise DimensionError(f"channel {ch.dims_in}->{ch.dims_out} does not match state {rho.dims} / target {phi.dims}")
    report = validate_channel(ch, tol)
    if not report.passed:
        raise ChannelError(f"channel is not complete (deviation {report.deviation:.3e} > {tol})")

    pairs = eigendecompose(rho, tol)
    states = [s for _, s in pairs]
    records, totals, failures = verify_branches(ch, states, phi, tol)

    grid = []
    for p, m in _mixture_grid(pairs):
        sample = make_density(rho.dims, m, tol=1e-9)
        fid = fidelity_with_pure(apply_to_density(ch, sample, tol), phi)
        grid.append((float(p), fid))
        if fid < 1 - tol:
            failures.append(f"fidelity {fid:.12g} at p={p:.6g}")
    return DistillationReport(
        success=not failures,
        weights=tuple(w for w, _ in pairs),
        per_operator=records,
        total_probability=totals,
        fidelity_grid=grid,
        failures=failures,
    )


class BranchCase(enum.Enum):
    BOTH_NONZERO = "BothNonzero"
    ONE_NONZERO = "OneNonzero"
    BOTH_ZERO = "BothZero"
    NOT_PROPORTIONAL = "NotProportional"


@dataclass(frozen=True, eq=False)
class SpanWitness:
    """The normalized vector ``d psi1 - c psi2`` and what kills it."""

    state: PureState
    schmidt_rank: int
    is_product: bool
    bob_residual: float


@dataclass(frozen=True, eq=False)
class CaseRecord:
    index: int
    c: complex
    d: complex
    case: BranchCase
    witness: SpanWitness | None
    rank_a: int
    rank_b: int


@dataclass(frozen=True)
class CaseAnalysisReport:
    per_operator: list

    def cases(self) -> list[BranchCase]:
        return [r.case for r in self.per_operator]


def _coefficient(e, psi: PureState, phi: PureState, tol: float) -> complex | None:
    """``c`` with ``E psi = c phi``, or ``None`` if the output is not a multiple of ``phi``."""
    out = np.asarray(e) @ psi.amplitudes
    norm = float(np.linalg.norm(out))
    if norm**2 <= BRANCH_TOL:
        return 0j
    c = complex(np.vdot(phi.amplitudes, out))
    if 1.0 - abs(c) / norm > tol:
        return None
    return c


def thm1_case_analysis(
    ch: KrausChannel, psi1: PureState, psi2: PureState, phi: PureState, tol: float = DEFAULT_TOL
) -> CaseAnalysisReport:
    """Sort each product Kraus operator ``A (x) B`` by how it treats ``psi1`` and ``psi2``.

    With ``(A (x) B) psi1 = c phi`` and ``(A (x) B) psi2 = d phi``, an
    operator is NotProportional, BothZero, OneNonzero or BothNonzero.
    For BothNonzero with ``A`` of full rank the vector ``d psi1 - c psi2``
    is annihilated by ``I (x) B``, so it must be a product vector; it is
    attached as a witness together with its Schmidt rank.
    """
    dims = ch.dims_in
    if psi1.dims != dims or psi2.dims != dims or phi.dims != ch.dims_out:
        raise DimensionError("states do not match the channel dimensions")
    if abs(np.vdot(psi1.amplitudes, psi2.amplitudes)) >= 1 - tol:
        raise ValueError("psi1 and psi2 must be linearly independent")

    records = []
    for k, e in enumerate(ch.operators):
        fac = factor_product(e, dims, tol)
        if not isinstance(fac, ProductFactorization) or fac.residual > max(tol, 1e-10) * max(1.0, np.linalg.norm(e)):
            raise ChannelError(f"kraus[{k}] is not a product operator")
        rank_a = numerical_rank(svd(fac.a_factor).singular_values, tol)
        rank_b = numerical_rank(svd(fac.b_factor).singular_values, tol)
        c = _coefficient(e, psi1, phi, tol)
        d = _coefficient(e, psi2, phi, tol)
        witness = None
        if c is None or d is None:
            case = BranchCase.NOT_PROPORTIONAL
            c = 0j if c is None else c
            d = 0j if d is None else d
        else:
            nz_c, nz_d = abs(c) ** 2 > BRANCH_TOL, abs(d) ** 2 > BRANCH_TOL
            if nz_c and nz_d:
                case = BranchCase.BOTH_NONZERO
                if rank_a == dims.dim_a:
                    witness = _span_witness(fac, psi1, psi2, c, d, tol)
            elif nz_c or nz_d:
                case = BranchCase.ONE_NONZERO
            else:
                case = BranchCase.BOTH_ZERO
        records.append(CaseRecord(k, c, d, case, witness, rank_a, rank_b))
    return CaseAnalysisReport(records)


def _span_witness(fac: ProductFactorization, psi1, psi2, c, d, tol) -> SpanWitness:
    vec = d * psi1.amplitudes - c * psi2.amplitudes
    state = make_pure(psi1.dims, vec, normalize=True)
    bob = np.kron(np.eye(psi1.dims.dim_a), fac.b_factor)
    residual = float(np.linalg.norm(bob @ state.amplitudes))
    rank = schmidt_decompose(state, tol).rank
    return SpanWitness(state, rank, rank == 1, residual)


def random_product_operator(rng: np.random.Generator, dims: BipartiteDims) -> tuple[np.ndarray, np.ndarray]:
    def gauss(n):
        return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)

    return gauss(dims.dim_a), gauss(dims.dim_b)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((m + m.conj().T) / 2)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def random_separable_channel(
    rng: np.random.Generator, dims: BipartiteDims, n_products: int = 3
) -> tuple[KrausChannel, bool]:
    """Random complete channel whose Kraus operators are all local products.

    Draws ``n_products`` operators ``A_k (x) B_k`` with complex normal
    entries. Writing ``P_k = A_k^H A_k`` and ``Q_k = B_k^H B_k``, the bound
    ``sum_k P_k (x) Q_k <= (sum_k ||Q_k|| P_k) (x) I`` (or its mirror on
    Bob's side, picked at random) fixes a rescaling after which the
    deficit ``I - S`` splits into product positive terms; their square
    roots complete the channel. Returns the channel and whether every
    operator factors, which holds by construction.
    """
    pairs = [random_product_operator(rng, dims) for _ in range(n_products)]
    bob_side = bool(rng.integers(2))
    if bob_side:
        pairs = [(b, a) for a, b in pairs]
    da, db = (dims.dim_b, dims.dim_a) if bob_side else (dims.dim_a, dims.dim_b)

    ps = [a.conj().T @ a for a, _ in pairs]
    qs = [b.conj().T @ b for _, b in pairs]
    norms = [float(np.linalg.eigvalsh(q).max()) for q in qs]
    bound = sum(n * p for n, p in zip(norms, ps))
    scale = float(np.linalg.eigvalsh(bound).max())

    locals_ = [(a / np.sqrt(scale), b) for a, b in pairs]
    locals_.append((_psd_sqrt(np.eye(da) - bound / scale), np.eye(db)))
    for n, p, q in zip(norms, ps, qs):
        locals_.append((_psd_sqrt(p / scale), _psd_sqrt(n * np.eye(db) - q)))

    if bob_side:
        locals_ = [(b, a) for a, b in locals_]
    ops = [np.kron(a, b) for a, b in locals_]
    ops = [op for op in ops if np.abs(op).max() > 1e-14]
    ch = KrausChannel.on(dims, ops)
    all_product = all(isinstance(factor_product(op, dims), ProductFactorization) for op in ops)
    return ch, all_product


def random_rank2_source(rng: np.random.Generator, dims: BipartiteDims) -> tuple[DensityOperator, PureState, PureState, float]:
    """Random rank-2 density with orthonormal eigenstates ``psi1, psi2`` and weight ``p``."""
    n = dims.total
    z = rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))
    q, _ = np.linalg.qr(z)
    psi1 = make_pure(dims, q[:, 0], normalize=True)
    psi2 = make_pure(dims, q[:, 1], normalize=True)
    p = float(rng.uniform(0.05, 0.95))
    rho = make_density(dims, p * psi1.projector() + (1 - p) * psi2.projector())
    return rho, psi1, psi2, p


def candidate_target(ch: KrausChannel, rho: DensityOperator, tol: float = DEFAULT_TOL) -> PureState | None:
    """The only pure state the channel could deliver with certainty, if any.

    If the output is (numerically) pure its leading eigenvector is returned;
    otherwise no target state reaches fidelity one and ``None`` is returned.
    """
    out = apply_to_density(ch, rho, tol)
    pairs = eigendecompose(out, tol)
    if not pairs or pairs[0][0] < 1 - 1e-6:
        return None
    return pairs[0][1]
