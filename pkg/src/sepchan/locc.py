"""Finite LOCC protocol trees: validation, simulation, and the rank-2 Nielsen builder."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .monotones import majorization_check
from .states import PureState, is_proportional, make_pure, schmidt_decompose
from .tensor import BRANCH_TOL, DEFAULT_TOL, BipartiteDims, DimensionError, as_matrix, dagger


class ProtocolError(ValueError):
    """A protocol tree is malformed or cannot be built."""


class Party(enum.Enum):
    ALICE = "alice"
    BOB = "bob"


@dataclass(eq=False)
class ProtocolNode:
    """One measurement round.

    ``children[j]`` is the subtree run after outcome ``j``; ``None`` marks
    a leaf.
    """

    party: Party
    local_operators: list
    children: list = field(default_factory=list)

    def __post_init__(self):
        self.party = Party(self.party)
        if not self.local_operators:
            raise ProtocolError("a protocol node needs at least one local operator")
        self.local_operators = [as_matrix(m, "local operator") for m in self.local_operators]
        if not self.children:
            self.children = [None] * len(self.local_operators)
        if len(self.children) != len(self.local_operators):
            raise ProtocolError(
                f"node has {len(self.local_operators)} operators but {len(self.children)} children"
            )


@dataclass(frozen=True)
class ProtocolReport:
    """``deviations`` holds ``(path, completeness deviation)`` per node, depth first."""

    deviations: list
    complete: bool
    alternating: bool
    depth: int


@dataclass(eq=False)
class BranchRecord:
    branch_id: tuple
    net_operator: np.ndarray
    per_input: list


@dataclass(frozen=True)
class Violation:
    branch_id: tuple
    surviving_input: int
    probabilities: tuple


def _walk(node: ProtocolNode, path=()):
    yield path, node
    for j, child in enumerate(node.children):
        if child is not None:
            yield from _walk(child, path + (j,))


def validate_protocol(root: ProtocolNode, tol: float = DEFAULT_TOL) -> ProtocolReport:
    """Completeness of every node's local measurement and the round structure.

    Trees where a party acts twice in a row are reported, not rejected.
    """
    deviations = []
    alternating = True
    depth = 0
    for path, node in _walk(root):
        if len(node.children) != len(node.local_operators):
            raise ProtocolError(f"node at {list(path)} has mismatched children")
        d = node.local_operators[0].shape[1]
        for m in node.local_operators:
            if m.shape != (d, d):
                raise ProtocolError(f"node at {list(path)} mixes operator shapes")
        total = sum(dagger(m) @ m for m in node.local_operators)
        deviations.append((path, float(np.linalg.norm(total - np.eye(d)))))
        depth = max(depth, len(path) + 1)
        for child in node.children:
            if child is not None and child.party == node.party:
                alternating = False
    complete = all(dev <= tol for _, dev in deviations)
    return ProtocolReport(deviations, complete, alternating, depth)


def lift(m: np.ndarray, party: Party, dims: BipartiteDims) -> np.ndarray:
    """``M (x) I`` for Alice, ``I (x) M`` for Bob."""
    local = dims.dim_a if party is Party.ALICE else dims.dim_b
    if m.shape != (local, local):
        raise DimensionError(f"{party.value} operator of shape {m.shape} does not act on dimension {local}")
    if party is Party.ALICE:
        return np.kron(m, np.eye(dims.dim_b))
    return np.kron(np.eye(dims.dim_a), m)


def leaf_paths(root: ProtocolNode, dims: BipartiteDims):
    """Yield ``(branch_id, [lifted operators in order of application])`` per leaf."""

    def rec(node, path, ops):
        for j, (m, child) in enumerate(zip(node.local_operators, node.children)):
            step = ops + [lift(m, node.party, dims)]
            if child is None:
                yield path + (j,), step
            else:
                yield from rec(child, path + (j,), step)

    yield from rec(root, (), [])


def simulate(root: ProtocolNode, inputs, tol: float = BRANCH_TOL) -> list[BranchRecord]:
    """Enumerate every leaf depth first, tracking each input's branch.

    Per input, a leaf gets ``(probability, normalized post-state)``; the
    post-state is ``None`` when the probability is at most ``tol``.
    """
    inputs = list(inputs)
    if not inputs:
        raise ValueError("simulate needs at least one input state")
    dims = inputs[0].dims
    if any(psi.dims != dims for psi in inputs):
        raise DimensionError("all inputs must share the same dimensions")
    records = []
    for branch_id, ops in leaf_paths(root, dims):
        net = np.eye(dims.total, dtype=complex)
        for op in ops:
            net = op @ net
        per_input = []
        for psi in inputs:
            out = net @ psi.amplitudes
            prob = float(np.vdot(out, out).real)
            post = make_pure(dims, out, normalize=True) if prob > tol else None
            per_input.append((prob, post))
        records.append(BranchRecord(branch_id, net, per_input))
    return records


def branch_nonvanishing_check(records, input_index_1: int, input_index_2: int, tol: float = BRANCH_TOL) -> list[Violation]:
    """Leaves where exactly one of two inputs survives.

    Any such leaf rules out the protocol as a deterministic distillation of
    a mixture of the two inputs into one entangled pure state.
    """
    violations = []
    for rec in records:
        n = len(rec.per_input)
        for idx in (input_index_1, input_index_2):
            if not 0 <= idx < n:
                raise IndexError(f"input index {idx} out of range for {n} inputs")
        p1 = rec.per_input[input_index_1][0]
        p2 = rec.per_input[input_index_2][0]
        alive1, alive2 = p1 > tol, p2 > tol
        if alive1 != alive2:
            survivor = input_index_1 if alive1 else input_index_2
            violations.append(Violation(rec.branch_id, survivor, (p1, p2)))
    return violations


@dataclass(frozen=True)
class NielsenPlan:
    """Branch weights of the two-outcome construction (``n2 == 0`` for a single branch)."""

    p: float
    q: float
    n1: float
    n2: float


def _rank2_spectrum(psi: PureState, name: str, tol: float):
    dec = schmidt_decompose(psi, tol)
    if dec.rank > 2:
        raise ProtocolError(f"{name} has Schmidt rank {dec.rank}; only rank <= 2 is supported")
    w = np.clip(dec.weights, 0.0, None)
    w = w / w.sum()
    p = float(w[0])
    return dec, p


def nielsen_plan(p: float, q: float, tol: float = 1e-12) -> NielsenPlan:
    """Solve ``N1 + N2 = 1`` and ``q N1 + (1 - q) N2 = p`` for the branch weights."""
    if q + tol < p:
        raise ProtocolError(f"majorization fails: source weight {p} exceeds target weight {q}")
    if abs(q - p) <= tol:
        return NielsenPlan(p, q, 1.0, 0.0)
    n1 = (p + q - 1) / (2 * q - 1)
    n1 = float(np.clip(n1, 0.0, 1.0))
    return NielsenPlan(p, q, n1, 1.0 - n1)


def nielsen_rank2_protocol(src: PureState, tgt: PureState, tol: float = DEFAULT_TOL) -> ProtocolNode:
    """Two-round LOCC protocol converting ``src`` into ``tgt`` with certainty.

    Alice measures with two outcomes, diagonal in the Schmidt bases: outcome
    one rescales the Schmidt weights from ``(p, 1-p)`` to ``(q, 1-q)``,
    outcome two to ``(1-q, q)`` followed by a swap of the two Schmidt
    directions. Alice's rotation into the target basis (and her half of the
    swap) is folded into her operators; Bob applies the matching
    outcome-conditioned unitary. Directions outside the Schmidt support are
    padded with ``sqrt(N_j)`` times the identity so each outcome operator
    keeps full rank.
    """
    if src.dims != tgt.dims:
        raise DimensionError(f"dimension mismatch: {src.dims} vs {tgt.dims}")
    dims = src.dims
    sdec, p = _rank2_spectrum(src, "source", tol)
    tdec, q = _rank2_spectrum(tgt, "target", tol)
    w_src = sdec.weights[:2] if sdec.weights.size > 1 else sdec.weights
    w_tgt = tdec.weights[:2] if tdec.weights.size > 1 else tdec.weights
    if not majorization_check(_renorm(w_src), _renorm(w_tgt)):
        raise ProtocolError("source spectrum does not majorize-convert to the target spectrum")
    plan = nielsen_plan(p, q)

    ua_s, ub_s = sdec.left_vectors, sdec.right_vectors
    ua_t, ub_t = tdec.left_vectors, tdec.right_vectors
    da, db = dims.dim_a, dims.dim_b

    if plan.n2 == 0.0:
        alice = ua_t @ dagger(ua_s)
        bob = ub_t @ dagger(ub_s)
        return ProtocolNode(Party.ALICE, [alice], [ProtocolNode(Party.BOB, [bob])])

    n1, n2 = plan.n1, plan.n2
    d1 = np.full(da, np.sqrt(n1), dtype=complex)
    d2 = np.full(da, np.sqrt(n2), dtype=complex)
    d1[0] = np.sqrt(q * n1 / p)
    d2[0] = np.sqrt((1 - q) * n2 / p)
    if da > 1:
        # p < 1 here, since p = 1 forces q = 1 = p
        d1[1] = np.sqrt((1 - q) * n1 / (1 - p))
        d2[1] = np.sqrt(q * n2 / (1 - p))
    swap_a = _swap01(da)
    swap_b = _swap01(db)
    k1 = ua_t @ np.diag(d1) @ dagger(ua_s)
    k2 = ua_t @ swap_a @ np.diag(d2) @ dagger(ua_s)
    v1 = ub_t @ dagger(ub_s)
    v2 = ub_t @ swap_b @ dagger(ub_s)
    return ProtocolNode(
        Party.ALICE,
        [k1, k2],
        [ProtocolNode(Party.BOB, [v1]), ProtocolNode(Party.BOB, [v2])],
    )


def _renorm(w):
    w = np.clip(np.asarray(w, dtype=float), 0.0, None)
    return w / w.sum()


def _swap01(d: int) -> np.ndarray:
    m = np.eye(d, dtype=complex)
    if d > 1:
        m[[0, 1]] = m[[1, 0]]
    return m


def converts_deterministically(records, index: int, tgt: PureState, tol: float = DEFAULT_TOL) -> bool:
    """Every surviving branch of input ``index`` ends in ``tgt`` and probabilities sum to one."""
    total = 0.0
    for rec in records:
        prob, post = rec.per_input[index]
        total += prob
        if post is not None and not is_proportional(post, tgt, tol):
            return False
    return abs(total - 1.0) <= tol
