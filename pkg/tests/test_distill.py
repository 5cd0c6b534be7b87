import numpy as np
import pytest

from randoms import random_state, random_unitary
from sepchan.channels import ChannelError, KrausChannel, apply_branch, identity_channel, is_separable, validate_channel
from sepchan.distill import (
    QUTRITS,
    BranchCase,
    PaperConstants,
    candidate_target,
    paper_channel,
    paper_eigenstates,
    paper_source,
    paper_target,
    random_rank2_source,
    random_separable_channel,
    thm1_case_analysis,
    verify_branches,
    verify_deterministic_distillation,
)
from sepchan.locc import nielsen_rank2_protocol, simulate
from sepchan.states import SpanVerdict, make_pure, product_vectors_in_span, schmidt_decompose, schmidt_rank
from sepchan.tensor import BipartiteDims

D22 = BipartiteDims(2, 2)
D23 = BipartiteDims(2, 3)
P_GRID = [round(0.05 * k, 2) for k in range(21)]


class TestBuiltins:
    def test_constants(self):
        c = PaperConstants()
        assert c.alpha == pytest.approx((2 - np.sqrt(3)) / 4)
        assert abs(4 * c.alpha * c.beta - 1) <= 1e-14
        assert abs(c.alpha * (c.beta**2 + 1) - 1) <= 1e-14

    def test_channel_complete_and_separable(self):
        ch = paper_channel()
        assert len(ch) == 6
        assert validate_channel(ch).deviation <= 1e-12
        rep = is_separable(ch)
        assert rep.separable and all(r.residual <= 1e-12 for r in rep.operators)

    def test_e1_entry(self):
        e1 = paper_channel().operators[0]
        assert e1[0, 1] == pytest.approx(0.9659258, abs=1e-7)
        assert e1[0, 1] == pytest.approx(np.sqrt(PaperConstants().alpha) * PaperConstants().beta, abs=1e-15)

    def test_source(self):
        psi1, psi2 = paper_eigenstates()
        np.testing.assert_allclose(paper_source(1).matrix, psi1.projector())
        assert np.linalg.matrix_rank(paper_source(1).matrix) == 1
        vals = np.sort(np.linalg.eigvalsh(paper_source(0.5).matrix))[::-1]
        np.testing.assert_allclose(vals, [0.5, 0.5] + [0] * 7, atol=1e-14)
        rho = paper_source(0.37)
        assert np.trace(rho.matrix) == pytest.approx(1)
        np.testing.assert_array_equal(rho.matrix, rho.matrix.conj().T)
        with pytest.raises(ValueError):
            paper_source(1.2)

    def test_target(self):
        phi = paper_target()
        assert np.linalg.norm(phi.amplitudes) == pytest.approx(1, abs=1e-12)
        np.testing.assert_allclose(np.abs(phi.amplitudes[[0, 4]]) ** 2, [0.9330127, 0.0669873], atol=1e-7)
        assert schmidt_rank(phi) == 2


class TestVerify:
    def test_builtin_success_and_branch_table(self):
        rep = verify_deterministic_distillation(paper_channel(), paper_source(0.5), paper_target())
        assert rep.success, rep.failures
        psi1, psi2 = paper_eigenstates()
        records, totals, failures = verify_branches(paper_channel(), [psi1, psi2], paper_target())
        assert not failures
        expected = [(0.5, 0), (0.5, 0), (0, 0.5), (0, 0.5), (0, 0), (0, 0)]
        for rec, (e1, e2) in zip(records, expected):
            assert rec.probabilities == pytest.approx((e1, e2), abs=1e-12)
        assert totals == pytest.approx((1, 1), abs=1e-12)

    @pytest.mark.parametrize("p", P_GRID)
    def test_every_mixture(self, p):
        rep = verify_deterministic_distillation(paper_channel(), paper_source(p), paper_target())
        assert rep.success, rep.failures
        assert all(abs(t - 1) <= 1e-10 for t in rep.total_probability)
        assert any(abs(gp - max(p, 1 - p)) <= 1e-9 for gp, _ in rep.fidelity_grid)

    def test_identity_fails_at_operator_zero(self):
        rep = verify_deterministic_distillation(identity_channel(QUTRITS), paper_source(0.5), paper_target())
        assert not rep.success
        assert "NotProportional at operator 0" in rep.failures
        assert not rep.per_operator[0].passed

    def test_target_as_source_fails(self):
        phi = paper_target()
        rep = verify_deterministic_distillation(paper_channel(), phi.density(), phi)
        assert not rep.success
        _, post = apply_branch(paper_channel().operators[0], phi)
        assert abs(np.vdot(post.amplitudes, phi.amplitudes)) < 1 - 1e-3

    def test_incomplete_channel(self):
        with pytest.raises(ChannelError):
            verify_deterministic_distillation(KrausChannel.on(QUTRITS, [np.eye(9) / 2]), paper_source(0.5), paper_target())

    def test_degenerate_basis_rotation(self):
        rng = np.random.default_rng(9)
        psi1, psi2 = paper_eigenstates()
        for _ in range(20):
            u = random_unitary(rng, 2)
            rotated = [
                make_pure(QUTRITS, u[0, k] * psi1.amplitudes + u[1, k] * psi2.amplitudes) for k in range(2)
            ]
            _, totals, failures = verify_branches(paper_channel(), rotated, paper_target())
            assert not failures
            assert totals == pytest.approx((1, 1), abs=1e-10)
            # a wrong channel fails for every basis choice too
            _, _, bad = verify_branches(identity_channel(QUTRITS), rotated, paper_target())
            assert bad


class TestCaseAnalysis:
    def test_builtin_instance(self):
        psi1, psi2 = paper_eigenstates()
        rep = thm1_case_analysis(paper_channel(), psi1, psi2, paper_target())
        r1, r3 = rep.per_operator[0], rep.per_operator[2]
        assert r1.case is BranchCase.ONE_NONZERO
        assert abs(r1.c) == pytest.approx(1 / np.sqrt(2), abs=1e-7) and r1.d == 0
        assert r3.case is BranchCase.ONE_NONZERO
        assert r3.c == 0 and abs(r3.d) == pytest.approx(1 / np.sqrt(2), abs=1e-7)
        assert rep.cases()[4:] == [BranchCase.BOTH_ZERO, BranchCase.BOTH_ZERO]
        # the surviving operators have full-rank-two local factors on the relevant block
        assert all(r.rank_a == 2 and r.rank_b == 2 for r in rep.per_operator[:4])

    def test_both_nonzero_with_product_witness(self):
        p0 = np.diag([1.0, 0.0])
        p1 = np.diag([0.0, 1.0])
        ch = KrausChannel.on(D22, [np.kron(np.eye(2), p0), np.kron(np.eye(2), p1)])
        plus = make_pure(D22, [1, 0, 0, 1], normalize=True)
        minus = make_pure(D22, [1, 0, 0, -1], normalize=True)
        target = make_pure(D22, [1, 0, 0, 0])
        rep = thm1_case_analysis(ch, plus, minus, target)
        first = rep.per_operator[0]
        assert first.case is BranchCase.BOTH_NONZERO
        assert abs(first.c) == pytest.approx(1 / np.sqrt(2)) and abs(first.d) == pytest.approx(1 / np.sqrt(2))
        w = first.witness
        assert w is not None and w.is_product and w.schmidt_rank == 1
        assert w.bob_residual <= 1e-12
        assert abs(w.state.amplitudes[3]) == pytest.approx(1)
        assert rep.per_operator[1].case is BranchCase.NOT_PROPORTIONAL

    def test_identity_not_proportional(self):
        psi1, psi2 = paper_eigenstates()
        rep = thm1_case_analysis(identity_channel(QUTRITS), psi1, psi2, paper_target())
        assert rep.cases() == [BranchCase.NOT_PROPORTIONAL]

    def test_non_separable_rejected(self):
        from sepchan.channels import swap_operator

        plus = make_pure(D22, [1, 0, 0, 1], normalize=True)
        minus = make_pure(D22, [1, 0, 0, -1], normalize=True)
        with pytest.raises(ChannelError):
            thm1_case_analysis(KrausChannel.on(D22, [swap_operator(2)]), plus, minus, plus)

    def test_witness_invariant_on_random_separable_channels(self):
        rng = np.random.default_rng(17)
        for _ in range(30):
            ch, _ = random_separable_channel(rng, D23)
            _, psi1, psi2, _ = random_rank2_source(rng, D23)
            phi = make_pure(D23, [1, 0, 0, 0, 1, 0], normalize=True)
            for rec in thm1_case_analysis(ch, psi1, psi2, phi, tol=1e-8).per_operator:
                if rec.witness is not None:
                    assert rec.case is BranchCase.BOTH_NONZERO
                    assert rec.witness.bob_residual <= 1e-8


def replace_channel(rng, dims):
    """Discard the input and prepare a random product state."""
    a = random_state(rng, BipartiteDims(dims.dim_a, 1)).amplitudes
    b = random_state(rng, BipartiteDims(1, dims.dim_b)).amplitudes
    ops = []
    for i in range(dims.dim_a):
        for j in range(dims.dim_b):
            ops.append(np.kron(np.outer(a, np.eye(dims.dim_a)[i]), np.outer(b, np.eye(dims.dim_b)[j])))
    return KrausChannel.on(dims, ops)


class TestRandomSeparable:
    def test_complete_and_product(self):
        rng = np.random.default_rng(3)
        for dims in (D22, D23, QUTRITS):
            for n in (1, 2, 4):
                ch, all_product = random_separable_channel(rng, dims, n)
                assert all_product
                assert validate_channel(ch).deviation <= 1e-10
                assert is_separable(ch).separable

    def test_no_deterministic_distillation_on_2x3(self):
        rng = np.random.default_rng(2024)
        trials = candidates = 0
        while trials < 100:
            if trials % 5 == 0:
                ch, ok = replace_channel(rng, D23), True
            else:
                ch, ok = random_separable_channel(rng, D23, int(rng.integers(1, 5)))
            rho, psi1, psi2, _ = random_rank2_source(rng, D23)
            if not ok or product_vectors_in_span(psi1, psi2).verdict is not SpanVerdict.NO_PRODUCT:
                continue
            trials += 1
            phi = candidate_target(ch, rho)
            if phi is None:
                continue
            candidates += 1
            if schmidt_rank(phi) >= 2:
                assert not verify_deterministic_distillation(ch, rho, phi).success
            else:
                # a product target is reachable, which shows the sweep can see successes
                assert verify_deterministic_distillation(ch, rho, phi).success
        assert candidates >= 20

    def test_positive_control_pure_source(self):
        # LOCC is separable: the Nielsen protocol's leaf operators form a separable channel that succeeds
        src = make_pure(D23, [0, 1, 0, 1, 0, 0], normalize=True)
        tgt = make_pure(D23, [np.sqrt(0.8), 0, 0, 0, np.sqrt(0.2), 0])
        recs = simulate(nielsen_rank2_protocol(src, tgt), [src])
        ch = KrausChannel.on(D23, [r.net_operator for r in recs])
        assert is_separable(ch).separable
        rep = verify_deterministic_distillation(ch, src.density(), tgt)
        assert rep.success
        assert candidate_target(ch, src.density()) is not None

    def test_successful_reports_sum_to_one(self):
        for p in P_GRID:
            rep = verify_deterministic_distillation(paper_channel(), paper_source(p), paper_target())
            for total in rep.total_probability:
                assert abs(total - 1) <= 1e-10
        assert schmidt_decompose(paper_target()).rank == 2
