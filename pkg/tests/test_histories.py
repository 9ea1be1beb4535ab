import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qfriend.errors import ConsistencyError, ContractError, HistoryLimitError
from qfriend.histories import (HistoryFramework, additivity_residual, chain_operator,
                               chain_operators, coarse_grained_weight, decoherence_functional,
                               decoherence_matrix, framework_conflict, friend_t1_pdi,
                               history_probabilities, history_probability, is_consistent,
                               stern_gerlach_framework, t1_conflict_frameworks, wigner_t1_pdi,
                               z_then_x_framework)
from qfriend.measurement import Pdi
from qfriend.states import HADAMARD, PureState

import oracles

X_UP = HADAMARD @ np.array([1, 0])

# pinned from the brute-force list oracle in test_conflict_norm_oracle
GOLDEN_T1_COMMUTATOR_NORM = 0.5


def trivial(rho=None, u=None):
    rho = rho if rho is not None else PureState(X_UP, (2,)).to_density()
    return HistoryFramework(rho, (Pdi((np.eye(2),), (2,)),),
                            None if u is None else (u,))


class TestChainOperator:
    def test_trivial_framework_is_the_unitary(self):
        u = np.array([[0, 1], [1, 0]], dtype=complex)
        assert_allclose(chain_operator(trivial(u=u), (0,)), u)

    def test_stern_gerlach(self):
        f = stern_gerlach_framework()
        up = np.array([[1, 0], [0, 0]])
        psi0 = np.outer(X_UP, X_UP.conj())
        assert_allclose(chain_operator(f, (0, 0)), up @ psi0, atol=1e-15)

    def test_orthogonal_consecutive_projectors_annihilate(self):
        z = Pdi((np.diag([1, 0]), np.diag([0, 1])), (2,))
        f = HistoryFramework(PureState(X_UP, (2,)).to_density(), (z, z))
        assert_allclose(chain_operator(f, (0, 1)), 0)

    def test_index_checks(self):
        f = stern_gerlach_framework()
        with pytest.raises(IndexError):
            chain_operator(f, (0, 2))
        with pytest.raises(IndexError):
            chain_operator(f, (0,))

    def test_stacked_matches_single(self):
        f = z_then_x_framework()
        for k, y in zip(chain_operators(f), f.histories()):
            assert_allclose(k, chain_operator(f, y))


class TestDecoherenceFunctional:
    def test_stern_gerlach_orthogonal_outcomes(self):
        f = stern_gerlach_framework()
        assert abs(decoherence_functional(f, (0, 0), (0, 1))) < 1e-15

    def test_stern_gerlach_weight(self):
        assert decoherence_functional(stern_gerlach_framework(), (0, 0), (0, 0)) == \
            pytest.approx(abs(X_UP[0]) ** 2)

    def test_trivial(self):
        assert decoherence_functional(trivial(), (0,), (0,)) == pytest.approx(1)

    def test_matrix_agrees_with_pairwise(self):
        f = z_then_x_framework()
        d = decoherence_matrix(f)
        hs = f.histories()
        for i, y in enumerate(hs):
            for j, y2 in enumerate(hs):
                assert d[i, j] == pytest.approx(decoherence_functional(f, y, y2), abs=1e-14)

    def test_oracle_for_z_then_x(self):
        # |<x|P_x1 P_z1 rho P_z2 P_x1|x>| evaluated with list arithmetic
        r = 1 / math.sqrt(2)
        xu = [r + 0j, r + 0j]
        pz = [oracles.outer([1, 0], [1, 0]), oracles.outer([0, 1], [0, 1])]
        px = [oracles.outer([r, r], [r, r]), oracles.outer([r, -r], [r, -r])]
        rho = oracles.outer(xu, xu)

        def k(i, j):
            return oracles.mul(px[j], pz[i])

        def dfun(y, y2):
            return oracles.trace(oracles.mul(oracles.mul(k(*y), rho), oracles.dagger(k(*y2))))

        f = z_then_x_framework()
        for y in f.histories():
            for y2 in f.histories():
                assert decoherence_functional(f, y, y2) == pytest.approx(dfun(y, y2), abs=1e-14)
        assert dfun((0, 0), (1, 0)) == pytest.approx(0.25)


class TestConsistency:
    def test_stern_gerlach(self):
        report = is_consistent(stern_gerlach_framework())
        assert report and report.offending == ()

    def test_z_then_x_is_not(self):
        f = z_then_x_framework()
        report = is_consistent(f)
        assert not report
        pairs = {(a, b) for a, b, _ in report.offending}
        assert pairs == {((0, 0), (1, 0)), ((0, 1), (1, 1))}
        for _, _, m in report.offending:
            assert m == pytest.approx(0.25)

    def test_additivity_iff_consistent(self):
        sg = stern_gerlach_framework()
        assert additivity_residual(sg, [(0, 0), (0, 1)]) == pytest.approx(0, abs=1e-12)
        f = z_then_x_framework()
        pair = [(0, 0), (1, 0)]
        expected = 2 * decoherence_functional(f, *pair).real
        assert additivity_residual(f, pair) == pytest.approx(expected, abs=1e-12)
        assert additivity_residual(f, pair) == pytest.approx(0.5, abs=1e-12)

    def test_x_then_z_is_consistent(self):
        z = Pdi((np.diag([1, 0]), np.diag([0, 1])), (2,))
        x = Pdi.from_kets([[1, 1], [1, -1]], (2,))
        f = HistoryFramework(PureState(X_UP, (2,)).to_density(), (x, z))
        assert is_consistent(f)

    def test_single_pdi(self):
        assert is_consistent(trivial())

    def test_history_cap(self):
        big = Pdi(tuple(np.diag(r) for r in np.eye(16)), (16,))
        rho = PureState.basis((16,), 0).to_density()
        f = HistoryFramework(rho, (big,) * 5)
        with pytest.raises(HistoryLimitError):
            f.histories()
        with pytest.raises(HistoryLimitError):
            is_consistent(f)

    def test_unitarity_checked(self):
        with pytest.raises(ContractError):
            trivial(u=np.array([[1, 1], [0, 1]]))


class TestProbabilities:
    def test_stern_gerlach(self):
        f = stern_gerlach_framework()
        assert history_probability(f, (0, 0)) == pytest.approx(0.5)
        assert history_probability(f, (0, 1)) == pytest.approx(0.5)
        assert history_probability(f, (1, 0)) == pytest.approx(0, abs=1e-15)
        assert sum(history_probabilities(f).values()) == pytest.approx(1, abs=1e-9)

    def test_deterministic(self):
        up = PureState.basis((2,), 0).to_density()
        z = Pdi((np.diag([1, 0]), np.diag([0, 1])), (2,))
        f = HistoryFramework(up, (z, z))
        assert history_probability(f, (0, 0)) == pytest.approx(1)
        assert history_probability(f, (1, 1)) == pytest.approx(0)

    def test_inconsistent_raises(self):
        with pytest.raises(ConsistencyError):
            history_probability(z_then_x_framework(), (0, 0))
        with pytest.raises(ConsistencyError):
            history_probabilities(z_then_x_framework())

    def test_coarse_weight_of_everything_is_one(self):
        f = z_then_x_framework()
        assert coarse_grained_weight(f, f.histories()) == pytest.approx(1)


class TestConflict:
    def test_conflict_norm_oracle(self):
        p = oracles.outer([1, 0, 0, 0], [1, 0, 0, 0])
        q = oracles.outer(oracles.bell("phi+"), oracles.bell("phi+"))
        comm = oracles.sub(oracles.mul(p, q), oracles.mul(q, p))
        assert oracles.spectral_norm(comm) == pytest.approx(GOLDEN_T1_COMMUTATOR_NORM, abs=1e-12)

    def test_t1_conflict(self):
        c = framework_conflict(friend_t1_pdi(), wigner_t1_pdi())
        assert not c.compatible
        assert c.witness == (0, 0)
        assert c.witness_labels == ("↑↑", "Φ+")
        assert c.commutator_norm == pytest.approx(GOLDEN_T1_COMMUTATOR_NORM, abs=1e-12)
        assert c.commutator_norm > 0.3

    def test_self(self):
        c = framework_conflict(wigner_t1_pdi(), wigner_t1_pdi())
        assert c.compatible and c.witness is None

    def test_commuting_factors(self):
        za = Pdi.from_kets(np.eye(4)[[0, 1]], (2, 2), complement=True)
        zb = Pdi.from_kets(np.eye(4)[[0, 2]], (2, 2), complement=True)
        assert framework_conflict(za, zb).compatible

    def test_frameworks_individually_consistent(self):
        for f in t1_conflict_frameworks():
            assert is_consistent(f)
