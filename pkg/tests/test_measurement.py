import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qfriend.errors import ContractError, DimensionError, ImpossibleOutcomeError
from qfriend.measurement import (DephasingSpec, Pdi, born, common_refinement, dephase, luders,
                                 measure_outcomes, measure_to_ensemble, pdi_from_observable,
                                 pdis_compatible)
from qfriend.scenario import CNOT, bell_pdi, friend_pdi
from qfriend.histories import wigner_t1_pdi
from qfriend.states import (HADAMARD, I2, SX, SZ, Observable, PureState, bell_observable,
                            bell_state, lift)

import oracles

X_UP = PureState(HADAMARD @ np.array([1, 0]), (2,))
UP, DOWN = PureState.basis((2,), 0), PureState.basis((2,), 1)


def correlated_state():
    """|phi+> (x) |0>_C over A, B, C."""
    return bell_state("phi+").tensor(PureState.basis((2,), 0))


def z_pdi():
    return pdi_from_observable(Observable(SZ))


def x_pdi():
    return pdi_from_observable(Observable(SX))


class TestPdi:
    def test_from_sigma_z(self):
        pdi = z_pdi()
        # ascending eigenvalue: -1 (down) first
        assert_allclose(pdi.projectors[0], [[0, 0], [0, 1]], atol=1e-15)
        assert_allclose(pdi.projectors[1], [[1, 0], [0, 0]], atol=1e-15)
        assert pdi.labels == ("-1", "1")

    def test_identity_has_one_projector(self):
        pdi = pdi_from_observable(Observable(np.eye(2)))
        assert len(pdi) == 1
        assert_allclose(pdi.projectors[0], np.eye(2))

    def test_bell_observable_gives_four_rank_one(self):
        pdi = pdi_from_observable(bell_observable())
        assert pdi.ranks() == [1, 1, 1, 1]

    def test_validation(self):
        with pytest.raises(ContractError):
            Pdi((np.diag([1, 0]),), (2,))  # incomplete
        with pytest.raises(ContractError):
            Pdi((np.diag([1, 0]), np.diag([1, 1]) - np.diag([1, 0]) + np.diag([1, 0])), (2,))
        with pytest.raises(ContractError):
            Pdi((np.array([[1, 1], [0, 0]]), np.array([[0, -1], [0, 1]])), (2,))

    def test_complement_construction(self):
        pdi = wigner_t1_pdi()
        assert pdi.ranks() == [1, 3]


class TestBorn:
    def test_correlated_state_always_finds_phi_plus(self):
        pdi = bell_pdi().lifted((2, 2, 2), [0, 1])
        probs = born(correlated_state(), pdi)
        assert probs[0] == pytest.approx(1, abs=1e-12)

    def test_up_up_in_bell_basis(self):
        # oracle: |<B_k|up up>|^2 for each Bell vector
        expected = [abs(oracles.bell(k)[0]) ** 2 for k in ("phi+", "phi-", "psi+", "psi-")]
        assert_allclose(born(PureState.basis((2, 2), 0, 0), bell_pdi()), expected, atol=1e-12)
        assert_allclose(expected, [0.5, 0.5, 0, 0])

    def test_eigenstate(self):
        assert_allclose(born(UP, z_pdi()), [0, 1])

    def test_density_and_ensemble_agree(self):
        ens = measure_to_ensemble(X_UP, z_pdi())
        assert_allclose(born(ens, x_pdi()), born(ens.to_density(), x_pdi()))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            born(UP, bell_pdi())


class TestLuders:
    def test_x_up_onto_up(self):
        assert luders(X_UP, UP.projector()).equal_up_to_phase(UP)

    def test_correlated_state_unchanged(self):
        p = lift(bell_state("phi+").projector(), (2, 2, 2), [0, 1])
        assert luders(correlated_state(), p).equal_up_to_phase(correlated_state())

    def test_up_up_onto_phi_plus(self):
        post = luders(PureState.basis((2, 2), 0, 0), bell_state("phi+").projector())
        assert post.equal_up_to_phase(bell_state("phi+"))

    def test_zero_probability(self):
        with pytest.raises(ImpossibleOutcomeError):
            luders(UP, DOWN.projector())
        with pytest.raises(ImpossibleOutcomeError):
            luders(UP.to_density(), DOWN.projector())

    def test_density_version(self):
        rho = luders(X_UP.to_density(), UP.projector())
        assert_allclose(rho.matrix, UP.projector())


class TestMeasureToEnsemble:
    def test_friend_branches(self):
        # x-up on A, pointer B in up, C in ground; CNOT correlates B with A
        start = PureState(np.kron(np.kron(HADAMARD @ [1, 0], [1, 0]), [1, 0]), (2, 2, 2))
        correlated = start.evolve(lift(CNOT, (2, 2, 2), [0, 1]))
        ens = measure_to_ensemble(correlated, friend_pdi().lifted((2, 2, 2), [0, 1]))
        assert ens.probabilities == pytest.approx([0.5, 0.5])
        assert ens.states[0].equal_up_to_phase(PureState.basis((2, 2, 2), 0, 0, 0))
        assert ens.states[1].equal_up_to_phase(PureState.basis((2, 2, 2), 1, 1, 0))

    def test_eigenstate_single_branch(self):
        ens = measure_to_ensemble(UP, z_pdi())
        assert len(ens) == 1 and ens.probabilities == [1.0]

    def test_product_of_x_ups(self):
        state = X_UP.tensor(X_UP)
        ens = measure_to_ensemble(state, z_pdi().lifted((2, 2), [0]))
        assert ens.probabilities == pytest.approx([0.5, 0.5])

    def test_labels(self):
        out = measure_outcomes(X_UP, z_pdi())
        assert [label for label, _, _ in out] == ["-1", "1"]


class TestDephase:
    def comp(self):
        return Pdi(tuple(np.diag(row) for row in np.eye(4)), (2, 2))

    def test_zero_is_identity(self):
        rho = bell_state("phi+").to_density()
        assert_allclose(dephase(rho, DephasingSpec(self.comp(), 0.0)).matrix, rho.matrix)

    def test_full_dephasing(self):
        rho = dephase(bell_state("phi+").to_density(), DephasingSpec(self.comp(), 1.0))
        assert_allclose(rho.matrix, np.diag([0.5, 0, 0, 0.5]), atol=1e-15)
        assert born(rho, bell_pdi())[0] == pytest.approx(0.5)

    @pytest.mark.parametrize("lam", [0.0, 0.1, 0.25, 0.5, 0.9, 1.0])
    def test_linear_in_lambda(self, lam):
        rho = dephase(bell_state("phi+").to_density(), DephasingSpec(self.comp(), lam))
        assert born(rho, bell_pdi())[0] == pytest.approx(1 - lam / 2, abs=1e-12)

    def test_spec_range(self):
        with pytest.raises(ContractError):
            DephasingSpec(self.comp(), 1.5)


class TestCompatibility:
    def test_friend_vs_wigner(self):
        assert not pdis_compatible(friend_pdi(), wigner_t1_pdi())
        p = np.diag([1, 0, 0, 0]).astype(complex)
        q = np.array(oracles.outer(oracles.bell("phi+"), oracles.bell("phi+")))
        comm = oracles.sub(oracles.mul(p.tolist(), q.tolist()), oracles.mul(q.tolist(), p.tolist()))
        assert oracles.spectral_norm(comm) > 0

    def test_reflexive(self):
        for pdi in (z_pdi(), bell_pdi(), friend_pdi()):
            assert pdis_compatible(pdi, pdi)

    def test_z_vs_x(self):
        assert not pdis_compatible(z_pdi(), x_pdi())
        assert not pdis_compatible(x_pdi(), z_pdi())

    def test_commuting_factors_refine(self):
        za = z_pdi().lifted((2, 2), [0])
        zb = z_pdi().lifted((2, 2), [1])
        assert pdis_compatible(za, zb)
        assert common_refinement(za, zb).ranks() == [1, 1, 1, 1]
        with pytest.raises(ContractError):
            common_refinement(friend_pdi(), wigner_t1_pdi())

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            pdis_compatible(z_pdi(), bell_pdi())
