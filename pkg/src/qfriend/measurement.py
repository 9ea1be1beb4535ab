"""Projective measurement: PDIs, Born weights, Lüders update, dephasing.

A *PDI* (projective decomposition of the identity) is an ordered family of
mutually orthogonal projectors summing to the identity. It is the sample
space of one projective measurement and also one time slice of a history
framework.
"""
from dataclasses import dataclass, field
from math import prod

import numpy as np

from .errors import ContractError, DimensionError, ImpossibleOutcomeError
from .linalg import TOL, check_dims, cmatrix, commutator, frozen, ket_projector, op_norm
from .states import DensityOperator, MixedEnsemble, Observable, PureState, lift

DROP_BELOW = 1e-12


@dataclass(frozen=True, eq=False)
class Pdi:
    projectors: tuple
    dims: tuple
    labels: tuple = None
    tol: float = field(default=TOL, repr=False)

    def __post_init__(self):
        dims = check_dims(self.dims)
        d = prod(dims)
        projs = tuple(frozen(cmatrix(p)) for p in self.projectors)
        if not projs:
            raise ContractError("a PDI needs at least one projector")
        for i, p in enumerate(projs):
            if p.shape != (d, d):
                raise DimensionError(f"projector {i} has shape {p.shape}, expected {(d, d)}")
            if not np.allclose(p, p.conj().T, atol=self.tol, rtol=0):
                raise ContractError(f"projector {i} is not Hermitian")
            if not np.allclose(p @ p, p, atol=self.tol, rtol=0):
                raise ContractError(f"projector {i} is not idempotent")
        for i in range(len(projs)):
            for j in range(i + 1, len(projs)):
                if not np.allclose(projs[i] @ projs[j], 0, atol=self.tol):
                    raise ContractError(f"projectors {i} and {j} are not orthogonal")
        if not np.allclose(sum(projs), np.eye(d), atol=self.tol, rtol=0):
            raise ContractError("projectors do not sum to the identity")
        labels = self.labels
        if labels is None:
            labels = tuple(str(i) for i in range(len(projs)))
        labels = tuple(str(x) for x in labels)
        if len(labels) != len(projs):
            raise ContractError("one label per projector is required")
        object.__setattr__(self, "projectors", projs)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_lifts", {})

    @classmethod
    def from_kets(cls, kets, dims, labels=None, complement=False):
        """Rank-1 projectors onto ``kets``, plus ``I - sum`` if ``complement``."""
        projs = [ket_projector(cmatrix(k) / np.linalg.norm(k)) for k in kets]
        if complement:
            projs.append(np.eye(prod(check_dims(dims))) - sum(projs))
        return cls(tuple(projs), dims, labels)

    def __len__(self):
        return len(self.projectors)

    def index(self, label):
        return self.labels.index(str(label))

    def lifted(self, dims, targets):
        """Same decomposition acting on ``targets`` of a larger space."""
        key = (tuple(dims), tuple(targets))
        if key not in self._lifts:
            # memoized: perspectives re-lift the same event PDI for every agent
            self._lifts[key] = Pdi(tuple(lift(p, dims, targets) for p in self.projectors), dims,
                                   self.labels, self.tol)
        return self._lifts[key]

    def ranks(self):
        return [int(round(np.trace(p).real)) for p in self.projectors]


@dataclass(frozen=True)
class DephasingSpec:
    basis: Pdi
    lam: float

    def __post_init__(self):
        if not 0 <= self.lam <= 1:
            raise ContractError(f"dephasing strength {self.lam} outside [0, 1]")


def pdi_from_observable(obs, labels=None):
    """One projector per distinct eigenvalue, ascending."""
    if not isinstance(obs, Observable):
        obs = Observable(obs)
    d = obs.matrix.shape[0]
    if labels is None:
        labels = tuple(f"{v:.12g}" for v in obs.eigenvalues)
    # observables carry no dim list; treat them as a single factor here
    return Pdi(tuple(obs.projectors), (d,), labels, obs.tol)


def _with_dims(pdi, dims):
    if prod(pdi.dims) != prod(dims):
        raise DimensionError(f"PDI dimension {prod(pdi.dims)} does not match state dims {dims}")
    return pdi


def born(state, pdi):
    """Outcome probabilities of ``pdi`` on a pure state, density or ensemble."""
    if isinstance(state, MixedEnsemble):
        state = state.to_density()
    _with_dims(pdi, state.dims)
    if isinstance(state, PureState):
        psi = state.amplitudes
        probs = np.array([np.vdot(psi, p @ psi).real for p in pdi.projectors])
    elif isinstance(state, DensityOperator):
        rho = state.matrix
        probs = np.array([np.trace(p @ rho).real for p in pdi.projectors])
    else:
        raise TypeError(f"born() does not accept {type(state).__name__}")
    if np.any(probs < -TOL) or np.any(probs > 1 + TOL):
        raise ContractError(f"Born weights out of range: {probs}")
    probs = np.clip(probs, 0.0, 1.0)
    if abs(probs.sum() - 1) > TOL:
        raise ContractError(f"Born weights sum to {probs.sum():.12g}")
    return probs


def luders(state, projector):
    """Post-measurement state for the outcome ``projector``."""
    p = cmatrix(projector)
    if isinstance(state, PureState):
        _check(p, state.dim)
        v = p @ state.amplitudes
        norm2 = np.vdot(v, v).real
        if norm2 <= DROP_BELOW:
            raise ImpossibleOutcomeError("projection onto a zero-probability outcome")
        return PureState(v / np.sqrt(norm2), state.dims)
    if isinstance(state, DensityOperator):
        _check(p, state.dim)
        m = p @ state.matrix @ p
        tr = np.trace(m).real
        if tr <= DROP_BELOW:
            raise ImpossibleOutcomeError("projection onto a zero-probability outcome")
        return DensityOperator(m / tr, state.dims)
    raise TypeError(f"luders() does not accept {type(state).__name__}")


def _check(p, d):
    if p.shape != (d, d):
        raise DimensionError(f"projector shape {p.shape} does not match state dimension {d}")


def measure_to_ensemble(state, pdi):
    """Proper mixture of the post-measurement states, zero-weight outcomes dropped.

    Outcome order follows the PDI. Returns the branches as a
    :class:`MixedEnsemble`; use :func:`measure_outcomes` to keep labels.
    """
    outcomes = measure_outcomes(state, pdi)
    total = sum(p for _, p, _ in outcomes)
    return MixedEnsemble(tuple((p / total, s) for _, p, s in outcomes), state.dims)


def measure_outcomes(state, pdi):
    """``[(label, probability, post_state), ...]`` for every reachable outcome."""
    if not isinstance(state, PureState):
        raise TypeError("measure_outcomes expects a PureState")
    probs = born(state, pdi)
    return [(label, float(p), luders(state, proj))
            for label, p, proj in zip(pdi.labels, probs, pdi.projectors) if p > DROP_BELOW]


def dephase(rho, spec):
    """Partial pinching ``(1 - lam) rho + lam sum_i P_i rho P_i``."""
    if isinstance(rho, PureState):
        rho = rho.to_density()
    _with_dims(spec.basis, rho.dims)
    m = rho.matrix
    pinched = sum(p @ m @ p for p in spec.basis.projectors)
    return DensityOperator((1 - spec.lam) * m + spec.lam * pinched, rho.dims)


def commutator_norms(p, q):
    """Spectral norms of ``[P_i, Q_j]`` as a ``len(p) x len(q)`` array."""
    if prod(p.dims) != prod(q.dims):
        raise DimensionError(f"PDI dimensions {p.dims} and {q.dims} differ")
    return np.array([[op_norm(commutator(a, b)) for b in q.projectors] for a in p.projectors])


def pdis_compatible(p, q, tol=TOL):
    """True iff every projector of ``p`` commutes with every projector of ``q``."""
    return bool(np.all(commutator_norms(p, q) <= tol))


def common_refinement(p, q, tol=TOL):
    """Nonzero products ``P_i Q_j`` of two compatible PDIs."""
    if not pdis_compatible(p, q, tol):
        raise ContractError("PDIs do not commute; no common refinement exists")
    projs, labels = [], []
    for a, la in zip(p.projectors, p.labels):
        for b, lb in zip(q.projectors, q.labels):
            ab = a @ b
            if np.trace(ab).real > 0.5:
                projs.append(ab)
                labels.append(f"{la}&{lb}")
    return Pdi(tuple(projs), p.dims, tuple(labels), tol)
