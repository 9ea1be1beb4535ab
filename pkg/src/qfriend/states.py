"""State and observable types plus the standard qubit constructions.

Three state representations are kept apart on purpose:

* :class:`PureState` -- a normalized ket.
* :class:`DensityOperator` -- any unit-trace positive operator, including
  reduced (improper) mixtures obtained by partial trace.
* :class:`MixedEnsemble` -- a proper mixture, i.e. a list of
  ``(probability, PureState)`` branches that stand for actual outcomes.
"""
from dataclasses import dataclass, field
from math import prod

import numpy as np

from .errors import ContractError, DimensionError
from .linalg import (TOL, check_dims, cmatrix, eig_hermitian, frozen, is_hermitian,
                     ket_projector)

UP = np.array([1, 0], dtype=np.complex128)
DOWN = np.array([0, 1], dtype=np.complex128)

I2 = np.eye(2, dtype=np.complex128)
SX = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SY = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SZ = np.array([[1, 0], [0, -1]], dtype=np.complex128)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
# |0> ground, |1> excited
NUMBER = np.array([[0, 0], [0, 1]], dtype=np.complex128)


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray
    dims: tuple

    def __post_init__(self):
        amps = cmatrix(self.amplitudes)
        if amps.ndim != 1:
            raise DimensionError("amplitudes must be a vector")
        dims = check_dims(self.dims)
        if amps.shape[0] != prod(dims):
            raise DimensionError(f"{amps.shape[0]} amplitudes do not match dims {dims}")
        if abs(np.linalg.norm(amps) - 1) > TOL:
            raise ContractError(f"state norm {np.linalg.norm(amps):.12g} is not 1")
        object.__setattr__(self, "amplitudes", frozen(amps))
        object.__setattr__(self, "dims", dims)

    @classmethod
    def normalized(cls, amplitudes, dims):
        amps = cmatrix(amplitudes)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ContractError("cannot normalize the zero vector")
        return cls(amps / norm, dims)

    @classmethod
    def basis(cls, dims, *digits):
        """Computational basis ket ``|d0 d1 ...>``."""
        dims = check_dims(dims)
        if len(digits) != len(dims):
            raise DimensionError("one digit per subsystem is required")
        idx = int(np.ravel_multi_index(digits, dims))
        amps = np.zeros(prod(dims), dtype=np.complex128)
        amps[idx] = 1
        return cls(amps, dims)

    @property
    def dim(self):
        return self.amplitudes.shape[0]

    def projector(self):
        return ket_projector(self.amplitudes)

    def to_density(self):
        return DensityOperator(self.projector(), self.dims)

    def inner(self, other):
        """``<self|other>``."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def equal_up_to_phase(self, other, tol=TOL):
        return self.dims == other.dims and abs(abs(self.inner(other)) - 1) < tol

    def tensor(self, other):
        return PureState(np.kron(self.amplitudes, other.amplitudes), self.dims + other.dims)

    def evolve(self, unitary):
        return PureState.normalized(cmatrix(unitary) @ self.amplitudes, self.dims)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    matrix: np.ndarray
    dims: tuple
    tol: float = field(default=TOL, repr=False)

    def __post_init__(self):
        m = cmatrix(self.matrix)
        dims = check_dims(self.dims)
        if m.shape != (prod(dims), prod(dims)):
            raise DimensionError(f"density shape {m.shape} does not match dims {dims}")
        if not is_hermitian(m, self.tol):
            raise ContractError("density operator must be Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1) > self.tol:
            raise ContractError(f"density trace {tr:.12g} is not 1")
        if np.linalg.eigvalsh((m + m.conj().T) / 2)[0] < -self.tol:
            raise ContractError("density operator must be positive semidefinite")
        object.__setattr__(self, "matrix", frozen(m))
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def purity(self):
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def reduced(self, keep):
        """Improper mixture on the factors in ``keep``."""
        from .linalg import partial_trace
        keep = sorted(set(keep))
        return DensityOperator(partial_trace(self.matrix, self.dims, keep),
                               tuple(self.dims[k] for k in keep))


@dataclass(frozen=True, eq=False)
class MixedEnsemble:
    branches: tuple
    dims: tuple

    def __post_init__(self):
        dims = check_dims(self.dims)
        branches = tuple((float(p), s) for p, s in self.branches)
        if not branches:
            raise ContractError("an ensemble needs at least one branch")
        for p, s in branches:
            if not -TOL <= p <= 1 + TOL:
                raise ContractError(f"branch probability {p} outside [0, 1]")
            if not isinstance(s, PureState) or s.dims != dims:
                raise DimensionError("every branch must be a PureState on the ensemble dims")
        total = sum(p for p, _ in branches)
        if abs(total - 1) > TOL:
            raise ContractError(f"branch probabilities sum to {total:.12g}, not 1")
        object.__setattr__(self, "branches", branches)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def pure(cls, state):
        return cls(((1.0, state),), state.dims)

    @property
    def probabilities(self):
        return [p for p, _ in self.branches]

    @property
    def states(self):
        return [s for _, s in self.branches]

    def __len__(self):
        return len(self.branches)

    def to_density(self):
        return ensemble_to_density(self)


@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian operator with its eigenspace decomposition computed once."""

    matrix: np.ndarray
    tol: float = TOL
    spectral: tuple = field(init=False, repr=False)

    def __post_init__(self):
        m = cmatrix(self.matrix)
        if not is_hermitian(m, self.tol):
            raise ContractError("observable must be Hermitian")
        object.__setattr__(self, "matrix", frozen(m))
        spectral = tuple((val, frozen(p)) for val, p in eig_hermitian(m, self.tol))
        object.__setattr__(self, "spectral", spectral)

    @property
    def eigenvalues(self):
        return [v for v, _ in self.spectral]

    @property
    def projectors(self):
        return [p for _, p in self.spectral]

    def projector_for(self, value, tol=None):
        tol = self.tol if tol is None else tol
        for v, p in self.spectral:
            if abs(v - value) <= max(tol, 1e-12):
                return p
        raise KeyError(f"{value} is not an eigenvalue")

    def scaled(self, c):
        return Observable(float(c) * self.matrix, self.tol)


def ensemble_to_density(e):
    """Forget which branch occurred: ``sum_i p_i |psi_i><psi_i|``."""
    m = sum(p * s.projector() for p, s in e.branches)
    return DensityOperator(m, e.dims)


def pauli_theta(theta):
    """``cos(theta) sigma_z + sin(theta) sigma_x``."""
    if not np.isfinite(theta):
        raise ContractError("theta must be finite")
    return Observable(np.cos(theta) * SZ + np.sin(theta) * SX)


def ry(theta):
    """Spin rotation ``exp(-i theta sigma_y / 2)``."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


_BELL = {
    "phi+": (1, 0, 0, 1),
    "phi-": (1, 0, 0, -1),
    "psi+": (0, 1, 1, 0),
    "psi-": (0, 1, -1, 0),
}
BELL_LABELS = tuple(_BELL)
_ALIASES = {"Φ⁺": "phi+", "Φ⁻": "phi-", "Ψ⁺": "psi+", "Ψ⁻": "psi-"}


def bell_state(label):
    """One of the four Bell kets; ``phi+`` is ``(|00> + |11>)/sqrt(2)``."""
    key = _ALIASES.get(label, str(label).lower())
    if key not in _BELL:
        raise ValueError(f"unknown Bell label {label!r}; expected one of {BELL_LABELS}")
    return PureState(np.array(_BELL[key], dtype=np.complex128) / np.sqrt(2), (2, 2))


def bell_basis_matrix():
    """Unitary whose columns are phi+, phi-, psi+, psi- in that order."""
    return np.column_stack([bell_state(k).amplitudes for k in BELL_LABELS])


def bell_observable():
    """Nondegenerate observable with eigenvalue k on the k-th Bell state."""
    b = bell_basis_matrix()
    return Observable(b @ np.diag([0.0, 1.0, 2.0, 3.0]) @ b.conj().T)


def total_spin_squared():
    """``J^2 = (S_A + S_B)^2`` for two spin-1/2 systems, hbar = 1.

    Eigenvalue 0 on the singlet, 2 on the triplet.
    """
    j2 = np.zeros((4, 4), dtype=np.complex128)
    for s in (SX, SY, SZ):
        j = (np.kron(s, I2) + np.kron(I2, s)) / 2
        j2 += j @ j
    return Observable(j2)


def lift(op, dims, targets):
    """Embed ``op`` acting on ``targets`` (in that order) into the full space.

    The operator's own tensor factors are matched to ``targets`` in the given
    order; the remaining factors get the identity.
    """
    dims = check_dims(dims)
    op = cmatrix(op)
    targets = [int(t) for t in targets]
    if len(set(targets)) != len(targets):
        raise DimensionError(f"duplicate targets {targets}")
    if not targets or any(t < 0 or t >= len(dims) for t in targets):
        raise DimensionError(f"targets {targets} out of range for {len(dims)} factors")
    tdims = [dims[t] for t in targets]
    if op.ndim != 2 or op.shape != (prod(tdims), prod(tdims)):
        raise DimensionError(f"operator shape {op.shape} does not match target dims {tdims}")
    rest = [i for i in range(len(dims)) if i not in targets]
    order = targets + rest
    full = np.kron(op, np.eye(prod(dims[i] for i in rest) if rest else 1))
    n = len(dims)
    permuted = [dims[i] for i in order]
    t = full.reshape(permuted + permuted)
    inv = np.argsort(order)
    t = t.transpose(list(inv) + [n + i for i in inv])
    d = prod(dims)
    return np.ascontiguousarray(t.reshape(d, d))


def rotation_overlap(state, theta):
    """``|<psi| R_y(theta) (x) ... (x) R_y(theta) |psi>|`` for a multi-qubit state."""
    if any(d != 2 for d in state.dims):
        raise DimensionError("rotation_overlap is defined for qubits only")
    r = np.array([[1]], dtype=np.complex128)
    for _ in state.dims:
        r = np.kron(r, ry(theta))
    return abs(np.vdot(state.amplitudes, r @ state.amplitudes))


def basis_projectors(dims):
    """Rank-1 computational basis projectors, index order."""
    d = prod(check_dims(dims))
    out = []
    for i in range(d):
        p = np.zeros((d, d), dtype=np.complex128)
        p[i, i] = 1
        out.append(p)
    return out


def ket_labels(dims, symbols=("↑", "↓")):
    """Human labels for computational basis kets, e.g. ``↑↓`` for qubits."""
    labels = []
    for idx in np.ndindex(*dims):
        if all(d == 2 for d in dims):
            labels.append("".join(symbols[i] for i in idx))
        else:
            labels.append(",".join(str(i) for i in idx))
    return labels
