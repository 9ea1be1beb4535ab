"""Consistent histories over a fixed initial density and a sequence of PDIs.

A framework fixes an initial density ``rho0``, inter-time unitaries
``U_1..U_N`` and one PDI per time ``t_1..t_N``. A history picks one
projector per time; its chain operator is ``K = P_N U_N ... P_1 U_1`` and
the decoherence functional is ``D(y, y') = Tr[K(y) rho0 K(y')^dagger]``.
"""
from dataclasses import dataclass, field
from itertools import product
from math import prod

import numpy as np

from .errors import ConsistencyError, ContractError, DimensionError, HistoryLimitError
from .linalg import TOL, frozen, is_unitary
from .measurement import Pdi, commutator_norms
from .states import HADAMARD, DensityOperator, PureState, bell_state

MAX_HISTORIES = 10**6
_BLOCK = 2048


@dataclass(frozen=True, eq=False)
class HistoryFramework:
    initial: DensityOperator
    pdis: tuple
    unitaries: tuple = None
    times: tuple = None
    name: str = "framework"
    tol: float = field(default=TOL, repr=False)

    def __post_init__(self):
        pdis = tuple(self.pdis)
        if not pdis:
            raise ContractError("a framework needs at least one PDI")
        d = self.initial.dim
        for k, p in enumerate(pdis):
            if not isinstance(p, Pdi):
                raise ContractError(f"pdis[{k}] is not a Pdi")
            if prod(p.dims) != d:
                raise DimensionError(f"pdis[{k}] has dimension {prod(p.dims)}, expected {d}")
        if self.unitaries is None:
            unitaries = tuple(np.eye(d, dtype=np.complex128) for _ in pdis)
        else:
            unitaries = tuple(self.unitaries)
        if len(unitaries) != len(pdis):
            raise ContractError("one unitary per time step is required")
        for k, u in enumerate(unitaries):
            if u.shape != (d, d) or not is_unitary(u, self.tol):
                raise ContractError(f"unitaries[{k}] is not a {d}x{d} unitary")
        times = self.times or tuple(f"t{k + 1}" for k in range(len(pdis)))
        if len(times) != len(pdis):
            raise ContractError("one time label per PDI is required")
        object.__setattr__(self, "pdis", pdis)
        object.__setattr__(self, "unitaries", tuple(frozen(u) for u in unitaries))
        object.__setattr__(self, "times", tuple(str(t) for t in times))

    @property
    def dim(self):
        return self.initial.dim

    @property
    def shape(self):
        return tuple(len(p) for p in self.pdis)

    def n_histories(self):
        return prod(self.shape)

    def histories(self):
        """All histories, lexicographic in PDI indices."""
        n = self.n_histories()
        if n > MAX_HISTORIES:
            raise HistoryLimitError(f"{n} histories exceed the cap of {MAX_HISTORIES}")
        return list(product(*(range(k) for k in self.shape)))

    def label(self, y):
        return " ⊙ ".join(p.labels[i] for p, i in zip(self.pdis, y))


def _check_history(f, y):
    y = tuple(int(i) for i in y)
    if len(y) != len(f.pdis):
        raise IndexError(f"history has {len(y)} entries, framework has {len(f.pdis)} times")
    for k, (i, n) in enumerate(zip(y, f.shape)):
        if not 0 <= i < n:
            raise IndexError(f"history index {i} out of range at time {f.times[k]}")
    return y


def chain_operator(f, y):
    """``P_N U_N ... P_1 U_1`` for history ``y``."""
    y = _check_history(f, y)
    k = np.eye(f.dim, dtype=np.complex128)
    for u, pdi, i in zip(f.unitaries, f.pdis, y):
        k = pdi.projectors[i] @ (u @ k)
    return k


def chain_operators(f):
    """Stacked chain operators of every history, shape ``(n, d, d)``."""
    f.histories()  # enforces the cap
    ks = np.eye(f.dim, dtype=np.complex128)[None]
    for u, pdi in zip(f.unitaries, f.pdis):
        projs = np.stack(pdi.projectors)
        ks = np.einsum("pij,njk->npik", projs, u @ ks).reshape(-1, f.dim, f.dim)
    return ks


def decoherence_functional(f, y, y2):
    """``Tr[K(y) rho0 K(y2)^dagger]``."""
    return complex(np.trace(chain_operator(f, y) @ f.initial.matrix
                            @ chain_operator(f, y2).conj().T))


def decoherence_matrix(f):
    """Full ``D`` over all histories in lexicographic order."""
    ks = chain_operators(f)
    n = ks.shape[0]
    m = (ks @ f.initial.matrix).reshape(n, -1)
    return m @ ks.reshape(n, -1).conj().T


@dataclass(frozen=True)
class ConsistencyReport:
    consistent: bool
    offending: tuple  # ((y, y2, |D|), ...) with y < y2
    tol: float

    def __bool__(self):
        return self.consistent


def is_consistent(f, tol=TOL):
    """Medium-decoherence check: ``|D(y, y')| < tol`` for every ``y != y'``."""
    hs = f.histories()
    ks = chain_operators(f)
    n = ks.shape[0]
    m = (ks @ f.initial.matrix).reshape(n, -1)
    kc = ks.reshape(n, -1).conj()
    offending = []
    for start in range(0, n, _BLOCK):
        block = m[start:start + _BLOCK] @ kc.T
        rows, cols = np.nonzero(np.abs(block) >= tol)
        for r, c in zip(rows, cols):
            i = start + r
            if i < c:
                offending.append((hs[i], hs[c], float(abs(block[r, c]))))
    return ConsistencyReport(not offending, tuple(offending), tol)


def history_probability(f, y, tol=TOL):
    """``D(y, y)``; only meaningful (and only allowed) for consistent frameworks."""
    y = _check_history(f, y)
    report = is_consistent(f, tol)
    if not report:
        raise ConsistencyError(f"framework {f.name!r} is inconsistent; "
                               f"{len(report.offending)} off-diagonal terms exceed {tol}")
    return max(0.0, decoherence_functional(f, y, y).real)


def history_probabilities(f, tol=TOL):
    report = is_consistent(f, tol)
    if not report:
        raise ConsistencyError(f"framework {f.name!r} is inconsistent")
    d = np.real(np.diag(decoherence_matrix(f)))
    return {y: max(0.0, float(p)) for y, p in zip(f.histories(), d)}


def coarse_grained_weight(f, histories):
    """Weight of the disjunction of ``histories``: ``Tr[K rho0 K^dagger]``, ``K = sum K(y)``."""
    k = sum(chain_operator(f, y) for y in histories)
    return float(np.trace(k @ f.initial.matrix @ k.conj().T).real)


def additivity_residual(f, histories):
    """Coarse-grained weight minus the sum of fine-grained weights."""
    fine = sum(decoherence_functional(f, y, y).real for y in histories)
    return coarse_grained_weight(f, histories) - fine


@dataclass(frozen=True)
class FrameworkConflict:
    compatible: bool
    witness: tuple  # (i, j) indices of the worst non-commuting pair, or None
    witness_labels: tuple
    commutator_norm: float
    norms: np.ndarray = field(repr=False, compare=False)


def framework_conflict(p, q, tol=TOL):
    """Whether two PDIs admit a common refinement; otherwise the worst witness pair.

    The witness is the pair with the largest commutator spectral norm,
    ties broken lexicographically.
    """
    norms = commutator_norms(p, q)
    worst = float(norms.max())
    if worst <= tol:
        return FrameworkConflict(True, None, None, worst, norms)
    i, j = np.unravel_index(int(np.argmax(norms >= worst - tol)), norms.shape)
    return FrameworkConflict(False, (int(i), int(j)), (p.labels[i], q.labels[j]), worst, norms)


# --- built-in frameworks -----------------------------------------------------

def _x_up():
    return PureState(HADAMARD @ np.array([1, 0], dtype=np.complex128), (2,))


def stern_gerlach_framework():
    """Preparation in x-up, then {[psi1], [1 - psi1]} at t1 and {[Z up], [Z down]} at t2."""
    psi0 = _x_up()
    psi1 = psi0  # U = I
    z = Pdi.from_kets([[1, 0], [0, 1]], (2,), ("Z↑", "Z↓"))
    prep = Pdi.from_kets([psi1.amplitudes], (2,), ("Ψ1", "1-Ψ1"), complement=True)
    return HistoryFramework(psi0.to_density(), (prep, z), name="stern-gerlach")


def z_then_x_framework():
    """sigma_z then sigma_x on x-up with U = I: not consistent."""
    z = Pdi.from_kets([[1, 0], [0, 1]], (2,), ("Z↑", "Z↓"))
    x = Pdi.from_kets([[1, 1], [1, -1]], (2,), ("X↑", "X↓"))
    return HistoryFramework(_x_up().to_density(), (z, x), name="z-then-x")


def friend_t1_pdi():
    """F's decomposition of A (x) B at t1, in the printed order."""
    from .scenario import friend_pdi
    return friend_pdi()


def wigner_t1_pdi():
    """W's decomposition {[phi+], [1 - phi+]} at t1."""
    return Pdi.from_kets([bell_state("phi+").amplitudes], (2, 2), ("Φ+", "1-Φ+"),
                         complement=True)


def t1_conflict_frameworks():
    """F's and W's t1 frameworks for A (x) B after the pointer correlation."""
    from .scenario import CNOT
    rho0 = _x_up().tensor(PureState([1, 0], (2,))).to_density()
    f = HistoryFramework(rho0, (friend_t1_pdi(),), (CNOT,), ("t1",), name="F")
    w = HistoryFramework(rho0, (wigner_t1_pdi(),), (CNOT,), ("t1",), name="W")
    return f, w


CH_BUILTINS = {
    "stern-gerlach": (lambda: (stern_gerlach_framework(),),
                      "prepared x-up, PDIs {[psi1],[1-psi1]} then {[Z up],[Z down]}"),
    "t1-conflict": (t1_conflict_frameworks,
                    "F's four-projector t1 decomposition against W's {[phi+],[1-phi+]}"),
    "z-then-x": (lambda: (z_then_x_framework(),),
                 "sigma_z then sigma_x on x-up: an inconsistent family"),
}
