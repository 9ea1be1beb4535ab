"""Timelines of events over named subsystems, evaluated per agent.

Each agent carries an interpretation rule that decides which measurement
events it treats as producing outcomes. Evaluating a scenario from an
agent's point of view yields a proper mixture over the full layout; flag
observables are then read off that mixture and compared between agents.
"""
from dataclasses import dataclass, field, replace
from itertools import combinations
from math import prod

import numpy as np

from .errors import ContractError, ScenarioError
from .linalg import TOL, check_dims, cmatrix, frozen, is_projector, is_unitary
from .measurement import (DephasingSpec, Pdi, born, measure_outcomes, pdi_from_observable)
from .states import (HADAMARD, NUMBER, SX, I2, MixedEnsemble, Observable, PureState,
                     bell_basis_matrix, bell_observable, bell_state, lift, pauli_theta,
                     total_spin_squared)

DEFAULT_THRESHOLD = 1e-6


@dataclass(frozen=True)
class SystemLayout:
    systems: tuple  # ((name, dim), ...)

    def __post_init__(self):
        systems = tuple((str(n), int(d)) for n, d in self.systems)
        names = [n for n, _ in systems]
        if len(set(names)) != len(names):
            raise ScenarioError(f"duplicate system names in {names}")
        check_dims([d for _, d in systems])
        object.__setattr__(self, "systems", systems)

    @property
    def names(self):
        return tuple(n for n, _ in self.systems)

    @property
    def dims(self):
        return tuple(d for _, d in self.systems)

    def indices(self, names):
        out = []
        for n in names:
            if n not in self.names:
                raise ScenarioError(f"unknown system {n!r}")
            out.append(self.names.index(n))
        if len(set(out)) != len(out):
            raise ScenarioError(f"repeated system in {list(names)}")
        return out

    def subdims(self, names):
        return tuple(self.dims[i] for i in self.indices(names))


@dataclass(frozen=True, eq=False)
class UnitaryEvent:
    time: str
    operator: np.ndarray
    targets: tuple

    def __post_init__(self):
        object.__setattr__(self, "operator", frozen(cmatrix(self.operator)))
        object.__setattr__(self, "targets", tuple(self.targets))


@dataclass(frozen=True, eq=False)
class MeasurementEvent:
    """Measurement of ``pdi`` on ``targets`` by ``owner``.

    ``correlation`` is the unitary interaction that sets up the measurement
    record (e.g. a pointer CNOT). An agent that collapses this event applies
    the correlation and then branches over the PDI; any other agent applies
    the correlation alone.
    """

    time: str
    owner: str
    record: str
    pdi: Pdi
    targets: tuple
    correlation: np.ndarray = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if self.correlation is not None:
            object.__setattr__(self, "correlation", frozen(cmatrix(self.correlation)))


@dataclass(frozen=True, eq=False)
class SignalChannel:
    control: np.ndarray  # projector on the signal's source targets
    unitary: np.ndarray
    targets: tuple

    def __post_init__(self):
        object.__setattr__(self, "control", frozen(cmatrix(self.control)))
        object.__setattr__(self, "unitary", frozen(cmatrix(self.unitary)))
        object.__setattr__(self, "targets", tuple(self.targets))


@dataclass(frozen=True, eq=False)
class SignalEvent:
    """Apply ``unitary`` on each channel's targets conditioned on ``control``.

    Controls must be mutually orthogonal projectors on ``source``; the event
    acts as ``sum_k P_k (x) U_k + (I - sum_k P_k) (x) I``.
    """

    time: str
    source: tuple
    channels: tuple

    def __post_init__(self):
        object.__setattr__(self, "source", tuple(self.source))
        object.__setattr__(self, "channels", tuple(self.channels))


@dataclass(frozen=True, eq=False)
class DephasingEvent:
    """Partial pinching of ``targets`` in ``spec.basis``, unravelled into branches."""

    time: str
    targets: tuple
    spec: DephasingSpec
    basis_name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))


@dataclass(frozen=True)
class UnitaryOnly:
    kind = "unitary-only"


@dataclass(frozen=True)
class SubjectiveCollapse:
    """Collapse only the listed measurement records (owned by the agent)."""

    events: frozenset
    kind = "subjective-collapse"

    def __post_init__(self):
        object.__setattr__(self, "events", frozenset(self.events))


@dataclass(frozen=True)
class GlobalCut:
    """Collapse every measurement at or after the event labelled ``cut``."""

    cut: str
    kind = "global-cut"


@dataclass(frozen=True, eq=False)
class Flag:
    name: str
    observable: Observable
    targets: tuple
    labels: tuple = None

    def __post_init__(self):
        if not isinstance(self.observable, Observable):
            object.__setattr__(self, "observable", Observable(self.observable))
        object.__setattr__(self, "targets", tuple(self.targets))
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != len(self.observable.spectral):
                raise ScenarioError(f"flag {self.name!r}: {len(labels)} labels for "
                                    f"{len(self.observable.spectral)} outcomes")
            object.__setattr__(self, "labels", labels)

    def pdi(self):
        return pdi_from_observable(self.observable, self.labels)


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    layout: SystemLayout
    initial: PureState
    timeline: tuple
    agents: tuple  # ((name, rule), ...)
    flags: tuple
    description: str = ""
    dephasing_site: str = None  # time label before which --lambda dephasing goes
    dephasing_basis: str = "computational"
    tol: float = field(default=TOL, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "timeline", tuple(self.timeline))
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "flags", tuple(self.flags))
        self.validate()

    def validate(self):
        layout = self.layout
        if self.initial.dims != layout.dims:
            raise ScenarioError(f"initial state dims {self.initial.dims} != layout {layout.dims}")
        times = [ev.time for ev in self.timeline]
        if len(set(times)) != len(times):
            raise ScenarioError(f"time labels must be unique and strictly ordered: {times}")
        records = set()
        for ev in self.timeline:
            where = f"event {ev.time!r}"
            if isinstance(ev, UnitaryEvent):
                _check_op(ev.operator, layout, ev.targets, where, unitary=True, tol=self.tol)
            elif isinstance(ev, MeasurementEvent):
                d = prod(layout.subdims(ev.targets))
                if prod(ev.pdi.dims) != d:
                    raise ScenarioError(f"{where}: PDI dimension does not match targets")
                if ev.correlation is not None:
                    _check_op(ev.correlation, layout, ev.targets, where, unitary=True, tol=self.tol)
                if ev.record in records:
                    raise ScenarioError(f"{where}: duplicate record name {ev.record!r}")
                records.add(ev.record)
            elif isinstance(ev, SignalEvent):
                src = layout.indices(ev.source)
                total = 0
                for k, ch in enumerate(ev.channels):
                    _check_op(ch.control, layout, ev.source, f"{where} channel {k}")
                    if not is_projector(ch.control, self.tol):
                        raise ScenarioError(f"{where} channel {k}: control is not a projector")
                    _check_op(ch.unitary, layout, ch.targets, f"{where} channel {k}",
                              unitary=True, tol=self.tol)
                    if set(layout.indices(ch.targets)) & set(src):
                        raise ScenarioError(f"{where} channel {k}: targets overlap the source")
                    total = total + ch.control
                if not ev.channels:
                    raise ScenarioError(f"{where}: signal without channels")
                if not is_projector(total, self.tol):
                    raise ScenarioError(f"{where}: channel controls are not mutually orthogonal")
            elif isinstance(ev, DephasingEvent):
                if prod(ev.spec.basis.dims) != prod(layout.subdims(ev.targets)):
                    raise ScenarioError(f"{where}: dephasing basis does not match targets")
            else:
                raise ScenarioError(f"unsupported event type {type(ev).__name__}")
        names = [a for a, _ in self.agents]
        if len(set(names)) != len(names):
            raise ScenarioError(f"duplicate agent names {names}")
        for agent, rule in self.agents:
            if isinstance(rule, SubjectiveCollapse):
                for rec in rule.events:
                    ev = self._measurement(rec)
                    if ev is None:
                        raise ScenarioError(f"agent {agent!r} references unknown event {rec!r}")
                    if ev.owner != agent:
                        raise ScenarioError(f"agent {agent!r} cannot collapse {rec!r} "
                                            f"owned by {ev.owner!r}")
            elif isinstance(rule, GlobalCut):
                if rule.cut not in times:
                    raise ScenarioError(f"agent {agent!r} cut at unknown time {rule.cut!r}")
            elif not isinstance(rule, UnitaryOnly):
                raise ScenarioError(f"agent {agent!r} has unsupported rule {rule!r}")
        flag_names = [f.name for f in self.flags]
        if len(set(flag_names)) != len(flag_names):
            raise ScenarioError(f"duplicate flag names {flag_names}")
        for f in self.flags:
            _check_op(f.observable.matrix, layout, f.targets, f"flag {f.name!r}")
        if self.dephasing_site is not None and self.dephasing_site not in times:
            raise ScenarioError(f"dephasing site {self.dephasing_site!r} is not a time label")

    def _measurement(self, record):
        for ev in self.timeline:
            if isinstance(ev, MeasurementEvent) and ev.record == record:
                return ev
        return None

    @property
    def agent_names(self):
        return tuple(a for a, _ in self.agents)

    def rule(self, agent):
        for name, rule in self.agents:
            if name == agent:
                return rule
        raise ScenarioError(f"unknown agent {agent!r}")

    def flag(self, name):
        for f in self.flags:
            if f.name == name:
                return f
        raise ScenarioError(f"unknown flag {name!r}")

    def event_at(self, time):
        for ev in self.timeline:
            if ev.time == time:
                return ev
        raise ScenarioError(f"no event at time {time!r}")

    def collapsed_records(self, agent):
        """Measurement records the agent treats as producing outcomes."""
        rule = self.rule(agent)
        if isinstance(rule, SubjectiveCollapse):
            return frozenset(rule.events)
        if isinstance(rule, GlobalCut):
            times = [ev.time for ev in self.timeline]
            start = times.index(rule.cut)
            return frozenset(ev.record for ev in self.timeline[start:]
                             if isinstance(ev, MeasurementEvent))
        return frozenset()

    def with_dephasing(self, lam, before=None, basis=None):
        """Copy with a dephasing event inserted before ``before``.

        The dephasing acts on the targets of the event it precedes. ``basis``
        is ``"computational"`` or ``"bell"`` (two qubits only).
        """
        before = before or self.dephasing_site
        basis = basis or self.dephasing_basis
        if before is None:
            raise ScenarioError(f"scenario {self.name!r} has no dephasing site")
        target_ev = self.event_at(before)
        targets = getattr(target_ev, "targets", None) or getattr(target_ev, "source", None)
        sub = self.layout.subdims(targets)
        spec = DephasingSpec(named_basis(basis, sub), float(lam))
        label = f"{before}-dephase"
        timeline = []
        for ev in self.timeline:
            if ev.time == before:
                timeline.append(DephasingEvent(label, targets, spec, basis))
            timeline.append(ev)
        return replace(self, timeline=tuple(timeline))


def named_basis(name, dims):
    """PDI for a named basis on a subsystem with ``dims``."""
    dims = check_dims(dims)
    if name == "computational":
        from .states import basis_projectors, ket_labels
        return Pdi(tuple(basis_projectors(dims)), dims, tuple(ket_labels(dims)))
    if name == "bell":
        if dims != (2, 2):
            raise ScenarioError("the Bell basis needs two qubits")
        return bell_pdi()
    raise ScenarioError(f"unknown basis {name!r}; expected 'computational' or 'bell'")


def _check_op(op, layout, targets, where, unitary=False, tol=TOL):
    d = prod(layout.subdims(targets))
    if op.shape != (d, d):
        raise ScenarioError(f"{where}: operator shape {op.shape} does not fit targets "
                            f"{list(targets)} (dimension {d})")
    if unitary and not is_unitary(op, tol):
        raise ScenarioError(f"{where}: operator is not unitary")


def _full(scenario, op, targets):
    return lift(op, scenario.layout.dims, scenario.layout.indices(targets))


def _signal_unitary(scenario, ev):
    dims = scenario.layout.dims
    d = prod(dims)
    u = np.zeros((d, d), dtype=np.complex128)
    rest = np.eye(d, dtype=np.complex128)
    for ch in ev.channels:
        p = _full(scenario, ch.control, ev.source)
        u += p @ _full(scenario, ch.unitary, ch.targets)
        rest -= p
    return u + rest


def iter_perspective(s, agent):
    """Yield ``(event, ensemble)`` after each event of the timeline."""
    collapsed = s.collapsed_records(agent)
    branches = [(1.0, s.initial)]
    for ev in s.timeline:
        if isinstance(ev, UnitaryEvent):
            u = _full(s, ev.operator, ev.targets)
            branches = [(p, st.evolve(u)) for p, st in branches]
        elif isinstance(ev, MeasurementEvent):
            if ev.correlation is not None:
                u = _full(s, ev.correlation, ev.targets)
                branches = [(p, st.evolve(u)) for p, st in branches]
            if ev.record in collapsed:
                pdi = ev.pdi.lifted(s.layout.dims, s.layout.indices(ev.targets))
                branches = [(p * q, post) for p, st in branches
                            for _, q, post in measure_outcomes(st, pdi)]
        elif isinstance(ev, SignalEvent):
            u = _signal_unitary(s, ev)
            branches = [(p, st.evolve(u)) for p, st in branches]
        elif isinstance(ev, DephasingEvent):
            branches = _unravel_dephasing(s, ev, branches)
        total = sum(p for p, _ in branches)
        branches = [(p / total, st) for p, st in branches]
        yield ev, MixedEnsemble(tuple(branches), s.layout.dims)


def _unravel_dephasing(s, ev, branches):
    lam = ev.spec.lam
    pdi = ev.spec.basis.lifted(s.layout.dims, s.layout.indices(ev.targets))
    out = []
    for p, st in branches:
        outcomes = measure_outcomes(st, pdi)
        if len(outcomes) == 1:
            out.append((p, st))
            continue
        if lam < 1:
            out.append((p * (1 - lam), st))
        if lam > 0:
            out.extend((p * lam * q, post) for _, q, post in outcomes)
    return out


def evolve_perspective(s, agent, until=None):
    """Proper mixture assigned by ``agent`` after the timeline (or after ``until``)."""
    ensemble = MixedEnsemble.pure(s.initial)
    for ev, ensemble in iter_perspective(s, agent):
        if ev.time == until:
            break
    else:
        if until is not None:
            raise ScenarioError(f"no event at time {until!r}")
    return ensemble


def predict(s, agent, flag):
    """Outcome distribution ``{label: probability}`` of a flag for one agent."""
    f = s.flag(flag)
    ensemble = evolve_perspective(s, agent)
    pdi = f.pdi().lifted(s.layout.dims, s.layout.indices(f.targets))
    return dict(zip(pdi.labels, (float(p) for p in born(ensemble, pdi))))


def tv_distance(p, q):
    """Total-variation distance between two distributions over the same labels."""
    if list(p) != list(q):
        raise ContractError(f"outcome labels differ: {list(p)} vs {list(q)}")
    return 0.5 * sum(abs(p[k] - q[k]) for k in p)


@dataclass(frozen=True)
class Comparison:
    agent_a: str
    agent_b: str
    flag: str
    tv: float
    inconsistent: bool


def detect_inconsistency(distributions, threshold=DEFAULT_THRESHOLD):
    """Pairwise TV distances per shared flag; inconsistent iff ``tv > threshold``.

    ``distributions`` maps agent -> flag -> {label: probability}.
    """
    agents = list(distributions)
    if len(agents) < 2:
        raise ScenarioError("inconsistency detection needs at least two agents")
    out = []
    for a, b in combinations(agents, 2):
        for flag in distributions[a]:
            if flag not in distributions[b]:
                continue
            tv = min(1.0, max(0.0, tv_distance(distributions[a][flag], distributions[b][flag])))
            out.append(Comparison(a, b, flag, tv, tv > threshold))
    return out


@dataclass(frozen=True)
class PredictionReport:
    scenario: str
    distributions: dict  # agent -> flag -> label -> probability
    comparisons: tuple
    threshold: float

    @property
    def inconsistent(self):
        return any(c.inconsistent for c in self.comparisons)

    def tv(self, a, b, flag):
        for c in self.comparisons:
            if {c.agent_a, c.agent_b} == {a, b} and c.flag == flag:
                return c.tv
        raise KeyError((a, b, flag))


def build_report(s, threshold=DEFAULT_THRESHOLD):
    dists = {}
    for agent in s.agent_names:
        ensemble = evolve_perspective(s, agent)
        rho = ensemble.to_density()
        per_flag = {}
        for f in s.flags:
            pdi = f.pdi().lifted(s.layout.dims, s.layout.indices(f.targets))
            per_flag[f.name] = dict(zip(pdi.labels, (float(p) for p in born(rho, pdi))))
        dists[agent] = per_flag
    comparisons = detect_inconsistency(dists, threshold) if len(dists) > 1 else []
    return PredictionReport(s.name, dists, tuple(comparisons), threshold)


def sample_runs(s, agent, flag, trials, seed, distribution=None):
    """Multinomial outcome counts for ``trials`` simulated runs."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    dist = distribution if distribution is not None else predict(s, agent, flag)
    p = np.array(list(dist.values()), dtype=float)
    p = p / p.sum()
    counts = np.random.default_rng(seed).multinomial(int(trials), p)
    return dict(zip(dist, (int(c) for c in counts)))


# --- built-in scenarios ------------------------------------------------------

CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128)
ANTI_CNOT = np.kron(I2, SX) @ CNOT
EXCITED_LABELS = ("ground", "excited")


def bell_pdi():
    return pdi_from_observable(bell_observable(), ("phi+", "phi-", "psi+", "psi-"))


def friend_pdi():
    """F's four-outcome decomposition of A (x) B: Z-up/B-up, Z-up/B-down, Z-down/B-down, Z-down/B-up."""
    kets = [PureState.basis((2, 2), a, b).amplitudes for a, b in ((0, 0), (0, 1), (1, 1), (1, 0))]
    return Pdi.from_kets(kets, (2, 2), ("↑↑", "↑↓", "↓↓", "↓↑"))


def total_spin_pdi():
    return pdi_from_observable(total_spin_squared(), ("J=0", "J=1"))


def _friend_timeline(correlation, w_pdi, w_record, signal_channels):
    return (
        UnitaryEvent("t0", HADAMARD, ("A",)),
        MeasurementEvent("t1", "F", "F:sz", friend_pdi(), ("A", "B"), correlation),
        MeasurementEvent("t2", "W", w_record, w_pdi, ("A", "B")),
        SignalEvent("t3", ("A", "B"), signal_channels),
    )


def _agents(w_record):
    return (("F", SubjectiveCollapse({"F:sz"})), ("W", SubjectiveCollapse({w_record})))


def builtin_wigner_bell():
    layout = SystemLayout((("A", 2), ("B", 2), ("C", 2)))
    phi = bell_state("phi+").projector()
    return Scenario(
        name="wigner-bell",
        layout=layout,
        initial=PureState.basis(layout.dims, 0, 0, 0),
        timeline=_friend_timeline(CNOT, bell_pdi(), "W:bell",
                                  (SignalChannel(phi, SX, ("C",)),)),
        agents=_agents("W:bell"),
        flags=(Flag("C-excited", Observable(NUMBER), ("C",), EXCITED_LABELS),),
        description="Bell-observable counterexample: photon to C on finding phi+",
        dephasing_site="t2",
    )


def builtin_wigner_totalspin():
    layout = SystemLayout((("A", 2), ("B", 2), ("C", 2)))
    triplet = total_spin_squared().projector_for(2.0)
    return Scenario(
        name="wigner-totalspin",
        layout=layout,
        initial=PureState.basis(layout.dims, 0, 0, 0),
        timeline=_friend_timeline(ANTI_CNOT, total_spin_pdi(), "W:J2",
                                  (SignalChannel(triplet, SX, ("C",)),)),
        agents=_agents("W:J2"),
        flags=(Flag("J2", total_spin_squared(), ("A", "B"), ("J=0", "J=1")),
               Flag("C-excited", Observable(NUMBER), ("C",), EXCITED_LABELS)),
        description="anti-correlated pointer, W measures total spin J^2",
        dephasing_site="t2",
    )


def builtin_wigner_two_channels():
    layout = SystemLayout((("A", 2), ("B", 2), ("C+", 2), ("C-", 2)))
    return Scenario(
        name="wigner-two-channels",
        layout=layout,
        initial=PureState.basis(layout.dims, 0, 0, 0, 0),
        timeline=_friend_timeline(CNOT, bell_pdi(), "W:bell", (
            SignalChannel(bell_state("phi+").projector(), SX, ("C+",)),
            SignalChannel(bell_state("phi-").projector(), SX, ("C-",)),
        )),
        agents=_agents("W:bell"),
        flags=(Flag("C+-excited", Observable(NUMBER), ("C+",), EXCITED_LABELS),
               Flag("C--excited", Observable(NUMBER), ("C-",), EXCITED_LABELS)),
        description="two communication qubits: C+ fired on phi+, C- on phi-",
        dephasing_site="t2",
    )


SINGLET_ANGLES = (("0", 0.0), ("pi/4", np.pi / 4), ("pi/2", np.pi / 2))


def builtin_singlet_degeneracy():
    layout = SystemLayout((("A", 2), ("B", 2)))
    # columns: psi-, phi-, psi+, phi+ -- maps |00> to the singlet
    prep = bell_basis_matrix()[:, [3, 1, 2, 0]]
    flags = tuple(
        Flag(f"sigma({name})^2", Observable(np.kron(pauli_theta(th).matrix, pauli_theta(th).matrix)),
             ("A", "B"), ("anti", "same"))
        for name, th in SINGLET_ANGLES)
    z_pdi = pdi_from_observable(Observable(np.diag([1.0, -1.0])), ("↓", "↑"))
    return Scenario(
        name="singlet-degeneracy",
        layout=layout,
        initial=PureState.basis(layout.dims, 0, 0),
        timeline=(UnitaryEvent("t0", prep, ("A", "B")),
                  MeasurementEvent("t1", "Fz", "Fz:sz", z_pdi, ("A",))),
        agents=(("Fz", SubjectiveCollapse({"Fz:sz"})), ("W", UnitaryOnly())),
        flags=flags,
        description="singlet is anti-correlated along every sigma_theta; a z outcome is not singled out",
    )


BUILTINS = {
    "wigner-bell": (builtin_wigner_bell,
                    "Friend measures sigma_z, Wigner measures the Bell observable and signals C"),
    "wigner-totalspin": (builtin_wigner_totalspin,
                         "anti-correlated pointer; Wigner measures total spin J^2"),
    "wigner-two-channels": (builtin_wigner_two_channels,
                            "separate channels C+ (phi+) and C- (phi-)"),
    "singlet-degeneracy": (builtin_singlet_degeneracy,
                           "singlet correlation does not single out a measurement basis"),
}


def builtin(name):
    try:
        return BUILTINS[name][0]()
    except KeyError:
        raise ScenarioError(f"unknown builtin {name!r}; try one of {list(BUILTINS)}") from None
