"""JSON documents: scenario and framework inputs, prediction and CH reports.

Complex numbers are two-element ``[re, im]`` arrays, matrices are lists of
rows of those. Every object is checked for unknown keys, and every error
carries the dotted path of the offending field.
"""
import json

import numpy as np

from .errors import DocumentError, QFriendError
from .histories import HistoryFramework
from .measurement import DephasingSpec, Pdi, pdi_from_observable
from .scenario import (Comparison, DephasingEvent, Flag, GlobalCut, MeasurementEvent,
                       PredictionReport, Scenario, SignalChannel, SignalEvent, SubjectiveCollapse,
                       SystemLayout, UnitaryEvent, UnitaryOnly, named_basis)
from .states import (HADAMARD, I2, NUMBER, SX, SY, SZ, DensityOperator, Observable, PureState,
                     bell_observable, bell_state, total_spin_squared)

SCHEMA_VERSION = 1


def _cnot():
    from .scenario import CNOT
    return CNOT


NAMED_OPERATORS = {
    "I": lambda: I2,
    "X": lambda: SX,
    "Y": lambda: SY,
    "Z": lambda: SZ,
    "H": lambda: HADAMARD,
    "number": lambda: NUMBER,
    "CNOT": _cnot,
    "bell-observable": lambda: bell_observable().matrix,
    "total-spin-squared": lambda: total_spin_squared().matrix,
    "proj:phi+": lambda: bell_state("phi+").projector(),
    "proj:phi-": lambda: bell_state("phi-").projector(),
    "proj:psi+": lambda: bell_state("psi+").projector(),
    "proj:psi-": lambda: bell_state("psi-").projector(),
}


# --- low-level decoding -------------------------------------------------------

def _obj(value, where, required=(), optional=()):
    if not isinstance(value, dict):
        raise DocumentError("expected an object", where)
    unknown = set(value) - set(required) - set(optional)
    if unknown:
        raise DocumentError(f"unknown field(s) {sorted(unknown)}", where)
    missing = [k for k in required if k not in value]
    if missing:
        raise DocumentError(f"missing field(s) {missing}", where)
    return value


def _list(value, where, nonempty=True):
    if not isinstance(value, list) or (nonempty and not value):
        raise DocumentError("expected a nonempty array" if nonempty else "expected an array", where)
    return value


def _str(value, where):
    if not isinstance(value, str) or not value:
        raise DocumentError("expected a nonempty string", where)
    return value


def _num(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DocumentError("expected a number", where)
    return float(value)


def _complex(value, where):
    if not isinstance(value, list) or len(value) != 2:
        raise DocumentError("expected a complex number as [re, im]", where)
    return complex(_num(value[0], where + "[0]"), _num(value[1], where + "[1]"))


def decode_vector(value, where):
    return np.array([_complex(x, f"{where}[{i}]") for i, x in enumerate(_list(value, where))],
                    dtype=np.complex128)


def decode_matrix(value, where):
    if isinstance(value, str):
        if value not in NAMED_OPERATORS:
            raise DocumentError(f"unknown named operator {value!r}; known: "
                                f"{sorted(NAMED_OPERATORS)}", where)
        return np.array(NAMED_OPERATORS[value](), dtype=np.complex128)
    rows = [decode_vector(r, f"{where}[{i}]") for i, r in enumerate(_list(value, where))]
    if len({len(r) for r in rows}) != 1:
        raise DocumentError("matrix rows have different lengths", where)
    return np.array(rows)


def decode_pdi(value, dims, where):
    forms = ("projectors", "kets", "observable", "basis")
    v = _obj(value, where, optional=forms + ("labels", "complement"))
    present = [k for k in forms if k in v]
    if len(present) != 1:
        raise DocumentError(f"give exactly one of {list(forms)}", where)
    labels = v.get("labels")
    if labels is not None:
        labels = tuple(_str(x, f"{where}.labels[{i}]") for i, x in enumerate(_list(labels, where + ".labels")))
    if "complement" in v and "kets" not in v:
        raise DocumentError("'complement' only applies to 'kets'", where)
    try:
        if "projectors" in v:
            projs = [decode_matrix(m, f"{where}.projectors[{i}]")
                     for i, m in enumerate(_list(v["projectors"], where + ".projectors"))]
            return Pdi(tuple(projs), dims, labels)
        if "kets" in v:
            kets = [decode_vector(k, f"{where}.kets[{i}]")
                    for i, k in enumerate(_list(v["kets"], where + ".kets"))]
            complement = v.get("complement", False)
            if not isinstance(complement, bool):
                raise DocumentError("expected true or false", where + ".complement")
            return Pdi.from_kets(kets, dims, labels, complement)
        if "observable" in v:
            obs = Observable(decode_matrix(v["observable"], where + ".observable"))
            pdi = pdi_from_observable(obs, labels)
            return Pdi(pdi.projectors, dims, pdi.labels)
        basis = named_basis(_str(v["basis"], where + ".basis"), dims)
        return Pdi(basis.projectors, dims, labels or basis.labels)
    except DocumentError:
        raise
    except QFriendError as exc:
        raise DocumentError(str(exc), where) from None


def _names(value, where):
    return tuple(_str(x, f"{where}[{i}]") for i, x in enumerate(_list(value, where)))


def loads(text):
    """Parse JSON text, mapping syntax errors to ``line:column`` diagnostics."""
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(exc.msg, f"line {exc.lineno}:{exc.colno}") from None


def _version(doc, where="$"):
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise DocumentError(f"schema_version must be {SCHEMA_VERSION}, got "
                            f"{doc.get('schema_version')!r}", where + ".schema_version")


# --- scenarios ----------------------------------------------------------------

_SCENARIO_KEYS = ("schema_version", "layout", "initial", "events", "agents", "flags")


def parse_scenario(doc, tol=1e-9, lam=None):
    """Build a :class:`Scenario` from a decoded scenario document.

    ``lam`` overrides the dephasing strength of the document's ``dephasing``
    block; a positive strength inserts the dephasing event.
    """
    doc = _obj(doc, "$", _SCENARIO_KEYS, ("name", "description", "dephasing"))
    _version(doc)
    layout_items = []
    for i, item in enumerate(_list(doc["layout"], "$.layout")):
        w = f"$.layout[{i}]"
        item = _obj(item, w, ("name", "dim"))
        dim = item["dim"]
        if not isinstance(dim, int) or isinstance(dim, bool):
            raise DocumentError("expected an integer", w + ".dim")
        layout_items.append((_str(item["name"], w + ".name"), dim))
    try:
        layout = SystemLayout(tuple(layout_items))
        initial = PureState(decode_vector(doc["initial"], "$.initial"), layout.dims)
    except DocumentError:
        raise
    except QFriendError as exc:
        raise DocumentError(str(exc), "$.layout/$.initial") from None

    def sub(names, where):
        try:
            return layout.subdims(names)
        except QFriendError as exc:
            raise DocumentError(str(exc), where) from None

    events = []
    for i, ev in enumerate(_list(doc["events"], "$.events", nonempty=False)):
        w = f"$.events[{i}]"
        kind = _obj(ev, w, optional=tuple(ev) if isinstance(ev, dict) else ()).get("type")
        if kind == "unitary":
            ev = _obj(ev, w, ("type", "time", "targets", "operator"))
            targets = _names(ev["targets"], w + ".targets")
            sub(targets, w + ".targets")
            events.append(UnitaryEvent(_str(ev["time"], w + ".time"),
                                       decode_matrix(ev["operator"], w + ".operator"), targets))
        elif kind == "measurement":
            ev = _obj(ev, w, ("type", "time", "owner", "record", "targets", "pdi"), ("correlation",))
            targets = _names(ev["targets"], w + ".targets")
            corr = ev.get("correlation")
            events.append(MeasurementEvent(
                _str(ev["time"], w + ".time"), _str(ev["owner"], w + ".owner"),
                _str(ev["record"], w + ".record"),
                decode_pdi(ev["pdi"], sub(targets, w + ".targets"), w + ".pdi"), targets,
                None if corr is None else decode_matrix(corr, w + ".correlation")))
        elif kind == "signal":
            ev = _obj(ev, w, ("type", "time", "source", "channels"))
            source = _names(ev["source"], w + ".source")
            sub(source, w + ".source")
            channels = []
            for k, ch in enumerate(_list(ev["channels"], w + ".channels")):
                cw = f"{w}.channels[{k}]"
                ch = _obj(ch, cw, ("control", "unitary", "targets"))
                channels.append(SignalChannel(decode_matrix(ch["control"], cw + ".control"),
                                              decode_matrix(ch["unitary"], cw + ".unitary"),
                                              _names(ch["targets"], cw + ".targets")))
            events.append(SignalEvent(_str(ev["time"], w + ".time"), source, tuple(channels)))
        elif kind == "dephasing":
            ev = _obj(ev, w, ("type", "time", "targets", "basis", "lambda"))
            targets = _names(ev["targets"], w + ".targets")
            dims = sub(targets, w + ".targets")
            basis = ev["basis"]
            if isinstance(basis, str):
                name = basis
                pdi = decode_pdi({"basis": basis}, dims, w + ".basis")
            else:
                name = "custom"
                pdi = decode_pdi(basis, dims, w + ".basis")
            try:
                spec = DephasingSpec(pdi, _num(ev["lambda"], w + ".lambda"))
            except QFriendError as exc:
                raise DocumentError(str(exc), w + ".lambda") from None
            events.append(DephasingEvent(_str(ev["time"], w + ".time"), targets, spec, name))
        else:
            raise DocumentError(f"unknown event type {kind!r}; expected unitary, measurement, "
                                "signal or dephasing", w + ".type")

    agents = []
    for i, a in enumerate(_list(doc["agents"], "$.agents")):
        w = f"$.agents[{i}]"
        a = _obj(a, w, ("name", "rule"))
        agents.append((_str(a["name"], w + ".name"), _decode_rule(a["rule"], w + ".rule")))

    flags = []
    for i, f in enumerate(_list(doc["flags"], "$.flags")):
        w = f"$.flags[{i}]"
        f = _obj(f, w, ("name", "targets", "observable"), ("labels",))
        targets = _names(f["targets"], w + ".targets")
        sub(targets, w + ".targets")
        labels = f.get("labels")
        if labels is not None:
            labels = _names(labels, w + ".labels")
        try:
            flags.append(Flag(_str(f["name"], w + ".name"),
                              Observable(decode_matrix(f["observable"], w + ".observable")),
                              targets, labels))
        except DocumentError:
            raise
        except QFriendError as exc:
            raise DocumentError(str(exc), w) from None

    site, basis, doc_lam = None, "computational", 0.0
    if "dephasing" in doc:
        dp = _obj(doc["dephasing"], "$.dephasing", ("before",), ("basis", "lambda"))
        site = _str(dp["before"], "$.dephasing.before")
        basis = _str(dp.get("basis", basis), "$.dephasing.basis")
        if basis not in ("computational", "bell"):
            raise DocumentError("expected 'computational' or 'bell'", "$.dephasing.basis")
        doc_lam = _num(dp.get("lambda", 0.0), "$.dephasing.lambda")
        if not 0 <= doc_lam <= 1:
            raise DocumentError("lambda must lie in [0, 1]", "$.dephasing.lambda")
    try:
        scenario = Scenario(
            name=doc.get("name", "scenario"), layout=layout, initial=initial,
            timeline=tuple(events), agents=tuple(agents), flags=tuple(flags),
            description=doc.get("description", ""), dephasing_site=site,
            dephasing_basis=basis, tol=tol)
        if lam is None:
            lam = doc_lam
        if lam > 0:
            scenario = scenario.with_dephasing(lam)
    except QFriendError as exc:
        raise DocumentError(str(exc), "$") from None
    return scenario


def _decode_rule(value, where):
    kind = value.get("kind") if isinstance(value, dict) else None
    if kind == "unitary-only":
        _obj(value, where, ("kind",))
        return UnitaryOnly()
    if kind == "subjective-collapse":
        value = _obj(value, where, ("kind", "events"))
        return SubjectiveCollapse(frozenset(_names(value["events"], where + ".events")))
    if kind == "global-cut":
        value = _obj(value, where, ("kind", "cut"))
        return GlobalCut(_str(value["cut"], where + ".cut"))
    raise DocumentError(f"unknown rule kind {kind!r}; expected unitary-only, "
                        "subjective-collapse or global-cut", where + ".kind")


def load_scenario(path, tol=1e-9, lam=None):
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(loads(fh.read()), tol, lam)


# --- encoding -----------------------------------------------------------------

def encode_complex(z):
    z = complex(z)
    return [z.real + 0.0, z.imag + 0.0]


def encode_vector(v):
    return [encode_complex(z) for z in np.asarray(v).ravel()]


def encode_matrix(m):
    return [encode_vector(row) for row in np.asarray(m)]


def encode_pdi(pdi):
    return {"projectors": [encode_matrix(p) for p in pdi.projectors], "labels": list(pdi.labels)}


def _encode_rule(rule):
    if isinstance(rule, UnitaryOnly):
        return {"kind": "unitary-only"}
    if isinstance(rule, SubjectiveCollapse):
        return {"kind": "subjective-collapse", "events": sorted(rule.events)}
    return {"kind": "global-cut", "cut": rule.cut}


def scenario_to_document(s):
    """Explicit (matrix-valued) document for a scenario; parses back to an equal scenario."""
    events = []
    for ev in s.timeline:
        if isinstance(ev, UnitaryEvent):
            events.append({"type": "unitary", "time": ev.time, "targets": list(ev.targets),
                           "operator": encode_matrix(ev.operator)})
        elif isinstance(ev, MeasurementEvent):
            d = {"type": "measurement", "time": ev.time, "owner": ev.owner, "record": ev.record,
                 "targets": list(ev.targets), "pdi": encode_pdi(ev.pdi)}
            if ev.correlation is not None:
                d["correlation"] = encode_matrix(ev.correlation)
            events.append(d)
        elif isinstance(ev, SignalEvent):
            events.append({"type": "signal", "time": ev.time, "source": list(ev.source),
                           "channels": [{"control": encode_matrix(c.control),
                                         "unitary": encode_matrix(c.unitary),
                                         "targets": list(c.targets)} for c in ev.channels]})
        else:
            events.append({"type": "dephasing", "time": ev.time, "targets": list(ev.targets),
                           "basis": (ev.basis_name if ev.basis_name in ("computational", "bell")
                                     else encode_pdi(ev.spec.basis)),
                           "lambda": ev.spec.lam})
    doc = {
        "schema_version": SCHEMA_VERSION,
        "name": s.name,
        "description": s.description,
        "layout": [{"name": n, "dim": d} for n, d in s.layout.systems],
        "initial": encode_vector(s.initial.amplitudes),
        "events": events,
        "agents": [{"name": a, "rule": _encode_rule(r)} for a, r in s.agents],
        "flags": [{"name": f.name, "targets": list(f.targets),
                   "observable": encode_matrix(f.observable.matrix),
                   **({"labels": list(f.labels)} if f.labels else {})} for f in s.flags],
    }
    if s.dephasing_site is not None:
        doc["dephasing"] = {"before": s.dephasing_site, "basis": s.dephasing_basis, "lambda": 0.0}
    return doc


def dumps(doc):
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


# --- frameworks -----------------------------------------------------------------

def parse_frameworks(doc, tol=1e-9):
    """Decode a framework document into a list of :class:`HistoryFramework`."""
    doc = _obj(doc, "$", ("schema_version", "dims", "frameworks"), ("name", "description"))
    _version(doc)
    dims = doc["dims"]
    if not isinstance(dims, list) or not all(isinstance(d, int) and not isinstance(d, bool)
                                             for d in dims):
        raise DocumentError("expected an array of integers", "$.dims")
    out = []
    for i, fw in enumerate(_list(doc["frameworks"], "$.frameworks")):
        w = f"$.frameworks[{i}]"
        fw = _obj(fw, w, ("name", "initial", "pdis"), ("times", "unitaries"))
        init = _obj(fw["initial"], w + ".initial", optional=("ket", "density"))
        if len(init) != 1:
            raise DocumentError("give exactly one of 'ket' or 'density'", w + ".initial")
        try:
            if "ket" in init:
                rho = PureState(decode_vector(init["ket"], w + ".initial.ket"), dims).to_density()
            else:
                rho = DensityOperator(decode_matrix(init["density"], w + ".initial.density"), dims, tol)
        except DocumentError:
            raise
        except QFriendError as exc:
            raise DocumentError(str(exc), w + ".initial") from None
        pdis = tuple(decode_pdi(p, tuple(dims), f"{w}.pdis[{k}]")
                     for k, p in enumerate(_list(fw["pdis"], w + ".pdis")))
        unitaries = None
        if "unitaries" in fw:
            unitaries = tuple(decode_matrix(u, f"{w}.unitaries[{k}]")
                              for k, u in enumerate(_list(fw["unitaries"], w + ".unitaries")))
        times = _names(fw["times"], w + ".times") if "times" in fw else None
        try:
            out.append(HistoryFramework(rho, pdis, unitaries, times,
                                        _str(fw["name"], w + ".name"), tol))
        except QFriendError as exc:
            raise DocumentError(str(exc), w) from None
    return out


def load_frameworks(path, tol=1e-9):
    with open(path, encoding="utf-8") as fh:
        return parse_frameworks(loads(fh.read()), tol)


def frameworks_to_document(frameworks, name="frameworks"):
    dims = list(frameworks[0].initial.dims)
    return {
        "schema_version": SCHEMA_VERSION,
        "name": name,
        "dims": dims,
        "frameworks": [{
            "name": f.name,
            "initial": {"density": encode_matrix(f.initial.matrix)},
            "times": list(f.times),
            "unitaries": [encode_matrix(u) for u in f.unitaries],
            "pdis": [encode_pdi(p) for p in f.pdis],
        } for f in frameworks],
    }


# --- prediction reports -----------------------------------------------------------

def fmt12(x):
    """Round to 12 significant digits; chop sub-1e-15 noise to zero."""
    x = float(x)
    if abs(x) < 1e-15:
        return 0.0
    return float(f"{x:.12g}") + 0.0


def report_to_document(report, samples=None, metadata=None):
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "prediction-report",
        "scenario": report.scenario,
        "predictions": {a: {f: {k: fmt12(p) for k, p in dist.items()} for f, dist in flags.items()}
                        for a, flags in report.distributions.items()},
        "comparisons": [{"agents": [c.agent_a, c.agent_b], "flag": c.flag, "tv": fmt12(c.tv),
                         "inconsistent": c.inconsistent} for c in report.comparisons],
        "threshold": report.threshold,
        "verdict": "INCONSISTENT" if report.inconsistent else "CONSISTENT",
    }
    if samples:
        doc["samples"] = samples
    doc["metadata"] = dict(metadata or {})
    return doc


def parse_report(doc):
    """Inverse of :func:`report_to_document`: ``(report, samples, metadata)``."""
    doc = _obj(doc, "$", ("schema_version", "kind", "scenario", "predictions", "comparisons",
                          "threshold", "verdict", "metadata"), ("samples",))
    _version(doc)
    if doc["kind"] != "prediction-report":
        raise DocumentError("expected kind 'prediction-report'", "$.kind")
    comparisons = []
    for i, c in enumerate(_list(doc["comparisons"], "$.comparisons", nonempty=False)):
        w = f"$.comparisons[{i}]"
        c = _obj(c, w, ("agents", "flag", "tv", "inconsistent"))
        a, b = _names(c["agents"], w + ".agents")
        comparisons.append(Comparison(a, b, c["flag"], _num(c["tv"], w + ".tv"),
                                      bool(c["inconsistent"])))
    report = PredictionReport(doc["scenario"], doc["predictions"], tuple(comparisons),
                              _num(doc["threshold"], "$.threshold"))
    if doc["verdict"] != ("INCONSISTENT" if report.inconsistent else "CONSISTENT"):
        raise DocumentError("verdict does not match comparisons", "$.verdict")
    return report, doc.get("samples"), doc["metadata"]
