import copy
import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qfriend import io
from qfriend.errors import DocumentError
from qfriend.histories import CH_BUILTINS, decoherence_matrix, is_consistent
from qfriend.scenario import BUILTINS, build_report, builtin, predict

# A hand-written document: one qubit measured by F, who then flips C on "1".
SMALL = {
    "schema_version": 1,
    "name": "small",
    "layout": [{"name": "S", "dim": 2}, {"name": "C", "dim": 2}],
    "initial": [[0.6, 0], [0, 0], [0.8, 0], [0, 0]],
    "events": [
        {"type": "measurement", "time": "t1", "owner": "F", "record": "F:z", "targets": ["S"],
         "pdi": {"basis": "computational", "labels": ["0", "1"]}},
        {"type": "signal", "time": "t2", "source": ["S"],
         "channels": [{"control": [[[0, 0], [0, 0]], [[0, 0], [1, 0]]], "unitary": "X",
                       "targets": ["C"]}]},
    ],
    "agents": [{"name": "F", "rule": {"kind": "subjective-collapse", "events": ["F:z"]}},
               {"name": "W", "rule": {"kind": "unitary-only"}}],
    "flags": [{"name": "C", "targets": ["C"], "observable": "number",
               "labels": ["ground", "excited"]}],
}


class TestScenarioDocuments:
    def test_hand_written(self):
        s = io.parse_scenario(SMALL)
        for agent in ("F", "W"):
            assert predict(s, agent, "C")["excited"] == pytest.approx(0.64)
        assert not build_report(s).inconsistent

    @pytest.mark.parametrize("name", list(BUILTINS))
    def test_builtin_round_trip(self, name):
        s = builtin(name)
        doc = json.loads(io.dumps(io.scenario_to_document(s)))
        back = io.parse_scenario(doc)
        assert [ev.time for ev in back.timeline] == [ev.time for ev in s.timeline]
        a, b = build_report(s), build_report(back)
        for agent, flags in a.distributions.items():
            for flag, dist in flags.items():
                assert b.distributions[agent][flag] == pytest.approx(dist, abs=1e-12)

    def test_lambda_override(self):
        doc = io.scenario_to_document(builtin("wigner-bell"))
        doc["dephasing"]["lambda"] = 0.5
        assert predict(io.parse_scenario(doc), "W", "C-excited")["excited"] == pytest.approx(0.75)
        s = io.parse_scenario(doc, lam=0.0)
        assert predict(s, "W", "C-excited")["excited"] == pytest.approx(1.0)
        s = io.parse_scenario(doc, lam=1.0)
        assert predict(s, "W", "C-excited")["excited"] == pytest.approx(0.5)
        # the dephasing event is inserted once, never twice
        assert [ev.time for ev in s.timeline].count("t2-dephase") == 1

    def test_dephased_scenario_round_trip(self):
        s = builtin("wigner-bell").with_dephasing(0.25)
        back = io.parse_scenario(io.scenario_to_document(s), lam=0.0)
        assert predict(back, "W", "C-excited")["excited"] == pytest.approx(0.875)


class TestRejection:
    def bad(self, mutate):
        doc = copy.deepcopy(SMALL)
        mutate(doc)
        with pytest.raises(DocumentError) as info:
            io.parse_scenario(doc)
        return info.value

    def test_unknown_top_level_field(self):
        err = self.bad(lambda d: d.update(colour="blue"))
        assert err.where == "$" and "colour" in str(err)

    def test_unknown_nested_field(self):
        err = self.bad(lambda d: d["events"][1]["channels"][0].update(gain=2))
        assert err.where == "$.events[1].channels[0]"

    def test_schema_version(self):
        err = self.bad(lambda d: d.update(schema_version=2))
        assert err.where == "$.schema_version"

    def test_missing_field(self):
        err = self.bad(lambda d: d["events"][0].pop("record"))
        assert "record" in str(err)

    def test_bad_complex(self):
        err = self.bad(lambda d: d["initial"].__setitem__(1, [0, 0, 0]))
        assert err.where == "$.initial[1]"

    def test_unknown_named_operator(self):
        err = self.bad(lambda d: d["flags"][0].update(observable="Q"))
        assert err.where == "$.flags[0].observable"

    def test_unknown_event_type(self):
        err = self.bad(lambda d: d["events"][0].update(type="teleport"))
        assert err.where == "$.events[0].type"

    def test_unknown_target(self):
        err = self.bad(lambda d: d["events"][0].update(targets=["Z"]))
        assert err.where == "$.events[0].targets"

    def test_unnormalized_initial(self):
        self.bad(lambda d: d.update(initial=[[1, 0], [0, 0], [1, 0], [0, 0]]))

    def test_pdi_forms_are_exclusive(self):
        err = self.bad(lambda d: d["events"][0]["pdi"].update(observable="Z"))
        assert err.where == "$.events[0].pdi"

    def test_incomplete_pdi(self):
        err = self.bad(lambda d: d["events"][0].update(pdi={"kets": [[[1, 0], [0, 0]]]}))
        assert err.where == "$.events[0].pdi"

    def test_rule_references_checked(self):
        self.bad(lambda d: d["agents"][0]["rule"].update(events=["nope"]))

    def test_unknown_rule_kind(self):
        err = self.bad(lambda d: d["agents"][1].update(rule={"kind": "many-worlds"}))
        assert err.where == "$.agents[1].rule.kind"

    def test_syntax_error_location(self):
        with pytest.raises(DocumentError) as info:
            io.loads('{\n  "schema_version": 1,\n  "layout": [,]\n}')
        assert info.value.where == "line 3:14"


class TestFrameworkDocuments:
    @pytest.mark.parametrize("name", list(CH_BUILTINS))
    def test_round_trip(self, name):
        fws = CH_BUILTINS[name][0]()
        back = io.parse_frameworks(json.loads(io.dumps(io.frameworks_to_document(fws, name))))
        assert [f.name for f in back] == [f.name for f in fws]
        for f, g in zip(fws, back):
            assert_allclose(decoherence_matrix(g), decoherence_matrix(f), atol=1e-14)
            assert bool(is_consistent(g)) == bool(is_consistent(f))

    def test_ket_initial_and_default_times(self):
        doc = {"schema_version": 1, "dims": [2], "frameworks": [{
            "name": "z", "initial": {"ket": [[1, 0], [0, 0]]},
            "pdis": [{"observable": "Z"}, {"observable": "X"}]}]}
        (f,) = io.parse_frameworks(doc)
        assert f.times == ("t1", "t2")
        assert is_consistent(f)

    def test_exactly_one_initial(self):
        doc = {"schema_version": 1, "dims": [2], "frameworks": [{
            "name": "z", "initial": {}, "pdis": [{"observable": "Z"}]}]}
        with pytest.raises(DocumentError, match="exactly one"):
            io.parse_frameworks(doc)

    def test_non_unitary_rejected(self):
        doc = {"schema_version": 1, "dims": [2], "frameworks": [{
            "name": "z", "initial": {"ket": [[1, 0], [0, 0]]}, "pdis": [{"observable": "Z"}],
            "unitaries": ["number"]}]}
        with pytest.raises(DocumentError) as info:
            io.parse_frameworks(doc)
        assert info.value.where == "$.frameworks[0]"


class TestReports:
    def test_fmt12(self):
        assert io.fmt12(1e-17) == 0.0
        assert io.fmt12(-1e-17) == 0.0
        assert io.fmt12(0.49999999999999994) == 0.5
        assert io.fmt12(1 / 3) == 0.333333333333

    def test_round_trip(self):
        report = build_report(builtin("wigner-two-channels"))
        samples = {"F": {"C+-excited": {"ground": 3, "excited": 7}}}
        doc = io.report_to_document(report, samples, {"seed": 1})
        back, s2, meta = io.parse_report(json.loads(io.dumps(doc)))
        assert back.inconsistent == report.inconsistent
        assert [c.tv for c in back.comparisons] == pytest.approx([c.tv for c in report.comparisons])
        assert s2 == samples and meta == {"seed": 1}
        assert io.report_to_document(back, s2, meta) == doc

    def test_verdict_must_match(self):
        doc = io.report_to_document(build_report(builtin("wigner-bell")))
        doc["verdict"] = "CONSISTENT"
        with pytest.raises(DocumentError, match="verdict"):
            io.parse_report(doc)


def test_named_operators_are_well_formed():
    for name, make in io.NAMED_OPERATORS.items():
        m = np.asarray(make())
        assert m.shape[0] == m.shape[1] in (2, 4), name
