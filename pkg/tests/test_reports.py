"""
Test suite for run, comparison and budget reports
"""

import json

import jsonschema
import pytest

from qsba.ledger import AuthCostModel
from qsba.metrics import COMMANDER_LINK, LIEUTENANT_LINK
from qsba.protocol import run_protocol
from qsba.reports import (
    build_budget_report,
    build_compare_report,
    build_run_report,
    load_schema,
    resource_ordering_holds,
    validate_report,
    write_report,
)
from qsba.scenario import load_scenario, parse_scenario


def _run(scenario):
    outcome = run_protocol(
        scenario.params(),
        scenario.command(),
        seed=scenario.run.seed,
        pools=scenario.pool_capacities(),
        adversary=scenario.adversary_strategy(),
        auth_cost=scenario.run.auth_cost,
    )
    return outcome, build_run_report(scenario, outcome, "transcript.jsonl")


class TestRunReport:
    def test_honest_preset(self):
        _, report = _run(load_scenario("five-node-honest"))
        validate_report(report)
        assert report.exit_ok
        assert report.within_capacity is True
        assert report.decisions == {str(i): "41545441434b" for i in range(1, 5)}
        assert report.ledger["hash_ops"] == 16
        assert report.ledger["key_bits_by_class"] == {
            COMMANDER_LINK: [108, 108],
            LIEUTENANT_LINK: [216, 216],
        }
        assert report.budget == {"max_rounds": {COMMANDER_LINK: 2_212_500, LIEUTENANT_LINK: 103}, "binding": LIEUTENANT_LINK}

    def test_equivocating_attribution(self):
        _, report = _run(load_scenario("five-node-equivocating"))
        validate_report(report)
        assert report.strategy == "equivocate"
        assert report.within_capacity is None
        assert report.attribution.byzantine_hash_ops == 16
        assert report.attribution.honest_hash_ops == 12
        assert report.attribution.honest_auth_uses == 24
        assert set(report.message_set_sizes.values()) == {4}

    def test_aborted_run_is_reported(self):
        scenario = parse_scenario(
            {
                "protocol": {"n": 4, "m": 1, "l": 16},
                "message": {"hex": "ff"},
                "pools": {"commander_lieutenant": 10, "lieutenant_lieutenant": 0},
            }
        )
        _, report = _run(scenario)
        validate_report(report)
        assert report.status == "aborted-key-exhausted"
        assert report.error["code"] == "key-exhausted"
        assert not report.exit_ok

    def test_json_is_deterministic_apart_from_timestamp(self):
        scenario = load_scenario("five-node-honest")
        _, a = _run(scenario)
        _, b = _run(scenario)
        a_json = json.loads(a.to_json())
        b_json = json.loads(b.to_json())
        a_json.pop("generated_at")
        b_json.pop("generated_at")
        assert a_json == b_json

    def test_write(self, tmp_path):
        _, report = _run(load_scenario("five-node-honest"))
        path = write_report(report, tmp_path / "r" / "run_report.json")
        assert json.loads(path.read_text(encoding="utf-8"))["scenario"] == "five-node-honest"

    def test_schema_rejects_unknown_fields(self):
        _, report = _run(load_scenario("five-node-honest"))
        payload = report.model_dump(mode="json")
        payload["surprise"] = 1
        with pytest.raises(jsonschema.ValidationError):
            validate_report(payload)

    def test_schema_loads(self):
        assert load_schema()["title"] == "QSBA run report"


class TestCompareReport:
    def test_five_nodes(self):
        report = build_compare_report(5, 2, 54)
        assert report.advantage == [20, 56, 48]
        assert report.measured_qsba.hash_ops == 16
        assert report.measured_qsba.auth_uses == 24
        assert report.key_bits_per_link["QSBA"] == {COMMANDER_LINK: 108, LIEUTENANT_LINK: 216}
        assert report.key_bits_per_link["QBA"] == {COMMANDER_LINK: 648, LIEUTENANT_LINK: 864}
        assert report.ordering_holds
        assert len(report.rows()) == 3 + 1 + 3

    def test_ordering_is_judged_on_costed_deltas(self):
        report = build_compare_report(4, 1, 16)
        assert report.auth_cost == "axiomatic"
        assert report.ordering == "QSM < QDS < mQSM (costed)"
        assert not resource_ordering_holds(report.three_party)
        assert report.ordering_holds

    def test_smallest_network(self):
        report = build_compare_report(3, 1, 16, AuthCostModel.COSTED)
        assert report.auth_cost == "costed"
        assert report.key_bits_per_link["QBA"][LIEUTENANT_LINK] == 0
        assert report.advantage == [0, 2, 2]


class TestBudgetReport:
    def test_deployment_preset(self):
        report = build_budget_report(load_scenario("five-node-deployment"))
        assert report.rounds == 103
        assert report.binding == LIEUTENANT_LINK
        assert report.per_round_costs == {COMMANDER_LINK: 108, LIEUTENANT_LINK: 216}

    def test_single_fault_uses_commander_links_only(self):
        scenario = parse_scenario({"protocol": {"n": 4, "m": 1, "l": 16}, "message": {"hex": "00"}})
        report = build_budget_report(scenario)
        assert report.per_round_costs == {COMMANDER_LINK: 32}
        assert report.binding == COMMANDER_LINK
