"""
End-to-end acceptance runs

These reproduce the five-node deployment ledger, sweep every small network
against the default adversary family and check the forgery rate. They take
a while; deselect with ``-m "not slow"``.
"""

import pytest

from qsba.adversary import DEFAULT_FAMILY
from qsba.forgery import forgery_monte_carlo
from qsba.gf2hash import BitString
from qsba.metrics import COMMANDER_LINK, LIEUTENANT_LINK
from qsba.protocol import ProtocolParams, run_protocol
from qsba.reports import build_run_report
from qsba.scenario import load_scenario
from qsba.sweep import strategy_sweep

pytestmark = pytest.mark.slow


def test_five_node_deployment_ledger():
    scenario = load_scenario("five-node-deployment")
    outcome = run_protocol(
        scenario.params(), scenario.command(), seed=scenario.run.seed, pools=scenario.pool_capacities()
    )
    assert outcome.ok
    assert outcome.ledger.totals() == (16, 16, 24)
    assert outcome.ledger.key_bits_by_class(5) == {COMMANDER_LINK: (108, 108), LIEUTENANT_LINK: (216, 216)}
    report = build_run_report(scenario, outcome)
    assert report.within_capacity is True
    assert report.message_bits == 800_000


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_no_violations_in_small_networks(n):
    for m in range(1, n - 1):
        params = ProtocolParams(n, m, 16, BitString.zeros(8))
        result = strategy_sweep(params, DEFAULT_FAMILY, command=BitString.from_hex("c3a5"), seed=n)
        assert result.violations() == [], f"violations at n={n}, m={m}"


def test_forgery_rate_stays_under_bound():
    report = forgery_monte_carlo(16, 1000, 100_000, seed=0)
    assert report.bound == pytest.approx(1016 / 65536)
    assert report.within_bound


def test_long_message_forgery():
    report = forgery_monte_carlo(54, 800_000, 10_000, seed=0, sparse_window=64)
    assert report.successes == 0
    assert report.within_bound


def test_runs_are_reproducible():
    scenario = load_scenario("five-node-equivocating")
    runs = [
        run_protocol(
            scenario.params(),
            scenario.command(),
            seed=scenario.run.seed,
            adversary=scenario.adversary_strategy(),
        )
        for _ in range(2)
    ]
    assert runs[0].transcript.to_jsonl() == runs[1].transcript.to_jsonl()
    assert runs[0].decisions == runs[1].decisions
