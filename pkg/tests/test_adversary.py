"""
Test suite for the adversary library
"""

import pytest

from qsba.adversary import (
    DEFAULT_FAMILY,
    STRATEGIES,
    AdversaryContext,
    ColludeStrategy,
    ReplayStrategy,
    SelectiveSignStrategy,
    TamperInsecureStrategy,
    build_strategy,
    flip_message_bit,
    variant,
)
from qsba.errors import AccessDeniedError, InvalidParamsError
from qsba.gf2hash import BitString
from qsba.protocol import ProtocolParams, run_protocol
from qsba.simnet import ChannelKind, Network


@pytest.fixture
def params() -> ProtocolParams:
    return ProtocolParams(5, 2, 16, BitString.zeros(8))


class TestRegistry:
    def test_default_family_is_registered(self):
        assert set(DEFAULT_FAMILY) <= set(STRATEGIES)

    def test_unknown_strategy(self):
        with pytest.raises(InvalidParamsError):
            build_strategy("bribe", [1])

    def test_params_are_passed_through(self):
        strategy = build_strategy("drop", [2], {"drop_to": [3]})
        assert strategy.controlled == frozenset({2})
        assert strategy.params == {"drop_to": [3]}


class TestHelpers:
    def test_variants_are_distinct(self, command):
        variants = {variant(command, i) for i in range(1, 6)}
        assert len(variants) == 5
        assert command not in variants

    def test_short_command_variants_grow(self):
        assert variant(BitString.from_str("1"), 3).nbits == 9

    def test_flip_message_bit(self):
        frame = (16).to_bytes(4, "big") + b"\x00\x00" + b"\xff"
        assert flip_message_bit(frame, 0)[4] == 0x80
        assert flip_message_bit(frame, 99)[-1] == 0xFE


class TestContext:
    def test_cannot_send_as_honest_node(self, params, store5, ledger, rng, command):
        ctx = AdversaryContext(params, Network(5, ledger), store5.view({1}), ledger, rng, command)
        with pytest.raises(AccessDeniedError):
            ctx.send(2, 3, ChannelKind.INSECURE, b"x", 0)

    def test_cannot_sign_as_honest_node(self, params, store5, ledger, rng, command):
        ctx = AdversaryContext(params, Network(5, ledger), store5.view({1}), ledger, rng, command)
        with pytest.raises(AccessDeniedError):
            ctx.sign(command, 2, [3])

    def test_chain_recipients(self, params, store5, ledger, rng, command):
        ctx = AdversaryContext(params, Network(5, ledger), store5.view({0, 1}), ledger, rng, command)
        assert ctx.chain_recipients(0, ()) == (1, 2, 3, 4)
        assert ctx.chain_recipients(1, (0, 2)) == (3, 4)
        assert ctx.honest_lieutenants == (2, 3, 4)


class TestStrategies:
    """Complete runs against single strategies."""

    def test_tampering_is_rejected(self, params, command):
        outcome = run_protocol(params, command, seed=2, adversary=TamperInsecureStrategy([1]))
        assert outcome.ok
        assert set(outcome.decisions.values()) == {command}

    def test_tampering_incident_frames(self, params, command):
        strategy = TamperInsecureStrategy([1], scope="incident", bit=3)
        outcome = run_protocol(params, command, seed=2, adversary=strategy)
        assert outcome.ok

    def test_replay_is_rejected(self, params, command):
        outcome = run_protocol(params, command, seed=4, adversary=ReplayStrategy([2]))
        assert outcome.ok
        assert all(V == frozenset({command}) for V in outcome.message_sets.values())

    def test_collusion_reaches_everyone(self, params, command):
        outcome = run_protocol(params, command, seed=6, adversary=ColludeStrategy([0, 1]))
        assert outcome.condition_I
        assert all(len(V) == 2 for V in outcome.message_sets.values())
        assert set(outcome.decisions.values()) == {params.default_command}

    def test_selective_signing_splits_lieutenants(self, params, command):
        outcome = run_protocol(params, command, seed=0, adversary=SelectiveSignStrategy([0]))
        assert outcome.message_sets[1] == frozenset({command})
        assert all(not outcome.message_sets[i] for i in (2, 3, 4))
        assert outcome.condition_I is False
