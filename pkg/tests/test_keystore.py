"""
Test suite for key pools, the one-time pad and the resource ledger
"""

import pytest

from qsba.errors import (
    AccessDeniedError,
    KeyExhaustedError,
    NoSuchLinkError,
    OTPLengthMismatchError,
    PreconditionError,
)
from qsba.gf2hash import BitString
from qsba.keystore import KeyPool, KeySegment, KeyStore, LinkId, PoolCapacities, draw, otp
from qsba.ledger import AuthCostModel, ResourceLedger, link_key


class TestLinkId:
    def test_canonical_order(self):
        assert LinkId.of(3, 1) == LinkId(1, 3)
        assert str(LinkId.of(4, 2)) == "2-4"

    def test_self_link_rejected(self):
        with pytest.raises(NoSuchLinkError):
            LinkId.of(2, 2)

    def test_link_class(self):
        assert LinkId.of(0, 3).link_class == "commander-lieutenant"
        assert LinkId.of(1, 3).link_class == "lieutenant-lieutenant"


class TestKeyPool:
    """Consumption discipline of a single pool."""

    @pytest.fixture
    def pool(self, ledger):
        return KeyPool(LinkId(0, 1), 10, seed=3, ledger=ledger)

    def test_sequential_draws(self, pool):
        first = draw(pool, 4, "a")
        second = draw(pool, 4, "b")
        assert first.offset_bits == 0
        assert second.offset_bits == 4
        assert pool.remaining_bits == 2

    def test_exhaustion_reports_shortfall(self, pool):
        draw(pool, 4, "a")
        draw(pool, 4, "b")
        with pytest.raises(KeyExhaustedError) as exc:
            draw(pool, 4, "c")
        assert exc.value.shortfall == 2
        assert exc.value.code == "key-exhausted"
        assert pool.remaining_bits == 2

    def test_exact_fit_empties_pool(self, pool):
        draw(pool, 10, "all")
        assert pool.remaining_bits == 0

    def test_zero_capacity(self):
        with pytest.raises(KeyExhaustedError):
            KeyPool(LinkId(1, 2), 0).draw(1, "x")

    def test_non_positive_draw(self, pool):
        with pytest.raises(PreconditionError):
            draw(pool, 0, "x")

    def test_lieutenant_pool_serves_103_signatures(self):
        pool = KeyPool(LinkId(1, 2), 22_455)
        served = 0
        with pytest.raises(KeyExhaustedError):
            while True:
                pool.draw(216, f"sig-{served}")
                served += 1
        assert served == 103

    def test_intervals_are_disjoint(self):
        pool = KeyPool(LinkId(0, 2), 5_000, seed=11)
        for i, size in enumerate([7, 54, 1, 108, 300, 54]):
            pool.draw(size, f"p{i}")
        intervals = pool.issued_intervals()
        for (off_a, len_a), (off_b, _) in zip(intervals, intervals[1:]):
            assert off_a + len_a == off_b
        assert sum(length for _, length in intervals) == pool.cursor_bits

    def test_ledger_matches_cursor(self, pool, ledger):
        draw(pool, 3, "a")
        draw(pool, 5, "b")
        assert ledger.key_bits(0, 1) == pool.cursor_bits == 8

    def test_resolve_returns_segments_in_draw_order(self, pool):
        a = draw(pool, 2, "same")
        b = draw(pool, 3, "same")
        assert pool.resolve("same") == [a, b]
        assert pool.resolve("unused") == []

    def test_material_is_seeded(self):
        a = KeyPool(LinkId(0, 1), 1_000, seed=5).draw(200, "x")
        b = KeyPool(LinkId(0, 1), 1_000, seed=5).draw(200, "x")
        c = KeyPool(LinkId(0, 2), 1_000, seed=5).draw(200, "x")
        assert a.bits == b.bits
        assert a.bits != c.bits


class TestOneTimePad:
    def _segment(self, bits: str) -> KeySegment:
        return KeySegment(LinkId(0, 1), 0, BitString.from_str(bits))

    @pytest.mark.parametrize(
        "data,key,expected",
        [("1010", "0110", "1100"), ("0000", "1111", "1111"), ("1", "1", "0")],
    )
    def test_examples(self, data, key, expected):
        assert str(otp(BitString.from_str(data), self._segment(key))) == expected

    def test_involution(self):
        data = BitString.from_str("1100101")
        key = self._segment("0101110")
        assert otp(otp(data, key), key) == data

    def test_length_mismatch(self):
        with pytest.raises(OTPLengthMismatchError):
            otp(BitString.from_str("1010"), self._segment("101"))


class TestKeyStore:
    def test_pool_is_shared_by_both_endpoints(self, store5):
        seg = store5.draw(2, 4, 16, "label")
        assert store5.resolve(4, 2, "label") == [seg]

    def test_capacities_per_link_class(self):
        store = KeyStore(5, capacities=PoolCapacities(100, 20))
        assert store.remaining_bits(0, 3) == 100
        assert store.remaining_bits(1, 3) == 20

    def test_unknown_node(self, store5):
        with pytest.raises(NoSuchLinkError):
            store5.draw(0, 5, 1, "x")

    def test_remaining_lists_touched_pools(self, store5):
        store5.draw(0, 1, 10, "a")
        assert store5.remaining() == {"0-1": 99_990}


class TestKeyView:
    def test_view_reaches_own_links(self, store5):
        view = store5.view([1])
        view.draw(1, 3, 8, "mine")
        assert store5.resolve(1, 3, "mine")

    def test_view_denies_foreign_links(self, store5):
        view = store5.view([1])
        with pytest.raises(AccessDeniedError):
            view.draw(2, 3, 8, "theirs")
        with pytest.raises(AccessDeniedError):
            view.resolve(2, 3, "theirs")

    def test_colluding_view(self, store5):
        view = store5.view([1, 2])
        view.draw(2, 3, 8, "shared")
        view.draw(1, 4, 8, "shared")
        with pytest.raises(AccessDeniedError):
            view.remaining_bits(3, 4)


class TestResourceLedger:
    def test_link_key_is_unordered(self):
        assert link_key(3, 1) == link_key(1, 3) == "1-3"

    def test_counters(self, ledger):
        ledger.record_hash_ops(0, 4)
        ledger.record_key_strings(2)
        ledger.record_auth_use(1)
        assert ledger.totals() == (4, 2, 1)
        assert ledger.hash_ops_by_node == {0: 4}
        assert ledger.auth_uses_by_node == {1: 1}

    def test_costed_auth_use(self):
        ledger = ResourceLedger(auth_cost=AuthCostModel.COSTED)
        ledger.record_auth_use(2)
        assert ledger.totals() == (1, 1, 1)

    def test_counters_are_monotone(self, ledger):
        with pytest.raises(PreconditionError):
            ledger.record_hash_ops(0, -1)

    def test_delta(self, ledger):
        ledger.record_hash_ops(0, 1)
        before = ledger.snapshot()
        ledger.record_hash_ops(1, 2)
        ledger.record_auth_use(1)
        assert ledger.delta(before) == (2, 0, 1)
        assert before.hash_ops == 1

    def test_key_bits_by_class(self, ledger):
        ledger.record_key_bits(0, 1, 108)
        ledger.record_key_bits(0, 2, 108)
        ledger.record_key_bits(1, 2, 216)
        summary = ledger.key_bits_by_class(3)
        assert summary == {"commander-lieutenant": (108, 108), "lieutenant-lieutenant": (216, 216)}
