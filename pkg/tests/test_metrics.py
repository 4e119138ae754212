"""
Test suite for complexity formulas, the comparison table and key budgets
"""

import pytest

from qsba.baselines import qba_enumerate
from qsba.errors import InvalidCostError, InvalidParamsError
from qsba.keystore import PoolCapacities
from qsba.metrics import (
    COMMANDER_LINK,
    LIEUTENANT_LINK,
    advantage_row,
    enumerate_chains,
    formula_capacities,
    key_budget,
    qba_complexity,
    qsba_auth_uses,
    qsba_complexity,
    qsba_link_bits,
    table_frame,
    table_rows,
)

SMALL_NETWORKS = [(n, m) for n in range(3, 9) for m in range(1, n - 1)]


class TestFormulas:
    @pytest.mark.parametrize(
        "n,m,expected",
        [(3, 1, 2), (4, 1, 3), (4, 2, 9), (5, 2, 16), (5, 3, 40), (6, 2, 25)],
    )
    def test_qsba_complexity(self, n, m, expected):
        assert qsba_complexity(n, m) == expected

    @pytest.mark.parametrize("n,m,expected", [(3, 1, 2), (5, 2, 24), (5, 3, 24), (6, 2, 60)])
    def test_qsba_auth_uses(self, n, m, expected):
        assert qsba_auth_uses(n, m) == expected

    @pytest.mark.parametrize("n,m,expected", [(3, 1, 2), (4, 1, 6), (5, 2, 36), (5, 3, 60)])
    def test_qba_complexity(self, n, m, expected):
        assert qba_complexity(n, m) == expected

    @pytest.mark.parametrize("n,m", [(2, 1), (3, 0), (4, 3), (5, 5)])
    def test_invalid(self, n, m):
        with pytest.raises(InvalidParamsError):
            qsba_complexity(n, m)

    def test_link_bits(self):
        assert qsba_link_bits(5, 2, 54) == {COMMANDER_LINK: 108, LIEUTENANT_LINK: 216}
        assert qsba_link_bits(5, 3, 54)[LIEUTENANT_LINK] == 4 * 54 * 3
        assert qsba_link_bits(4, 1, 16)[LIEUTENANT_LINK] == 0

    def test_capacities(self):
        caps = formula_capacities(5, 2, 54)
        assert caps["hash_ops"] == caps["key_strings"] == 16
        assert caps["auth_uses"] == 24


class TestChainEnumeration:
    @pytest.mark.parametrize("n,m", SMALL_NETWORKS)
    def test_matches_closed_form(self, n, m):
        assert enumerate_chains(n, m) == (qsba_complexity(n, m), qsba_auth_uses(n, m))

    @pytest.mark.parametrize("n,m", [(3, 1), (5, 2), (6, 3)])
    def test_baseline_enumeration_matches_closed_form(self, n, m):
        assert qba_enumerate(n, m).executions == qba_complexity(n, m)


class TestComparisonTable:
    def test_advantage_examples(self):
        assert advantage_row(5, 2) == (20, 56, 48)
        assert advantage_row(3, 1) == (0, 2, 2)

    @pytest.mark.parametrize("n,m", SMALL_NETWORKS)
    def test_advantage_is_the_difference(self, n, m):
        qsba, qba, advantage = table_rows(n, m)
        assert advantage.hash_ops == qba.hash_ops - qsba.hash_ops
        assert advantage.key_strings == qba.key_strings - qsba.key_strings
        assert advantage.auth_uses == qba.auth_uses - qsba.auth_uses
        assert min(advantage.hash_ops, advantage.key_strings, advantage.auth_uses) >= 0

    def test_frame(self):
        frame = table_frame(table_rows(5, 2))
        assert list(frame["protocol"]) == ["QSBA", "QBA", "advantage"]
        assert list(frame["hash_ops"]) == [16, 36, 20]


class TestKeyBudget:
    def test_default_pools(self):
        budget = key_budget(PoolCapacities(), {COMMANDER_LINK: 108, LIEUTENANT_LINK: 216})
        assert budget.max_rounds == {COMMANDER_LINK: 2_212_500, LIEUTENANT_LINK: 103}
        assert budget.binding == LIEUTENANT_LINK
        assert budget.rounds == 103

    def test_empty_pool(self):
        budget = key_budget({COMMANDER_LINK: 0, LIEUTENANT_LINK: 0}, {COMMANDER_LINK: 108, LIEUTENANT_LINK: 216})
        assert budget.rounds == 0

    def test_zero_cost(self):
        with pytest.raises(InvalidCostError):
            key_budget(PoolCapacities(), {COMMANDER_LINK: 0})

    def test_no_costs(self):
        with pytest.raises(InvalidCostError):
            key_budget(PoolCapacities(), {})
