"""
QSBA Complexity Metrics

Closed-form resource counts for the signed-message agreement and the
iterated three-party baseline, an explicit chain-enumeration cross-check,
the comparison table with its advantage row, and key-budget feasibility
for finite pools.

All counts are capacities. An honest run that relays every correctly signed
message sequence once (sequence dedup) measures exactly these numbers. An
equivocating commander goes past them only through its own signatures and
commander-link key bits; the honest share of its ledger stays within them.
"""

from itertools import permutations
from math import perm
from typing import Dict, List, Mapping, Tuple, Union

import pandas as pd
from pydantic import BaseModel

from .errors import InvalidCostError, InvalidParamsError
from .keystore import PoolCapacities

COMMANDER_LINK = "commander-lieutenant"
LIEUTENANT_LINK = "lieutenant-lieutenant"


def validate_params(n: int, m: int) -> None:
    """
    Raises:
        InvalidParamsError: Unless ``n >= 3`` and ``1 <= m <= n - 2``
    """
    if n < 3 or not 1 <= m <= n - 2:
        raise InvalidParamsError(f"need n >= 3 and 1 <= m <= n-2, got n={n}, m={m}")


def qsba_complexity(n: int, m: int) -> int:
    """Hash operations: sum of ``A(n-1, i)`` for ``i = 1 .. m``."""
    validate_params(n, m)
    return sum(perm(n - 1, i) for i in range(1, m + 1))


def qsba_auth_uses(n: int, m: int) -> int:
    validate_params(n, m)
    return perm(n - 1, m + 1)


def qba_complexity(n: int, m: int) -> int:
    """Three-party executions: sum of ``A(n-1, i)`` for ``i = 2 .. m+1``."""
    validate_params(n, m)
    return sum(perm(n - 1, i) for i in range(2, m + 2))


def qsba_link_bits(n: int, m: int, l: int) -> Dict[str, int]:
    """
    Key bits per link at capacity.

    A commander link carries one ``2l`` draw. Lieutenants ``i`` and ``j``
    sign for each other once per chain of earlier lieutenant signers that
    avoids both, in each direction.
    """
    validate_params(n, m)
    per_direction = sum(perm(n - 3, d - 1) for d in range(1, m))
    return {COMMANDER_LINK: 2 * l, LIEUTENANT_LINK: 2 * 2 * l * per_direction}


def enumerate_chains(n: int, m: int) -> Tuple[int, int]:
    """
    Count partial signatures and authenticated forwards by walking every
    signer chain the forwarding rules allow.

    Returns:
        (hash operations, authenticated forwards)
    """
    validate_params(n, m)
    lieutenants = range(1, n)
    hash_ops = n - 1
    for k in range(1, m):
        for chain in permutations(lieutenants, k):
            hash_ops += sum(1 for r in lieutenants if r not in chain)

    auth = 0
    for chain in permutations(lieutenants, m - 1):
        for receiver in lieutenants:
            if receiver in chain:
                continue
            auth += sum(1 for t in lieutenants if t != receiver and t not in chain)
    return hash_ops, auth


class ComplexityRow(BaseModel):
    protocol: str
    hash_ops: int
    key_strings: int
    auth_uses: int


def qsba_row(n: int, m: int) -> ComplexityRow:
    c = qsba_complexity(n, m)
    return ComplexityRow(protocol="QSBA", hash_ops=c, key_strings=c, auth_uses=qsba_auth_uses(n, m))


def qba_row(n: int, m: int) -> ComplexityRow:
    c = qba_complexity(n, m)
    return ComplexityRow(protocol="QBA", hash_ops=c, key_strings=2 * c, auth_uses=2 * c)


def advantage_row(n: int, m: int) -> Tuple[int, int, int]:
    """
    Savings of the signed-message protocol over the baseline.

    Returns:
        (hash operations, key strings, authenticated uses)
    """
    validate_params(n, m)
    a = lambda k: perm(n - 1, k)  # noqa: E731
    upper = sum(a(i) for i in range(2, m + 2))
    d_hash = a(m + 1) - a(1)
    d_keys = upper + a(m + 1) - a(1)
    d_auth = upper + sum(a(i) for i in range(2, m + 1))
    return d_hash, d_keys, d_auth


def table_rows(n: int, m: int) -> List[ComplexityRow]:
    """Comparison table: both protocols and the advantage row."""
    d_hash, d_keys, d_auth = advantage_row(n, m)
    return [
        qsba_row(n, m),
        qba_row(n, m),
        ComplexityRow(protocol="advantage", hash_ops=d_hash, key_strings=d_keys, auth_uses=d_auth),
    ]


def table_frame(rows: List[BaseModel]) -> pd.DataFrame:
    return pd.DataFrame.from_records([row.model_dump() for row in rows])


def formula_capacities(n: int, m: int, l: int) -> Dict[str, object]:
    """Capacity values a run report compares its ledger against."""
    return {
        "hash_ops": qsba_complexity(n, m),
        "key_strings": qsba_complexity(n, m),
        "auth_uses": qsba_auth_uses(n, m),
        "key_bits_per_link": qsba_link_bits(n, m, l),
    }


class KeyBudget(BaseModel):
    """Rounds each link class sustains, and which one runs out first."""

    max_rounds: Dict[str, int]
    binding: str

    @property
    def rounds(self) -> int:
        return self.max_rounds[self.binding]


def key_budget(
    pools: Union[PoolCapacities, Mapping[str, int]],
    per_round_costs: Mapping[str, int],
) -> KeyBudget:
    """
    Floor of capacity over per-round cost for every link class.

    Raises:
        InvalidCostError: If a cost is not positive
    """
    if isinstance(pools, PoolCapacities):
        pools = {
            COMMANDER_LINK: pools.commander_lieutenant,
            LIEUTENANT_LINK: pools.lieutenant_lieutenant,
        }
    max_rounds = {}
    for link_class, cost in per_round_costs.items():
        if cost <= 0:
            raise InvalidCostError(f"per-round cost of {link_class} must be positive, got {cost}")
        max_rounds[link_class] = pools[link_class] // cost
    if not max_rounds:
        raise InvalidCostError("no per-round costs given")
    binding = min(max_rounds, key=lambda k: (max_rounds[k], k))
    return KeyBudget(max_rounds=max_rounds, binding=binding)
