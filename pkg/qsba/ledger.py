"""
QSBA Resource Ledger

Counters for the quantities compared across protocols: hash operations,
secure key strings, key bits consumed per link and classical authenticated
channel uses. Every counter only grows within a run.
"""

from enum import Enum
from typing import Dict, Tuple

from pydantic import BaseModel, ConfigDict, Field

from .errors import PreconditionError


class AuthCostModel(str, Enum):
    """How an authenticated-channel use is costed."""

    AXIOMATIC = "axiomatic"
    COSTED = "costed"


def link_key(a: int, b: int) -> str:
    """Canonical ledger key of the link between ``a`` and ``b``."""
    lo, hi = (a, b) if a < b else (b, a)
    return f"{lo}-{hi}"


class ResourceLedger(BaseModel):
    """Resource counters of one run."""

    model_config = ConfigDict(use_enum_values=False)

    hash_ops: int = Field(default=0, description="Hash evaluations by signers")
    key_strings: int = Field(default=0, description="Secure key strings consumed")
    auth_uses: int = Field(default=0, description="Authenticated-channel deliveries")
    key_bits_per_link: Dict[str, int] = Field(
        default_factory=dict, description="Key bits drawn per link, keyed 'a-b'"
    )
    hash_ops_by_node: Dict[int, int] = Field(default_factory=dict)
    auth_uses_by_node: Dict[int, int] = Field(default_factory=dict)
    auth_cost: AuthCostModel = Field(default=AuthCostModel.AXIOMATIC)

    def record_hash_ops(self, node: int, count: int = 1) -> None:
        if count < 0:
            raise PreconditionError("ledger counters are monotone")
        self.hash_ops += count
        self.hash_ops_by_node[node] = self.hash_ops_by_node.get(node, 0) + count

    def record_key_strings(self, count: int = 1) -> None:
        if count < 0:
            raise PreconditionError("ledger counters are monotone")
        self.key_strings += count

    def record_key_bits(self, a: int, b: int, bits: int) -> None:
        if bits < 0:
            raise PreconditionError("ledger counters are monotone")
        key = link_key(a, b)
        self.key_bits_per_link[key] = self.key_bits_per_link.get(key, 0) + bits

    def record_auth_use(self, sender: int) -> None:
        """One authenticated delivery; the costed model adds a key string and a hash."""
        self.auth_uses += 1
        self.auth_uses_by_node[sender] = self.auth_uses_by_node.get(sender, 0) + 1
        if self.auth_cost == AuthCostModel.COSTED:
            self.record_key_strings(1)
            self.record_hash_ops(sender, 1)

    # ---------- Views ----------
    def key_bits(self, a: int, b: int) -> int:
        return self.key_bits_per_link.get(link_key(a, b), 0)

    def total_key_bits(self) -> int:
        return sum(self.key_bits_per_link.values())

    def key_bits_by_class(self, n: int) -> Dict[str, Tuple[int, int]]:
        """(min, max) key bits over commander and lieutenant links of an n-node net."""
        commander = [self.key_bits(0, j) for j in range(1, n)]
        lieutenant = [self.key_bits(i, j) for i in range(1, n) for j in range(i + 1, n)]
        summary = {}
        if commander:
            summary["commander-lieutenant"] = (min(commander), max(commander))
        if lieutenant:
            summary["lieutenant-lieutenant"] = (min(lieutenant), max(lieutenant))
        return summary

    def totals(self) -> Tuple[int, int, int]:
        """(hash ops, key strings, auth uses)."""
        return self.hash_ops, self.key_strings, self.auth_uses

    def snapshot(self) -> "ResourceLedger":
        return self.model_copy(deep=True)

    def delta(self, before: "ResourceLedger") -> Tuple[int, int, int]:
        """Counter growth since ``before`` as (hash ops, key strings, auth uses)."""
        return (
            self.hash_ops - before.hash_ops,
            self.key_strings - before.key_strings,
            self.auth_uses - before.auth_uses,
        )
