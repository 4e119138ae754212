"""
QSBA Key Store Module

Pairwise information-theoretically secure key pools and the one-time pad.

Each pool is a finite bit reservoir shared by the two endpoints of a link.
Draws are addressed by a purpose label agreed on by both sides, so the peer
resolves exactly the segment the drawer consumed without any extra
communication. Pool material is a deterministic stream derived from the
scenario seed and the link, generated lazily as the cursor advances.

Key features:
- Canonical link identifiers (``LinkId``)
- Consumable pools with one-time discipline and exhaustion errors
- Ledger charging of every drawn bit
- Principal-scoped views that keep honest-to-honest pools out of reach
"""

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    AccessDeniedError,
    KeyExhaustedError,
    NoSuchLinkError,
    OTPLengthMismatchError,
    PreconditionError,
)
from .gf2hash import BitString
from .ledger import ResourceLedger
from .logging_utils import get_logger

logger = get_logger("qsba.keystore")

Seed = Union[int, Sequence[int]]

_REFILL_BYTES = 64


def derive_rng(seed: Seed, *spawn_key: int) -> np.random.Generator:
    """Independent generator for one stream of a seeded run."""
    entropy = [seed] if isinstance(seed, int) else list(seed)
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(entropy, spawn_key=spawn_key))
    )


@dataclass(frozen=True, order=True)
class LinkId:
    """An unordered pair of distinct nodes, stored with ``a < b``."""

    a: int
    b: int

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise PreconditionError("node ids are non-negative")
        if self.a >= self.b:
            raise PreconditionError(f"link ({self.a}, {self.b}) is not canonical")

    @classmethod
    def of(cls, x: int, y: int) -> "LinkId":
        if x == y:
            raise NoSuchLinkError(f"no link from node {x} to itself")
        return cls(min(x, y), max(x, y))

    def involves(self, node: int) -> bool:
        return node in (self.a, self.b)

    @property
    def link_class(self) -> str:
        return "commander-lieutenant" if self.a == 0 else "lieutenant-lieutenant"

    def __str__(self) -> str:
        return f"{self.a}-{self.b}"


@dataclass(frozen=True)
class KeySegment:
    """Bits ``[offset_bits, offset_bits + len(bits))`` of a pool."""

    link: LinkId
    offset_bits: int
    bits: BitString

    def __post_init__(self):
        if self.bits.nbits <= 0:
            raise PreconditionError("key segments are non-empty")


class KeyPool:
    """
    A consumable key reservoir for one link.

    The pool is single-writer: draws happen on the simulation thread only.
    """

    def __init__(
        self,
        link: LinkId,
        capacity_bits: int,
        seed: Seed = 0,
        ledger: Optional[ResourceLedger] = None,
    ):
        if capacity_bits < 0:
            raise PreconditionError("pool capacity must be non-negative")
        self.link = link
        self.capacity_bits = capacity_bits
        self.cursor_bits = 0
        self.ledger = ledger
        self._rng = derive_rng(seed, link.a, link.b)
        self._buffer = 0
        self._buffered = 0
        self._issued: Dict[str, List[KeySegment]] = {}
        self._intervals: List[Tuple[int, int]] = []

    @property
    def remaining_bits(self) -> int:
        return self.capacity_bits - self.cursor_bits

    def _next_bits(self, n_bits: int) -> int:
        while self._buffered < n_bits:
            nbytes = max(_REFILL_BYTES, (n_bits - self._buffered + 7) // 8)
            self._buffer = (self._buffer << (8 * nbytes)) | int.from_bytes(
                self._rng.bytes(nbytes), "big"
            )
            self._buffered += 8 * nbytes
        self._buffered -= n_bits
        value = self._buffer >> self._buffered
        self._buffer &= (1 << self._buffered) - 1
        return value

    def draw(self, n_bits: int, purpose: str) -> KeySegment:
        """
        Consume the next ``n_bits`` of the pool under ``purpose``.

        Args:
            n_bits: Number of bits to draw
            purpose: Label both endpoints derive for this use

        Returns:
            The drawn segment

        Raises:
            PreconditionError: If ``n_bits < 1``
            KeyExhaustedError: If the pool cannot serve the draw
        """
        if n_bits < 1:
            raise PreconditionError("draws take at least one bit")
        if self.cursor_bits + n_bits > self.capacity_bits:
            shortfall = self.cursor_bits + n_bits - self.capacity_bits
            logger.warning(
                "key_pool_exhausted", link=str(self.link), shortfall=shortfall, purpose=purpose
            )
            raise KeyExhaustedError(self.link, shortfall)

        segment = KeySegment(
            self.link, self.cursor_bits, BitString.from_int(self._next_bits(n_bits), n_bits)
        )
        self._intervals.append((self.cursor_bits, n_bits))
        self.cursor_bits += n_bits
        self._issued.setdefault(purpose, []).append(segment)
        if self.ledger is not None:
            self.ledger.record_key_bits(self.link.a, self.link.b, n_bits)
        return segment

    def resolve(self, purpose: str) -> List[KeySegment]:
        """Segments drawn under ``purpose``, in draw order."""
        return list(self._issued.get(purpose, ()))

    def issued_intervals(self) -> List[Tuple[int, int]]:
        """(offset, length) of every draw, in draw order."""
        return list(self._intervals)


def draw(pool: KeyPool, n_bits: int, purpose: str) -> KeySegment:
    """Draw ``n_bits`` from ``pool`` under ``purpose``."""
    return pool.draw(n_bits, purpose)


def otp(data: BitString, key: KeySegment) -> BitString:
    """
    One-time pad: bitwise XOR of ``data`` with the key segment.

    Raises:
        OTPLengthMismatchError: If the lengths differ
    """
    if data.nbits != key.bits.nbits:
        raise OTPLengthMismatchError(
            f"data has {data.nbits} bits but key segment has {key.bits.nbits}"
        )
    return data ^ key.bits


@dataclass(frozen=True)
class PoolCapacities:
    """Pool size per link class, in bits."""

    commander_lieutenant: int = 238_950_000
    lieutenant_lieutenant: int = 22_455

    def capacity_for(self, link: LinkId) -> int:
        if link.a == 0:
            return self.commander_lieutenant
        return self.lieutenant_lieutenant


class KeyStore:
    """
    All pairwise pools of an ``n``-node network.

    Pools are created on first use. ``view`` hands out principal-scoped
    access so each party only touches links it is an endpoint of.
    """

    def __init__(
        self,
        n: int,
        seed: Seed = 0,
        capacities: Optional[PoolCapacities] = None,
        ledger: Optional[ResourceLedger] = None,
    ):
        if n < 2:
            raise PreconditionError("a key store needs at least two nodes")
        self.n = n
        self.seed = seed
        self.capacities = capacities or PoolCapacities()
        self.ledger = ledger
        self._pools: Dict[LinkId, KeyPool] = {}

    def link(self, x: int, y: int) -> LinkId:
        if not (0 <= x < self.n and 0 <= y < self.n):
            raise NoSuchLinkError(f"no link ({x}, {y}) in a {self.n}-node network")
        return LinkId.of(x, y)

    def pool(self, x: int, y: int) -> KeyPool:
        link = self.link(x, y)
        pool = self._pools.get(link)
        if pool is None:
            pool = KeyPool(link, self.capacities.capacity_for(link), self.seed, self.ledger)
            self._pools[link] = pool
        return pool

    def draw(self, x: int, y: int, n_bits: int, purpose: str) -> KeySegment:
        return self.pool(x, y).draw(n_bits, purpose)

    def resolve(self, x: int, y: int, purpose: str) -> List[KeySegment]:
        return self.pool(x, y).resolve(purpose)

    def remaining_bits(self, x: int, y: int) -> int:
        return self.pool(x, y).remaining_bits

    def remaining(self) -> Dict[str, int]:
        """Remaining bits of every pool touched so far."""
        return {str(link): pool.remaining_bits for link, pool in sorted(self._pools.items())}

    def pools(self) -> List[KeyPool]:
        return [self._pools[link] for link in sorted(self._pools)]

    def view(self, principals: Iterable[int]) -> "KeyView":
        return KeyView(self, frozenset(principals))


class KeyView:
    """
    Access to the pools of links that touch at least one principal.

    A view over several principals models colluding parties pooling their
    key material.
    """

    def __init__(self, store: KeyStore, principals: FrozenSet[int]):
        self._store = store
        self.principals = principals

    @property
    def n(self) -> int:
        return self._store.n

    def _check(self, x: int, y: int) -> None:
        if x not in self.principals and y not in self.principals:
            raise AccessDeniedError(
                f"link ({x}, {y}) is outside principals {sorted(self.principals)}"
            )

    def draw(self, x: int, y: int, n_bits: int, purpose: str) -> KeySegment:
        self._check(x, y)
        return self._store.draw(x, y, n_bits, purpose)

    def resolve(self, x: int, y: int, purpose: str) -> List[KeySegment]:
        self._check(x, y)
        return self._store.resolve(x, y, purpose)

    def remaining_bits(self, x: int, y: int) -> int:
        self._check(x, y)
        return self._store.pool(x, y).remaining_bits
