"""
QSBA Baseline Protocols

Three-party comparison protocols between a signer (Alice), a receiver (Bob)
and a verifier (Charlie), plus a flow enumerator for agreement built from
iterated three-party signatures.

Key features:
- ``qsm3_run``: plain signed message to two recipients, no authenticated channel
- ``qds_run``: key-XOR digital signature with key exchange over authenticated channels
- ``mqsm_run``: signed message with verifier confirmation (non-repudiation variant)
- ``qba_enumerate``: per-layer executions, ledger totals and per-link key bits
"""

from itertools import permutations
from typing import Callable, List, Optional

import numpy as np
from pydantic import BaseModel

from .errors import KeyExhaustedError
from .gf2hash import BitString, HashKey, division_hash, gen_hash_key
from .keystore import KeyStore, LinkId, derive_rng, otp
from .ledger import ResourceLedger
from .logging_utils import get_logger
from .metrics import validate_params
from .qsm import SignedPacket, qsm_sign, qsm_verify

logger = get_logger("qsba.baselines")

ALICE, BOB, CHARLIE = 0, 1, 2

MessageHook = Callable[[BitString], BitString]
PacketHook = Callable[[SignedPacket], SignedPacket]


class TriPartyOutcome(BaseModel):
    """Acceptance flags and ledger growth of one three-party run."""

    protocol: str
    bob_accepts: bool
    charlie_accepts: bool
    hash_ops: int
    key_strings: int
    auth_uses: int

    @property
    def delta(self):
        return self.hash_ops, self.key_strings, self.auth_uses


def _outcome(protocol: str, bob: bool, charlie: bool, ledger: ResourceLedger, before: ResourceLedger) -> TriPartyOutcome:
    hash_ops, key_strings, auth_uses = ledger.delta(before)
    outcome = TriPartyOutcome(
        protocol=protocol,
        bob_accepts=bob,
        charlie_accepts=charlie,
        hash_ops=hash_ops,
        key_strings=key_strings,
        auth_uses=auth_uses,
    )
    logger.debug("tri_party_run", **outcome.model_dump())
    return outcome


def _require(keystore: KeyStore, x: int, y: int, bits: int) -> None:
    remaining = keystore.remaining_bits(x, y)
    if remaining < bits:
        raise KeyExhaustedError(LinkId.of(x, y), bits - remaining)


def _rng(rng: Optional[np.random.Generator]) -> np.random.Generator:
    return rng if rng is not None else derive_rng(0, 3)


def qsm3_run(
    M: BitString,
    l: int,
    keystore: KeyStore,
    ledger: ResourceLedger,
    tamper: Optional[MessageHook] = None,
    rng: Optional[np.random.Generator] = None,
) -> TriPartyOutcome:
    """Alice signs for Bob and Charlie; each checks his own part."""
    before = ledger.snapshot()
    matrix = qsm_sign(M, ALICE, [BOB, CHARLIE], l, keystore, ledger, _rng(rng))
    packet = SignedPacket(M, (matrix,))
    to_bob = packet.with_message(tamper(M)) if tamper else packet
    bob = qsm_verify(to_bob, 0, BOB, keystore, l)
    charlie = qsm_verify(packet, 0, CHARLIE, keystore, l)
    return _outcome("qsm", bob, charlie, ledger, before)


def qds_run(
    M: BitString,
    l: int,
    keystore: KeyStore,
    ledger: ResourceLedger,
    tamper: Optional[MessageHook] = None,
    rng: Optional[np.random.Generator] = None,
) -> TriPartyOutcome:
    """
    Three-party digital signature.

    Alice pads the hash-function description with ``X_B xor X_C`` and the
    tag with ``Y_B xor Y_C``. Bob relays the signed message together with
    his key strings to Charlie over an authenticated channel; Charlie checks
    and, only if he accepts, returns his own key strings so Bob can check.

    Raises:
        KeyExhaustedError: If either of Alice's pools holds fewer than ``2l`` bits
    """
    _require(keystore, ALICE, BOB, 2 * l)
    _require(keystore, ALICE, CHARLIE, 2 * l)
    before = ledger.snapshot()

    x_b = keystore.draw(ALICE, BOB, l, "qds:X_B")
    y_b = keystore.draw(ALICE, BOB, l, "qds:Y_B")
    x_c = keystore.draw(ALICE, CHARLIE, l, "qds:X_C")
    y_c = keystore.draw(ALICE, CHARLIE, l, "qds:Y_C")

    key = gen_hash_key(l, _rng(rng))
    tag = division_hash(key, M)
    enc_fn = otp(otp(key.low_bits, x_b), x_c)
    enc_val = otp(otp(tag, y_b), y_c)
    ledger.record_hash_ops(ALICE, 1)
    ledger.record_key_strings(2)

    received = tamper(M) if tamper else M

    # Bob -> Charlie: message, signature and Bob's key strings
    ledger.record_auth_use(BOB)
    fn_key = HashKey.from_bits(otp(otp(enc_fn, x_b), x_c))
    expected = otp(otp(enc_val, y_b), y_c)
    charlie = division_hash(fn_key, received) == expected

    bob = False
    if charlie:
        # Charlie -> Bob: Charlie's key strings
        ledger.record_auth_use(CHARLIE)
        bob = division_hash(fn_key, received) == expected
    return _outcome("qds", bob, charlie, ledger, before)


def mqsm_run(
    M: BitString,
    l: int,
    keystore: KeyStore,
    ledger: ResourceLedger,
    tamper: Optional[MessageHook] = None,
    rng: Optional[np.random.Generator] = None,
    bob_to_charlie: Optional[PacketHook] = None,
) -> TriPartyOutcome:
    """
    Signed message with verifier confirmation.

    Bob checks his part and, if it passes, forwards the packet to Charlie
    over an authenticated channel; Charlie checks his part and reports back
    over another. Bob accepts only when both checks pass.
    """
    before = ledger.snapshot()
    matrix = qsm_sign(M, ALICE, [BOB, CHARLIE], l, keystore, ledger, _rng(rng))
    packet = SignedPacket(M, (matrix,))
    received = packet.with_message(tamper(M)) if tamper else packet

    if not qsm_verify(received, 0, BOB, keystore, l):
        return _outcome("mqsm", False, False, ledger, before)

    forwarded = bob_to_charlie(received) if bob_to_charlie else received
    ledger.record_auth_use(BOB)
    charlie = qsm_verify(forwarded, 0, CHARLIE, keystore, l)
    ledger.record_auth_use(CHARLIE)
    return _outcome("mqsm", charlie, charlie, ledger, before)


class QbaFlow(BaseModel):
    """Message flow of agreement by iterated three-party signatures."""

    n: int
    m: int
    l: Optional[int] = None
    layers: List[int]
    ledger: ResourceLedger

    @property
    def executions(self) -> int:
        return sum(self.layers)

    def key_bits_by_class(self):
        return self.ledger.key_bits_by_class(self.n)


def qba_enumerate(n: int, m: int, l: Optional[int] = None) -> QbaFlow:
    """
    Enumerate every three-party execution of the baseline agreement.

    Layer ``i`` runs one execution per ordered sequence of ``i + 1``
    distinct lieutenants: the sender is the commander for ``i = 1`` and the
    sequence's ``(i-1)``-th entry otherwise, the receiver its ``i``-th entry
    and the verifier the last. Each execution costs one hash operation, two
    key strings of ``2l`` bits (sender-receiver and sender-verifier links)
    and two authenticated uses.

    Raises:
        InvalidParamsError: Unless ``n >= 3`` and ``1 <= m <= n - 2``
    """
    validate_params(n, m)
    lieutenants = range(1, n)
    ledger = ResourceLedger()
    layers = []
    for i in range(1, m + 1):
        count = 0
        for seq in permutations(lieutenants, i + 1):
            sender = 0 if i == 1 else seq[i - 2]
            receiver, verifier = seq[i - 1], seq[i]
            ledger.record_hash_ops(sender, 1)
            ledger.record_key_strings(2)
            ledger.record_auth_use(receiver)
            ledger.record_auth_use(verifier)
            if l is not None:
                ledger.record_key_bits(sender, receiver, 2 * l)
                ledger.record_key_bits(sender, verifier, 2 * l)
            count += 1
        layers.append(count)
    return QbaFlow(n=n, m=m, l=l, layers=layers, ledger=ledger)
