"""
QSBA Signed Message Module

The multiparty signed-message scheme: for every recipient the signer draws a
fresh division-hash key, hashes the message, and one-time-pads both the key
description and the tag with bits from the pairwise pool. The per-recipient
results form a signature matrix; packets carry a message plus an ordered
chain of matrices.

Key features:
- Partial signatures, signature matrices and signed packets
- Signing with ledger accounting (one hash op and one key string per part)
- Verification by purpose-label resolution of the signer's key segments
- Canonical binary frames (``encode_packet`` / ``decode_packet``)
"""

import struct
from dataclasses import dataclass
from typing import Iterable, List, Optional, Protocol, Sequence, Tuple

import numpy as np

from .errors import (
    InvalidChainError,
    KeyExhaustedError,
    MalformedFrameError,
    MalformedSignatureError,
    NoPartialSignatureError,
    NoRecipientsError,
    PreconditionError,
    QSBAError,
)
from .gf2hash import BitString, HashKey, division_hash, gen_hash_key
from .keystore import KeySegment, LinkId, otp
from .ledger import ResourceLedger
from .logging_utils import get_logger

logger = get_logger("qsba.qsm")

_MSG_HEADER = struct.Struct(">I")
_TAG_HEADER = struct.Struct(">HB")
_MATRIX_HEADER = struct.Struct(">BB")


class KeyAccess(Protocol):
    """What signing and verification need from a key store or key view."""

    def draw(self, x: int, y: int, n_bits: int, purpose: str) -> KeySegment: ...

    def resolve(self, x: int, y: int, purpose: str) -> List[KeySegment]: ...

    def remaining_bits(self, x: int, y: int) -> int: ...


@dataclass(frozen=True)
class PartialSignature:
    """Encrypted hash-function description and tag for one recipient."""

    recipient: int
    enc_hash_fn: BitString
    enc_hash_val: BitString

    @property
    def l(self) -> int:
        return self.enc_hash_fn.nbits


@dataclass(frozen=True)
class SignatureMatrix:
    """One signer's partial signatures, ordered by recipient."""

    signer: int
    parts: Tuple[PartialSignature, ...]

    def __post_init__(self):
        recipients = [p.recipient for p in self.parts]
        if recipients != sorted(set(recipients)):
            raise PreconditionError("partial signatures must have distinct, ordered recipients")
        if self.signer in recipients:
            raise PreconditionError(f"signer {self.signer} cannot sign for itself")

    @property
    def recipients(self) -> Tuple[int, ...]:
        return tuple(p.recipient for p in self.parts)

    def part_for(self, recipient: int) -> PartialSignature:
        for part in self.parts:
            if part.recipient == recipient:
                return part
        raise NoPartialSignatureError(
            f"matrix of signer {self.signer} has no part for node {recipient}"
        )


@dataclass(frozen=True)
class SignedPacket:
    """A message and the chain of signature matrices vouching for it."""

    message: BitString
    chain: Tuple[SignatureMatrix, ...]

    @property
    def signers(self) -> Tuple[int, ...]:
        return tuple(m.signer for m in self.chain)

    @property
    def depth(self) -> int:
        """Number of signatures after the first."""
        return len(self.chain) - 1

    def extend(self, matrix: SignatureMatrix) -> "SignedPacket":
        return SignedPacket(self.message, self.chain + (matrix,))

    def with_message(self, message: BitString) -> "SignedPacket":
        return SignedPacket(message, self.chain)


def check_chain(packet: SignedPacket) -> None:
    """
    Enforce the generic chain rules.

    Signers are pairwise distinct and every matrix's recipient set excludes
    all earlier signers.

    Raises:
        InvalidChainError: On the first violated rule
    """
    if not packet.chain:
        raise InvalidChainError("packet carries no signatures")
    seen = set()
    for matrix in packet.chain:
        if matrix.signer in seen:
            raise InvalidChainError(f"signer {matrix.signer} appears twice")
        if seen.intersection(matrix.recipients):
            raise InvalidChainError(
                f"matrix of signer {matrix.signer} addresses an earlier signer"
            )
        seen.add(matrix.signer)


def purpose_label(signer: int, recipient: int, prior: Sequence[int], field: str) -> str:
    """Label shared by signer and recipient for one encrypted field."""
    return f"qsm:{signer}>{recipient}:{'.'.join(map(str, prior))}:{field}"


def qsm_sign(
    msg: BitString,
    signer: int,
    recipients: Iterable[int],
    l: int,
    keystore: KeyAccess,
    ledger: Optional[ResourceLedger],
    rng: np.random.Generator,
    prior: Sequence[int] = (),
) -> SignatureMatrix:
    """
    Sign ``msg`` for every recipient.

    Args:
        msg: Message bits
        signer: Signing node
        recipients: Nodes to produce partial signatures for
        l: Tag length in bits
        keystore: Pool access covering every (signer, recipient) link
        ledger: Counters to charge, if any
        rng: Source for the per-recipient hash keys
        prior: Signers already in the chain this matrix extends

    Returns:
        The signature matrix

    Raises:
        NoRecipientsError: If ``recipients`` is empty
        KeyExhaustedError: If any link holds fewer than ``2 * l`` bits
    """
    targets = sorted(set(recipients))
    if not targets:
        raise NoRecipientsError(f"node {signer} has nobody to sign for")
    if signer in targets:
        raise PreconditionError(f"signer {signer} cannot sign for itself")

    for r in targets:
        remaining = keystore.remaining_bits(signer, r)
        if remaining < 2 * l:
            raise KeyExhaustedError(LinkId.of(signer, r), 2 * l - remaining)

    parts = []
    for r in targets:
        key = gen_hash_key(l, rng)
        tag = division_hash(key, msg)
        k1 = keystore.draw(signer, r, l, purpose_label(signer, r, prior, "fn"))
        k2 = keystore.draw(signer, r, l, purpose_label(signer, r, prior, "val"))
        parts.append(PartialSignature(r, otp(key.low_bits, k1), otp(tag, k2)))

    if ledger is not None:
        ledger.record_hash_ops(signer, len(parts))
        ledger.record_key_strings(len(parts))
    logger.debug("qsm_signed", signer=signer, recipients=targets, prior=list(prior), l=l)
    return SignatureMatrix(signer, tuple(parts))


def qsm_open(
    packet: SignedPacket,
    chain_index: int,
    verifier: int,
    keystore: KeyAccess,
    l: Optional[int] = None,
) -> List[Tuple[HashKey, BitString]]:
    """
    Decrypt the partial signature addressed to ``verifier`` in one chain entry.

    The verifier resolves the segments the signer drew under the shared
    purpose labels. A signer may have drawn several times under one label
    (an equivocating commander does), so every candidate pairing is
    returned in draw order.

    Returns:
        ``(hash key, expected tag)`` candidates; empty when nothing was drawn

    Raises:
        InvalidChainError: If ``chain_index`` is out of range
        NoPartialSignatureError: If the entry has no part for ``verifier``
        MalformedSignatureError: If the encrypted fields have bad lengths
    """
    if not 0 <= chain_index < len(packet.chain):
        raise InvalidChainError(f"chain has no entry {chain_index}")
    matrix = packet.chain[chain_index]
    part = matrix.part_for(verifier)

    tag_bits = part.enc_hash_fn.nbits
    if tag_bits < 1 or part.enc_hash_val.nbits != tag_bits or (l is not None and tag_bits != l):
        raise MalformedSignatureError(
            f"partial signature fields have {part.enc_hash_fn.nbits}/{part.enc_hash_val.nbits} bits"
        )

    prior = packet.signers[:chain_index]
    fn_keys = keystore.resolve(matrix.signer, verifier, purpose_label(matrix.signer, verifier, prior, "fn"))
    val_keys = keystore.resolve(matrix.signer, verifier, purpose_label(matrix.signer, verifier, prior, "val"))
    opened = []
    for k1, k2 in zip(fn_keys, val_keys):
        if k1.bits.nbits != tag_bits or k2.bits.nbits != tag_bits:
            continue
        opened.append((HashKey.from_bits(otp(part.enc_hash_fn, k1)), otp(part.enc_hash_val, k2)))
    return opened


def qsm_verify(
    packet: SignedPacket,
    chain_index: int,
    verifier: int,
    keystore: KeyAccess,
    l: Optional[int] = None,
) -> bool:
    """
    Check the partial signature addressed to ``verifier`` in one chain entry.

    Recomputes the division hash of the packet's message under each opened
    key; the decrypted key is not required to be irreducible.

    Raises:
        NoPartialSignatureError: If the entry has no part for ``verifier``
        MalformedSignatureError: If the encrypted fields have bad lengths
    """
    return any(
        division_hash(key, packet.message) == tag
        for key, tag in qsm_open(packet, chain_index, verifier, keystore, l)
    )


# ---------- Wire format ----------
def frame_tag_bits(packet: SignedPacket) -> int:
    """The frame-global tag length, 0 for an empty chain."""
    lengths = {
        n for m in packet.chain for p in m.parts for n in (p.enc_hash_fn.nbits, p.enc_hash_val.nbits)
    }
    if not lengths:
        return 0
    if len(lengths) != 1:
        raise MalformedFrameError(f"mixed tag lengths {sorted(lengths)} in one packet")
    return lengths.pop()


def encode_packet(packet: SignedPacket) -> bytes:
    """
    Serialize a packet.

    Layout (big-endian): MSG_BITS u32 | MSG bytes | L_TAG u16 | CHAIN_LEN u8 |
    per matrix SIGNER u8, NRECIP u8, then NRECIP x (RECIP u8, enc_hash_fn,
    enc_hash_val) with each field ``ceil(l/8)`` bytes, MSB-first.
    """
    l = frame_tag_bits(packet)
    if len(packet.chain) > 0xFF:
        raise MalformedFrameError("chain too long for one frame")
    out = [_MSG_HEADER.pack(packet.message.nbits), packet.message.data, _TAG_HEADER.pack(l, len(packet.chain))]
    for matrix in packet.chain:
        if not 0 <= matrix.signer <= 0xFF or len(matrix.parts) > 0xFF:
            raise MalformedFrameError("matrix does not fit the frame format")
        out.append(_MATRIX_HEADER.pack(matrix.signer, len(matrix.parts)))
        for part in matrix.parts:
            out.append(struct.pack(">B", part.recipient))
            out.append(part.enc_hash_fn.data)
            out.append(part.enc_hash_val.data)
    return b"".join(out)


def frame_length(message_bits: int, l: int, recipients_per_matrix: Sequence[int]) -> int:
    """Exact frame size for the given message length and chain shape."""
    field = (l + 7) // 8
    return (
        _MSG_HEADER.size
        + (message_bits + 7) // 8
        + _TAG_HEADER.size
        + sum(_MATRIX_HEADER.size + r * (1 + 2 * field) for r in recipients_per_matrix)
    )


def _bits(frame: bytes, offset: int, nbits: int) -> Tuple[BitString, int]:
    nbytes = (nbits + 7) // 8
    if offset + nbytes > len(frame):
        raise MalformedFrameError("frame truncated")
    try:
        return BitString(frame[offset : offset + nbytes], nbits), offset + nbytes
    except PreconditionError as e:
        raise MalformedFrameError(str(e)) from e


def decode_packet(frame: bytes) -> SignedPacket:
    """
    Parse a frame produced by ``encode_packet``.

    Raises:
        MalformedFrameError: On truncation, trailing bytes, non-zero padding,
            an empty chain or a structurally invalid matrix
    """
    if len(frame) < _MSG_HEADER.size:
        raise MalformedFrameError("frame shorter than its header")
    (msg_bits,) = _MSG_HEADER.unpack_from(frame, 0)
    message, offset = _bits(frame, _MSG_HEADER.size, msg_bits)

    if offset + _TAG_HEADER.size > len(frame):
        raise MalformedFrameError("frame truncated before tag header")
    l, chain_len = _TAG_HEADER.unpack_from(frame, offset)
    offset += _TAG_HEADER.size
    if chain_len == 0:
        raise MalformedFrameError("packet in transit carries no signatures")
    if l < 1:
        raise MalformedFrameError("tag length must be positive")

    chain: List[SignatureMatrix] = []
    for _ in range(chain_len):
        if offset + _MATRIX_HEADER.size > len(frame):
            raise MalformedFrameError("frame truncated in matrix header")
        signer, nrecip = _MATRIX_HEADER.unpack_from(frame, offset)
        offset += _MATRIX_HEADER.size
        parts = []
        for _ in range(nrecip):
            if offset >= len(frame):
                raise MalformedFrameError("frame truncated in partial signature")
            recipient = frame[offset]
            fn, offset = _bits(frame, offset + 1, l)
            val, offset = _bits(frame, offset, l)
            parts.append(PartialSignature(recipient, fn, val))
        try:
            chain.append(SignatureMatrix(signer, tuple(parts)))
        except QSBAError as e:
            raise MalformedFrameError(str(e)) from e

    if offset != len(frame):
        raise MalformedFrameError(f"{len(frame) - offset} trailing bytes after chain")
    return SignedPacket(message, tuple(chain))
