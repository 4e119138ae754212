"""
QSBA Adversary Library

Scripted Byzantine behaviours over four hooks:

- ``on_issue(command)``: a controlled commander replaces command issuance
- ``on_receive(node, delivery)``: a controlled lieutenant intercepts input
- ``on_forward(node, action, round)``: a controlled lieutenant rewrites the
  frames its honest machine would send
- ``on_transit(send)``: any send touching a controlled node may be dropped,
  or rewritten on insecure channels

Controlled nodes run the honest state machine unless a hook takes over.
All controlled nodes share one key view, so colluders see each other's key
material but never a pool between two honest nodes.
"""

from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Type, Union

import numpy as np

from .errors import AccessDeniedError, InvalidParamsError
from .gf2hash import BitString
from .keystore import KeyView
from .ledger import ResourceLedger
from .logging_utils import get_logger
from .protocol import COMMANDER, Action, ActionKind, ProtocolParams
from .qsm import (
    PartialSignature,
    SignatureMatrix,
    SignedPacket,
    decode_packet,
    encode_packet,
    qsm_sign,
    qsm_verify,
)
from .simnet import ChannelKind, Delivery, Network, Send, forge_attempt, frame_digest

logger = get_logger("qsba.adversary")

Payload = Union[SignedPacket, bytes]


class AdversaryContext:
    """Capabilities handed to a strategy for one run."""

    def __init__(
        self,
        params: ProtocolParams,
        network: Network,
        keys: KeyView,
        ledger: ResourceLedger,
        rng: np.random.Generator,
        command: BitString,
    ):
        self.params = params
        self.keys = keys
        self.ledger = ledger
        self.rng = rng
        self.command = command
        self._network = network
        self._observed: List[Delivery] = []
        self._digests = set()

    @property
    def controlled(self) -> frozenset:
        return self.keys.principals

    @property
    def honest_lieutenants(self) -> Tuple[int, ...]:
        return tuple(i for i in self.params.lieutenants if i not in self.controlled)

    @property
    def observed(self) -> List[Delivery]:
        return list(self._observed)

    def observe(self, delivery: Delivery) -> None:
        self._observed.append(delivery)
        self._digests.add(frame_digest(delivery.frame))

    def has_observed(self, frame: bytes) -> bool:
        return frame_digest(frame) in self._digests

    def last_delivery(self, node: int) -> Optional[Delivery]:
        for delivery in reversed(self._observed):
            if delivery.receiver == node:
                return delivery
        return None

    def send(self, sender: int, receiver: int, kind: ChannelKind, payload: Payload, round_no: int) -> None:
        if sender not in self.controlled:
            raise AccessDeniedError(f"adversary cannot send as honest node {sender}")
        frame = encode_packet(payload) if isinstance(payload, SignedPacket) else payload
        self._network.schedule_send(sender, receiver, kind, frame, round_no)

    def chain_recipients(self, signer: int, prior: Sequence[int]) -> Tuple[int, ...]:
        """Recipient set a well-formed matrix by ``signer`` after ``prior`` must carry."""
        if signer == COMMANDER:
            return self.params.lieutenants
        return tuple(i for i in self.params.lieutenants if i != signer and i not in prior)

    def sign(
        self, message: BitString, signer: int, recipients: Iterable[int], prior: Sequence[int] = ()
    ) -> SignatureMatrix:
        if signer not in self.controlled:
            raise AccessDeniedError(f"adversary cannot sign as honest node {signer}")
        return qsm_sign(message, signer, recipients, self.params.l, self.keys, self.ledger, self.rng, prior)

    def verify(self, packet: SignedPacket, chain_index: int, verifier: int) -> bool:
        return qsm_verify(packet, chain_index, verifier, self.keys, self.params.l)


def variant(command: BitString, index: int) -> BitString:
    """A message distinct from ``command`` and from every other index."""
    if command.nbits >= 8:
        return command ^ BitString.from_int(index & 0xFF, command.nbits)
    return command.concat(BitString.from_int(index & 0xFF, 8))


class AdversaryStrategy:
    """Passive base strategy: controlled nodes behave honestly."""

    name = "passive"

    def __init__(self, controlled: Iterable[int], **params):
        self.controlled = frozenset(controlled)
        self.params = params
        self.ctx: Optional[AdversaryContext] = None

    def bind(self, ctx: AdversaryContext) -> None:
        self.ctx = ctx

    def on_issue(self, command: BitString) -> bool:
        return False

    def on_receive(self, node: int, delivery: Delivery) -> bool:
        return False

    def on_forward(self, node: int, action: Action, round_no: int) -> Optional[List[Send]]:
        return None

    def on_transit(self, send: Send) -> Optional[Send]:
        return send


class EquivocateStrategy(AdversaryStrategy):
    """
    A controlled commander sends a distinct, fully signed message to every
    lieutenant; controlled lieutenants hand different accepted messages to
    different targets.
    """

    name = "equivocate"

    def __init__(self, controlled: Iterable[int], **params):
        super().__init__(controlled, **params)
        self._known: Dict[int, List[SignedPacket]] = {}
        self._signed: Dict[Tuple[int, BitString, Tuple[int, ...]], SignedPacket] = {}

    def on_issue(self, command: BitString) -> bool:
        for i in self.ctx.params.lieutenants:
            message = variant(command, i)
            matrix = self.ctx.sign(message, COMMANDER, self.ctx.params.lieutenants)
            self.ctx.send(COMMANDER, i, ChannelKind.INSECURE, SignedPacket(message, (matrix,)), 0)
        logger.debug("commander_equivocated", lieutenants=len(self.ctx.params.lieutenants))
        return True

    def on_forward(self, node: int, action: Action, round_no: int) -> Optional[List[Send]]:
        if action.kind == ActionKind.NONE:
            return None

        if action.kind == ActionKind.SIGN_AND_FORWARD:
            base = SignedPacket(action.packet.message, action.packet.chain[:-1])
            self._signed[(node, base.message, base.signers)] = action.packet
        else:
            base = action.packet
        known = self._known.setdefault(node, [])
        if all((p.message, p.signers) != (base.message, base.signers) for p in known):
            known.append(base)
        candidates = [p for p in known if p.depth == base.depth]

        sends = []
        for idx, target in enumerate(sorted(action.targets)):
            chosen = candidates[(idx + round_no) % len(candidates)]
            if target in chosen.signers:
                continue
            if action.kind == ActionKind.AUTH_FORWARD:
                sends.append(Send(node, target, ChannelKind.AUTHENTICATED, encode_packet(chosen), round_no + 1))
                continue
            recipients = self.ctx.chain_recipients(node, chosen.signers)
            if target not in recipients:
                continue
            cache_key = (node, chosen.message, chosen.signers)
            if cache_key not in self._signed:
                matrix = self.ctx.sign(chosen.message, node, recipients, chosen.signers)
                self._signed[cache_key] = chosen.extend(matrix)
            sends.append(
                Send(node, target, ChannelKind.INSECURE, encode_packet(self._signed[cache_key]), round_no + 1)
            )
        return sends


class DropStrategy(AdversaryStrategy):
    """Controlled nodes silently drop what they send (optionally only to ``drop_to``)."""

    name = "drop"

    def on_transit(self, send: Send) -> Optional[Send]:
        drop_to = self.params.get("drop_to")
        if send.sender in self.controlled and (drop_to is None or send.receiver in drop_to):
            return None
        return send


class EquivocateDropStrategy(EquivocateStrategy):
    """Equivocation plus dropping every send to a chosen subset of honest lieutenants."""

    name = "equivocate-drop"

    def on_transit(self, send: Send) -> Optional[Send]:
        drop_to = self.params.get("drop_to")
        if drop_to is None:
            drop_to = self.ctx.honest_lieutenants[::2]
        if send.sender in self.controlled and send.receiver in drop_to:
            return None
        return send


class ReplayStrategy(AdversaryStrategy):
    """Controlled lieutenants re-send every frame they get from honest nodes, now and next round."""

    name = "replay"

    def __init__(self, controlled: Iterable[int], **params):
        super().__init__(controlled, **params)
        self._replayed = set()

    def on_receive(self, node: int, delivery: Delivery) -> bool:
        key = (node, frame_digest(delivery.frame))
        if delivery.sender in self.controlled or key in self._replayed:
            return False
        self._replayed.add(key)
        last_round = self.ctx.params.m
        for target in self.ctx.params.lieutenants:
            if target in (node, delivery.sender):
                continue
            for r in (delivery.round, delivery.round + 1):
                if r <= last_round:
                    self.ctx.send(node, target, delivery.kind, delivery.frame, r)
        return False


class TamperInsecureStrategy(AdversaryStrategy):
    """
    Flip one message bit of insecure frames.

    ``scope`` is ``"sender"`` (frames sent by controlled nodes, the default)
    or ``"incident"`` (also frames sent to them); ``bit`` picks the
    message bit.
    """

    name = "tamper-insecure"

    def on_transit(self, send: Send) -> Optional[Send]:
        if send.kind != ChannelKind.INSECURE:
            return send
        scope = self.params.get("scope", "sender")
        if scope == "sender" and send.sender not in self.controlled:
            return send
        return send.with_frame(flip_message_bit(send.frame, int(self.params.get("bit", 0))))


def flip_message_bit(frame: bytes, bit: int) -> bytes:
    """Flip message bit ``bit`` of a frame; frames with shorter messages get their last byte flipped."""
    buf = bytearray(frame)
    msg_bits = int.from_bytes(frame[:4], "big") if len(frame) >= 4 else 0
    if bit < msg_bits:
        buf[4 + bit // 8] ^= 0x80 >> (bit % 8)
    elif buf:
        buf[-1] ^= 0x01
    return bytes(buf)


class ColludeStrategy(AdversaryStrategy):
    """
    Colluders pass a message along a chain of controlled lieutenants and
    release it to a single honest lieutenant as late as the round rules
    allow. With a controlled commander the relayed message is a second,
    fully signed command; honest lieutenants get the real one directly.
    """

    name = "collude"

    def __init__(self, controlled: Iterable[int], **params):
        super().__init__(controlled, **params)
        self._relay: Tuple[int, ...] = ()
        self._payload: Optional[BitString] = None

    def bind(self, ctx: AdversaryContext) -> None:
        super().bind(ctx)
        lieutenants = sorted(i for i in self.controlled if i != COMMANDER)
        self._relay = tuple(lieutenants[: ctx.params.m - 1])

    def _target(self) -> int:
        target = self.params.get("target")
        if target is None:
            return self.ctx.honest_lieutenants[0]
        return int(target)

    def on_issue(self, command: BitString) -> bool:
        lieutenants = self.ctx.params.lieutenants
        alternate = variant(command, 0x5A)
        self._payload = alternate
        real = SignedPacket(command, (self.ctx.sign(command, COMMANDER, lieutenants),))
        forged = SignedPacket(alternate, (self.ctx.sign(alternate, COMMANDER, lieutenants),))
        first = self._relay[0] if self._relay else self._target()
        for i in lieutenants:
            self.ctx.send(COMMANDER, i, ChannelKind.INSECURE, forged if i == first else real, 0)
        return True

    def on_receive(self, node: int, delivery: Delivery) -> bool:
        if node not in self._relay:
            return False
        packet = decode_packet(delivery.frame)
        position = self._relay.index(node)
        expected_prior = self._relay[:position]
        if packet.signers[1:] != expected_prior or delivery.kind != ChannelKind.INSECURE:
            return True
        if self._payload is None:
            self._payload = packet.message
        if packet.message != self._payload:
            return True
        # colluders check the commander's part for the first relay with the shared view
        if not self.ctx.verify(packet, 0, self._relay[0]):
            return True

        matrix = self.ctx.sign(packet.message, node, self.ctx.chain_recipients(node, packet.signers[1:]), packet.signers)
        extended = packet.extend(matrix)
        nxt = self._relay[position + 1] if position + 1 < len(self._relay) else self._target()
        self.ctx.send(node, nxt, ChannelKind.INSECURE, extended, delivery.round + 1)
        return True


class ForgeStrategy(AdversaryStrategy):
    """
    Controlled relays swap in a substitute message while keeping every
    upstream signature, then sign the substitute themselves.
    """

    name = "forge"

    def _substitute(self, original: BitString) -> BitString:
        given = self.params.get("substitute")
        if given is not None:
            return BitString.from_hex(given)
        while True:
            candidate = BitString.random(self.ctx.rng, original.nbits)
            if candidate != original:
                return candidate

    def on_forward(self, node: int, action: Action, round_no: int) -> Optional[List[Send]]:
        if action.kind == ActionKind.NONE:
            return None
        delivery = self.ctx.last_delivery(node)
        if delivery is None:
            return None
        substitute = self._substitute(action.packet.message)
        forged = decode_packet(forge_attempt(self.ctx, delivery.frame, substitute))

        if action.kind == ActionKind.AUTH_FORWARD:
            frame = encode_packet(forged)
            kind = ChannelKind.AUTHENTICATED
        else:
            recipients = self.ctx.chain_recipients(node, forged.signers)
            matrix = self.ctx.sign(substitute, node, recipients, forged.signers)
            frame = encode_packet(forged.extend(matrix))
            kind = ChannelKind.INSECURE
        return [Send(node, t, kind, frame, round_no + 1) for t in sorted(action.targets)]


class SelectiveSignStrategy(AdversaryStrategy):
    """
    A controlled commander whose partial signatures are valid only for
    ``valid_for`` (default: the lowest honest lieutenant); everyone else
    gets random bits in place of a partial signature.
    """

    name = "selective-sign"

    def on_issue(self, command: BitString) -> bool:
        lieutenants = self.ctx.params.lieutenants
        valid_for = self.params.get("valid_for") or [self.ctx.honest_lieutenants[0]]
        valid_for = sorted(set(int(v) for v in valid_for))
        genuine = self.ctx.sign(command, COMMANDER, valid_for)
        l = self.ctx.params.l
        parts = {p.recipient: p for p in genuine.parts}
        for r in lieutenants:
            if r not in parts:
                parts[r] = PartialSignature(
                    r, BitString.random(self.ctx.rng, l), BitString.random(self.ctx.rng, l)
                )
        matrix = SignatureMatrix(COMMANDER, tuple(parts[r] for r in lieutenants))
        packet = SignedPacket(command, (matrix,))
        for i in lieutenants:
            self.ctx.send(COMMANDER, i, ChannelKind.INSECURE, packet, 0)
        return True


STRATEGIES: Dict[str, Type[AdversaryStrategy]] = {
    cls.name: cls
    for cls in (
        AdversaryStrategy,
        EquivocateStrategy,
        EquivocateDropStrategy,
        DropStrategy,
        ReplayStrategy,
        TamperInsecureStrategy,
        ColludeStrategy,
        ForgeStrategy,
        SelectiveSignStrategy,
    )
}

DEFAULT_FAMILY: Tuple[str, ...] = ("equivocate", "drop", "replay", "tamper-insecure", "collude")


def build_strategy(name: str, controlled: Iterable[int], params: Optional[dict] = None) -> AdversaryStrategy:
    """Instantiate a registered strategy by name."""
    try:
        cls = STRATEGIES[name]
    except KeyError:
        raise InvalidParamsError(
            f"unknown strategy {name!r}; known: {', '.join(sorted(STRATEGIES))}"
        ) from None
    return cls(controlled, **(params or {}))
