"""
QSBA Network Simulator Module

A deterministic round-based network with two channel kinds: insecure
classical links and classical authenticated links. An optional interceptor
(the adversary) sees every send incident to a node it controls and may
drop it, or rewrite it if the channel is insecure. Authenticated payloads
are delivered verbatim or not at all.

Deliveries within a round are ordered by (sender, enqueue order), so a run
is reproducible from its seed.
"""

import json
import zlib
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, FrozenSet, Iterator, List, Optional, Protocol, Tuple, Union

from pydantic import BaseModel

from .errors import AuthTamperForbiddenError, NoSuchLinkError, PreconditionError
from .gf2hash import BitString
from .ledger import ResourceLedger
from .logging_utils import get_logger
from .qsm import decode_packet, encode_packet

logger = get_logger("qsba.simnet")

# Same-round injection waves allowed before a round is cut off.
MAX_WAVES_PER_ROUND = 64


class ChannelKind(str, Enum):
    INSECURE = "insecure"
    AUTHENTICATED = "authenticated"


@dataclass(frozen=True)
class Send:
    sender: int
    receiver: int
    kind: ChannelKind
    frame: bytes
    round: int

    def with_frame(self, frame: bytes) -> "Send":
        return replace(self, frame=frame)


@dataclass(frozen=True)
class Delivery:
    round: int
    sender: int
    receiver: int
    kind: ChannelKind
    frame: bytes
    seq: int


def frame_digest(frame: bytes) -> str:
    """Non-cryptographic 64-bit digest of a frame, as 16 hex digits."""
    return f"{(zlib.crc32(frame) << 32) | zlib.adler32(frame):016x}"


class TranscriptEvent(BaseModel):
    round: int
    sender: int
    receiver: int
    channel: str
    digest: str
    action: str
    note: Optional[str] = None


class Transcript:
    """Totally ordered event log of one run."""

    def __init__(self):
        self.events: List[TranscriptEvent] = []

    def record(self, **fields) -> TranscriptEvent:
        event = TranscriptEvent(**fields)
        self.events.append(event)
        return event

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[TranscriptEvent]:
        return iter(self.events)

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps(e.model_dump(), sort_keys=True, separators=(",", ":")) + "\n"
            for e in self.events
        )

    def write(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_jsonl(), encoding="utf-8")
        return path


class Interceptor(Protocol):
    controlled: FrozenSet[int]

    def on_transit(self, send: Send) -> Optional[Send]: ...


Handler = Callable[[Delivery], Tuple[str, Optional[str]]]


class Network:
    """
    Synchronous round scheduler for one simulation.

    One instance per run; nothing is shared between instances.
    """

    def __init__(
        self,
        n: int,
        ledger: ResourceLedger,
        transcript: Optional[Transcript] = None,
        interceptor: Optional[Interceptor] = None,
    ):
        self.n = n
        self.ledger = ledger
        self.transcript = transcript if transcript is not None else Transcript()
        self.interceptor = interceptor
        self.current_round = 0
        self._pending: Dict[int, List[Tuple[int, Send]]] = {}
        self._seq = 0

    def schedule_send(
        self, sender: int, receiver: int, kind: ChannelKind, frame: bytes, round_no: int
    ) -> None:
        """
        Enqueue a frame for delivery in ``round_no``.

        Raises:
            NoSuchLinkError: If the endpoints do not name a link
            PreconditionError: If ``round_no`` is already over
            AuthTamperForbiddenError: If the interceptor rewrites an
                authenticated payload
        """
        if not (0 <= sender < self.n and 0 <= receiver < self.n) or sender == receiver:
            raise NoSuchLinkError(f"no {kind.value} link {sender}->{receiver}")
        if round_no < self.current_round:
            raise PreconditionError(
                f"cannot schedule for round {round_no} during round {self.current_round}"
            )
        send = Send(sender, receiver, ChannelKind(kind), frame, round_no)

        if self.interceptor is not None and (
            sender in self.interceptor.controlled or receiver in self.interceptor.controlled
        ):
            out = self.interceptor.on_transit(send)
            if out is None:
                self.transcript.record(
                    round=round_no,
                    sender=sender,
                    receiver=receiver,
                    channel=send.kind.value,
                    digest=frame_digest(frame),
                    action="dropped-in-transit",
                )
                return
            if out != send:
                if send.kind == ChannelKind.AUTHENTICATED:
                    logger.error("auth_tamper_attempt", sender=sender, receiver=receiver)
                    raise AuthTamperForbiddenError(
                        f"authenticated payload {sender}->{receiver} cannot be modified"
                    )
                if out.with_frame(frame) != send:
                    raise PreconditionError("transit hooks may only rewrite the frame")
                self.transcript.record(
                    round=round_no,
                    sender=sender,
                    receiver=receiver,
                    channel=send.kind.value,
                    digest=frame_digest(out.frame),
                    action="tampered-in-transit",
                    note=frame_digest(frame),
                )
                send = out

        self._pending.setdefault(round_no, []).append((self._seq, send))
        self._seq += 1

    def run(self, handler: Handler, last_round: int) -> None:
        """Deliver rounds ``0 .. last_round``; later sends stay undelivered."""
        for r in range(last_round + 1):
            self.current_round = r
            waves = 0
            while self._pending.get(r):
                waves += 1
                if waves > MAX_WAVES_PER_ROUND:
                    logger.warning("round_cut_off", round=r, pending=len(self._pending[r]))
                    del self._pending[r]
                    break
                batch = sorted(self._pending.pop(r), key=lambda item: (item[1].sender, item[0]))
                for seq, send in batch:
                    self._deliver(handler, seq, send)

        for r in sorted(k for k in self._pending if k > last_round):
            for seq, send in self._pending.pop(r):
                self.transcript.record(
                    round=r,
                    sender=send.sender,
                    receiver=send.receiver,
                    channel=send.kind.value,
                    digest=frame_digest(send.frame),
                    action="undelivered",
                )

    def _deliver(self, handler: Handler, seq: int, send: Send) -> None:
        if send.kind == ChannelKind.AUTHENTICATED:
            self.ledger.record_auth_use(send.sender)
        delivery = Delivery(send.round, send.sender, send.receiver, send.kind, send.frame, seq)
        action, note = handler(delivery)
        self.transcript.record(
            round=send.round,
            sender=send.sender,
            receiver=send.receiver,
            channel=send.kind.value,
            digest=frame_digest(send.frame),
            action=action,
            note=note,
        )


class Observer(Protocol):
    def has_observed(self, frame: bytes) -> bool: ...


def forge_attempt(adv: Optional[Observer], observed_frame: bytes, substitute_msg: BitString) -> bytes:
    """
    Replace the message of an observed frame, keeping every signature field.

    Args:
        adv: The observing adversary context, or None outside a run
        observed_frame: Frame seen on an insecure channel
        substitute_msg: The message to substitute

    Returns:
        The forged frame; whether it passes is up to verification
    """
    if adv is not None and not adv.has_observed(observed_frame):
        raise PreconditionError("forgery needs a frame the adversary observed")
    packet = decode_packet(observed_frame)
    return encode_packet(packet.with_message(substitute_msg))
