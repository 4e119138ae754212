"""
QSBA Agreement Protocol Module

The commander-lieutenant state machine built on signed messages.

The commander signs its command for every lieutenant. A lieutenant that
accepts a packet carrying ``k`` lieutenant signatures records the message
and, while ``k < m - 1``, signs and forwards it to every lieutenant not yet
in the chain; at ``k = m - 1`` it relays the packet verbatim over the
authenticated channel instead. After ``m + 1`` synchronous rounds every
honest lieutenant decides from its message set.

Key features:
- Protocol parameters with validated bounds
- Chain-structure, round and sender checks before any signature is trusted
- Verification of every chain entry addressed to the receiver
- Message-keyed or sequence-keyed duplicate suppression
- A full simulated run with interactive-consistency verdicts
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

import numpy as np

from .errors import (
    InvalidChainError,
    InvalidParamsError,
    KeyExhaustedError,
    MalformedFrameError,
    MalformedSignatureError,
    NoPartialSignatureError,
)
from .gf2hash import BitString
from .keystore import KeyStore, PoolCapacities, Seed, derive_rng
from .ledger import AuthCostModel, ResourceLedger
from .logging_utils import get_logger
from .qsm import KeyAccess, SignedPacket, check_chain, decode_packet, encode_packet, qsm_sign, qsm_verify
from .simnet import ChannelKind, Delivery, Network, Send, Transcript, frame_digest

logger = get_logger("qsba.protocol")

COMMANDER = 0


class Role(str, Enum):
    COMMANDER = "commander"
    LIEUTENANT = "lieutenant"


class DedupMode(str, Enum):
    """What a lieutenant treats as "already received"."""

    MESSAGE = "message"
    SEQUENCE = "sequence"


class ActionKind(str, Enum):
    SIGN_AND_FORWARD = "sign-and-forward"
    AUTH_FORWARD = "auth-forward"
    DECIDE = "decide"
    NONE = "none"


class RunStatus(str, Enum):
    COMPLETED = "completed"
    ABORTED_KEY_EXHAUSTED = "aborted-key-exhausted"


@dataclass(frozen=True)
class ProtocolParams:
    """Network size, fault bound, tag length and fallback command."""

    n: int
    m: int
    l: int
    default_command: BitString
    dedup: DedupMode = DedupMode.MESSAGE

    def __post_init__(self):
        if self.n < 3:
            raise InvalidParamsError(f"need n >= 3 nodes, got {self.n}")
        if not 1 <= self.m <= self.n - 2:
            raise InvalidParamsError(f"need 1 <= m <= n-2, got m={self.m} for n={self.n}")
        if self.l < 2:
            raise InvalidParamsError(f"need tag length l >= 2, got {self.l}")
        if self.n > 255:
            raise InvalidParamsError("node ids must fit one frame byte")
        object.__setattr__(self, "dedup", DedupMode(self.dedup))

    @property
    def lieutenants(self) -> Tuple[int, ...]:
        return tuple(range(1, self.n))


@dataclass
class NodeState:
    """A lieutenant's view: its message set and round bookkeeping."""

    id: int
    role: Role = Role.LIEUTENANT
    V: Set[BitString] = field(default_factory=set)
    received_direct: bool = False
    round: int = 0
    seen: Set[object] = field(default_factory=set)
    diagnostics: List[str] = field(default_factory=list)


@dataclass(frozen=True)
class Action:
    kind: ActionKind
    targets: FrozenSet[int] = frozenset()
    packet: Optional[SignedPacket] = None
    reason: Optional[str] = None


def _drop(state: NodeState, reason: str) -> Action:
    state.diagnostics.append(reason)
    return Action(ActionKind.NONE, reason=reason)


def commander_issue(
    M: BitString,
    params: ProtocolParams,
    keystore: KeyAccess,
    ledger: Optional[ResourceLedger],
    rng: np.random.Generator,
) -> List[SignedPacket]:
    """
    Sign the command for all lieutenants.

    Returns:
        One packet per lieutenant, in lieutenant order, each carrying the
        same message and the commander's signature matrix
    """
    matrix = qsm_sign(M, COMMANDER, params.lieutenants, params.l, keystore, ledger, rng)
    packet = SignedPacket(M, (matrix,))
    logger.info("command_issued", n=params.n, m=params.m, message_bits=M.nbits)
    return [packet for _ in params.lieutenants]


def check_protocol_chain(packet: SignedPacket, params: ProtocolParams, receiver: int) -> None:
    """
    Enforce the chain shape the forwarding rules can produce.

    The first matrix is the commander's over every lieutenant; each later
    matrix is signed by a new lieutenant over the lieutenants not yet in the
    chain; at most ``m - 1`` lieutenants sign; the receiver is not a signer.

    Raises:
        InvalidChainError: If the chain breaks any of these rules
    """
    check_chain(packet)
    head = packet.chain[0]
    if head.signer != COMMANDER or head.recipients != params.lieutenants:
        raise InvalidChainError("chain does not start with the commander's full matrix")
    if packet.depth > params.m - 1:
        raise InvalidChainError(f"{packet.depth} lieutenant signatures exceed m-1={params.m - 1}")
    prior: List[int] = []
    for matrix in packet.chain[1:]:
        if matrix.signer not in params.lieutenants or matrix.signer in prior:
            raise InvalidChainError(f"unexpected signer {matrix.signer}")
        expected = tuple(
            i for i in params.lieutenants if i not in prior and i != matrix.signer
        )
        if matrix.recipients != expected:
            raise InvalidChainError(f"matrix of {matrix.signer} has the wrong recipient set")
        prior.append(matrix.signer)
    if receiver in packet.signers:
        raise InvalidChainError(f"node {receiver} already signed this chain")


def _dedup_key(packet: SignedPacket, params: ProtocolParams) -> object:
    if params.dedup == DedupMode.SEQUENCE:
        return (packet.message, packet.signers)
    return packet.message


def lieutenant_on_receive(
    state: NodeState,
    packet: SignedPacket,
    params: ProtocolParams,
    keystore: KeyAccess,
    ledger: Optional[ResourceLedger],
    rng: np.random.Generator,
    *,
    sender: int,
    channel: ChannelKind = ChannelKind.INSECURE,
    round_no: Optional[int] = None,
) -> Action:
    """
    Process one delivered packet at a lieutenant.

    Args:
        state: The receiving lieutenant (mutated)
        packet: Decoded packet
        params: Protocol parameters
        keystore: The receiver's key access
        ledger: Counters charged when forwarding requires a signature
        rng: Source for hash keys of the receiver's own signatures
        sender: Delivering node
        channel: Channel the packet arrived on
        round_no: Delivery round, defaults to ``state.round``

    Returns:
        The action to take; ``NONE`` carries the drop reason
    """
    r = state.round if round_no is None else round_no
    me = state.id

    try:
        check_protocol_chain(packet, params, me)
    except InvalidChainError:
        return _drop(state, "invalid-chain")

    k = packet.depth
    if channel == ChannelKind.AUTHENTICATED:
        if k != params.m - 1 or r != params.m:
            return _drop(state, "out-of-round")
        if sender == COMMANDER or sender in packet.signers:
            return _drop(state, "unexpected-sender")
    else:
        if r != k:
            return _drop(state, "out-of-round")
        if sender != packet.signers[-1]:
            return _drop(state, "unexpected-sender")
        if k == 0 and state.received_direct:
            return _drop(state, "duplicate-direct")

    try:
        for idx, matrix in enumerate(packet.chain):
            if me in matrix.recipients and not qsm_verify(packet, idx, me, keystore, params.l):
                return _drop(state, "verification-failed")
    except (MalformedSignatureError, NoPartialSignatureError):
        return _drop(state, "malformed-signature")

    key = _dedup_key(packet, params)
    direct = k == 0 and channel == ChannelKind.INSECURE
    if direct:
        state.received_direct = True
    elif key in state.seen:
        return Action(ActionKind.NONE, reason="duplicate")
    state.seen.add(key)
    state.V.add(packet.message)

    if channel == ChannelKind.AUTHENTICATED:
        return Action(ActionKind.NONE, reason="recorded")

    targets = frozenset(
        i for i in params.lieutenants if i != me and i not in packet.signers
    )
    if k == params.m - 1:
        return Action(ActionKind.AUTH_FORWARD, targets, packet)

    matrix = qsm_sign(
        packet.message, me, targets, params.l, keystore, ledger, rng, prior=packet.signers
    )
    return Action(ActionKind.SIGN_AND_FORWARD, targets, packet.extend(matrix))


def decide(V: Set[BitString], params: ProtocolParams) -> BitString:
    """The sole element of a singleton ``V``, otherwise the default command."""
    if len(V) == 1:
        return next(iter(V))
    return params.default_command


def action_sends(node: int, action: Action, round_no: int) -> List[Send]:
    """Frames an honest node emits for ``action``, due next round."""
    if action.kind == ActionKind.SIGN_AND_FORWARD:
        kind = ChannelKind.INSECURE
    elif action.kind == ActionKind.AUTH_FORWARD:
        kind = ChannelKind.AUTHENTICATED
    else:
        return []
    frame = encode_packet(action.packet)
    return [Send(node, t, kind, frame, round_no + 1) for t in sorted(action.targets)]


@dataclass
class ProtocolOutcome:
    """Everything a run produced."""

    params: ProtocolParams
    command: BitString
    status: RunStatus
    controlled: FrozenSet[int]
    ledger: ResourceLedger
    transcript: Transcript
    decisions: Dict[int, BitString] = field(default_factory=dict)
    message_sets: Dict[int, FrozenSet[BitString]] = field(default_factory=dict)
    condition_I: Optional[bool] = None
    condition_II: Optional[bool] = None
    error: Optional[dict] = None

    @property
    def commander_honest(self) -> bool:
        return COMMANDER not in self.controlled

    @property
    def honest_lieutenants(self) -> Tuple[int, ...]:
        return tuple(i for i in self.params.lieutenants if i not in self.controlled)

    @property
    def ok(self) -> bool:
        return self.status == RunStatus.COMPLETED and bool(self.condition_I) and bool(self.condition_II)


def node_rng(seed: Seed, node: int) -> np.random.Generator:
    return derive_rng(seed, 7, 7, node)


def adversary_rng(seed: Seed) -> np.random.Generator:
    return derive_rng(seed, 9, 9, 9)


def run_protocol(
    params: ProtocolParams,
    command: BitString,
    *,
    seed: Seed = 0,
    pools: Optional[PoolCapacities] = None,
    adversary=None,
    auth_cost: AuthCostModel = AuthCostModel.AXIOMATIC,
) -> ProtocolOutcome:
    """
    Execute one agreement instance over the simulated network.

    Rounds ``0 .. m`` run synchronously; afterwards every honest lieutenant
    decides. Condition I holds when all honest lieutenants decide alike;
    condition II holds when, with an honest commander, they all decide the
    commander's command (vacuously true otherwise).

    Args:
        params: Protocol parameters
        command: The commander's command
        seed: Seed for pool material and every party's randomness
        pools: Pool capacities per link class
        adversary: Optional ``AdversaryStrategy`` controlling some nodes
        auth_cost: Costing of authenticated-channel uses

    Returns:
        The outcome; on key exhaustion the status is
        ``aborted-key-exhausted`` and no verdicts are given
    """
    from .adversary import AdversaryContext

    ledger = ResourceLedger(auth_cost=auth_cost)
    store = KeyStore(params.n, seed, pools, ledger)
    transcript = Transcript()
    controlled = frozenset(adversary.controlled) if adversary is not None else frozenset()
    network = Network(params.n, ledger, transcript, interceptor=adversary)

    states = {i: NodeState(i) for i in params.lieutenants}
    rngs = {i: node_rng(seed, i) for i in range(params.n)}
    views = {i: store.view({i}) for i in range(params.n)}

    ctx = None
    if adversary is not None:
        ctx = AdversaryContext(params, network, store.view(controlled), ledger, adversary_rng(seed), command)
        adversary.bind(ctx)

    def handle(delivery: Delivery) -> Tuple[str, Optional[str]]:
        node = delivery.receiver
        state = states.get(node)
        if state is None:
            return "none", "commander-inbound"
        state.round = delivery.round

        if node in controlled:
            ctx.observe(delivery)
            if adversary.on_receive(node, delivery):
                return "adversary", None

        try:
            packet = decode_packet(delivery.frame)
        except MalformedFrameError:
            state.diagnostics.append("malformed-frame")
            return "none", "malformed-frame"

        action = lieutenant_on_receive(
            state,
            packet,
            params,
            views[node],
            ledger,
            rngs[node],
            sender=delivery.sender,
            channel=delivery.kind,
            round_no=delivery.round,
        )

        sends = None
        if node in controlled:
            sends = adversary.on_forward(node, action, delivery.round)
        if sends is None:
            sends = action_sends(node, action, delivery.round)
        for send in sends:
            if send.sender != node:
                raise InvalidChainError(f"node {node} cannot send as {send.sender}")
            network.schedule_send(send.sender, send.receiver, send.kind, send.frame, send.round)
        return action.kind.value, action.reason

    outcome = ProtocolOutcome(params, command, RunStatus.COMPLETED, controlled, ledger, transcript)
    try:
        if not (COMMANDER in controlled and adversary.on_issue(command)):
            packets = commander_issue(command, params, views[COMMANDER], ledger, rngs[COMMANDER])
            for lieutenant, packet in zip(params.lieutenants, packets):
                network.schedule_send(COMMANDER, lieutenant, ChannelKind.INSECURE, encode_packet(packet), 0)
        network.run(handle, last_round=params.m)
    except KeyExhaustedError as e:
        logger.warning("run_aborted", **e.to_dict())
        outcome.status = RunStatus.ABORTED_KEY_EXHAUSTED
        outcome.error = e.to_dict()
        return outcome

    for i in outcome.honest_lieutenants:
        V = states[i].V
        decision = decide(V, params)
        outcome.decisions[i] = decision
        outcome.message_sets[i] = frozenset(V)
        transcript.record(
            round=params.m,
            sender=i,
            receiver=i,
            channel="local",
            digest=frame_digest(decision.data),
            action=ActionKind.DECIDE.value,
            note=f"|V|={len(V)}",
        )

    decided = set(outcome.decisions.values())
    outcome.condition_I = len(decided) <= 1
    outcome.condition_II = (not outcome.commander_honest) or decided <= {command}
    logger.info(
        "run_completed",
        n=params.n,
        m=params.m,
        controlled=sorted(controlled),
        condition_I=outcome.condition_I,
        condition_II=outcome.condition_II,
        hash_ops=ledger.hash_ops,
        auth_uses=ledger.auth_uses,
    )
    return outcome
