"""
QSBA - Byzantine agreement over information-theoretically signed messages.

A simulation toolkit: GF(2) division hashing, pairwise one-time-pad key
pools, multiparty signed messages, the commander-lieutenant agreement
protocol on a deterministic round-based network with scripted Byzantine
adversaries, three-party baselines and resource metrics.
"""

from .errors import QSBAError
from .gf2hash import BitString, HashKey, axu_epsilon, division_hash, gen_hash_key, is_irreducible
from .keystore import KeyStore, LinkId, PoolCapacities, otp
from .ledger import AuthCostModel, ResourceLedger
from .protocol import DedupMode, ProtocolOutcome, ProtocolParams, decide, run_protocol
from .qsm import SignedPacket, decode_packet, encode_packet, qsm_sign, qsm_verify

__version__ = "1.0.0"

__all__ = [
    "AuthCostModel",
    "BitString",
    "DedupMode",
    "HashKey",
    "KeyStore",
    "LinkId",
    "PoolCapacities",
    "ProtocolOutcome",
    "ProtocolParams",
    "QSBAError",
    "ResourceLedger",
    "SignedPacket",
    "axu_epsilon",
    "decide",
    "decode_packet",
    "division_hash",
    "encode_packet",
    "gen_hash_key",
    "is_irreducible",
    "otp",
    "qsm_sign",
    "qsm_verify",
    "run_protocol",
]
