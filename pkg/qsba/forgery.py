"""
QSBA Forgery Monte Carlo

Estimates how often the optimal substitution attack succeeds: the adversary
keeps every encrypted signature field of an observed frame and swaps in a
different message of the same length. Success is decided by ordinary
verification at the recipient.

Two modes:

- ``full``: every trial signs a fresh random message under fresh pools,
  substitutes a fresh random message and runs the real verifier.
- ``sparse``: for long messages the substitute differs from the original
  only inside a window of ``sparse_window`` bits. By linearity of the
  division hash the forgery passes exactly when the hash of the difference
  vanishes, so each trial draws a fresh key and hashes only the window. One
  end-to-end trial on the full-length message is always included.
"""

import math
from typing import Optional

from pydantic import BaseModel, Field

from .errors import PreconditionError
from .gf2hash import BitString, division_hash_shifted, gen_hash_key
from .keystore import KeyStore, PoolCapacities, Seed, derive_rng
from .logging_utils import get_logger
from .qsm import SignedPacket, decode_packet, encode_packet, qsm_sign, qsm_verify
from .simnet import forge_attempt

logger = get_logger("qsba.forgery")

SIGNER, RECIPIENT = 0, 1


class ForgeryReport(BaseModel):
    """Outcome of a forgery Monte Carlo run."""

    mode: str
    l: int
    message_bits: int
    trials: int
    successes: int
    rate: float
    bound: float = Field(description="(L + l) / 2^l")
    sigma: float = Field(description="Binomial standard deviation of the rate at the bound")
    sparse_window: Optional[int] = None
    seed: int = 0

    @property
    def within_bound(self) -> bool:
        return self.rate <= self.bound + 3 * self.sigma


def forgery_bound(message_bits: int, l: int) -> float:
    """Success probability bound ``(L + l) / 2^l`` of a single substitution."""
    return min(1.0, (message_bits + l) / 2.0**l)


def _random_other(rng, original: BitString) -> BitString:
    while True:
        candidate = BitString.random(rng, original.nbits)
        if candidate != original:
            return candidate


def forge_once(message: BitString, substitute: BitString, l: int, seed: Seed) -> bool:
    """
    Sign ``message`` for one recipient, substitute, and verify.

    Returns:
        True when the recipient accepts the substituted frame
    """
    capacity = 2 * l
    store = KeyStore(2, seed, PoolCapacities(capacity, capacity))
    matrix = qsm_sign(message, SIGNER, [RECIPIENT], l, store, None, derive_rng(seed, 1))
    frame = encode_packet(SignedPacket(message, (matrix,)))
    forged = decode_packet(forge_attempt(None, frame, substitute))
    return qsm_verify(forged, 0, RECIPIENT, store, l)


def forgery_monte_carlo(
    l: int,
    message_bits: int,
    trials: int,
    seed: int = 0,
    sparse_window: Optional[int] = None,
) -> ForgeryReport:
    """
    Run ``trials`` independent substitution attempts.

    Args:
        l: Tag length in bits
        message_bits: Length of the signed message
        trials: Number of attempts
        seed: Base seed; trial ``i`` uses the derived seed ``(seed, i)``
        sparse_window: Switch to sparse mode with this window width

    Returns:
        The aggregated report

    Raises:
        PreconditionError: On non-positive sizes or a window wider than the message
    """
    if trials < 1 or message_bits < 1:
        raise PreconditionError("forgery runs need at least one trial and one message bit")
    if sparse_window is not None and not 1 <= sparse_window <= message_bits:
        raise PreconditionError(f"sparse window must lie in [1, {message_bits}]")

    successes = 0
    if sparse_window is None:
        for i in range(trials):
            rng = derive_rng((seed, i), 0)
            message = BitString.random(rng, message_bits)
            if forge_once(message, _random_other(rng, message), l, (seed, i)):
                successes += 1
    else:
        rng = derive_rng(seed, 0)
        message = BitString.random(rng, message_bits)
        if forge_once(message, _random_other(rng, message), l, (seed, 0)):
            successes += 1
        for i in range(1, trials):
            rng = derive_rng((seed, i), 0)
            key = gen_hash_key(l, rng)
            difference = 0
            while difference == 0:
                difference = BitString.random(rng, sparse_window).to_int()
            shift = int(rng.integers(0, message_bits - sparse_window + 1))
            if division_hash_shifted(key, difference, shift).to_int() == 0:
                successes += 1

    bound = forgery_bound(message_bits, l)
    report = ForgeryReport(
        mode="full" if sparse_window is None else "sparse",
        l=l,
        message_bits=message_bits,
        trials=trials,
        successes=successes,
        rate=successes / trials,
        bound=bound,
        sigma=math.sqrt(bound * (1 - bound) / trials),
        sparse_window=sparse_window,
        seed=seed,
    )
    logger.info("forgery_monte_carlo", **report.model_dump())
    return report
