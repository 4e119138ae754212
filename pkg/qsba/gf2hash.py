"""
QSBA GF(2) Hashing Module

Polynomial arithmetic over GF(2) and the keyed division hash used by every
partial signature.

Polynomials are plain non-negative integers: bit ``k`` of the integer is the
coefficient of ``x^k``. Bit strings are read MSB-first, so the string
``b0 b1 ... b(k-1)`` denotes ``sum(b_i * x^(k-1-i))``.

Key features:
- Bit strings with an explicit bit length (``BitString``)
- Reduction, multiplication and exponentiation modulo a polynomial
- Irreducibility testing (trial division for small degrees, a squaring
  chain for tag-sized degrees)
- Rejection-sampled hash keys and the division hash ``M(x)*x^l mod p(x)``
- The advertised collision bound and the exact small-scale bound
"""

import struct
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Tuple

import numpy as np

from .errors import (
    DegenerateDegreeError,
    MalformedSignatureError,
    PreconditionError,
    SamplingExhaustedError,
    ZeroModulusError,
)
from .logging_utils import get_logger

logger = get_logger("qsba.gf2hash")

GF2Poly = int

# Messages at or below this many bits are reduced bit by bit.
_SHORT_MESSAGE_BITS = 64
_TRIAL_DIVISION_MAX_DEGREE = 16


@dataclass(frozen=True)
class BitString:
    """
    An ordered sequence of bits with an explicit length.

    Bits are packed MSB-first into ``data``; unused low bits of the final
    byte are always zero so equal bit strings compare and hash equal.
    """

    data: bytes
    nbits: int

    def __post_init__(self):
        if self.nbits < 0:
            raise PreconditionError("bit length must be non-negative")
        if len(self.data) != (self.nbits + 7) // 8:
            raise PreconditionError(
                f"{len(self.data)} bytes cannot hold exactly {self.nbits} bits"
            )
        pad = 8 * len(self.data) - self.nbits
        if pad and self.data[-1] & ((1 << pad) - 1):
            raise PreconditionError("padding bits must be zero")

    # ---------- Constructors ----------
    @classmethod
    def from_str(cls, bits: str) -> "BitString":
        """Build from a string of '0'/'1' characters."""
        bits = bits.strip()
        if any(c not in "01" for c in bits):
            raise PreconditionError(f"not a bit string: {bits!r}")
        return cls.from_int(int(bits, 2) if bits else 0, len(bits))

    @classmethod
    def from_int(cls, value: int, nbits: int) -> "BitString":
        """Build from the integer whose binary expansion holds the bits."""
        if value < 0 or value >> nbits:
            raise PreconditionError(f"value does not fit in {nbits} bits")
        nbytes = (nbits + 7) // 8
        pad = 8 * nbytes - nbits
        return cls((value << pad).to_bytes(nbytes, "big"), nbits)

    @classmethod
    def from_bytes(cls, data: bytes) -> "BitString":
        return cls(bytes(data), 8 * len(data))

    @classmethod
    def from_hex(cls, text: str) -> "BitString":
        return cls.from_bytes(bytes.fromhex(text))

    @classmethod
    def zeros(cls, nbits: int) -> "BitString":
        return cls(bytes((nbits + 7) // 8), nbits)

    @classmethod
    def random(cls, rng: np.random.Generator, nbits: int) -> "BitString":
        """Uniformly random bits drawn from ``rng``."""
        nbytes = (nbits + 7) // 8
        value = int.from_bytes(rng.bytes(nbytes), "big") >> (8 * nbytes - nbits)
        return cls.from_int(value, nbits)

    # ---------- Views ----------
    def __len__(self) -> int:
        return self.nbits

    def to_int(self) -> int:
        pad = 8 * len(self.data) - self.nbits
        return int.from_bytes(self.data, "big") >> pad

    def hex(self) -> str:
        return self.data.hex()

    def bit(self, index: int) -> int:
        if not 0 <= index < self.nbits:
            raise IndexError(index)
        return (self.data[index // 8] >> (7 - index % 8)) & 1

    def __str__(self) -> str:
        return format(self.to_int(), f"0{self.nbits}b") if self.nbits else ""

    def __repr__(self) -> str:
        if self.nbits <= 64:
            return f"BitString('{self}')"
        return f"BitString(<{self.nbits} bits>)"

    # ---------- Operations ----------
    def __xor__(self, other: "BitString") -> "BitString":
        if not isinstance(other, BitString):
            return NotImplemented
        if other.nbits != self.nbits:
            raise PreconditionError(
                f"cannot XOR {self.nbits}-bit and {other.nbits}-bit strings"
            )
        return BitString(
            (int.from_bytes(self.data, "big") ^ int.from_bytes(other.data, "big"))
            .to_bytes(len(self.data), "big"),
            self.nbits,
        )

    def flip(self, index: int) -> "BitString":
        """Return a copy with bit ``index`` (0 = most significant) inverted."""
        if not 0 <= index < self.nbits:
            raise IndexError(index)
        buf = bytearray(self.data)
        buf[index // 8] ^= 0x80 >> (index % 8)
        return BitString(bytes(buf), self.nbits)

    def concat(self, other: "BitString") -> "BitString":
        return BitString.from_int(
            (self.to_int() << other.nbits) | other.to_int(), self.nbits + other.nbits
        )


# ---------- Polynomial arithmetic ----------
def degree(a: GF2Poly) -> int:
    """Degree of ``a``; the zero polynomial has degree -1."""
    return a.bit_length() - 1


def poly_mod(a: GF2Poly, p: GF2Poly) -> GF2Poly:
    """
    Reduce ``a`` modulo ``p`` over GF(2).

    Raises:
        ZeroModulusError: If ``p`` is the zero polynomial
    """
    if p == 0:
        raise ZeroModulusError("reduction modulo the zero polynomial")
    dp = p.bit_length()
    while a.bit_length() >= dp:
        a ^= p << (a.bit_length() - dp)
    return a


def poly_mul(a: GF2Poly, b: GF2Poly) -> GF2Poly:
    """Carry-less product of ``a`` and ``b``."""
    if a < b:
        a, b = b, a
    c = 0
    while b:
        if b & 1:
            c ^= a
        a <<= 1
        b >>= 1
    return c


def poly_mulmod(a: GF2Poly, b: GF2Poly, p: GF2Poly) -> GF2Poly:
    return poly_mod(poly_mul(a, b), p)


def poly_gcd(a: GF2Poly, b: GF2Poly) -> GF2Poly:
    while b:
        a, b = b, poly_mod(a, b)
    return a


def x_power_mod(exponent: int, p: GF2Poly) -> GF2Poly:
    """``x^exponent mod p`` by square-and-multiply."""
    result = poly_mod(1, p)
    base = poly_mod(2, p)
    while exponent:
        if exponent & 1:
            result = poly_mulmod(result, base, p)
        base = poly_mulmod(base, base, p)
        exponent >>= 1
    return result


def poly_from_bits(bits: BitString) -> GF2Poly:
    return bits.to_int()


def poly_to_bits(a: GF2Poly, width: int) -> BitString:
    return BitString.from_int(a, width)


# ---------- Irreducibility ----------
def is_irreducible(p: GF2Poly) -> bool:
    """
    Test ``p`` for irreducibility over GF(2).

    Degrees up to 16 use trial division by the irreducible polynomials of
    degree at most half of ``deg(p)``; larger degrees use the squaring chain
    ``gcd(x^(2^i) - x, p) == 1`` for ``i = 1 .. deg(p)/2``.

    Raises:
        DegenerateDegreeError: If ``p`` is constant
    """
    d = degree(p)
    if d < 1:
        raise DegenerateDegreeError(f"constant polynomial {p:#x} has no degree")
    if d == 1:
        return True
    if d <= _TRIAL_DIVISION_MAX_DEGREE:
        return _irreducible_by_trial_division(p)
    return _irreducible_by_squaring(p)


@lru_cache(maxsize=1 << 17)
def _irreducible_by_trial_division(p: GF2Poly) -> bool:
    d = degree(p)
    for k in range(1, d // 2 + 1):
        for q in irreducible_polynomials(k):
            if poly_mod(p, q) == 0:
                return False
    return True


def _irreducible_by_squaring(p: GF2Poly) -> bool:
    # x and x+1 are the only linear factors
    if not p & 1 or bin(p).count("1") % 2 == 0:
        return False
    b = 2
    for _ in range(degree(p) // 2):
        b = poly_mulmod(b, b, p)
        if poly_gcd(b ^ 2, p) != 1:
            return False
    return True


@lru_cache(maxsize=None)
def irreducible_polynomials(l: int) -> Tuple[GF2Poly, ...]:
    """All monic irreducible polynomials of degree ``l`` (small ``l`` only)."""
    if l < 1:
        raise DegenerateDegreeError(f"degree {l} has no irreducible polynomials")
    if l > _TRIAL_DIVISION_MAX_DEGREE:
        raise PreconditionError(f"enumeration limited to degree {_TRIAL_DIVISION_MAX_DEGREE}")
    return tuple(p for p in range(1 << l, 1 << (l + 1)) if is_irreducible(p))


def _mobius(k: int) -> int:
    result, n, f = 1, k, 2
    while f * f <= n:
        if n % f == 0:
            n //= f
            if n % f == 0:
                return 0
            result = -result
        f += 1
    return -result if n > 1 else result


def count_irreducible(l: int) -> int:
    """Number of monic irreducible polynomials of degree ``l`` (necklace count)."""
    if l < 1:
        raise DegenerateDegreeError(f"degree {l} has no irreducible polynomials")
    total = sum(_mobius(d) * (1 << (l // d)) for d in range(1, l + 1) if l % d == 0)
    return total // l


# ---------- Hash keys ----------
@dataclass(frozen=True)
class HashKey:
    """
    One member of the division-hash family.

    ``low_coeffs`` holds the coefficients of ``x^(l-1) .. x^0``; the
    leading ``x^l`` term is implicit.
    """

    l: int
    low_coeffs: int

    def __post_init__(self):
        if self.l < 1:
            raise PreconditionError("hash key degree must be positive")
        if self.low_coeffs < 0 or self.low_coeffs >> self.l:
            raise PreconditionError(f"low coefficients exceed {self.l} bits")

    @property
    def modulus(self) -> GF2Poly:
        return (1 << self.l) | self.low_coeffs

    @property
    def low_bits(self) -> BitString:
        return BitString.from_int(self.low_coeffs, self.l)

    @classmethod
    def from_bits(cls, bits: BitString) -> "HashKey":
        return cls(bits.nbits, bits.to_int())

    def is_valid(self) -> bool:
        return is_irreducible(self.modulus)

    def encode(self) -> bytes:
        """``l`` as u16 followed by the low coefficients, MSB-first."""
        return struct.pack(">H", self.l) + self.low_bits.data

    @classmethod
    def decode(cls, raw: bytes) -> "HashKey":
        if len(raw) < 2:
            raise MalformedSignatureError("hash key shorter than its header")
        (l,) = struct.unpack(">H", raw[:2])
        body = raw[2:]
        if l < 1 or len(body) != (l + 7) // 8:
            raise MalformedSignatureError(f"hash key body does not hold {l} bits")
        try:
            return cls.from_bits(BitString(body, l))
        except PreconditionError as e:
            raise MalformedSignatureError(str(e)) from e


def _random_bits(rng: np.random.Generator, nbits: int) -> int:
    if nbits <= 62:
        return int(rng.integers(0, 1 << nbits))
    nbytes = (nbits + 7) // 8
    return int.from_bytes(rng.bytes(nbytes), "big") >> (8 * nbytes - nbits)


def gen_hash_key(l: int, rng: np.random.Generator) -> HashKey:
    """
    Draw a uniformly random monic irreducible polynomial of degree ``l``.

    Candidates are uniform ``l``-bit low-coefficient strings, rejected until
    irreducible, with at most ``64 * l`` attempts.

    Raises:
        PreconditionError: If ``l < 2``
        SamplingExhaustedError: If the attempt cap is reached
    """
    if l < 2:
        raise PreconditionError(f"hash keys need l >= 2, got {l}")
    for _ in range(64 * l):
        low = _random_bits(rng, l)
        if is_irreducible((1 << l) | low):
            return HashKey(l, low)
    logger.error("hash_key_sampling_exhausted", l=l, attempts=64 * l)
    raise SamplingExhaustedError(f"no irreducible candidate in {64 * l} draws")


# ---------- Division hash ----------
@lru_cache(maxsize=1024)
def _reduction_table(p: GF2Poly, l: int) -> Tuple[int, ...]:
    """``table[t] = t(x) * x^l mod p`` for every byte value ``t``."""
    base = []
    v = p ^ (1 << l)
    for _ in range(8):
        base.append(v)
        v <<= 1
        if v >> l & 1:
            v ^= p
    table = [0] * 256
    for t in range(1, 256):
        low = t & -t
        table[t] = table[t ^ low] ^ base[low.bit_length() - 1]
    return tuple(table)


@lru_cache(maxsize=4096)
def _division_hash_int(p: GF2Poly, l: int, msg: BitString) -> int:
    if l < 8 or msg.nbits <= _SHORT_MESSAGE_BITS:
        return poly_mod(msg.to_int() << l, p)

    data = msg.data
    if msg.nbits % 8:
        # right-align so leading zero bits carry no weight
        data = msg.to_int().to_bytes(len(data), "big")

    table = _reduction_table(p, l)
    mask = (1 << l) - 1
    shift = l - 8
    s = 0
    for b in data:
        s = ((s << 8) & mask) ^ table[(s >> shift) ^ b]
    return s


def division_hash(key: HashKey, msg: BitString) -> BitString:
    """
    The ``l``-bit tag ``M(x) * x^l mod p(x)``.

    Args:
        key: Hash key naming ``p``
        msg: Message bits (may be empty)

    Returns:
        The remainder coefficients, MSB-first
    """
    return BitString.from_int(_division_hash_int(key.modulus, key.l, msg), key.l)


def division_hash_shifted(key: HashKey, poly: GF2Poly, shift: int) -> BitString:
    """
    Tag of the message ``poly(x) * x^shift`` without materializing it.

    Used to hash a sparse difference between a long message and its
    substitute.
    """
    if shift < 0:
        raise PreconditionError("shift must be non-negative")
    p = key.modulus
    value = poly_mulmod(poly_mod(poly, p), x_power_mod(shift + key.l, p), p)
    return BitString.from_int(value, key.l)


def axu_epsilon(msg_len_bits: int, l: int) -> float:
    """
    Advertised collision bound ``m / 2^l`` for ``m``-bit messages.

    Raises:
        PreconditionError: If ``l < 2`` or ``msg_len_bits < 1``
    """
    if l < 2 or msg_len_bits < 1:
        raise PreconditionError("axu_epsilon needs l >= 2 and a non-empty message")
    return msg_len_bits / 2.0**l


def division_hash_epsilon(msg_len_bits: int, l: int) -> float:
    """
    Exact collision bound of the division hash.

    A nonzero difference of degree below ``msg_len_bits + l`` has at most
    ``floor((msg_len_bits + l) / l)`` irreducible factors of degree ``l``.
    """
    if l < 2 or msg_len_bits < 1:
        raise PreconditionError("division_hash_epsilon needs l >= 2 and a non-empty message")
    return ((msg_len_bits + l) // l) / count_irreducible(l)


def collision_profile(
    m1: BitString, m2: BitString, keys: List[HashKey]
) -> List[int]:
    """Count, for every target ``z``, the keys with ``h(m1) xor h(m2) == z``."""
    if not keys:
        return []
    l = keys[0].l
    counts = [0] * (1 << l)
    for key in keys:
        counts[(division_hash(key, m1) ^ division_hash(key, m2)).to_int()] += 1
    return counts


def max_collision_fraction(pairs: List[Tuple[BitString, BitString]], l: int) -> float:
    """Largest collision fraction over ``pairs`` and all targets, across every degree-``l`` key."""
    keys = [HashKey(l, p ^ (1 << l)) for p in irreducible_polynomials(l)]
    worst = 0
    for m1, m2 in pairs:
        worst = max(worst, max(collision_profile(m1, m2, keys)))
    return worst / len(keys)
