"""Modular arithmetic kernel: prime field mod p, scalar ring mod q, big naturals.

Field elements and scalars are plain ints kept in canonical reduced form
([0, p) resp. [0, q)) at every operation boundary.  All functions are pure
and safe to call concurrently.
"""

from __future__ import annotations

# Prime field modulus.
P = 2**255 - 19

# Order of the base point; modulus of the scalar ring.
Q = 2**252 + 27742317777372353535851937790883648493


class ZeroInverse(ZeroDivisionError):
    """Raised when inverting 0 in the field."""


class BadModulus(ValueError):
    """Raised when a modular exponentiation is asked for a modulus < 2."""


class BadLength(ValueError):
    """Raised for byte strings of unsupported length."""


def fe_add(a: int, b: int) -> int:
    """(a + b) mod p, canonical."""
    return (a + b) % P


def fe_sub(a: int, b: int) -> int:
    """(a - b) mod p, canonical."""
    return (a - b) % P


def fe_mul(a: int, b: int) -> int:
    """(a * b) mod p, canonical."""
    return a * b % P


def fe_inv(a: int) -> int:
    """Multiplicative inverse mod p via Fermat: a^(p-2).

    Kept off the curve hot path; only coordinate conversions need it.
    """
    if a % P == 0:
        raise ZeroInverse("0 has no inverse mod p")
    return mod_pow(a, P - 2, P)


def mod_pow(base: int, exp: int, modulus: int) -> int:
    """base**exp mod modulus by left-to-right square-and-multiply.

    Deliberately an explicit loop rather than built-in pow(): this is the
    measured substrate of the modexp baseline scheme, and it must pay the
    same per-operation interpretation cost as the curve kernel it is
    benchmarked against.
    """
    if modulus < 2:
        raise BadModulus(f"modulus must be >= 2, got {modulus}")
    if exp == 0:
        return 1
    acc = base % modulus
    for i in range(exp.bit_length() - 2, -1, -1):
        acc = acc * acc % modulus
        if (exp >> i) & 1:
            acc = acc * base % modulus
    return acc


def sc_reduce_wide(data: bytes) -> int:
    """Reduce a 32- or 64-byte big-endian string into the scalar ring [0, q)."""
    if len(data) not in (32, 64):
        raise BadLength(f"expected 32 or 64 bytes, got {len(data)}")
    return int.from_bytes(data, "big") % Q


def bit_length(n: int) -> int:
    """Position of the highest set bit, 1-based; undefined for n < 1."""
    if n < 1:
        raise ValueError("bit_length is undefined for n < 1")
    return n.bit_length()


def encode32(v: int) -> bytes:
    """32-byte big-endian encoding; the one byte order used everywhere."""
    return v.to_bytes(32, "big")


def decode32(data: bytes) -> int:
    if len(data) != 32:
        raise BadLength(f"expected 32 bytes, got {len(data)}")
    return int.from_bytes(data, "big")


def fe_encode(v: int) -> bytes:
    return encode32(v)


def fe_decode(data: bytes) -> int:
    """Decode and range-check a canonical field element."""
    v = decode32(data)
    if v >= P:
        raise ValueError("field element out of range")
    return v
