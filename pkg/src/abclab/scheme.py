"""Two credential schemes behind one issue/verify interface.

``ecc160``     -- attribute commitment on the Edwards curve plus a
                  Schnorr-style issuer signature; the lightweight scheme.
``modexp1024`` -- RSA-style full-domain-hash signature over an
                  attribute-bound representative mod a 1024-bit modulus;
                  the heavyweight baseline.  Both its exponents are
                  full-width so that issuance and verification each pay a
                  genuine 1024-bit exponentiation, and the representative
                  binds every attribute through its own exponentiation, so
                  cost scales with attribute count like the multi-base
                  modexp credential systems it stands in for.

Neither scheme claims cryptographic hiding or unlinkability; they exist to
give the benchmark two honest, verifiable cost profiles.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass

from .curve import (
    BASE,
    D,
    NEUTRAL,
    ExtendedPoint,
    point_add,
    point_equal,
    scalar_mul,
    to_affine,
)
from .field import P, Q, bit_length, encode32, mod_pow, sc_reduce_wide

MAX_ATTRIBUTES = 10

# Standard attribute fixtures used by the CLI and benchmark defaults.
DEFAULT_ATTRIBUTES = (
    3022871045856445402,
    2303921356947,
    63990592803,
    63188281798077,
    2334544185927680150715,
    72478959060716899515,
    132108418240270107954363,
    53359477949683103,
    393090009322226684739352798186683,
    2930303348526267,
)

SCHEME_NAMES = ("ecc160", "modexp1024")

# Domain-separation tags for every hash the schemes compute.
_TAG_GENERATOR = b"abc-gen-v1"
_TAG_SIGNATURE = b"abc-sig-v1"
_TAG_MODEXP_BASE = b"abc-base-v1"
_TAG_ATTR_DIGEST = b"abc-attr-v1"

_SYSTEM_RNG = random.SystemRandom()


class EmptyAttributes(ValueError):
    """An attribute set must contain at least one attribute."""


class TooManyAttributes(ValueError):
    """An attribute set may contain at most MAX_ATTRIBUTES attributes."""


class AttributeOutOfRange(ValueError):
    """Attribute values live in [0, q)."""


class MalformedPoint(ValueError):
    """A credential or key carries coordinates that are not a curve point."""


class UnknownScheme(ValueError):
    """Scheme tag is not one of SCHEME_NAMES."""


class RngFailure(RuntimeError):
    """The injected randomness source misbehaved."""


class PrimeSearchExhausted(RuntimeError):
    """Prime generation hit its attempt bound."""


@dataclass(frozen=True)
class EccIssuerKey:
    secret: int                 # x in [1, q)
    public: ExtendedPoint       # x * B


@dataclass(frozen=True)
class EccCredential:
    attributes: tuple[int, ...]
    commitment: ExtendedPoint   # sum of a_i * H_i
    nonce_point: ExtendedPoint  # k * B from the signature
    response: int               # (k + c*x) mod q


@dataclass(frozen=True)
class ModexpIssuerKey:
    p1: int
    p2: int
    n: int
    e: int
    d: int

    @property
    def public(self) -> tuple[int, int]:
        return self.n, self.e


@dataclass(frozen=True)
class ModexpCredential:
    attributes: tuple[int, ...]
    signature: int


def check_attributes(attrs) -> tuple[int, ...]:
    """Validate an attribute list: 1..10 values, each in [0, q)."""
    attrs = tuple(attrs)
    if not attrs:
        raise EmptyAttributes("need at least one attribute")
    if len(attrs) > MAX_ATTRIBUTES:
        raise TooManyAttributes(f"at most {MAX_ATTRIBUTES} attributes, got {len(attrs)}")
    for a in attrs:
        if not 0 <= a < Q:
            raise AttributeOutOfRange(f"attribute {a} not in [0, q)")
    return attrs


def encode_attributes(attrs) -> bytes:
    """Canonical byte form: one count byte, then 32-byte big-endian values.

    Injective over valid attribute sets, so it is safe to hash.
    """
    attrs = check_attributes(attrs)
    return bytes([len(attrs)]) + b"".join(encode32(a) for a in attrs)


def point_bytes(pt: ExtendedPoint) -> bytes:
    """Uncompressed 64-byte affine encoding used in hash inputs."""
    aff = to_affine(pt)
    return encode32(aff.x) + encode32(aff.y)


def _check_point(pt: ExtendedPoint) -> ExtendedPoint:
    """Reject coordinates that are not a consistent on-curve point."""
    X, Y, Z, T = pt
    if Z % P == 0:
        raise MalformedPoint("Z == 0")
    if (X * Y - T * Z) % P != 0:
        raise MalformedPoint("T is inconsistent with X, Y, Z")
    # Projective curve equation: (-X^2 + Y^2) Z^2 == Z^4 + d X^2 Y^2.
    xx = X * X % P
    yy = Y * Y % P
    zz = Z * Z % P
    if (yy - xx) * zz % P != (zz * zz + D * xx % P * yy) % P:
        raise MalformedPoint("coordinates are off the curve")
    return pt


def _rand_scalar(rng) -> int:
    try:
        k = rng.randrange(1, Q)
    except Exception as exc:  # pragma: no cover - defensive
        raise RngFailure("randomness source failed") from exc
    if not 1 <= k < Q:
        raise RngFailure(f"rng returned out-of-range scalar {k}")
    return k


# ---------------------------------------------------------------------------
# ecc160: commitment + Schnorr-style signature
# ---------------------------------------------------------------------------

_generator_cache: dict[int, ExtendedPoint] = {}


def derive_generator(i: int) -> ExtendedPoint:
    """Per-attribute commitment base H_i = h_i * B, h_i from a tagged hash.

    The discrete logs h_i are knowable by construction; commitment hiding
    is explicitly not a goal here.
    """
    if not 0 <= i < MAX_ATTRIBUTES:
        raise IndexError(f"generator index {i} out of range 0..{MAX_ATTRIBUTES - 1}")
    if i not in _generator_cache:
        h = sc_reduce_wide(hashlib.sha256(_TAG_GENERATOR + bytes([i])).digest())
        _generator_cache[i] = scalar_mul(h, BASE)
    return _generator_cache[i]


def ecc_keygen(rng=None) -> EccIssuerKey:
    rng = rng or _SYSTEM_RNG
    x = _rand_scalar(rng)
    return EccIssuerKey(secret=x, public=scalar_mul(x, BASE))


def ecc_commit(attrs) -> ExtendedPoint:
    """C = sum(a_i * H_i), accumulated left to right."""
    attrs = check_attributes(attrs)
    acc = NEUTRAL
    for i, a in enumerate(attrs):
        acc = point_add(acc, scalar_mul(a, derive_generator(i)))
    return acc


def _challenge(public: ExtendedPoint, commitment: ExtendedPoint,
               nonce_point: ExtendedPoint, attrs) -> int:
    digest = hashlib.sha256(
        _TAG_SIGNATURE
        + point_bytes(public)
        + point_bytes(commitment)
        + point_bytes(nonce_point)
        + encode_attributes(attrs)
    ).digest()
    return sc_reduce_wide(digest)


def ecc_issue(key: EccIssuerKey, attrs, rng=None) -> EccCredential:
    """Commit to the attributes and sign the commitment Schnorr-style."""
    rng = rng or _SYSTEM_RNG
    attrs = check_attributes(attrs)
    commitment = ecc_commit(attrs)
    k = _rand_scalar(rng)
    nonce_point = scalar_mul(k, BASE)
    c = _challenge(key.public, commitment, nonce_point, attrs)
    z = (k + c * key.secret) % Q
    return EccCredential(attrs, commitment, nonce_point, z)


def ecc_verify(public: ExtendedPoint, cred: EccCredential) -> bool:
    """Recompute the commitment and check z*B == R + c*Q_pub."""
    _check_point(public)
    _check_point(cred.commitment)
    _check_point(cred.nonce_point)
    try:
        attrs = check_attributes(cred.attributes)
    except ValueError:
        return False
    if not 0 <= cred.response < Q:
        return False
    if not point_equal(ecc_commit(attrs), cred.commitment):
        return False
    c = _challenge(public, cred.commitment, cred.nonce_point, attrs)
    lhs = scalar_mul(cred.response, BASE)
    rhs = point_add(cred.nonce_point, scalar_mul(c, public))
    return point_equal(lhs, rhs)


# ---------------------------------------------------------------------------
# modexp1024: FDH-RSA over an attribute-bound representative
# ---------------------------------------------------------------------------

MODULUS_BITS = 1024
PUBLIC_EXPONENT_MIN_BITS = 1000
_PRIME_BITS = 512
_MR_ROUNDS = 40
_PRIME_ATTEMPTS = 100_000

_SMALL_PRIMES = [p for p in range(3, 2000)
                 if all(p % d for d in range(2, int(math.isqrt(p)) + 1))]


def _modinv(a: int, m: int) -> int:
    old_r, r = a % m, m
    old_s, s = 1, 0
    while r:
        quot = old_r // r
        old_r, r = r, old_r - quot * r
        old_s, s = s, old_s - quot * s
    if old_r != 1:
        raise ValueError("not invertible")
    return old_s % m


def _is_probable_prime(n: int, rng, rounds: int = _MR_ROUNDS) -> bool:
    """Miller-Rabin with random witnesses."""
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n == p:
            return True
        if n % p == 0:
            return False
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for _ in range(rounds):
        a = rng.randrange(2, n - 1)
        x = mod_pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _random_prime(bits: int, rng) -> int:
    # Top two bits forced so the product of two such primes always fills
    # exactly 2*bits.
    for _ in range(_PRIME_ATTEMPTS):
        cand = rng.getrandbits(bits) | (1 << bits - 1) | (1 << bits - 2) | 1
        if _is_probable_prime(cand, rng):
            return cand
    raise PrimeSearchExhausted(f"no {bits}-bit prime after {_PRIME_ATTEMPTS} draws")


def rsa_keygen(rng=None) -> ModexpIssuerKey:
    """1024-bit modulus from two 512-bit probable primes.

    The public exponent is drawn full-width (not a small Fermat number) so
    that verification costs a full modular exponentiation, matching the
    cost profile of the credential systems this scheme represents.
    """
    rng = rng or _SYSTEM_RNG
    p1 = _random_prime(_PRIME_BITS, rng)
    p2 = _random_prime(_PRIME_BITS, rng)
    while p2 == p1:  # pragma: no cover - 2^-500 event
        p2 = _random_prime(_PRIME_BITS, rng)
    n = p1 * p2
    lam = math.lcm(p1 - 1, p2 - 1)
    floor = 1 << PUBLIC_EXPONENT_MIN_BITS
    while True:
        e = rng.randrange(floor, lam - 1) | 1
        if math.gcd(e, lam) != 1:
            continue
        d = _modinv(e, lam)
        if d >= floor:
            break
    key = ModexpIssuerKey(p1=p1, p2=p2, n=n, e=e, d=d)
    assert bit_length(n) == MODULUS_BITS
    return key


def fdh(attrs, n: int) -> int:
    """Full-domain hash: four chained SHA-256 blocks truncated to 1016 bits.

    The 8-bit headroom keeps the result below any 1024-bit modulus.
    """
    if bit_length(n) != MODULUS_BITS:
        raise ValueError(f"modulus must be exactly {MODULUS_BITS} bits")
    enc = encode_attributes(attrs)
    blocks = b"".join(hashlib.sha256(enc + bytes([i])).digest() for i in range(4))
    return int.from_bytes(blocks[:127], "big")


def derive_modexp_base(n: int, i: int) -> int:
    """Public per-attribute base: a hash-derived quadratic residue mod n."""
    if not 0 <= i < MAX_ATTRIBUTES:
        raise IndexError(f"base index {i} out of range 0..{MAX_ATTRIBUTES - 1}")
    seed = _TAG_MODEXP_BASE + bytes([i]) + n.to_bytes(128, "big")
    blocks = b"".join(hashlib.sha256(seed + bytes([j])).digest() for j in range(4))
    r = int.from_bytes(blocks[:127], "big")
    return r * r % n


def _attr_digest(i: int, value: int) -> int:
    """Fixed-width (256-bit) exponent binding attribute i."""
    return int.from_bytes(
        hashlib.sha256(_TAG_ATTR_DIGEST + bytes([i]) + encode32(value)).digest(), "big"
    )


def modexp_representative(attrs, n: int) -> int:
    """fdh(attrs) * prod(R_i ^ digest(a_i)) mod n: the signed quantity.

    One full-width-exponent term per attribute makes both protocol phases
    scale with attribute count.
    """
    attrs = check_attributes(attrs)
    rep = fdh(attrs, n)
    for i, a in enumerate(attrs):
        rep = rep * mod_pow(derive_modexp_base(n, i), _attr_digest(i, a), n) % n
    return rep


def rsa_issue(key: ModexpIssuerKey, attrs) -> ModexpCredential:
    """Deterministic signature: representative raised to the secret exponent."""
    attrs = check_attributes(attrs)
    sig = mod_pow(modexp_representative(attrs, key.n), key.d, key.n)
    return ModexpCredential(attrs, sig)


def rsa_verify(public: tuple[int, int], cred: ModexpCredential) -> bool:
    n, e = public
    if not 0 < cred.signature < n:
        return False
    try:
        rep = modexp_representative(cred.attributes, n)
    except ValueError:
        return False
    return mod_pow(cred.signature, e, n) == rep


# ---------------------------------------------------------------------------
# Uniform dispatch used by the wire services, benchmark, and CLI
# ---------------------------------------------------------------------------


def keygen(scheme: str, rng=None):
    if scheme == "ecc160":
        return ecc_keygen(rng)
    if scheme == "modexp1024":
        return rsa_keygen(rng)
    raise UnknownScheme(scheme)


def public_part(scheme: str, key):
    if scheme == "ecc160":
        return key.public
    if scheme == "modexp1024":
        return key.public
    raise UnknownScheme(scheme)


def issue(scheme: str, key, attrs, rng=None):
    if scheme == "ecc160":
        return ecc_issue(key, attrs, rng)
    if scheme == "modexp1024":
        return rsa_issue(key, attrs)
    raise UnknownScheme(scheme)


def verify(scheme: str, public, cred) -> bool:
    if scheme == "ecc160":
        return ecc_verify(public, cred)
    if scheme == "modexp1024":
        return rsa_verify(public, cred)
    raise UnknownScheme(scheme)
