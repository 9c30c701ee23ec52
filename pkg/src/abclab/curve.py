"""Twisted Edwards group: -x^2 + y^2 = 1 + d*x^2*y^2 over GF(2^255-19).

Points are held in extended homogeneous coordinates (X:Y:Z:T) with
x = X/Z, y = Y/Z, xy = T/Z, so addition and doubling need no field
inversions.  Scalar multiplication is plain left-to-right double-and-add;
no window tables, no signed recoding, and nothing here is constant-time.
"""

from __future__ import annotations

from typing import NamedTuple

from .field import P, Q, fe_inv

# Curve coefficient d; the twist coefficient a is -1 (folded into the
# formulas below, which only hold for a = -1).
D = 37095705934669439343138083508754565189542113879843219016388785533085940283555

# Base point of order Q, plus the conventional initial denominator.
BASE_X = 15112221349535400772501151409588531511454012693041857206046113283949847762202
BASE_Y = 46316835694926478169428394003475163141307993866256225615783033603165251855960
Z0 = 1


class NotOnCurve(ValueError):
    """Raised when affine coordinates fail the curve equation."""


class ZeroDenominator(ZeroDivisionError):
    """Raised when converting a point with Z == 0 to affine."""


class AffinePoint(NamedTuple):
    x: int
    y: int


class ExtendedPoint(NamedTuple):
    X: int
    Y: int
    Z: int
    T: int


class CurveParams(NamedTuple):
    p: int
    d: int
    a: int
    q: int
    base_x: int
    base_y: int
    z0: int


PARAMS = CurveParams(p=P, d=D, a=P - 1, q=Q, base_x=BASE_X, base_y=BASE_Y, z0=Z0)

NEUTRAL = ExtendedPoint(0, 1, 1, 0)
BASE = ExtendedPoint(BASE_X, BASE_Y, Z0, BASE_X * BASE_Y % P)


def is_on_curve(pt: AffinePoint) -> bool:
    """True iff -x^2 + y^2 == 1 + d*x^2*y^2 (mod p)."""
    x, y = pt
    xx = x * x % P
    yy = y * y % P
    return (yy - xx) % P == (1 + D * xx % P * yy) % P


def from_affine(pt: AffinePoint) -> ExtendedPoint:
    """Lift (x, y) to (x : y : 1 : xy); rejects points off the curve."""
    if not is_on_curve(pt):
        raise NotOnCurve(f"({pt.x}, {pt.y}) does not satisfy the curve equation")
    return ExtendedPoint(pt.x, pt.y, 1, pt.x * pt.y % P)


def to_affine(pt: ExtendedPoint) -> AffinePoint:
    if pt.Z % P == 0:
        raise ZeroDenominator("point has Z == 0")
    z_inv = fe_inv(pt.Z)
    return AffinePoint(pt.X * z_inv % P, pt.Y * z_inv % P)


def point_add(p1: ExtendedPoint, p2: ExtendedPoint) -> ExtendedPoint:
    """Unified extended-coordinate addition; also valid for p1 == p2."""
    X1, Y1, Z1, T1 = p1
    X2, Y2, Z2, T2 = p2
    A = (Y1 - X1) * (Y2 - X2) % P
    B = (Y1 + X1) * (Y2 + X2) % P
    C = 2 * D * T1 % P * T2 % P
    Dv = 2 * Z1 * Z2 % P
    E = (B - A) % P
    F = (Dv - C) % P
    G = (Dv + C) % P
    H = (B + A) % P
    return ExtendedPoint(E * F % P, G * H % P, F * G % P, E * H % P)


def point_double(pt: ExtendedPoint) -> ExtendedPoint:
    X1, Y1, Z1, _ = pt
    A = X1 * X1 % P
    B = Y1 * Y1 % P
    C = 2 * Z1 * Z1 % P
    Dv = (X1 + Y1) * (X1 + Y1) % P
    H = (B + A) % P
    E = (H - Dv) % P
    G = (A - B) % P
    F = (C + G) % P
    return ExtendedPoint(E * F % P, G * H % P, F * G % P, E * H % P)


def point_negate(pt: ExtendedPoint) -> ExtendedPoint:
    """(x, y) -> (-x, y), i.e. negate the X and T coordinates."""
    return ExtendedPoint(-pt.X % P, pt.Y, pt.Z, -pt.T % P)


def point_equal(p1: ExtendedPoint, p2: ExtendedPoint) -> bool:
    """Projective equality by cross-multiplication; no inversions."""
    return (
        (p1.X * p2.Z - p2.X * p1.Z) % P == 0
        and (p1.Y * p2.Z - p2.Y * p1.Z) % P == 0
    )


def scalar_mul(k: int, pt: ExtendedPoint) -> ExtendedPoint:
    """k*pt by left-to-right double-and-add over the bits of k.

    Extended to k == 0 (neutral) and k == 1 (pt itself), which the binary
    loop cannot express; k may exceed the group order.
    """
    if k < 0:
        raise ValueError("scalar must be non-negative")
    if k == 0:
        return NEUTRAL
    acc = pt
    for i in range(k.bit_length() - 2, -1, -1):
        acc = point_double(acc)
        if (k >> i) & 1:
            acc = point_add(acc, pt)
    return acc


def scalar_mul_counted(k: int, pt: ExtendedPoint) -> tuple[ExtendedPoint, int, int]:
    """scalar_mul plus (doubles, adds) counters for the complexity checks.

    The loop shape forces doubles == bit_length(k) - 1 and
    adds == popcount(k) - 1.
    """
    if k < 1:
        raise ValueError("counted multiplication needs k >= 1")
    doubles = adds = 0
    acc = pt
    for i in range(k.bit_length() - 2, -1, -1):
        acc = point_double(acc)
        doubles += 1
        if (k >> i) & 1:
            acc = point_add(acc, pt)
            adds += 1
    return acc, doubles, adds
