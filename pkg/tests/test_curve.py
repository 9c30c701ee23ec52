import random

import pytest

from abclab.curve import (
    BASE,
    BASE_X,
    BASE_Y,
    D,
    NEUTRAL,
    P,
    PARAMS,
    Q,
    AffinePoint,
    ExtendedPoint,
    NotOnCurve,
    ZeroDenominator,
    from_affine,
    is_on_curve,
    point_add,
    point_double,
    point_equal,
    point_negate,
    scalar_mul,
    scalar_mul_counted,
    to_affine,
)

import oracles

# Frozen from the affine doubling oracle (tests/oracles.py).
GOLDEN_2B = AffinePoint(
    24727413235106541002554574571675588834622768167397638456726423682521233608206,
    15549675580280190176352668710449542251549572066445060580507079593062643049417,
)
GOLDEN_5B = AffinePoint(
    33467004535436536005251147249499675200073690106659565782908757308821616914995,
    43097193783671926753355113395909008640284023746042808659097434958891230611693,
)


def random_point(rng):
    return scalar_mul(rng.randrange(1, Q), BASE)


def assert_valid(pt):
    """Every point the module returns keeps Z != 0 and X*Y == T*Z."""
    assert pt.Z % P != 0
    assert (pt.X * pt.Y - pt.T * pt.Z) % P == 0


class TestIsOnCurve:
    def test_neutral(self):
        assert is_on_curve(AffinePoint(0, 1))

    def test_base_point_by_substitution(self):
        x, y = BASE_X, BASE_Y
        lhs = (-x * x + y * y) % P
        rhs = (1 + D * x * x % P * y * y) % P
        assert lhs == rhs
        assert is_on_curve(AffinePoint(x, y))

    def test_one_one_off_curve(self):
        # -1 + 1 == 0 while 1 + d != 0.
        assert not is_on_curve(AffinePoint(1, 1))


class TestFromAffine:
    def test_neutral(self):
        assert from_affine(AffinePoint(0, 1)) == ExtendedPoint(0, 1, 1, 0)

    def test_base(self):
        assert from_affine(AffinePoint(BASE_X, BASE_Y)) == ExtendedPoint(
            BASE_X, BASE_Y, 1, BASE_X * BASE_Y % P
        )
        assert BASE == from_affine(AffinePoint(BASE_X, BASE_Y))

    def test_rejects_off_curve(self):
        with pytest.raises(NotOnCurve):
            from_affine(AffinePoint(1, 1))


class TestToAffine:
    def test_scaled_neutral(self):
        assert to_affine(ExtendedPoint(0, 5, 5, 0)) == AffinePoint(0, 1)

    def test_base_round_trip(self):
        assert to_affine(BASE) == AffinePoint(BASE_X, BASE_Y)

    def test_lambda_scaling_invisible(self):
        rng = random.Random(0x1AB)
        for _ in range(10):
            lam = rng.randrange(1, P)
            scaled = ExtendedPoint(
                lam * BASE.X % P, lam * BASE.Y % P, lam % P, lam * BASE.T % P
            )
            assert to_affine(scaled) == AffinePoint(BASE_X, BASE_Y)
            assert point_equal(scaled, BASE)

    def test_zero_z_rejected(self):
        with pytest.raises(ZeroDenominator):
            to_affine(ExtendedPoint(0, 1, 0, 0))


class TestPointAdd:
    def test_identity_element(self):
        assert point_equal(point_add(NEUTRAL, BASE), BASE)
        assert point_equal(point_add(BASE, NEUTRAL), BASE)

    def test_inverse_law(self):
        assert point_equal(point_add(BASE, point_negate(BASE)), NEUTRAL)

    def test_unified_with_double(self):
        assert point_equal(point_add(BASE, BASE), point_double(BASE))

    def test_matches_affine_oracle(self):
        rng = random.Random(0xADD)
        for _ in range(20):
            p1, p2 = random_point(rng), random_point(rng)
            got = to_affine(point_add(p1, p2))
            want = oracles.affine_add(tuple(to_affine(p1)), tuple(to_affine(p2)))
            assert tuple(got) == want

    def test_commutative(self):
        rng = random.Random(1)
        for _ in range(20):
            p1, p2 = random_point(rng), random_point(rng)
            assert point_equal(point_add(p1, p2), point_add(p2, p1))

    def test_associative(self):
        rng = random.Random(2)
        for _ in range(10):
            p1, p2, p3 = (random_point(rng) for _ in range(3))
            assert point_equal(
                point_add(point_add(p1, p2), p3), point_add(p1, point_add(p2, p3))
            )

    def test_outputs_valid(self):
        rng = random.Random(3)
        for _ in range(20):
            assert_valid(point_add(random_point(rng), random_point(rng)))


class TestPointDouble:
    def test_neutral(self):
        assert point_equal(point_double(NEUTRAL), NEUTRAL)

    def test_base_against_affine_oracle(self):
        assert to_affine(point_double(BASE)) == GOLDEN_2B

    def test_double_double_is_times_four(self):
        assert point_equal(point_double(point_double(BASE)), scalar_mul(4, BASE))

    def test_unified_formula_many_points(self):
        rng = random.Random(4)
        for _ in range(100):
            pt = random_point(rng)
            assert point_equal(point_add(pt, pt), point_double(pt))

    def test_outputs_valid(self):
        rng = random.Random(5)
        for _ in range(20):
            assert_valid(point_double(random_point(rng)))


class TestPointNegate:
    def test_neutral(self):
        assert point_equal(point_negate(NEUTRAL), NEUTRAL)

    def test_involution(self):
        assert point_negate(point_negate(BASE)) == BASE

    def test_coordinates(self):
        neg = point_negate(BASE)
        assert neg == ExtendedPoint(P - BASE.X, BASE.Y, BASE.Z, P - BASE.T)

    def test_inverse_on_random_points(self):
        rng = random.Random(6)
        for _ in range(20):
            pt = random_point(rng)
            assert point_equal(point_add(pt, point_negate(pt)), NEUTRAL)


class TestPointEqual:
    def test_reflexive(self):
        assert point_equal(BASE, BASE)

    def test_lambda_equivalence(self):
        lam = 123456789
        scaled = ExtendedPoint(
            lam * BASE.X % P, lam * BASE.Y % P, lam % P, lam * BASE.T % P
        )
        assert point_equal(BASE, scaled)

    def test_distinct_points(self):
        assert not point_equal(BASE, point_double(BASE))


class TestScalarMul:
    def test_one(self):
        assert point_equal(scalar_mul(1, BASE), BASE)

    def test_zero(self):
        assert point_equal(scalar_mul(0, BASE), NEUTRAL)

    def test_five_against_repeated_addition(self):
        assert to_affine(scalar_mul(5, BASE)) == GOLDEN_5B
        acc = NEUTRAL
        for _ in range(5):
            acc = point_add(acc, BASE)
        assert point_equal(scalar_mul(5, BASE), acc)

    def test_order(self):
        assert point_equal(scalar_mul(Q, BASE), NEUTRAL)
        assert point_equal(scalar_mul(Q + 1, BASE), BASE)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            scalar_mul(-1, BASE)

    def test_small_range_against_repeated_addition(self):
        acc = NEUTRAL
        for k in range(1, 100):
            acc = point_add(acc, BASE)
            assert point_equal(scalar_mul(k, BASE), acc)

    def test_homomorphism(self):
        rng = random.Random(7)
        for _ in range(25):
            k1, k2 = rng.randrange(Q), rng.randrange(Q)
            lhs = scalar_mul((k1 + k2) % Q, BASE)
            rhs = point_add(scalar_mul(k1, BASE), scalar_mul(k2, BASE))
            assert point_equal(lhs, rhs)

    def test_outputs_valid(self):
        rng = random.Random(8)
        for _ in range(10):
            assert_valid(scalar_mul(rng.randrange(1, Q), BASE))


class TestScalarMulCounted:
    def test_power_of_two(self):
        pt, doubles, adds = scalar_mul_counted(2**40, BASE)
        assert (doubles, adds) == (40, 0)
        assert point_equal(pt, scalar_mul(2**40, BASE))

    def test_one(self):
        pt, doubles, adds = scalar_mul_counted(1, BASE)
        assert (doubles, adds) == (0, 0)
        assert point_equal(pt, BASE)

    def test_eleven(self):
        # 0b1011: three doubles, two adds.
        _, doubles, adds = scalar_mul_counted(11, BASE)
        assert (doubles, adds) == (3, 2)

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            scalar_mul_counted(0, BASE)

    def test_counts_forced_by_bits(self):
        rng = random.Random(9)
        for _ in range(50):
            k = rng.randrange(1, 1 << 160)
            pt, doubles, adds = scalar_mul_counted(k, BASE)
            assert doubles == k.bit_length() - 1
            assert adds == bin(k).count("1") - 1
            assert point_equal(pt, scalar_mul(k, BASE))

    def test_average_add_ratio(self):
        # Lighter version of the acceptance check: random 160-bit scalars
        # should average about one add per two doubles.
        rng = random.Random(10)
        total_d = total_a = 0
        for _ in range(200):
            k = rng.randrange(1 << 159, 1 << 160)
            _, doubles, adds = scalar_mul_counted(k, BASE)
            total_d += doubles
            total_a += adds
        assert 0.45 <= total_a / total_d <= 0.55
