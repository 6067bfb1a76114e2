import random

import pytest
from gmpy2 import is_prime, mpz

from dhabe import bn254
from dhabe.groups import (
    FormatError,
    G1_BYTES,
    G2_BYTES,
    GT_BYTES,
    G1Element,
    G2Element,
    GtElement,
    Scalar,
    SCALAR_BYTES,
    decode_element,
    default_context,
    encode_element,
    hash_to_g1,
    hash_to_scalar,
    multi_pair,
    pair,
    random_scalar,
)

CTX = default_context()


def test_context_invariants():
    assert is_prime(mpz(CTX.q))
    # generator orders, computed without the mod-q exponent reduction the
    # wrapper applies: [q-1]g + g must be the identity
    assert ((CTX.g1 ** (CTX.q - 1)) * CTX.g1).is_identity()
    assert ((CTX.g2 ** (CTX.q - 1)) * CTX.g2).is_identity()
    # non-degeneracy
    assert not pair(CTX.g1, CTX.g2).is_identity()


def test_pairing_small_exponents():
    e = pair(CTX.g1, CTX.g2)
    assert pair(CTX.g1 ** 2, CTX.g2 ** 3) == e ** 6


def test_pairing_identity_absorbs():
    inf = CTX.g1 ** 0
    assert inf.is_identity()
    assert pair(inf, CTX.g2).is_identity()
    assert pair(CTX.g1, CTX.g2 ** 0).is_identity()


def test_pairing_bilinear_random():
    rng = random.Random(101)
    for _ in range(20):
        x = random_scalar(rng)
        y = random_scalar(rng)
        lhs = pair(CTX.g1 ** x, CTX.g2 ** y)
        rhs = pair(CTX.g1 ** (x * y), CTX.g2)
        assert lhs == rhs


def test_multi_pair_matches_product():
    rng = random.Random(102)
    pairs = []
    prod = None
    for _ in range(4):
        p = CTX.g1 ** random_scalar(rng)
        q = CTX.g2 ** random_scalar(rng)
        pairs.append((p, q))
        e = pair(p, q)
        prod = e if prod is None else prod * e
    assert multi_pair(pairs) == prod


def test_hash_to_g1_deterministic():
    a = hash_to_g1(b"tag", b"message")
    b = hash_to_g1(b"tag", b"message")
    assert a == b


def test_hash_to_g1_tag_separation():
    rng = random.Random(103)
    for _ in range(100):
        msg = rng.getrandbits(128).to_bytes(16, "big")
        assert hash_to_g1(b"tagA", msg) != hash_to_g1(b"tagB", msg)


def test_hash_to_g1_in_subgroup():
    h = hash_to_g1(b"tag", b"x")
    assert (h ** CTX.q).is_identity()
    assert not h.is_identity()


def test_hash_to_g1_rejects_empty_tag():
    with pytest.raises(ValueError):
        hash_to_g1(b"", b"x")


def test_hash_to_scalar_deterministic_and_range():
    a = hash_to_scalar(b"tag", b"m")
    assert a == hash_to_scalar(b"tag", b"m")
    assert 1 <= int(a) < CTX.q


def test_hash_to_scalar_no_collisions():
    rng = random.Random(104)
    seen = set()
    for _ in range(1000):
        msg = rng.getrandbits(128).to_bytes(16, "big")
        seen.add(int(hash_to_scalar(b"tag", msg)))
    assert len(seen) == 1000


def test_scalar_arithmetic():
    a = Scalar(5)
    b = Scalar(CTX.q - 2)
    assert int(a + b) == 3
    assert int(a - b) == 7
    assert int(a * b) == (5 * (CTX.q - 2)) % CTX.q
    assert int(-a) == CTX.q - 5
    assert a * a.inverse() == Scalar(1)
    with pytest.raises(ZeroDivisionError):
        Scalar(0).inverse()


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------


def test_encode_decode_generator_round_trip():
    data = encode_element(CTX.g1)
    assert decode_element(data, G1Element) == CTX.g1
    data = encode_element(CTX.g2)
    assert decode_element(data, G2Element) == CTX.g2


def test_decode_rejects_wrong_length():
    for group, size in (
        (Scalar, SCALAR_BYTES),
        (G1Element, G1_BYTES),
        (G2Element, G2_BYTES),
        (GtElement, GT_BYTES),
    ):
        with pytest.raises(FormatError):
            decode_element(bytes(size - 1), group)
        with pytest.raises(FormatError):
            decode_element(bytes(size + 1), group)


def test_random_round_trips_byte_exact():
    rng = random.Random(105)
    e = pair(CTX.g1, CTX.g2)
    for _ in range(100):
        s = random_scalar(rng)
        for elem, group in (
            (s, Scalar),
            (CTX.g1 ** s, G1Element),
            (CTX.g2 ** s, G2Element),
            (e ** s, GtElement),
        ):
            data = encode_element(elem)
            back = decode_element(data, group)
            assert back == elem
            assert encode_element(back) == data  # canonical: one byte string


def test_identity_encodings_round_trip():
    for elem, group in ((CTX.g1 ** 0, G1Element), (CTX.g2 ** 0, G2Element)):
        data = encode_element(elem)
        assert decode_element(data, group).is_identity()
    one = pair(CTX.g1, CTX.g2) ** 0
    assert decode_element(encode_element(one), GtElement).is_identity()


def test_decode_rejects_out_of_range_scalar():
    with pytest.raises(FormatError):
        decode_element(int(CTX.q).to_bytes(32, "big"), Scalar)


def test_decode_rejects_off_curve_x():
    # x = 4 gives rhs = 67, a quadratic non-residue mod p for this curve
    for x in range(2, 30):
        data = bytes([0x80]) + int(x).to_bytes(32, "big")
        try:
            decode_element(data, G1Element)
        except FormatError:
            break
    else:
        pytest.fail("no off-curve x found in range")


def test_decode_rejects_bad_flags():
    data = bytearray(encode_element(CTX.g1))
    data[0] |= 0x10  # unknown flag bit
    with pytest.raises(FormatError):
        decode_element(bytes(data), G1Element)
    data = bytearray(encode_element(CTX.g1))
    data[0] &= 0x7F  # compression marker cleared
    with pytest.raises(FormatError):
        decode_element(bytes(data), G1Element)


def test_decode_rejects_noncanonical_identity():
    data = bytearray(bytes([0xC0]) + bytes(32))
    data[-1] = 1  # identity flag with nonzero payload
    with pytest.raises(FormatError):
        decode_element(bytes(data), G1Element)


def test_g1_subgroup_safety_not_applicable():
    pytest.skip("G1 has cofactor 1 on this curve: every curve point is in "
                "the prime-order subgroup")


def _twist_point_outside_subgroup():
    # walk x coordinates until the curve equation has a solution whose point
    # is outside the order-q subgroup (all but a ~2^-254 fraction are)
    for k in range(1, 200):
        x = (mpz(k), mpz(1))
        rhs = bn254.fp2_add(bn254.fp2_mul(bn254.fp2_sq(x), x), bn254.TWIST_B)
        y = bn254.fp2_sqrt(rhs)
        if y is None:
            continue
        pt = (x, y, bn254.FP2_ONE)
        if not bn254.g2_in_subgroup(pt):
            return pt
    raise AssertionError("no off-subgroup twist point found")


def test_g2_subgroup_safety():
    pt = _twist_point_outside_subgroup()
    assert bn254.g2_is_on_curve(pt)
    # craft the canonical-looking encoding for this off-subgroup point
    (x0, x1), (y0, y1) = pt[0], pt[1]
    flags = 0x80
    if (int(y1), int(y0)) > (int((-y1) % bn254.P), int((-y0) % bn254.P)):
        flags |= 0x20
    data = (
        bytes([flags])
        + int(x0).to_bytes(32, "big")
        + int(x1).to_bytes(32, "big")
    )
    with pytest.raises(FormatError, match="subgroup"):
        decode_element(data, G2Element)


def test_gt_subgroup_safety():
    # a random fp12 value is essentially never in the order-q subgroup
    bad = bn254.fp12_exp((bn254.FP6_ONE, bn254.FP6_ONE), 12345)
    elem = GtElement(bad)
    with pytest.raises(FormatError, match="subgroup"):
        decode_element(encode_element(elem), GtElement)


def test_cofactor_clearing_lands_in_subgroup():
    pt = _twist_point_outside_subgroup()
    cleared = bn254._g2_mul_raw(pt, int(bn254.G2_COFACTOR))
    assert bn254.g2_in_subgroup(cleared)
