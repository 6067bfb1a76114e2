"""Group abstraction layer: scalars, group elements, pairing, hashing, codecs.

Everything above this module treats group elements as opaque values with
multiplicative notation (``a * b`` is the group operation, ``a ** k`` the
scalar action).  The only registered curve is the 254-bit BN curve in
:mod:`dhabe.bn254`, identified by ``curve_id = 1``; encodings embed that id
through the serialization layer so stored objects are self-describing.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from gmpy2 import mpz, invert, legendre, powmod

from . import bn254 as _c

CURVE_ID_BN254 = 1

SCALAR_BYTES = 32
G1_BYTES = 33
G2_BYTES = 65
GT_BYTES = 385

_FLAG_BASE = 0x80
_FLAG_INF = 0x40
_FLAG_SIGN = 0x20


class FormatError(ValueError):
    """Raised when decoding rejects malformed or non-canonical bytes."""


class Scalar:
    """An element of the scalar field Z_q, q the prime group order."""

    __slots__ = ("value",)

    def __init__(self, value):
        self.value = mpz(value) % _c.N

    def __add__(self, other):
        return Scalar(self.value + other.value)

    def __sub__(self, other):
        return Scalar(self.value - other.value)

    def __mul__(self, other):
        return Scalar(self.value * other.value)

    def __neg__(self):
        return Scalar(-self.value)

    def inverse(self):
        if self.value == 0:
            raise ZeroDivisionError("inverse of zero scalar")
        return Scalar(invert(self.value, _c.N))

    def __eq__(self, other):
        return isinstance(other, Scalar) and self.value == other.value

    def __hash__(self):
        return hash(("Scalar", int(self.value)))

    def __int__(self):
        return int(self.value)

    def __repr__(self):
        return f"Scalar({int(self.value)})"


class G1Element:
    """Element of G1 (prime-order curve group, multiplicative notation)."""

    __slots__ = ("_pt",)

    def __init__(self, pt):
        self._pt = pt

    def __mul__(self, other):
        return G1Element(_c.g1_add(self._pt, other._pt))

    def __pow__(self, k):
        return G1Element(_c.g1_mul(self._pt, _as_int(k)))

    def inverse(self):
        return G1Element(_c.g1_neg(self._pt))

    def is_identity(self):
        return _c.g1_is_inf(self._pt)

    def __eq__(self, other):
        return isinstance(other, G1Element) and _c.g1_eq(self._pt, other._pt)

    def __hash__(self):
        return hash(("G1", encode_element(self)))

    def __repr__(self):
        return f"G1Element({encode_element(self).hex()})"


class G2Element:
    """Element of G2 (prime-order twist group, multiplicative notation)."""

    __slots__ = ("_pt",)

    def __init__(self, pt):
        self._pt = pt

    def __mul__(self, other):
        return G2Element(_c.g2_add(self._pt, other._pt))

    def __pow__(self, k):
        return G2Element(_c.g2_mul(self._pt, _as_int(k)))

    def inverse(self):
        return G2Element(_c.g2_neg(self._pt))

    def is_identity(self):
        return _c.g2_is_inf(self._pt)

    def __eq__(self, other):
        return isinstance(other, G2Element) and _c.g2_eq(self._pt, other._pt)

    def __hash__(self):
        return hash(("G2", encode_element(self)))

    def __repr__(self):
        return f"G2Element({encode_element(self).hex()})"


class GtElement:
    """Element of the order-q pairing target group."""

    __slots__ = ("_v",)

    def __init__(self, v):
        self._v = v

    def __mul__(self, other):
        return GtElement(_c.fp12_mul(self._v, other._v))

    def __pow__(self, k):
        return GtElement(_c.gt_exp(self._v, _as_int(k)))

    def inverse(self):
        return GtElement(_c.fp12_conj(self._v))

    def is_identity(self):
        return _c.fp12_is_one(self._v)

    def __eq__(self, other):
        return isinstance(other, GtElement) and self._v == other._v

    def __hash__(self):
        return hash(("GT", encode_element(self)))

    def __repr__(self):
        return f"GtElement({encode_element(self).hex()[:32]}...)"


def _as_int(k):
    if isinstance(k, Scalar):
        return int(k.value)
    if isinstance(k, int):
        return k
    raise TypeError(f"exponent must be Scalar or int, got {type(k).__name__}")


@dataclass(frozen=True)
class GroupContext:
    """Pairing-group context: curve id, prime order q and the two generators."""

    curve_id: int
    q: int
    g1: G1Element
    g2: G2Element


_DEFAULT_CTX = GroupContext(
    curve_id=CURVE_ID_BN254,
    q=int(_c.N),
    g1=G1Element(_c.G1_GEN),
    g2=G2Element(_c.G2_GEN),
)


def default_context() -> GroupContext:
    return _DEFAULT_CTX


def context_for(curve_id: int) -> GroupContext:
    if curve_id != CURVE_ID_BN254:
        raise FormatError(f"unknown curve id {curve_id}")
    return _DEFAULT_CTX


def pair(p: G1Element, r: G2Element) -> GtElement:
    """Bilinear pairing e(p, r)."""
    return GtElement(_c.pairing(p._pt, r._pt))


def multi_pair(pairs) -> GtElement:
    """Product of pairings e(p_i, r_i), sharing one Miller loop."""
    return GtElement(_c.multi_pairing([(p._pt, r._pt) for p, r in pairs]))


def hash_to_g1(domain_tag: bytes, msg: bytes) -> G1Element:
    """Deterministic hash onto G1; distinct tags give independent functions."""
    if not domain_tag:
        raise ValueError("domain_tag must be non-empty")
    return G1Element(_c.hash_to_g1_point(domain_tag, msg))


def hash_to_scalar(domain_tag: bytes, msg: bytes) -> Scalar:
    """Deterministic hash to a nonzero scalar via wide (512-bit) reduction."""
    if not domain_tag:
        raise ValueError("domain_tag must be non-empty")
    return Scalar(_c.hash_to_fn(domain_tag, msg))


def random_scalar(rng: random.Random, allow_zero: bool = False) -> Scalar:
    """Sample a scalar via rejection from rng.getrandbits (deterministic per seed)."""
    bits = int(_c.N).bit_length()
    lo = 0 if allow_zero else 1
    while True:
        v = rng.getrandbits(bits)
        if lo <= v < _c.N:
            return Scalar(v)


def random_seed(rng: random.Random) -> bytes:
    return rng.getrandbits(256).to_bytes(32, "big")


# ---------------------------------------------------------------------------
# Canonical encodings.  Group points use a flag byte (0x80 always set,
# 0x40 identity, 0x20 sign of y) followed by big-endian x coordinate(s);
# scalars are bare fixed-width big-endian.
# ---------------------------------------------------------------------------


def _i2b(v) -> bytes:
    return int(v).to_bytes(32, "big")


def _b2i(data: bytes) -> mpz:
    return mpz(int.from_bytes(data, "big"))


def encode_element(e) -> bytes:
    if isinstance(e, Scalar):
        return _i2b(e.value)
    if isinstance(e, G1Element):
        if _c.g1_is_inf(e._pt):
            return bytes([_FLAG_BASE | _FLAG_INF]) + bytes(32)
        x, y = _c.g1_affine(e._pt)
        flags = _FLAG_BASE
        if y > _c.P - y:
            flags |= _FLAG_SIGN
        return bytes([flags]) + _i2b(x)
    if isinstance(e, G2Element):
        if _c.g2_is_inf(e._pt):
            return bytes([_FLAG_BASE | _FLAG_INF]) + bytes(64)
        (x0, x1), (y0, y1) = _c.g2_affine(e._pt)
        flags = _FLAG_BASE
        if (int(y1), int(y0)) > (int((-y1) % _c.P), int((-y0) % _c.P)):
            flags |= _FLAG_SIGN
        return bytes([flags]) + _i2b(x0) + _i2b(x1)
    if isinstance(e, GtElement):
        (c0, c1) = e._v
        coeffs = []
        for fp6 in (c0, c1):
            for fp2 in fp6:
                coeffs.append(_i2b(fp2[0]))
                coeffs.append(_i2b(fp2[1]))
        return bytes([_FLAG_BASE]) + b"".join(coeffs)
    raise TypeError(f"cannot encode {type(e).__name__}")


def _check_flags(flags: int, allow_sign: bool) -> None:
    known = _FLAG_BASE | _FLAG_INF | (_FLAG_SIGN if allow_sign else 0)
    if not flags & _FLAG_BASE or flags & ~known:
        raise FormatError("invalid flag byte")


def decode_element(data: bytes, group):
    """Decode canonical bytes into an element of `group` (one of the element
    classes).  Rejects wrong lengths, out-of-range coordinates, off-curve
    points, off-subgroup points and non-canonical sign/identity encodings.
    """
    if group is Scalar:
        if len(data) != SCALAR_BYTES:
            raise FormatError(f"scalar must be {SCALAR_BYTES} bytes")
        v = _b2i(data)
        if v >= _c.N:
            raise FormatError("scalar out of range")
        return Scalar(v)

    if group is G1Element:
        if len(data) != G1_BYTES:
            raise FormatError(f"G1 element must be {G1_BYTES} bytes")
        flags = data[0]
        _check_flags(flags, allow_sign=True)
        if flags & _FLAG_INF:
            if any(data[1:]) or flags & _FLAG_SIGN:
                raise FormatError("non-canonical identity encoding")
            return G1Element(_c.G1_INF)
        x = _b2i(data[1:])
        if x >= _c.P:
            raise FormatError("x coordinate out of range")
        rhs = (x * x * x + _c.B) % _c.P
        if legendre(rhs, _c.P) != 1:
            raise FormatError("point not on curve")
        y = powmod(rhs, (_c.P + 1) // 4, _c.P)
        if bool(flags & _FLAG_SIGN) != (y > _c.P - y):
            y = (_c.P - y) % _c.P
        return G1Element((x, y, mpz(1)))

    if group is G2Element:
        if len(data) != G2_BYTES:
            raise FormatError(f"G2 element must be {G2_BYTES} bytes")
        flags = data[0]
        _check_flags(flags, allow_sign=True)
        if flags & _FLAG_INF:
            if any(data[1:]) or flags & _FLAG_SIGN:
                raise FormatError("non-canonical identity encoding")
            return G2Element(_c.G2_INF)
        x0 = _b2i(data[1:33])
        x1 = _b2i(data[33:])
        if x0 >= _c.P or x1 >= _c.P:
            raise FormatError("x coordinate out of range")
        x = (x0, x1)
        rhs = _c.fp2_add(_c.fp2_mul(_c.fp2_sq(x), x), _c.TWIST_B)
        y = _c.fp2_sqrt(rhs)
        if y is None:
            raise FormatError("point not on curve")
        y0, y1 = y
        sign = (int(y1), int(y0)) > (int((-y1) % _c.P), int((-y0) % _c.P))
        if bool(flags & _FLAG_SIGN) != sign:
            y = _c.fp2_neg(y)
        pt = (x, y, _c.FP2_ONE)
        if not _c.g2_in_subgroup(pt):
            raise FormatError("point not in prime-order subgroup")
        return G2Element(pt)

    if group is GtElement:
        if len(data) != GT_BYTES:
            raise FormatError(f"GT element must be {GT_BYTES} bytes")
        flags = data[0]
        _check_flags(flags, allow_sign=False)
        if flags & _FLAG_INF:
            raise FormatError("invalid flag byte")
        vals = []
        for i in range(12):
            v = _b2i(data[1 + 32 * i : 33 + 32 * i])
            if v >= _c.P:
                raise FormatError("coefficient out of range")
            vals.append(v)
        f = (
            ((vals[0], vals[1]), (vals[2], vals[3]), (vals[4], vals[5])),
            ((vals[6], vals[7]), (vals[8], vals[9]), (vals[10], vals[11])),
        )
        if not _c.gt_in_subgroup(f):
            raise FormatError("element not in pairing subgroup")
        return GtElement(f)

    raise TypeError(f"unknown group {group!r}")
