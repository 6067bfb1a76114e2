"""Optimal-ate pairing over the 254-bit Barreto-Naehrig curve (alt_bn128).

Pure-Python implementation backed by gmpy2 integers.  Field towers are
plain tuples of mpz values (Fp2 pairs, Fp6 triples of Fp2, Fp12 pairs of
Fp6) and points are Jacobian coordinate triples; everything here is a
module-level function for speed.  Higher layers go through
:mod:`dhabe.groups` and never touch these representations directly.

Curve: y^2 = x^3 + 3 over Fp, with the sextic D-twist y^2 = x^3 + 3/xi
over Fp2 = Fp[i]/(i^2+1), xi = 9 + i.
"""

from __future__ import annotations

import hashlib

from gmpy2 import mpz, invert, legendre, powmod

# BN parameter u and the derived curve constants.  The decimal literals are
# the widely published alt_bn128 values; the polynomial forms cross-check
# them at import time.
U = mpz(4965661367192848881)
P = 36 * U**4 + 36 * U**3 + 24 * U**2 + 6 * U + 1
N = 36 * U**4 + 36 * U**3 + 18 * U**2 + 6 * U + 1

assert P == mpz(
    21888242871839275222246405745257275088696311157297823662689037894645226208583
)
assert N == mpz(
    21888242871839275222246405745257275088548364400416034343698204186575808495617
)

B = mpz(3)  # curve coefficient
G2_COFACTOR = 2 * P - N  # order of the twist group is N * (2P - N)

_ZERO = mpz(0)
_ONE = mpz(1)

# ---------------------------------------------------------------------------
# Fp2 = Fp[i]/(i^2 + 1), elements are (c0, c1) meaning c0 + c1*i
# ---------------------------------------------------------------------------

FP2_ZERO = (_ZERO, _ZERO)
FP2_ONE = (_ONE, _ZERO)


def fp2_add(a, b):
    return ((a[0] + b[0]) % P, (a[1] + b[1]) % P)


def fp2_sub(a, b):
    return ((a[0] - b[0]) % P, (a[1] - b[1]) % P)


def fp2_neg(a):
    return ((-a[0]) % P, (-a[1]) % P)


def fp2_conj(a):
    return (a[0], (-a[1]) % P)


def fp2_mul(a, b):
    t0 = a[0] * b[0]
    t1 = a[1] * b[1]
    return ((t0 - t1) % P, ((a[0] + a[1]) * (b[0] + b[1]) - t0 - t1) % P)


def fp2_sq(a):
    # (c0 + c1 i)^2 = (c0-c1)(c0+c1) + 2 c0 c1 i
    return (((a[0] - a[1]) * (a[0] + a[1])) % P, (2 * a[0] * a[1]) % P)


def fp2_dbl(a):
    return ((2 * a[0]) % P, (2 * a[1]) % P)


def fp2_mul_fp(a, k):
    return ((a[0] * k) % P, (a[1] * k) % P)


def fp2_mul_xi(a):
    # multiply by xi = 9 + i
    return ((9 * a[0] - a[1]) % P, (a[0] + 9 * a[1]) % P)


def fp2_inv(a):
    t = invert(a[0] * a[0] + a[1] * a[1], P)
    return ((a[0] * t) % P, (-a[1] * t) % P)


def fp2_is_zero(a):
    return a[0] == 0 and a[1] == 0


def fp2_exp(a, e):
    r = FP2_ONE
    for bit in bin(e)[2:]:
        r = fp2_sq(r)
        if bit == "1":
            r = fp2_mul(r, a)
    return r


def fp2_sqrt(a):
    """Square root in Fp2, or None when `a` is a non-residue.

    Uses the norm trick: if x^2 = a then (x0^2 + x1^2)^2 = norm(a).
    """
    a0, a1 = a
    if a1 == 0:
        if a0 == 0:
            return FP2_ZERO
        if legendre(a0, P) == 1:
            return (powmod(a0, (P + 1) // 4, P), _ZERO)
        # a0 a non-residue: (x1*i)^2 = -x1^2, so need x1^2 = -a0
        na0 = (-a0) % P
        if legendre(na0, P) != 1:
            return None
        return (_ZERO, powmod(na0, (P + 1) // 4, P))
    norm = (a0 * a0 + a1 * a1) % P
    if legendre(norm, P) != 1:
        return None
    lam = powmod(norm, (P + 1) // 4, P)
    inv2 = invert(mpz(2), P)
    delta = ((a0 + lam) * inv2) % P
    if legendre(delta, P) != 1:
        delta = ((a0 - lam) * inv2) % P
        if legendre(delta, P) != 1:
            return None
    x0 = powmod(delta, (P + 1) // 4, P)
    x1 = (a1 * invert(2 * x0, P)) % P
    cand = (x0, x1)
    if fp2_sq(cand) != (a0 % P, a1 % P):
        return None
    return cand


# ---------------------------------------------------------------------------
# Fp6 = Fp2[v]/(v^3 - xi), elements (c0, c1, c2) meaning c0 + c1 v + c2 v^2
# ---------------------------------------------------------------------------

FP6_ZERO = (FP2_ZERO, FP2_ZERO, FP2_ZERO)
FP6_ONE = (FP2_ONE, FP2_ZERO, FP2_ZERO)


def fp6_add(a, b):
    return (fp2_add(a[0], b[0]), fp2_add(a[1], b[1]), fp2_add(a[2], b[2]))


def fp6_sub(a, b):
    return (fp2_sub(a[0], b[0]), fp2_sub(a[1], b[1]), fp2_sub(a[2], b[2]))


def fp6_neg(a):
    return (fp2_neg(a[0]), fp2_neg(a[1]), fp2_neg(a[2]))


def fp6_mul(a, b):
    t0 = fp2_mul(a[0], b[0])
    t1 = fp2_mul(a[1], b[1])
    t2 = fp2_mul(a[2], b[2])
    c0 = fp2_add(
        t0,
        fp2_mul_xi(
            fp2_sub(
                fp2_sub(fp2_mul(fp2_add(a[1], a[2]), fp2_add(b[1], b[2])), t1), t2
            )
        ),
    )
    c1 = fp2_add(
        fp2_sub(fp2_sub(fp2_mul(fp2_add(a[0], a[1]), fp2_add(b[0], b[1])), t0), t1),
        fp2_mul_xi(t2),
    )
    c2 = fp2_add(
        fp2_sub(fp2_sub(fp2_mul(fp2_add(a[0], a[2]), fp2_add(b[0], b[2])), t0), t2),
        t1,
    )
    return (c0, c1, c2)


def fp6_sq(a):
    s0 = fp2_sq(a[0])
    s1 = fp2_sq(a[1])
    s2 = fp2_sq(a[2])
    a01 = fp2_mul(a[0], a[1])
    a02 = fp2_mul(a[0], a[2])
    a12 = fp2_mul(a[1], a[2])
    c0 = fp2_add(s0, fp2_mul_xi(fp2_dbl(a12)))
    c1 = fp2_add(fp2_mul_xi(s2), fp2_dbl(a01))
    c2 = fp2_add(s1, fp2_dbl(a02))
    return (c0, c1, c2)


def fp6_mul_v(a):
    # multiply by v: (c0, c1, c2) -> (xi*c2, c0, c1)
    return (fp2_mul_xi(a[2]), a[0], a[1])


def fp6_mul_fp2(a, k):
    return (fp2_mul(a[0], k), fp2_mul(a[1], k), fp2_mul(a[2], k))


def fp6_mul_01(a, b0, b1):
    # multiply by the sparse element b0 + b1 v
    t0 = fp2_mul(a[0], b0)
    t1 = fp2_mul(a[1], b1)
    c0 = fp2_add(t0, fp2_mul_xi(fp2_mul(a[2], b1)))
    c1 = fp2_add(fp2_mul(a[0], b1), fp2_mul(a[1], b0))
    c2 = fp2_add(t1, fp2_mul(a[2], b0))
    return (c0, c1, c2)


def fp6_inv(a):
    t0 = fp2_sq(a[0])
    t1 = fp2_sq(a[1])
    t2 = fp2_sq(a[2])
    A = fp2_sub(t0, fp2_mul_xi(fp2_mul(a[1], a[2])))
    Bv = fp2_sub(fp2_mul_xi(t2), fp2_mul(a[0], a[1]))
    C = fp2_sub(t1, fp2_mul(a[0], a[2]))
    f = fp2_add(
        fp2_mul(a[0], A),
        fp2_mul_xi(fp2_add(fp2_mul(a[2], Bv), fp2_mul(a[1], C))),
    )
    finv = fp2_inv(f)
    return (fp2_mul(A, finv), fp2_mul(Bv, finv), fp2_mul(C, finv))


def fp6_is_zero(a):
    return all(fp2_is_zero(c) for c in a)


# ---------------------------------------------------------------------------
# Fp12 = Fp6[w]/(w^2 - v), elements (c0, c1) meaning c0 + c1 w
# ---------------------------------------------------------------------------

FP12_ONE = (FP6_ONE, FP6_ZERO)


def fp12_mul(a, b):
    t0 = fp6_mul(a[0], b[0])
    t1 = fp6_mul(a[1], b[1])
    c0 = fp6_add(t0, fp6_mul_v(t1))
    c1 = fp6_sub(
        fp6_sub(fp6_mul(fp6_add(a[0], a[1]), fp6_add(b[0], b[1])), t0), t1
    )
    return (c0, c1)


def fp12_sq(a):
    t = fp6_mul(a[0], a[1])
    c0 = fp6_sub(
        fp6_sub(
            fp6_mul(fp6_add(a[0], a[1]), fp6_add(a[0], fp6_mul_v(a[1]))), t
        ),
        fp6_mul_v(t),
    )
    c1 = fp6_add(t, t)
    return (c0, c1)


def fp12_conj(a):
    # a^(p^6); the inverse on the order-N pairing subgroup
    return (a[0], fp6_neg(a[1]))


def fp12_inv(a):
    t = fp6_inv(fp6_sub(fp6_sq(a[0]), fp6_mul_v(fp6_sq(a[1]))))
    return (fp6_mul(a[0], t), fp6_neg(fp6_mul(a[1], t)))


def fp12_exp(a, e):
    if e < 0:
        raise ValueError("negative exponent")
    if e == 0:
        return FP12_ONE
    r = a
    for bit in bin(e)[3:]:
        r = fp12_sq(r)
        if bit == "1":
            r = fp12_mul(r, a)
    return r


def fp12_is_one(a):
    return a[0] == FP6_ONE and fp6_is_zero(a[1])


# Frobenius constants: XI1[k] = xi^(k(p-1)/6) in Fp2, XI2[k] = XI1[k]^(p+1) in Fp.
_XI = (mpz(9), _ONE)
XI1 = [fp2_exp(_XI, k * (P - 1) // 6) for k in range(1, 6)]
XI2 = [fp2_mul(x, fp2_conj(x)) for x in XI1]
for _x in XI2:
    assert _x[1] == 0
XI2 = [x[0] for x in XI2]


def fp12_frobenius(a):
    (x0, x1, x2), (y0, y1, y2) = a
    c0 = (
        fp2_conj(x0),
        fp2_mul(fp2_conj(x1), XI1[1]),
        fp2_mul(fp2_conj(x2), XI1[3]),
    )
    c1 = (
        fp2_mul(fp2_conj(y0), XI1[0]),
        fp2_mul(fp2_conj(y1), XI1[2]),
        fp2_mul(fp2_conj(y2), XI1[4]),
    )
    return (c0, c1)


def fp12_frobenius_p2(a):
    (x0, x1, x2), (y0, y1, y2) = a
    c0 = (x0, fp2_mul_fp(x1, XI2[1]), fp2_mul_fp(x2, XI2[3]))
    c1 = (
        fp2_mul_fp(y0, XI2[0]),
        fp2_mul_fp(y1, XI2[2]),
        fp2_mul_fp(y2, XI2[4]),
    )
    return (c0, c1)


# ---------------------------------------------------------------------------
# G1: curve y^2 = x^3 + 3 over Fp, Jacobian coordinates (x, y, z), z=0 at inf
# ---------------------------------------------------------------------------

G1_INF = (_ONE, _ONE, _ZERO)
G1_GEN = (_ONE, mpz(2), _ONE)


def g1_is_inf(a):
    return a[2] == 0


def g1_double(a):
    x, y, z = a
    if z == 0:
        return a
    A = (x * x) % P
    Bv = (y * y) % P
    C = (Bv * Bv) % P
    t = (x + Bv) % P
    D = (2 * (t * t - A - C)) % P
    E = (3 * A) % P
    F = (E * E) % P
    x3 = (F - 2 * D) % P
    y3 = (E * (D - x3) - 8 * C) % P
    z3 = (2 * y * z) % P
    return (x3, y3, z3)


def g1_add(a, b):
    if a[2] == 0:
        return b
    if b[2] == 0:
        return a
    x1, y1, z1 = a
    x2, y2, z2 = b
    z1z1 = (z1 * z1) % P
    z2z2 = (z2 * z2) % P
    u1 = (x1 * z2z2) % P
    u2 = (x2 * z1z1) % P
    s1 = (y1 * z2 * z2z2) % P
    s2 = (y2 * z1 * z1z1) % P
    h = (u2 - u1) % P
    r = (s2 - s1) % P
    if h == 0:
        if r == 0:
            return g1_double(a)
        return G1_INF
    r = (2 * r) % P
    i = (4 * h * h) % P
    j = (h * i) % P
    v = (u1 * i) % P
    x3 = (r * r - j - 2 * v) % P
    y3 = (r * (v - x3) - 2 * s1 * j) % P
    z3 = ((z1 + z2) * (z1 + z2) - z1z1 - z2z2) % P
    z3 = (z3 * h) % P
    return (x3, y3, z3)


def g1_neg(a):
    return (a[0], (-a[1]) % P, a[2])


def _naf(k):
    digits = []
    while k > 0:
        if k & 1:
            d = 2 - (k % 4)
            k -= d
        else:
            d = 0
        digits.append(d)
        k >>= 1
    return digits


def g1_mul(a, k):
    k = int(k) % int(N)
    if k == 0 or a[2] == 0:
        return G1_INF
    neg = g1_neg(a)
    r = G1_INF
    for d in reversed(_naf(k)):
        r = g1_double(r)
        if d == 1:
            r = g1_add(r, a)
        elif d == -1:
            r = g1_add(r, neg)
    return r


def g1_affine(a):
    if a[2] == 0:
        return None
    if a[2] == 1:
        return (a[0], a[1])
    zi = invert(a[2], P)
    zi2 = (zi * zi) % P
    return ((a[0] * zi2) % P, (a[1] * zi2 * zi) % P)


def g1_eq(a, b):
    # cross-multiplied Jacobian comparison
    if a[2] == 0 or b[2] == 0:
        return a[2] == 0 and b[2] == 0
    z1z1 = (a[2] * a[2]) % P
    z2z2 = (b[2] * b[2]) % P
    if (a[0] * z2z2 - b[0] * z1z1) % P != 0:
        return False
    return (a[1] * z2z2 * b[2] - b[1] * z1z1 * a[2]) % P == 0


def g1_is_on_curve(a):
    if a[2] == 0:
        return True
    aff = g1_affine(a)
    x, y = aff
    return (y * y - x * x * x - B) % P == 0


# ---------------------------------------------------------------------------
# G2: twist y^2 = x^3 + 3/xi over Fp2, Jacobian coordinates over Fp2
# ---------------------------------------------------------------------------

TWIST_B = fp2_mul_fp(fp2_inv(_XI), B)

G2_INF = (FP2_ONE, FP2_ONE, FP2_ZERO)
G2_GEN = (
    (
        mpz(10857046999023057135944570762232829481370756359578518086990519993285655852781),
        mpz(11559732032986387107991004021392285783925812861821192530917403151452391805634),
    ),
    (
        mpz(8495653923123431417604973247489272438418190587263600148770280649306958101930),
        mpz(4082367875863433681332203403145435568316851327593401208105741076214120093531),
    ),
    FP2_ONE,
)


def g2_is_inf(a):
    return fp2_is_zero(a[2])


def g2_double(a):
    x, y, z = a
    if fp2_is_zero(z):
        return a
    A = fp2_sq(x)
    Bv = fp2_sq(y)
    C = fp2_sq(Bv)
    t = fp2_add(x, Bv)
    D = fp2_dbl(fp2_sub(fp2_sub(fp2_sq(t), A), C))
    E = fp2_add(fp2_dbl(A), A)
    F = fp2_sq(E)
    x3 = fp2_sub(F, fp2_dbl(D))
    c8 = fp2_dbl(fp2_dbl(fp2_dbl(C)))
    y3 = fp2_sub(fp2_mul(E, fp2_sub(D, x3)), c8)
    z3 = fp2_dbl(fp2_mul(y, z))
    return (x3, y3, z3)


def g2_add(a, b):
    if fp2_is_zero(a[2]):
        return b
    if fp2_is_zero(b[2]):
        return a
    x1, y1, z1 = a
    x2, y2, z2 = b
    z1z1 = fp2_sq(z1)
    z2z2 = fp2_sq(z2)
    u1 = fp2_mul(x1, z2z2)
    u2 = fp2_mul(x2, z1z1)
    s1 = fp2_mul(fp2_mul(y1, z2), z2z2)
    s2 = fp2_mul(fp2_mul(y2, z1), z1z1)
    h = fp2_sub(u2, u1)
    r = fp2_sub(s2, s1)
    if fp2_is_zero(h):
        if fp2_is_zero(r):
            return g2_double(a)
        return G2_INF
    r = fp2_dbl(r)
    i = fp2_sq(h)
    i = fp2_dbl(fp2_dbl(i))
    j = fp2_mul(h, i)
    v = fp2_mul(u1, i)
    x3 = fp2_sub(fp2_sub(fp2_sq(r), j), fp2_dbl(v))
    y3 = fp2_sub(fp2_mul(r, fp2_sub(v, x3)), fp2_dbl(fp2_mul(s1, j)))
    z3 = fp2_mul(
        fp2_sub(fp2_sub(fp2_sq(fp2_add(z1, z2)), z1z1), z2z2), h
    )
    return (x3, y3, z3)


def g2_neg(a):
    return (a[0], fp2_neg(a[1]), a[2])


def g2_mul(a, k):
    k = int(k) % int(N)
    if k == 0 or fp2_is_zero(a[2]):
        return G2_INF
    neg = g2_neg(a)
    r = G2_INF
    for d in reversed(_naf(k)):
        r = g2_double(r)
        if d == 1:
            r = g2_add(r, a)
        elif d == -1:
            r = g2_add(r, neg)
    return r


def g2_affine(a):
    if fp2_is_zero(a[2]):
        return None
    zi = fp2_inv(a[2])
    zi2 = fp2_sq(zi)
    return (fp2_mul(a[0], zi2), fp2_mul(fp2_mul(a[1], zi2), zi))


def g2_eq(a, b):
    if fp2_is_zero(a[2]) or fp2_is_zero(b[2]):
        return fp2_is_zero(a[2]) and fp2_is_zero(b[2])
    z1z1 = fp2_sq(a[2])
    z2z2 = fp2_sq(b[2])
    if fp2_mul(a[0], z2z2) != fp2_mul(b[0], z1z1):
        return False
    return fp2_mul(fp2_mul(a[1], z2z2), b[2]) == fp2_mul(
        fp2_mul(b[1], z1z1), a[2]
    )


def g2_is_on_curve(a):
    if fp2_is_zero(a[2]):
        return True
    aff = g2_affine(a)
    x, y = aff
    return fp2_sub(fp2_sub(fp2_sq(y), fp2_mul(fp2_sq(x), x)), TWIST_B) == FP2_ZERO


def _g2_mul_raw(a, k):
    # no reduction mod N: required for subgroup membership testing, where
    # the input may have order not dividing N
    if k == 0 or fp2_is_zero(a[2]):
        return G2_INF
    neg = g2_neg(a)
    r = G2_INF
    for d in reversed(_naf(int(k))):
        r = g2_double(r)
        if d == 1:
            r = g2_add(r, a)
        elif d == -1:
            r = g2_add(r, neg)
    return r


def g2_in_subgroup(a):
    if fp2_is_zero(a[2]):
        return True
    return fp2_is_zero(_g2_mul_raw(a, N)[2])


# ---------------------------------------------------------------------------
# Pairing: optimal ate via Miller loop over NAF(6u+2) plus two Frobenius steps
# ---------------------------------------------------------------------------

NAF_6U2 = list(reversed(_naf(int(6 * U + 2))))[1:]


def _line_double(r, q):
    """Doubling step: tangent line at twist point r evaluated at G1 point q.

    Returns (a, b, c, r_out); the line value is c + (b + a*v)*w in Fp12.
    """
    qx, qy = q
    r_t = fp2_sq(r[2])
    A = fp2_sq(r[0])
    Bv = fp2_sq(r[1])
    C = fp2_sq(Bv)
    D = fp2_add(r[0], Bv)
    D = fp2_sq(D)
    D = fp2_sub(fp2_sub(D, A), C)
    D = fp2_dbl(D)
    E = fp2_add(fp2_dbl(A), A)
    F = fp2_sq(E)
    c8 = fp2_dbl(fp2_dbl(fp2_dbl(C)))
    rx = fp2_sub(F, fp2_dbl(D))
    ry = fp2_sub(fp2_mul(E, fp2_sub(D, rx)), c8)
    rz = fp2_sub(fp2_sub(fp2_sq(fp2_add(r[1], r[2])), Bv), r_t)
    r_out = (rx, ry, rz)

    a = fp2_sq(fp2_add(r[0], E))
    a = fp2_sub(a, fp2_add(fp2_add(A, F), fp2_dbl(fp2_dbl(Bv))))
    t = fp2_dbl(fp2_mul(E, r_t))
    b = fp2_mul_fp(fp2_neg(t), qx)
    c = fp2_mul_fp(fp2_dbl(fp2_mul(rz, r_t)), qy)
    return (a, b, c, r_out)


def _line_add(r, p, q, p_y2):
    """Addition step: line through twist points r and p evaluated at q."""
    qx, qy = q
    r_t = fp2_sq(r[2])
    Bv = fp2_mul(p[0], r_t)
    D = fp2_add(p[1], r[2])
    D = fp2_sq(D)
    D = fp2_sub(fp2_sub(D, p_y2), r_t)
    D = fp2_mul(D, r_t)

    H = fp2_sub(Bv, r[0])
    I = fp2_sq(H)
    E = fp2_dbl(fp2_dbl(I))
    J = fp2_mul(H, E)
    L1 = fp2_sub(fp2_sub(D, r[1]), r[1])
    V = fp2_mul(r[0], E)

    rx = fp2_sub(fp2_sub(fp2_sq(L1), J), fp2_dbl(V))
    rz = fp2_sub(fp2_sub(fp2_sq(fp2_add(r[2], H)), r_t), I)
    t = fp2_mul(fp2_sub(V, rx), L1)
    t2 = fp2_dbl(fp2_mul(r[1], J))
    ry = fp2_sub(t, t2)
    r_out = (rx, ry, rz)

    t = fp2_sq(fp2_add(p[1], rz))
    t = fp2_sub(fp2_sub(t, p_y2), fp2_sq(rz))
    t2 = fp2_dbl(fp2_mul(L1, p[0]))
    a = fp2_sub(t2, t)
    c = fp2_dbl(fp2_mul_fp(rz, qy))
    b = fp2_dbl(fp2_mul_fp(fp2_neg(L1), qx))
    return (a, b, c, r_out)


def _mul_line(f, a, b, c):
    # f * (c + (b + a v) w), sparse Fp12 multiplication
    t1 = fp6_mul_01(f[1], b, a)
    t3 = fp6_mul_fp2(f[0], c)
    bc = fp2_add(b, c)
    new1 = fp6_sub(
        fp6_sub(fp6_mul_01(fp6_add(f[0], f[1]), bc, a), t1), t3
    )
    new0 = fp6_add(t3, fp6_mul_v(t1))
    return (new0, new1)


def miller_loop(pairs):
    """Product of Miller values for a list of (G1 affine, G2 affine) pairs."""
    state = []
    for paff, qaff in pairs:
        Q = (qaff[0], qaff[1], FP2_ONE)
        mQ = g2_neg(Q)
        state.append({"P": paff, "Q": Q, "mQ": mQ, "T": Q, "qy2": fp2_sq(qaff[1])})

    f = FP12_ONE
    for naf_i in NAF_6U2:
        f = fp12_sq(f)
        for st in state:
            a, b, c, st["T"] = _line_double(st["T"], st["P"])
            f = _mul_line(f, a, b, c)
            if naf_i == 1:
                a, b, c, st["T"] = _line_add(st["T"], st["Q"], st["P"], st["qy2"])
                f = _mul_line(f, a, b, c)
            elif naf_i == -1:
                a, b, c, st["T"] = _line_add(st["T"], st["mQ"], st["P"], st["qy2"])
                f = _mul_line(f, a, b, c)

    for st in state:
        Q = st["Q"]
        q1 = (
            fp2_mul(fp2_conj(Q[0]), XI1[1]),
            fp2_mul(fp2_conj(Q[1]), XI1[2]),
            FP2_ONE,
        )
        q2 = (fp2_mul_fp(Q[0], XI2[1]), Q[1], FP2_ONE)
        a, b, c, st["T"] = _line_add(st["T"], q1, st["P"], fp2_sq(q1[1]))
        f = _mul_line(f, a, b, c)
        a, b, c, st["T"] = _line_add(st["T"], q2, st["P"], fp2_sq(q2[1]))
        f = _mul_line(f, a, b, c)
    return f


def final_exp(f):
    """Map a Miller value to the order-N pairing group."""
    t1 = fp12_conj(f)
    inv = fp12_inv(f)
    t1 = fp12_mul(t1, inv)
    t1 = fp12_mul(t1, fp12_frobenius_p2(t1))

    fp1 = fp12_frobenius(t1)
    fp2_ = fp12_frobenius_p2(t1)
    fp3 = fp12_frobenius(fp2_)

    fu1 = fp12_exp(t1, U)
    fu2 = fp12_exp(fu1, U)
    fu3 = fp12_exp(fu2, U)

    y3 = fp12_frobenius(fu1)
    fu2p = fp12_frobenius(fu2)
    fu3p = fp12_frobenius(fu3)
    y2 = fp12_frobenius_p2(fu2)

    y0 = fp12_mul(fp12_mul(fp1, fp2_), fp3)
    y1 = fp12_conj(t1)
    y5 = fp12_conj(fu2)
    y3 = fp12_conj(y3)
    y4 = fp12_conj(fp12_mul(fu1, fu2p))
    y6 = fp12_conj(fp12_mul(fu3, fu3p))

    t0 = fp12_mul(fp12_mul(fp12_sq(y6), y4), y5)
    t1 = fp12_mul(fp12_mul(y3, y5), t0)
    t0 = fp12_mul(t0, y2)
    t1 = fp12_mul(fp12_sq(t1), t0)
    t1 = fp12_sq(t1)
    t0 = fp12_mul(t1, y1)
    t1 = fp12_mul(t1, y0)
    t0 = fp12_sq(t0)
    return fp12_mul(t0, t1)


def pairing(p, q):
    """Optimal ate pairing e(p, q) with p in G1, q in G2 (Jacobian inputs)."""
    if g1_is_inf(p) or g2_is_inf(q):
        return FP12_ONE
    return final_exp(miller_loop([(g1_affine(p), g2_affine(q))]))


def multi_pairing(pairs):
    """Product of pairings sharing one Miller loop and one final exponentiation."""
    live = [
        (g1_affine(p), g2_affine(q))
        for p, q in pairs
        if not (g1_is_inf(p) or g2_is_inf(q))
    ]
    if not live:
        return FP12_ONE
    return final_exp(miller_loop(live))


def gt_exp(a, k):
    """Exponentiation in the pairing group; negative exponents via conjugation."""
    k = int(k) % int(N)
    if k == 0:
        return FP12_ONE
    if k > N // 2:
        # shorter NAF via the (free) inverse
        return fp12_conj(gt_exp(a, int(N) - k))
    neg = fp12_conj(a)
    r = FP12_ONE
    started = False
    for d in reversed(_naf(k)):
        if started:
            r = fp12_sq(r)
        if d == 1:
            r = fp12_mul(r, a) if started else a
            started = True
        elif d == -1:
            r = fp12_mul(r, neg) if started else neg
            started = True
    return r


def gt_in_subgroup(a):
    return fp12_is_one(fp12_exp(a, N))


# ---------------------------------------------------------------------------
# Hashing to G1 (Shallue-van de Woestijne style map for BN curves) and to Fp
# ---------------------------------------------------------------------------

SQRT_NEG3 = powmod(P - 3, (P + 1) // 4, P)
assert (SQRT_NEG3 * SQRT_NEG3) % P == P - 3
_INV2 = invert(mpz(2), P)


def _sqrt_fp(a):
    return powmod(a, (P + 1) // 4, P)


def map_to_g1(t):
    """Deterministic field-element-to-point map; t=0 is remapped to 1."""
    t = mpz(t) % P
    if t == 0:
        t = _ONE
    chi_t = legendre(t, P)
    w = (SQRT_NEG3 * t) % P
    w = (w * invert(1 + B + t * t, P)) % P

    x1 = ((SQRT_NEG3 - 1) * _INV2 - t * w) % P
    g = (x1 * x1 * x1 + B) % P
    if legendre(g, P) == 1:
        y = _sqrt_fp(g)
        return (x1, (chi_t * y) % P, _ONE)

    x2 = (-1 - x1) % P
    g = (x2 * x2 * x2 + B) % P
    if legendre(g, P) == 1:
        y = _sqrt_fp(g)
        return (x2, (chi_t * y) % P, _ONE)

    x3 = (1 + invert(w * w, P)) % P
    g = (x3 * x3 * x3 + B) % P
    y = _sqrt_fp(g)
    return (x3, (chi_t * y) % P, _ONE)


def expand_message_xmd(msg, dst, length):
    """expand_message_xmd with SHA-256 (RFC 9380, section 5.3.1)."""
    if len(dst) > 255:
        dst = b"H2C-OVERSIZE-DST-" + hashlib.sha256(dst).digest()
    ell = (length + 31) // 32
    if ell > 255 or length > 65535:
        raise ValueError("requested output too long")
    dst_prime = dst + bytes([len(dst)])
    z_pad = bytes(64)
    l_i_b = length.to_bytes(2, "big")
    b0 = hashlib.sha256(z_pad + msg + l_i_b + b"\x00" + dst_prime).digest()
    bi = hashlib.sha256(b0 + b"\x01" + dst_prime).digest()
    out = bi
    for i in range(2, ell + 1):
        bi = hashlib.sha256(
            bytes(x ^ y for x, y in zip(b0, bi)) + bytes([i]) + dst_prime
        ).digest()
        out += bi
    return out[:length]


def hash_to_g1_point(dst, msg):
    """Indifferentiable hash to G1: sum of two mapped field elements."""
    data = expand_message_xmd(msg, dst, 96)
    u1 = mpz(int.from_bytes(data[:48], "big")) % P
    u2 = mpz(int.from_bytes(data[48:], "big")) % P
    return g1_add(map_to_g1(u1), map_to_g1(u2))


def hash_to_fn(dst, msg):
    """Hash to a nonzero scalar mod N via wide reduction; rehash on zero."""
    counter = 0
    while True:
        suffix = b"" if counter == 0 else counter.to_bytes(4, "big")
        data = expand_message_xmd(msg + suffix, dst, 64)
        v = mpz(int.from_bytes(data, "big")) % N
        if v != 0:
            return v
        counter += 1


# Import-time sanity: generators on curve and in the right subgroups.
assert g1_is_on_curve(G1_GEN)
assert g2_is_on_curve(G2_GEN)
assert g2_in_subgroup(G2_GEN)
