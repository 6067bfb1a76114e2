"""Hierarchical attribute-based encryption with epoch re-keying.

The construction in one paragraph: the root samples master exponents
``alpha`` and ``a``; only the images ``A1 = g1^a``, ``A2 = g2^a`` and
``Y = e(g1, g2)^alpha`` stay.  A domain authority's key is a blinded master
element ``Z = g2^(alpha + a*tau)`` together with its blinding ``tau``;
delegation just re-blinds, so any authority key unblinds to the same master
witness ``g2^alpha`` (this is a documented flaw of the design, exposed here
as first-class operations, not hidden).  Every authority carries the same
per-epoch seed ``kappa_e``, so all of them derive the same user-binding
exponent ``t_u`` per user -- which is exactly what makes attribute keys
issued by different authorities merge into one decryption key while keys of
different users stay incompatible.  Ciphertexts share a random secret ``s``
down a threshold policy tree and hide the KEM value ``Y^s`` behind per-leaf
pairings; decryption telescopes them back with Lagrange coefficients.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from .groups import (
    FormatError,
    G1Element,
    G2Element,
    GroupContext,
    GtElement,
    Scalar,
    default_context,
    encode_element,
    hash_to_g1,
    hash_to_scalar,
    multi_pair,
    pair,
    random_scalar,
    random_seed,
)

from .policy import (
    AttributeSet,
    PolicyNotSatisfied,
    PolicyTree,
    assign_shares,
    evaluate,
    print_policy,
    satisfying_plan,
)

__all__ = [
    "PublicParams",
    "MasterKey",
    "DAKey",
    "UserKeyShard",
    "UserKey",
    "Ciphertext",
    "DemPayload",
    "MasterWitness",
    "EpochMismatch",
    "AuthenticationFailure",
    "MergeRefused",
    "IssuanceError",
    "setup",
    "delegate",
    "rerandomize",
    "recover_master_witness",
    "issue_user_key",
    "verify_shard",
    "merge_shards",
    "encrypt",
    "decrypt",
    "epoch_rekey",
    "DEM_CHACHA20_POLY1305",
]

PRF_TAG = b"DHABE:PRF"
ATTR_TAG = b"DHABE:ATTR"
KEM_TAG = b"DHABE:KEM"

DEM_CHACHA20_POLY1305 = 0x01
_DEM_NONCE_BYTES = {DEM_CHACHA20_POLY1305: 12}


class EpochMismatch(Exception):
    """Key and ciphertext (or authority and parameters) are from different epochs."""


class AuthenticationFailure(Exception):
    """Authenticated decryption failed: wrong, forged or colluded key material."""


class MergeRefused(Exception):
    """Key shards disagree on user identity, epoch or core components."""


class IssuanceError(ValueError):
    """Invalid key-issuance request."""


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PublicParams:
    ctx: GroupContext
    A1: G1Element
    A2: G2Element
    Y: GtElement
    current_epoch: int

    def consistent(self) -> bool:
        return pair(self.A1, self.ctx.g2) == pair(self.ctx.g1, self.A2)


@dataclass
class MasterKey:
    alpha: Scalar
    kappa_root: bytes
    epoch_seeds: dict = field(default_factory=dict)  # epoch -> 32-byte seed


@dataclass(frozen=True)
class DAKey:
    Z: G2Element
    tau: Scalar
    kappa: bytes
    path: tuple
    epoch: int
    warning: str | None = None

    @property
    def depth(self) -> int:
        return len(self.path)

    def __post_init__(self):
        if len(self.path) < 1 or any(not lbl for lbl in self.path):
            raise ValueError("authority path must be non-empty labels")


@dataclass(frozen=True)
class UserKeyShard:
    user_id: str
    epoch: int
    K: G2Element
    L: G2Element
    attr_components: dict  # attribute -> G1Element
    issuer_path: tuple


@dataclass(frozen=True)
class UserKey:
    user_id: str
    epoch: int
    K: G2Element
    L: G2Element
    attr_components: dict
    issuer_paths: tuple  # tuple of issuer paths

    def attributes(self) -> AttributeSet:
        return AttributeSet(self.attr_components.keys())


@dataclass(frozen=True)
class DemPayload:
    alg_id: int
    nonce: bytes
    body: bytes


@dataclass(frozen=True)
class Ciphertext:
    tree: PolicyTree
    epoch: int
    C0: G1Element
    leaves: dict  # leaf_index -> (C_y, D_y)
    dem: DemPayload


@dataclass(frozen=True)
class MasterWitness:
    W: G2Element


# ---------------------------------------------------------------------------
# Internal helpers
# ---------------------------------------------------------------------------


def _attr_hash(attribute: str, epoch: int) -> G1Element:
    return hash_to_g1(ATTR_TAG, attribute.encode() + epoch.to_bytes(8, "big"))


def _user_exponent(kappa: bytes, epoch: int, user_id: str) -> Scalar:
    return hash_to_scalar(
        PRF_TAG, kappa + epoch.to_bytes(8, "big") + user_id.encode()
    )


def _kem_header(tree: PolicyTree, epoch: int, C0: G1Element) -> bytes:
    return (
        print_policy(tree).encode()
        + b"\n"
        + epoch.to_bytes(8, "big")
        + encode_element(C0)
    )


def _derive_dem_key(kem: GtElement, header: bytes) -> bytes:
    return HKDF(
        algorithm=hashes.SHA256(), length=32, salt=None, info=KEM_TAG
    ).derive(encode_element(kem) + header)


def _dem_encrypt(alg_id: int, key: bytes, nonce: bytes, plaintext: bytes) -> bytes:
    if alg_id != DEM_CHACHA20_POLY1305:
        raise FormatError(f"unknown DEM algorithm id {alg_id:#04x}")
    return ChaCha20Poly1305(key).encrypt(nonce, plaintext, None)


def _dem_decrypt(alg_id: int, key: bytes, nonce: bytes, body: bytes) -> bytes:
    if alg_id != DEM_CHACHA20_POLY1305:
        raise FormatError(f"unknown DEM algorithm id {alg_id:#04x}")
    try:
        return ChaCha20Poly1305(key).decrypt(nonce, body, None)
    except InvalidTag as exc:
        raise AuthenticationFailure(
            "authenticated decryption failed (wrong or forged key material)"
        ) from exc


def _fresh_da_key(
    pp: PublicParams, alpha: Scalar, kappa: bytes, path, epoch: int, rng
) -> DAKey:
    tau = random_scalar(rng)
    Z = (pp.ctx.g2 ** alpha) * (pp.A2 ** tau)
    return DAKey(Z=Z, tau=tau, kappa=kappa, path=tuple(path), epoch=epoch)


# ---------------------------------------------------------------------------
# Scheme operations
# ---------------------------------------------------------------------------


def setup(ctx: GroupContext | None = None, rng: random.Random | None = None):
    """Create a virtual organization: public parameters, master key and the
    root authority key.  The exponent ``a`` is discarded after computing its
    public images."""
    ctx = ctx or default_context()
    rng = rng or random.SystemRandom()
    alpha = random_scalar(rng)
    a = random_scalar(rng)
    A1 = ctx.g1 ** a
    A2 = ctx.g2 ** a
    del a
    Y = pair(ctx.g1, ctx.g2) ** alpha
    kappa0 = random_seed(rng)
    pp = PublicParams(ctx=ctx, A1=A1, A2=A2, Y=Y, current_epoch=0)
    mk = MasterKey(alpha=alpha, kappa_root=kappa0, epoch_seeds={0: kappa0})
    root = _fresh_da_key(pp, alpha, kappa0, ("root",), 0, rng)
    return pp, mk, root


def delegate(parent: DAKey, child_label: str, pp: PublicParams, rng: random.Random) -> DAKey:
    """Create a child authority one level below the parent.  There is no
    depth limit; delegation only re-blinds the parent's master component."""
    if not child_label:
        raise ValueError("child label must be non-empty")
    delta = random_scalar(rng)
    return DAKey(
        Z=parent.Z * (pp.A2 ** delta),
        tau=parent.tau + delta,
        kappa=parent.kappa,
        path=parent.path + (child_label,),
        epoch=parent.epoch,
    )


def rerandomize(da: DAKey, forged_path, pp: PublicParams, rng: random.Random) -> DAKey:
    """Forge a same-level sibling authority by re-randomizing the key.

    This demonstrates the scheme's accountability flaw: the sibling is
    algebraically indistinguishable from an honestly delegated authority and
    issues bit-identical user keys.  The result carries a warning marker.
    """
    forged_path = tuple(forged_path)
    if len(forged_path) != da.depth:
        raise ValueError(
            f"forged path must keep depth {da.depth}, got {len(forged_path)}"
        )
    delta = random_scalar(rng)
    return DAKey(
        Z=da.Z * (pp.A2 ** delta),
        tau=da.tau + delta,
        kappa=da.kappa,
        path=forged_path,
        epoch=da.epoch,
        warning=(
            "FLAW-DEMO: re-randomized sibling authority; its issued keys are "
            "indistinguishable from the original's"
        ),
    )


def recover_master_witness(da: DAKey, pp: PublicParams) -> MasterWitness:
    """Unblind any authority key to the master element g2^alpha.

    Every authority of a VO yields the same witness, which is why issued
    keys cannot be traced back to their issuer.
    """
    return MasterWitness(W=da.Z * (pp.A2 ** da.tau).inverse())


def issue_user_key(
    da: DAKey, user_id: str, omega: AttributeSet, pp: PublicParams
) -> UserKeyShard:
    """Mint a user's attribute-key shard.

    The user-binding exponent is derived from the VO-wide epoch seed, so any
    two current-epoch authorities produce bit-identical core components
    (K, L) for the same user, making shards mergeable.
    """
    if len(omega) == 0:
        raise IssuanceError("attribute set must be non-empty")
    if da.epoch != pp.current_epoch:
        raise EpochMismatch(
            f"authority key is for epoch {da.epoch}, "
            f"parameters are at epoch {pp.current_epoch}"
        )
    t_u = _user_exponent(da.kappa, da.epoch, user_id)
    K = da.Z * (pp.A2 ** (t_u - da.tau))
    L = pp.ctx.g2 ** t_u
    comps = {x: _attr_hash(x, da.epoch) ** t_u for x in omega}
    return UserKeyShard(
        user_id=user_id,
        epoch=da.epoch,
        K=K,
        L=L,
        attr_components=comps,
        issuer_path=da.path,
    )


def verify_shard(pp: PublicParams, shard) -> bool:
    """Public well-formedness check: e(g1, K) = Y * e(A1, L)."""
    lhs = multi_pair([(pp.ctx.g1, shard.K), (pp.A1.inverse(), shard.L)])
    return lhs == pp.Y


def merge_shards(shards) -> UserKey:
    """Combine shards issued to one user by any number of authorities.

    Refuses to merge unless user id, epoch and the core components K, L all
    agree bit-exactly; the refusal doubles as the collusion guard.  Later
    shards win on duplicate attributes.  Already-merged keys are accepted,
    so a key can grow as the user collects more shards.
    """
    shards = list(shards)
    if not shards:
        raise MergeRefused("no shards to merge")
    first = shards[0]
    ref = (
        first.user_id,
        first.epoch,
        encode_element(first.K),
        encode_element(first.L),
    )
    for sh in shards[1:]:
        if (sh.user_id, sh.epoch, encode_element(sh.K), encode_element(sh.L)) != ref:
            raise MergeRefused(
                "shards disagree on (user_id, epoch, K, L); refusing to merge"
            )
    comps = {}
    paths = []
    for sh in shards:
        comps.update(sh.attr_components)
        if isinstance(sh, UserKey):
            paths.extend(sh.issuer_paths)
        else:
            paths.append(sh.issuer_path)
    return UserKey(
        user_id=first.user_id,
        epoch=first.epoch,
        K=first.K,
        L=first.L,
        attr_components=comps,
        issuer_paths=tuple(paths),
    )


def encrypt(
    pp: PublicParams,
    tree: PolicyTree,
    plaintext: bytes,
    rng: random.Random,
    epoch: int | None = None,
) -> Ciphertext:
    """Encrypt under a policy tree at the current epoch (hybrid KEM/DEM)."""
    epoch = pp.current_epoch if epoch is None else epoch
    s = random_scalar(rng)
    shares = assign_shares(tree, s, rng)
    C0 = pp.ctx.g1 ** s
    leaves = {}
    for leaf in tree.leaves():
        r_y = random_scalar(rng)
        lam = shares.leaf_shares[leaf.leaf_index]
        C_y = (pp.A1 ** lam) * (_attr_hash(leaf.attribute, epoch) ** (-r_y))
        D_y = pp.ctx.g2 ** r_y
        leaves[leaf.leaf_index] = (C_y, D_y)
    kem = pp.Y ** s
    header = _kem_header(tree, epoch, C0)
    key = _derive_dem_key(kem, header)
    nonce = rng.getrandbits(8 * _DEM_NONCE_BYTES[DEM_CHACHA20_POLY1305]).to_bytes(
        _DEM_NONCE_BYTES[DEM_CHACHA20_POLY1305], "big"
    )
    body = _dem_encrypt(DEM_CHACHA20_POLY1305, key, nonce, plaintext)
    return Ciphertext(
        tree=tree,
        epoch=epoch,
        C0=C0,
        leaves=leaves,
        dem=DemPayload(alg_id=DEM_CHACHA20_POLY1305, nonce=nonce, body=body),
    )


def decrypt(pp: PublicParams, key, ct: Ciphertext, force: bool = False) -> bytes:
    """Decrypt a ciphertext with a (merged) user key.

    Raises PolicyNotSatisfied before any pairing work when the key's
    attributes do not satisfy the policy, EpochMismatch when key and
    ciphertext epochs differ, and AuthenticationFailure when the derived KEM
    value is wrong (forged or colluded key material).  ``force=True`` skips
    the policy check and runs the pairing computation anyway, substituting
    the identity for missing components; it exists to demonstrate that
    brute-forcing an unsatisfied policy ends in an authentication failure.
    """
    if key.epoch != ct.epoch:
        raise EpochMismatch(
            f"key is for epoch {key.epoch}, ciphertext for epoch {ct.epoch}"
        )
    omega = AttributeSet(key.attr_components.keys())
    if not force:
        if not evaluate(ct.tree, omega):
            raise PolicyNotSatisfied("key attributes do not satisfy the policy")
        plan = satisfying_plan(ct.tree, omega)
    else:
        plan = satisfying_plan(ct.tree, AttributeSet(ct.tree.attributes()))
    coeffs = plan.leaf_coefficients()

    # Y^s = e(C0, K) * e(prod_y C_y^-c_y, L) * prod_y e(K_att(y)^-c_y, D_y):
    # the per-leaf pairings telescope to e(g1, g2)^(a * t_u * s), leaving Y^s.
    c_acc = None
    pairs = [(ct.C0, key.K)]
    for pl in plan.selected_leaves():
        c_y = coeffs[pl.leaf_index]
        C_y, D_y = ct.leaves[pl.leaf_index]
        term = C_y ** (-c_y)
        c_acc = term if c_acc is None else c_acc * term
        comp = key.attr_components.get(pl.attribute)
        if comp is None:
            if not force:
                raise PolicyNotSatisfied(
                    f"key lacks a component for attribute {pl.attribute!r}"
                )
            continue
        pairs.append((comp ** (-c_y), D_y))
    if c_acc is not None:
        pairs.append((c_acc, key.L))
    kem = multi_pair(pairs)
    dem_key = _derive_dem_key(kem, _kem_header(ct.tree, ct.epoch, ct.C0))
    return _dem_decrypt(ct.dem.alg_id, dem_key, ct.dem.nonce, ct.dem.body)


def epoch_rekey(mk: MasterKey, pp: PublicParams, rng: random.Random):
    """Advance the VO to the next epoch.

    Samples a fresh epoch seed (stored in the master key), bumps the epoch
    counter and returns updated parameters plus a fresh root authority key.
    alpha and Y are unchanged, so pre-bump artifacts keep working among
    themselves; authorities excluded from re-delegation are stuck at the old
    epoch and cannot issue current-epoch keys.
    """
    new_epoch = pp.current_epoch + 1
    kappa = random_seed(rng)
    mk.epoch_seeds[new_epoch] = kappa
    new_pp = replace(pp, current_epoch=new_epoch)
    root = _fresh_da_key(new_pp, mk.alpha, kappa, ("root",), new_epoch, rng)
    return new_pp, root
