"""Bit-exact binary serialization for all persistent objects.

Container layout: magic ``DHV1``, an object tag byte, the curve id byte,
then a field table (big-endian u16 count, then per field: tag byte, u32
length, payload).  Field tags are emitted in strictly ascending order and
all map-like payloads are sorted by key, so every object has exactly one
encoding; decoding rejects anything else (unknown tags, trailing bytes,
duplicate or out-of-order fields, malformed group elements).

The armored form wraps the binary encoding in base64 between
``-----BEGIN DHABE <TYPE>-----`` / ``-----END DHABE <TYPE>-----`` lines.
"""

from __future__ import annotations

import base64
import hashlib

from . import scheme, trust
from .groups import (
    FormatError,
    G1_BYTES,
    G2_BYTES,
    G1Element,
    G2Element,
    GtElement,
    Scalar,
    context_for,
    decode_element,
    encode_element,
)
from .policy import parse_policy, print_policy

MAGIC = b"DHV1"

TAG_PUBLIC_PARAMS = 0x01
TAG_MASTER_KEY = 0x02
TAG_DA_KEY = 0x03
TAG_USER_KEY = 0x04
TAG_CIPHERTEXT = 0x05
TAG_CREDENTIAL_SET = 0x06
TAG_ATTRIBUTE_MAP = 0x07

ARMOR_NAMES = {
    TAG_PUBLIC_PARAMS: "PUBLIC-PARAMS",
    TAG_MASTER_KEY: "MASTER-KEY",
    TAG_DA_KEY: "DA-KEY",
    TAG_USER_KEY: "USER-KEY",
    TAG_CIPHERTEXT: "CIPHERTEXT",
    TAG_CREDENTIAL_SET: "CREDENTIAL-SET",
    TAG_ATTRIBUTE_MAP: "ATTRIBUTE-MAP",
}


def _u16(v: int) -> bytes:
    return v.to_bytes(2, "big")


def _u32(v: int) -> bytes:
    return v.to_bytes(4, "big")


def _u64(v: int) -> bytes:
    return v.to_bytes(8, "big")


def _utf8_field(s: str) -> bytes:
    data = s.encode()
    return _u16(len(data)) + data


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError("truncated payload")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return int.from_bytes(self.take(2), "big")

    def u32(self) -> int:
        return int.from_bytes(self.take(4), "big")

    def u64(self) -> int:
        return int.from_bytes(self.take(8), "big")

    def utf8(self) -> str:
        return self.take(self.u16()).decode()

    def expect_done(self):
        if self.pos != len(self.data):
            raise FormatError("trailing bytes in payload")


def _container(tag: int, curve_id: int, fields: list) -> bytes:
    fields = sorted(fields)
    out = [MAGIC, bytes([tag, curve_id]), _u16(len(fields))]
    for ftag, payload in fields:
        out.append(bytes([ftag]))
        out.append(_u32(len(payload)))
        out.append(payload)
    return b"".join(out)


def _parse_container(data: bytes):
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise FormatError("bad magic")
    tag = r.u8()
    curve_id = r.u8()
    count = r.u16()
    fields = {}
    last = -1
    for _ in range(count):
        ftag = r.u8()
        if ftag <= last:
            raise FormatError("field tags must be strictly ascending")
        last = ftag
        fields[ftag] = r.take(r.u32())
    r.expect_done()
    return tag, curve_id, fields


def _fields_exactly(fields: dict, required, optional=()):
    allowed = set(required) | set(optional)
    if not set(required) <= set(fields) or not set(fields) <= allowed:
        raise FormatError("unexpected or missing fields")


# ---------------------------------------------------------------------------
# Per-object encoders
# ---------------------------------------------------------------------------


def _enc_paths(paths) -> bytes:
    out = [_u16(len(paths))]
    for path in paths:
        out.append(_u16(len(path)))
        for label in path:
            out.append(_utf8_field(label))
    return b"".join(out)


def _dec_paths(r: _Reader):
    return tuple(
        tuple(r.utf8() for _ in range(r.u16())) for _ in range(r.u16())
    )


def _encode_public_params(pp: scheme.PublicParams) -> bytes:
    fields = [
        (1, encode_element(pp.A1)),
        (2, encode_element(pp.A2)),
        (3, encode_element(pp.Y)),
        (4, _u64(pp.current_epoch)),
    ]
    return _container(TAG_PUBLIC_PARAMS, pp.ctx.curve_id, fields)


def _decode_public_params(curve_id: int, fields: dict) -> scheme.PublicParams:
    _fields_exactly(fields, (1, 2, 3, 4))
    ctx = context_for(curve_id)
    r = _Reader(fields[4])
    epoch = r.u64()
    r.expect_done()
    return scheme.PublicParams(
        ctx=ctx,
        A1=decode_element(fields[1], G1Element),
        A2=decode_element(fields[2], G2Element),
        Y=decode_element(fields[3], GtElement),
        current_epoch=epoch,
    )


def _encode_master_key(mk: scheme.MasterKey, curve_id: int) -> bytes:
    seeds = []
    for epoch in sorted(mk.epoch_seeds):
        seed = mk.epoch_seeds[epoch]
        if len(seed) != 32:
            raise FormatError("epoch seed must be 32 bytes")
        seeds.append(_u64(epoch) + seed)
    fields = [
        (1, encode_element(mk.alpha)),
        (2, mk.kappa_root),
        (3, _u32(len(seeds)) + b"".join(seeds)),
    ]
    return _container(TAG_MASTER_KEY, curve_id, fields)


def _decode_master_key(curve_id: int, fields: dict) -> scheme.MasterKey:
    _fields_exactly(fields, (1, 2, 3))
    context_for(curve_id)
    if len(fields[2]) != 32:
        raise FormatError("seed must be 32 bytes")
    r = _Reader(fields[3])
    seeds = {}
    last = None
    for _ in range(r.u32()):
        epoch = r.u64()
        if last is not None and epoch <= last:
            raise FormatError("epoch seeds must be sorted")
        last = epoch
        seeds[epoch] = r.take(32)
    r.expect_done()
    return scheme.MasterKey(
        alpha=decode_element(fields[1], Scalar),
        kappa_root=fields[2],
        epoch_seeds=seeds,
    )


def _encode_da_key(da: scheme.DAKey, curve_id: int) -> bytes:
    fields = [
        (1, encode_element(da.Z)),
        (2, encode_element(da.tau)),
        (3, da.kappa),
        (4, _enc_paths([da.path])),
        (5, _u64(da.epoch)),
    ]
    if da.warning is not None:
        fields.append((6, da.warning.encode()))
    return _container(TAG_DA_KEY, curve_id, fields)


def _decode_da_key(curve_id: int, fields: dict) -> scheme.DAKey:
    _fields_exactly(fields, (1, 2, 3, 4, 5), optional=(6,))
    context_for(curve_id)
    if len(fields[3]) != 32:
        raise FormatError("seed must be 32 bytes")
    r = _Reader(fields[4])
    paths = _dec_paths(r)
    r.expect_done()
    if len(paths) != 1:
        raise FormatError("authority key must carry exactly one path")
    r = _Reader(fields[5])
    epoch = r.u64()
    r.expect_done()
    warning = fields[6].decode() if 6 in fields else None
    return scheme.DAKey(
        Z=decode_element(fields[1], G2Element),
        tau=decode_element(fields[2], Scalar),
        kappa=fields[3],
        path=paths[0],
        epoch=epoch,
        warning=warning,
    )


def _encode_user_key(key, curve_id: int) -> bytes:
    merged = isinstance(key, scheme.UserKey)
    paths = key.issuer_paths if merged else (key.issuer_path,)
    comps = []
    for attr in sorted(key.attr_components):
        comps.append(_utf8_field(attr) + encode_element(key.attr_components[attr]))
    fields = [
        (1, key.user_id.encode()),
        (2, _u64(key.epoch)),
        (3, encode_element(key.K)),
        (4, encode_element(key.L)),
        (5, _u32(len(comps)) + b"".join(comps)),
        (6, _enc_paths(paths)),
        (7, bytes([1 if merged else 0])),
    ]
    return _container(TAG_USER_KEY, curve_id, fields)


def _decode_user_key(curve_id: int, fields: dict):
    _fields_exactly(fields, (1, 2, 3, 4, 5, 6, 7))
    context_for(curve_id)
    r = _Reader(fields[2])
    epoch = r.u64()
    r.expect_done()
    r = _Reader(fields[5])
    comps = {}
    last = None
    for _ in range(r.u32()):
        attr = r.utf8()
        if last is not None and attr.encode() <= last.encode():
            raise FormatError("attribute components must be sorted")
        last = attr
        comps[attr] = decode_element(r.take(G1_BYTES), G1Element)
    r.expect_done()
    r = _Reader(fields[6])
    paths = _dec_paths(r)
    r.expect_done()
    if len(fields[7]) != 1 or fields[7][0] not in (0, 1):
        raise FormatError("bad merged flag")
    merged = bool(fields[7][0])
    common = dict(
        user_id=fields[1].decode(),
        epoch=epoch,
        K=decode_element(fields[3], G2Element),
        L=decode_element(fields[4], G2Element),
        attr_components=comps,
    )
    if merged:
        return scheme.UserKey(issuer_paths=paths, **common)
    if len(paths) != 1:
        raise FormatError("key shard must carry exactly one issuer path")
    return scheme.UserKeyShard(issuer_path=paths[0], **common)


def _encode_ciphertext(ct: scheme.Ciphertext, curve_id: int) -> bytes:
    leaves = []
    for idx in sorted(ct.leaves):
        c_y, d_y = ct.leaves[idx]
        leaves.append(_u32(idx) + encode_element(c_y) + encode_element(d_y))
    fields = [
        (1, print_policy(ct.tree).encode()),
        (2, _u64(ct.epoch)),
        (3, encode_element(ct.C0)),
        (4, _u32(len(leaves)) + b"".join(leaves)),
        (5, bytes([ct.dem.alg_id])),
        (6, ct.dem.nonce),
        (7, ct.dem.body),
    ]
    return _container(TAG_CIPHERTEXT, curve_id, fields)


def _decode_ciphertext(curve_id: int, fields: dict) -> scheme.Ciphertext:
    _fields_exactly(fields, (1, 2, 3, 4, 5, 6, 7))
    context_for(curve_id)
    tree = parse_policy(fields[1].decode())
    r = _Reader(fields[2])
    epoch = r.u64()
    r.expect_done()
    r = _Reader(fields[4])
    leaves = {}
    last = None
    for _ in range(r.u32()):
        idx = r.u32()
        if last is not None and idx <= last:
            raise FormatError("leaf entries must be sorted")
        last = idx
        c_y = decode_element(r.take(G1_BYTES), G1Element)
        d_y = decode_element(r.take(G2_BYTES), G2Element)
        leaves[idx] = (c_y, d_y)
    r.expect_done()
    if sorted(leaves) != [leaf.leaf_index for leaf in tree.leaves()]:
        raise FormatError("ciphertext leaves do not match the policy tree")
    if len(fields[5]) != 1:
        raise FormatError("bad DEM algorithm id")
    return scheme.Ciphertext(
        tree=tree,
        epoch=epoch,
        C0=decode_element(fields[3], G1Element),
        leaves=leaves,
        dem=scheme.DemPayload(
            alg_id=fields[5][0], nonce=fields[6], body=fields[7]
        ),
    )


def _encode_credential_set(creds: trust.CredentialSet, curve_id: int) -> bytes:
    text = trust.print_credentials(creds)
    return _container(TAG_CREDENTIAL_SET, curve_id, [(1, text.encode())])


def _decode_credential_set(curve_id: int, fields: dict) -> trust.CredentialSet:
    _fields_exactly(fields, (1,))
    context_for(curve_id)
    try:
        return trust.parse_credentials(fields[1].decode())
    except trust.CredentialError as exc:
        raise FormatError(str(exc)) from exc


def _encode_attribute_map(amap: trust.AttributeMap, curve_id: int) -> bytes:
    text = trust.print_attribute_map(amap)
    return _container(TAG_ATTRIBUTE_MAP, curve_id, [(1, text.encode())])


def _decode_attribute_map(curve_id: int, fields: dict) -> trust.AttributeMap:
    _fields_exactly(fields, (1,))
    context_for(curve_id)
    try:
        return trust.parse_attribute_map(fields[1].decode())
    except trust.CredentialError as exc:
        raise FormatError(str(exc)) from exc


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------

_DEFAULT_CURVE = 1


def tag_of(obj) -> int:
    if isinstance(obj, scheme.PublicParams):
        return TAG_PUBLIC_PARAMS
    if isinstance(obj, scheme.MasterKey):
        return TAG_MASTER_KEY
    if isinstance(obj, scheme.DAKey):
        return TAG_DA_KEY
    if isinstance(obj, (scheme.UserKeyShard, scheme.UserKey)):
        return TAG_USER_KEY
    if isinstance(obj, scheme.Ciphertext):
        return TAG_CIPHERTEXT
    if isinstance(obj, trust.CredentialSet):
        return TAG_CREDENTIAL_SET
    if isinstance(obj, trust.AttributeMap):
        return TAG_ATTRIBUTE_MAP
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def encode_object(obj, curve_id: int = _DEFAULT_CURVE) -> bytes:
    tag = tag_of(obj)
    if tag == TAG_PUBLIC_PARAMS:
        return _encode_public_params(obj)
    if tag == TAG_MASTER_KEY:
        return _encode_master_key(obj, curve_id)
    if tag == TAG_DA_KEY:
        return _encode_da_key(obj, curve_id)
    if tag == TAG_USER_KEY:
        return _encode_user_key(obj, curve_id)
    if tag == TAG_CIPHERTEXT:
        return _encode_ciphertext(obj, curve_id)
    if tag == TAG_CREDENTIAL_SET:
        return _encode_credential_set(obj, curve_id)
    return _encode_attribute_map(obj, curve_id)


_DECODERS = {
    TAG_PUBLIC_PARAMS: _decode_public_params,
    TAG_MASTER_KEY: _decode_master_key,
    TAG_DA_KEY: _decode_da_key,
    TAG_USER_KEY: _decode_user_key,
    TAG_CIPHERTEXT: _decode_ciphertext,
    TAG_CREDENTIAL_SET: _decode_credential_set,
    TAG_ATTRIBUTE_MAP: _decode_attribute_map,
}


def decode_object(data: bytes, expected_tag: int | None = None):
    """Decode a binary or armored object; rejects unknown tags and any
    deviation from the canonical encoding."""
    if is_armored(data):
        data = unarmor(data)
    tag, curve_id, fields = _parse_container(data)
    if tag not in _DECODERS:
        raise FormatError(f"unknown object tag {tag:#04x}")
    if expected_tag is not None and tag != expected_tag:
        raise FormatError(
            f"expected {ARMOR_NAMES[expected_tag]}, found {ARMOR_NAMES[tag]}"
        )
    try:
        return _DECODERS[tag](curve_id, fields)
    except FormatError:
        raise
    except (ValueError, UnicodeDecodeError) as exc:
        raise FormatError(f"malformed object: {exc}") from exc


def armor(data: bytes) -> bytes:
    """Wrap a binary encoding in base64 armor."""
    tag = data[4] if data[:4] == MAGIC and len(data) > 5 else None
    if tag not in ARMOR_NAMES:
        raise FormatError("cannot armor: not a serialized object")
    name = ARMOR_NAMES[tag]
    b64 = base64.b64encode(data).decode()
    lines = [f"-----BEGIN DHABE {name}-----"]
    lines += [b64[i : i + 64] for i in range(0, len(b64), 64)]
    lines.append(f"-----END DHABE {name}-----")
    return ("\n".join(lines) + "\n").encode()


def unarmor(data: bytes) -> bytes:
    try:
        text = data.decode()
    except UnicodeDecodeError as exc:
        raise FormatError("armored data is not valid text") from exc
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if (
        len(lines) < 2
        or not lines[0].startswith("-----BEGIN DHABE ")
        or not lines[0].endswith("-----")
        or not lines[-1].startswith("-----END DHABE ")
        or not lines[-1].endswith("-----")
    ):
        raise FormatError("bad armor header or footer")
    begin_name = lines[0][len("-----BEGIN DHABE ") : -5]
    end_name = lines[-1][len("-----END DHABE ") : -5]
    if begin_name != end_name:
        raise FormatError("armor header/footer type mismatch")
    try:
        raw = base64.b64decode("".join(lines[1:-1]), validate=True)
    except Exception as exc:
        raise FormatError("invalid base64 in armor") from exc
    if raw[:4] != MAGIC or len(raw) < 6 or ARMOR_NAMES.get(raw[4]) != begin_name:
        raise FormatError("armor type does not match payload")
    return raw


def object_digest(obj) -> str:
    """Stable hex digest of an object's canonical serialization."""
    return hashlib.sha256(encode_object(obj)).hexdigest()


def is_armored(data: bytes) -> bool:
    return data.lstrip()[:17] == b"-----BEGIN DHABE "
